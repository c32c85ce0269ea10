//! Monte Carlo runner.
//!
//! Every trial draws from its own ChaCha stream seeded from the master seed
//! and the trial index. Trials run in parallel, but their results are
//! collected by index and reduced sequentially, so the summary does not
//! depend on the thread count.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, RateMode};
use crate::error::{Error, Result};
use crate::estimator::{EstimatorOptions, Secl};
use crate::rate::rate_series;
use crate::trigger::make_config;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSummary {
    pub case_label: String,
    pub trials: usize,
    /// `rms[k][i]`: root-mean-square error of state component `i` at step `k`.
    pub rms: Vec<Vec<f64>>,
    pub comm_rate_empirical: Vec<f64>,
    /// Binomial standard error `√(r(1−r)/N)` of the empirical rate.
    pub comm_rate_stderr: Vec<f64>,
    pub comm_rate_alg1: Vec<f64>,
    pub comm_rate_alg2: Vec<f64>,
    /// Time averages of the empirical, one-step and two-step rates.
    pub avg_rates: [f64; 3],
    /// Time average of the position RMS (state component 0).
    pub avg_rms_position: f64,
    /// Largest `|ψ|` entry seen in any trial at any step.
    pub max_first_moment: f64,
}

/// Rate predictions along one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRates {
    pub gamma: Vec<bool>,
    pub alg1: Vec<f64>,
    pub alg2: Vec<f64>,
}

struct TrialResult {
    sq_err: Vec<Vec<f64>>,
    gamma: Vec<bool>,
    max_first_moment: f64,
    rates: Option<(Vec<f64>, Vec<f64>)>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the `index`-th trial (1-based).
pub fn trial_seed(master: u64, index: usize) -> u64 {
    splitmix64(master ^ splitmix64(index as u64))
}

/// Builds the estimator described by `cfg`.
pub fn build_estimator(cfg: &ExperimentConfig) -> Result<Secl<f64>> {
    let trigger = make_config(cfg.case.nbar(), cfg.alpha)?;
    Ok(Secl::new(cfg.scenario.model.clone(), trigger)?.with_options(EstimatorOptions {
        joseph: cfg.joseph,
        quad_tol: cfg.quad_tol,
    }))
}

fn run_trial(cfg: &ExperimentConfig, secl: &Secl<f64>, index: usize, with_rates: bool) -> Result<TrialResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(cfg.seed, index));
    let model = secl.model();
    let horizon = cfg.steps - 1;
    let traj = match &cfg.scenario.true_x0 {
        Some(x0) => model.simulate_from(x0.clone(), horizon, &mut rng),
        None => model.simulate(horizon, &mut rng),
    };
    let run = secl.run(&traj.measurements)?;
    let mut sq_err = Vec::with_capacity(run.len());
    let mut gamma = Vec::with_capacity(run.len());
    let mut max_first_moment = 0.0f64;
    for ((out, _), x) in run.iter().zip(&traj.states) {
        let e: DVector<f64> = &out.xhat - x;
        sq_err.push(e.iter().map(|v| v * v).collect());
        gamma.push(out.gamma);
        max_first_moment = max_first_moment.max(out.first_moment_diag.amax());
    }
    let rates = if with_rates {
        let caches: Vec<_> = run.into_iter().map(|(_, c)| c).collect();
        let s = rate_series(secl, &caches)?;
        Some((s.one_step, s.two_step))
    } else {
        None
    };
    Ok(TrialResult {
        sq_err,
        gamma,
        max_first_moment,
        rates,
    })
}

fn with_pool<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs the designated trial alone and returns its trigger decisions and
/// rate predictions. The trial index may exceed `cfg.trials`.
pub fn run_rate_trial(cfg: &ExperimentConfig) -> Result<TrialRates> {
    cfg.validate()?;
    let secl = build_estimator(cfg)?;
    let index = cfg.rate_trial_index;
    let t = run_trial(cfg, &secl, index, true).map_err(|e| Error::Trial {
        trial: index,
        source: Box::new(e),
    })?;
    let (alg1, alg2) = t.rates.expect("rates requested");
    Ok(TrialRates {
        gamma: t.gamma,
        alg1,
        alg2,
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn run_monte_carlo(cfg: &ExperimentConfig) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let secl = build_estimator(cfg)?;
    let averaged = cfg.rate_mode == RateMode::Averaged;
    let results: Vec<Result<TrialResult>> = with_pool(cfg.threads, || {
        (1..=cfg.trials)
            .into_par_iter()
            .map(|i| {
                run_trial(cfg, &secl, i, averaged).map_err(|e| Error::Trial {
                    trial: i,
                    source: Box::new(e),
                })
            })
            .collect()
    })?;

    let steps = cfg.steps;
    let n = secl.model().state_dim();
    let mut sq = vec![vec![0.0; n]; steps];
    let mut sent = vec![0.0; steps];
    let mut alg_sum = vec![[0.0; 2]; steps];
    let mut max_first_moment = 0.0f64;
    for r in results {
        let r = r?;
        for k in 0..steps {
            for i in 0..n {
                sq[k][i] += r.sq_err[k][i];
            }
            if r.gamma[k] {
                sent[k] += 1.0;
            }
        }
        if let Some((a1, a2)) = &r.rates {
            for k in 0..steps {
                alg_sum[k][0] += a1[k];
                alg_sum[k][1] += a2[k];
            }
        }
        max_first_moment = max_first_moment.max(r.max_first_moment);
    }

    let nt = cfg.trials as f64;
    let rms: Vec<Vec<f64>> = sq.iter().map(|row| row.iter().map(|s| (s / nt).sqrt()).collect()).collect();
    let empirical: Vec<f64> = sent.iter().map(|s| s / nt).collect();
    let stderr: Vec<f64> = empirical.iter().map(|r| (r * (1.0 - r) / nt).sqrt()).collect();
    let (alg1, alg2) = if averaged {
        (
            alg_sum.iter().map(|a| a[0] / nt).collect(),
            alg_sum.iter().map(|a| a[1] / nt).collect(),
        )
    } else {
        let t = run_rate_trial(cfg)?;
        (t.alg1, t.alg2)
    };
    let avg_rates = [mean(&empirical), mean(&alg1), mean(&alg2)];
    let avg_rms_position = mean(&rms.iter().map(|r| r[0]).collect::<Vec<_>>());
    Ok(ExperimentSummary {
        case_label: cfg.case.label().to_string(),
        trials: cfg.trials,
        rms,
        comm_rate_empirical: empirical,
        comm_rate_stderr: stderr,
        comm_rate_alg1: alg1,
        comm_rate_alg2: alg2,
        avg_rates,
        avg_rms_position,
        max_first_moment,
    })
}

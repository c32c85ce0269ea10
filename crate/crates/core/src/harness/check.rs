//! Built-in oracle suite behind `--check`: small, fast versions of the
//! library's correctness properties, each compared against something
//! computed independently.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::config::{Case, ExperimentConfig};
use super::csv::{rates_csv, rms_csv};
use super::experiment::run_monte_carlo;
use crate::error::Result;
use crate::estimator::Secl;
use crate::model::{tracking_preset, LinearGaussianModel};
use crate::numerics::{ball_moments, chi_square_quantile, monte_carlo_ball, SpdMatrix, DEFAULT_TOL};
use crate::trigger::make_config;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, scale: f64, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

/// `B Bᵀ + floor·I` for a Gaussian `B`.
pub fn random_spd<R: Rng + ?Sized>(dim: usize, floor: f64, rng: &mut R) -> DMatrix<f64> {
    let b = gaussian_matrix(dim, dim, 1.0, rng);
    &b * b.transpose() + DMatrix::identity(dim, dim) * floor
}

/// Random model with `n` states and `p` outputs; `A` is scaled to spectral
/// radius below one.
pub fn random_model<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> Result<LinearGaussianModel<f64>> {
    let mut a = gaussian_matrix(n, n, 1.0, rng);
    let radius = a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
    if radius > 0.95 {
        a *= 0.95 / radius;
    }
    LinearGaussianModel::new(
        a,
        gaussian_matrix(p, n, 1.0, rng),
        random_spd(n, 0.1, rng) * 0.2,
        random_spd(p, 0.5, rng),
        gaussian_matrix(n, 1, 1.0, rng).column(0).into_owned(),
        random_spd(n, 0.5, rng),
    )
}

/// Standard Kalman filter with the `(I − KC)M` covariance update.
pub fn reference_kalman(
    model: &LinearGaussianModel<f64>,
    ys: &[DVector<f64>],
) -> Vec<(DVector<f64>, DMatrix<f64>)> {
    let (a, c, q, r) = (model.a(), model.c(), model.q(), model.r().as_matrix());
    let n = model.state_dim();
    let mut out = Vec::with_capacity(ys.len());
    let mut xpred = model.x0_mean().clone();
    let mut ppred = model.x0_cov().clone();
    for y in ys {
        let s = c * &ppred * c.transpose() + r;
        let k = &ppred * c.transpose() * s.try_inverse().expect("innovation covariance invertible");
        let x = &xpred + &k * (y - c * &xpred);
        let p = (DMatrix::identity(n, n) - &k * c) * &ppred;
        xpred = a * &x;
        ppred = a * &p * a.transpose() + q;
        out.push((x, p));
    }
    out
}

fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max() / a.abs().max().max(1.0)
}

fn check<F: FnOnce() -> Result<(bool, String)>>(name: &'static str, f: F) -> CheckOutcome {
    match f() {
        Ok((passed, detail)) => CheckOutcome { name, passed, detail },
        Err(e) => CheckOutcome {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn case1_secl() -> Result<Secl<f64>> {
    Secl::new(tracking_preset(1.0, 2.0, 0.5)?, make_config(Case::Case1.nbar(), 0.05)?)
}

/// Runs every check with randomness derived from `seed`.
pub fn run_checks(seed: u64) -> Vec<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    out.push(check("chi-square threshold", || {
        let c: f64 = chi_square_quantile(0.05, 2)?;
        Ok(((c - 5.991).abs() < 5e-4, format!("χ²_0.05(2) = {c:.6}")))
    }));

    out.push(check("confidence identity", || {
        let c: f64 = chi_square_quantile(0.05, 2)?;
        let m = ball_moments(&SpdMatrix::identity(2), c, DEFAULT_TOL)?;
        Ok(((m.prob - 0.95).abs() < 1e-6, format!("P = {:.10}", m.prob)))
    }));

    let mut qrng = ChaCha8Rng::seed_from_u64(rng.random());
    out.push(check("quadrature vs sampling", move || {
        let mut worst = 0.0f64;
        for i in 0..10 {
            let p = 1 + i % 3;
            let n = SpdMatrix::new(random_spd(p, 0.2, &mut qrng))?;
            let r2 = qrng.random_range(0.5..3.0) * p as f64;
            let quad = ball_moments(&n, r2, DEFAULT_TOL)?;
            let mc = monte_carlo_ball(&n, r2, 200_000, &mut qrng)?;
            worst = worst.max((quad.prob - mc.prob).abs() / mc.std_error.max(1e-12));
        }
        Ok((worst <= 4.0, format!("worst deviation {worst:.2} standard errors over 10 covariances")))
    }));

    let mut krng = ChaCha8Rng::seed_from_u64(rng.random());
    out.push(check("Kalman limit", move || {
        let mut worst = 0.0f64;
        for i in 0..10 {
            let n = 1 + i % 4;
            let p = 1 + i % 3;
            let model = random_model(n, p, &mut krng)?;
            let trigger = make_config(SpdMatrix::identity(p), 0.05)?.with_threshold(0.0)?;
            let secl = Secl::new(model.clone(), trigger)?;
            let ys = model.simulate(30, &mut krng).measurements;
            for ((o, _), (x, pk)) in secl.run(&ys)?.iter().zip(reference_kalman(&model, &ys)) {
                worst = worst.max(rel_diff(&pk, &o.p));
                worst = worst.max(rel_diff(&DMatrix::from_column_slice(n, 1, x.as_slice()), &DMatrix::from_column_slice(n, 1, o.xhat.as_slice())));
            }
        }
        Ok((worst <= 1e-10, format!("max relative deviation {worst:.2e}")))
    }));

    let mut rrng = ChaCha8Rng::seed_from_u64(rng.random());
    out.push(check("factor invariance", move || {
        let secl = case1_secl()?;
        let qr = gaussian_matrix(2, 2, 1.0, &mut rrng).qr();
        let rotated = secl.with_trigger(secl.trigger().rotated(&qr.q())?)?;
        let ys = secl.model().simulate(100, &mut rrng).measurements;
        let (a, b) = (secl.run(&ys)?, rotated.run(&ys)?);
        let same_gamma = a.iter().zip(&b).all(|(x, y)| x.0.gamma == y.0.gamma);
        let dp = a.iter().zip(&b).map(|(x, y)| (&x.0.p - &y.0.p).abs().max()).fold(0.0, f64::max);
        Ok((same_gamma && dp <= 1e-9, format!("γ identical: {same_gamma}, max |ΔP| = {dp:.2e}")))
    }));

    let mut frng = ChaCha8Rng::seed_from_u64(rng.random());
    out.push(check("odd-moment nullity", move || {
        let secl = case1_secl()?;
        let ys = secl.model().simulate(100, &mut frng).measurements;
        let m = secl.run(&ys)?.iter().map(|(o, _)| o.first_moment_diag.amax()).fold(0.0, f64::max);
        Ok((m <= 1e-7, format!("max |ψ| = {m:.2e}")))
    }));

    let det_seed: u64 = rng.random();
    out.push(check("thread-count determinism", move || {
        let cfg = |threads| ExperimentConfig {
            trials: 24,
            steps: 20,
            seed: det_seed,
            rate_trial_index: 3,
            threads: Some(threads),
            ..ExperimentConfig::default()
        };
        let a = run_monte_carlo(&cfg(1))?;
        let b = run_monte_carlo(&cfg(4))?;
        let same = rms_csv(&a) == rms_csv(&b) && rates_csv(&a) == rates_csv(&b);
        Ok((same, format!("1 vs 4 threads identical: {same}")))
    }));

    out
}

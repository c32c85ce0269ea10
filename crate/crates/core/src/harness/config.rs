//! Experiment configuration and its flat `key = value` file format.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{tracking_preset, LinearGaussianModel, TRACKING_DEFAULTS, TRACKING_TRUE_INITIAL_STATE};
use crate::numerics::{SpdMatrix, DEFAULT_TOL};
use crate::trigger::DEFAULT_ALPHA;

pub const DEFAULT_TRIALS: usize = 5000;
pub const DEFAULT_STEPS: usize = 101;
pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_RATE_TRIAL: usize = 40;
/// Environment variable consulted for the default output directory.
pub const OUT_DIR_ENV: &str = "SECL_OUT_DIR";

/// Tolerable innovation covariance bound.
#[derive(Debug, Clone, PartialEq)]
pub enum Case {
    Case1,
    Case2,
    Case3,
    Custom(SpdMatrix<f64>),
}

impl Case {
    pub const ALL: [Case; 3] = [Case::Case1, Case::Case2, Case::Case3];

    pub fn nbar(&self) -> SpdMatrix<f64> {
        let base = |v: [f64; 4]| SpdMatrix::from_row_slice(2, &v).expect("built-in bound is SPD");
        match self {
            Case::Case1 => base([50.0, 4.0, 4.0, 8.0]),
            Case::Case2 => base([25.0, 2.0, 2.0, 4.0]),
            Case::Case3 => base([60.0, 10.0, 10.0, 20.0]),
            Case::Custom(m) => m.clone(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Case::Case1 => "case1",
            Case::Case2 => "case2",
            Case::Case3 => "case3",
            Case::Custom(_) => "custom",
        }
    }

    /// Accepts `1`, `2`, `3` or `case1`..`case3`.
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().trim_start_matches("case") {
            "1" => Ok(Case::Case1),
            "2" => Ok(Case::Case2),
            "3" => Ok(Case::Case3),
            other => Err(Error::Config(format!("unknown case '{other}' (expected 1, 2 or 3)"))),
        }
    }

    /// Custom bound from a row-major list of `p²` numbers.
    pub fn custom(values: &[f64]) -> Result<Self> {
        let p = (values.len() as f64).sqrt().round() as usize;
        if p == 0 || p * p != values.len() {
            return Err(Error::Config(format!(
                "custom bound needs a square number of entries, got {}",
                values.len()
            )));
        }
        Ok(Case::Custom(SpdMatrix::named(DMatrix::from_row_slice(p, p, values), "custom bound")?))
    }
}

/// The simulated system and its true initial state.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub model: LinearGaussianModel<f64>,
    /// Fixed true `x_0`; `None` draws it from the prior in every trial.
    pub true_x0: Option<DVector<f64>>,
}

impl Scenario {
    /// Constant-acceleration tracking example with its fixed true initial state.
    pub fn tracking() -> Self {
        let (t, a, s2) = TRACKING_DEFAULTS;
        Self {
            model: tracking_preset(t, a, s2).expect("preset parameters are valid"),
            true_x0: Some(DVector::from_row_slice(&TRACKING_TRUE_INITIAL_STATE)),
        }
    }
}

/// How the rate predictors are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateMode {
    /// Along the designated trial only.
    Single,
    /// Averaged over every trial.
    Averaged,
}

impl RateMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "single" => Ok(RateMode::Single),
            "averaged" => Ok(RateMode::Averaged),
            other => Err(Error::Config(format!("unknown rate mode '{other}' (single|averaged)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub case: Case,
    pub scenario: Scenario,
    pub trials: usize,
    /// Number of time points `k = 0..steps-1`.
    pub steps: usize,
    pub seed: u64,
    pub alpha: f64,
    /// 1-based index of the trial whose information drives the rate predictors.
    pub rate_trial_index: usize,
    pub rate_mode: RateMode,
    pub output_dir: PathBuf,
    pub joseph: bool,
    pub quad_tol: f64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            case: Case::Case1,
            scenario: Scenario::tracking(),
            trials: DEFAULT_TRIALS,
            steps: DEFAULT_STEPS,
            seed: DEFAULT_SEED,
            alpha: DEFAULT_ALPHA,
            rate_trial_index: DEFAULT_RATE_TRIAL,
            rate_mode: RateMode::Single,
            output_dir: default_output_dir(),
            joseph: true,
            quad_tol: DEFAULT_TOL,
            threads: None,
        }
    }
}

pub fn default_output_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"))
}

impl ExperimentConfig {
    pub fn for_case(case: Case) -> Self {
        Self {
            case,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.steps < 2 {
            return Err(Error::Config("steps must be at least 2".into()));
        }
        if self.rate_trial_index < 1 {
            return Err(Error::Config("rate trial index is 1-based".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.quad_tol > 0.0) {
            return Err(Error::Config(format!("quadrature tolerance must be positive, got {}", self.quad_tol)));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        let p = self.scenario.model.measurement_dim();
        if self.case.nbar().dim() != p {
            return Err(Error::DimensionMismatch {
                what: "bound",
                expected: p,
                found: self.case.nbar().dim(),
            });
        }
        Ok(())
    }

    /// Applies one `key = value` setting. Keys mirror the CLI flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("invalid {what} '{value}'"));
        match key {
            "case" => self.case = Case::parse(value)?,
            "nbar" => {
                let v = value
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| bad("nbar"))?;
                self.case = Case::custom(&v)?;
            }
            "trials" => self.trials = value.parse().map_err(|_| bad("trials"))?,
            "steps" => self.steps = value.parse().map_err(|_| bad("steps"))?,
            "seed" => self.seed = value.parse().map_err(|_| bad("seed"))?,
            "alpha" => self.alpha = value.parse().map_err(|_| bad("alpha"))?,
            "trial-index" | "rate-trial-index" => {
                self.rate_trial_index = value.parse().map_err(|_| bad("trial index"))?
            }
            "rate-mode" => self.rate_mode = RateMode::parse(value)?,
            "out" => self.output_dir = PathBuf::from(value),
            "joseph" => self.joseph = value.parse().map_err(|_| bad("joseph flag"))?,
            "quad-tol" => self.quad_tol = value.parse().map_err(|_| bad("quadrature tolerance"))?,
            "threads" => self.threads = Some(value.parse().map_err(|_| bad("threads"))?),
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Applies every setting of a config file body. Blank lines and `#`
    /// comments are ignored; underscores in keys are accepted for dashes.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            let key = key.trim().replace('_', "-");
            self.set(&key, value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.apply_str(&text)
    }
}

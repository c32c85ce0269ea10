//! Communication-rate prediction.
//!
//! * One-step: `P(γ_k = 0 | I_{k-1})` is the probability of the silent ball
//!   under `N_k^[z]`, already computed by the estimator at step `k`.
//! * Two-step: `P(γ_k = 0 | I_{k-2})` mixes the silent-ball probabilities
//!   under the two possible outcomes at `k-1`:
//!
//! ```text
//! N⃗_k   = Φ (C (A P_{k-1}^[z] Aᵀ + Q) Cᵀ + R) Φᵀ
//! N_k(0) = Φ (C (A (P_{k-1}^[z] + K_{k-1} Ψ_{k-1} K_{k-1}ᵀ / h_{k-1}) Aᵀ + Q) Cᵀ + R) Φᵀ
//! P_{k,k-2}(0) = P⃗_k(0) + P_{k-1,k-2}(0) (P̆_k(0) − P⃗_k(0))
//! ```
//!
//! The predictors observe [`EstimatorCache`] snapshots; they never re-run the
//! filter.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::estimator::{EstimatorCache, Secl};
use crate::numerics::linalg::symmetrize;
use crate::numerics::{ball_probability, SpdMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    OneStep,
    TwoStep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePrediction<T> {
    /// Predicted `E[γ_k | I_{k-i}]`.
    pub gamma_hat: T,
    /// Predicted `P(γ_k = 0 | I_{k-i})`.
    pub prob0: T,
    pub which: Horizon,
}

impl<T: Scalar> RatePrediction<T> {
    fn from_prob0(prob0: T, which: Horizon) -> Self {
        let prob0 = clamp_unit(prob0);
        Self {
            gamma_hat: T::one() - prob0,
            prob0,
            which,
        }
    }
}

fn clamp_unit<T: Scalar>(v: T) -> T {
    if v < T::zero() {
        T::zero()
    } else if v > T::one() {
        T::one()
    } else {
        v
    }
}

/// Prediction from information up to `k-1`, using the cache of step `k`.
pub fn rate_one_step<T: Scalar>(cache: &EstimatorCache<T>) -> RatePrediction<T> {
    RatePrediction::from_prob0(cache.prob0, Horizon::OneStep)
}

/// Inputs to the two-step predictor for time `k`: the estimator and its
/// cache from step `k-1` (whose `prob0` is `P_{k-1,k-2}(0)`).
#[derive(Debug, Clone)]
pub struct RateState<'a, T: Scalar> {
    pub secl: &'a Secl<T>,
    pub prev: &'a EstimatorCache<T>,
}

/// Intermediate quantities of the two-step predictor.
#[derive(Debug, Clone)]
pub struct TwoStepParts<T: Scalar> {
    /// `N⃗_k^[z]`: whitened innovation covariance if `z_{k-1}` were received.
    pub n_sent: SpdMatrix<T>,
    /// `N_k(0)`: whitened innovation covariance if `k-1` was silent.
    pub n_silent: SpdMatrix<T>,
    /// `P⃗_k^[z](0)`.
    pub prob0_sent: T,
    /// `P̆_k(0)`.
    pub prob0_silent: T,
}

fn whitened_innovation_cov<T: Scalar>(secl: &Secl<T>, posterior: &DMatrix<T>) -> Result<SpdMatrix<T>> {
    let m = secl.model();
    let a = m.a();
    let c = m.c();
    let pred = a * posterior * a.transpose() + m.q();
    let s = c * pred * c.transpose() + m.r().as_matrix();
    SpdMatrix::named(symmetrize(&secl.trigger().whiten_cov(&s)), "two-step innovation covariance")
}

pub fn two_step_parts<T: Scalar>(rs: &RateState<'_, T>) -> Result<TwoStepParts<T>> {
    let n_sent = whitened_innovation_cov(rs.secl, &rs.prev.p_z)?;
    let n_silent = whitened_innovation_cov(rs.secl, &rs.prev.silent_cov())?;
    let r2 = rs.secl.trigger().threshold();
    let tol = rs.secl.options().quad_tol;
    let prob0_sent = ball_probability(&n_sent, r2, tol)?;
    let prob0_silent = if n_silent == n_sent {
        prob0_sent
    } else {
        ball_probability(&n_silent, r2, tol)?
    };
    Ok(TwoStepParts {
        n_sent,
        n_silent,
        prob0_sent,
        prob0_silent,
    })
}

/// `P_{k,k-2}(0) = P⃗ + w (P̆ − P⃗)` with `w = P_{k-1,k-2}(0)`.
pub fn combine_two_step<T: Scalar>(prob0_sent: T, prob0_silent: T, prob0_prev: T) -> T {
    prob0_sent + prob0_prev * (prob0_silent - prob0_sent)
}

/// Prediction from information up to `k-2`.
pub fn rate_two_step<T: Scalar>(rs: &RateState<'_, T>) -> Result<RatePrediction<T>> {
    let parts = two_step_parts(rs)?;
    let prob0 = combine_two_step(parts.prob0_sent, parts.prob0_silent, rs.prev.prob0);
    Ok(RatePrediction::from_prob0(prob0, Horizon::TwoStep))
}

/// `(E[γ_0], E[γ_1])` from the prior alone.
pub fn bootstrap_rates<T: Scalar>(secl: &Secl<T>) -> Result<(T, T)> {
    let (cache0, _) = secl.gate(secl.model().x0_cov())?;
    let e0 = rate_one_step(&cache0).gamma_hat;
    let e1 = rate_two_step(&RateState {
        secl,
        prev: &cache0,
    })?
    .gamma_hat;
    Ok((e0, e1))
}

/// Per-step rate predictions along one filter run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RateSeries<T> {
    pub one_step: Vec<T>,
    pub two_step: Vec<T>,
}

/// Builds both predictor series from the caches of a filter run
/// (`caches[k]` from step `k`). Index 0 of both series is `E[γ_0]`; index 1
/// of the two-step series is `E[γ_1]`.
pub fn rate_series<T: Scalar>(secl: &Secl<T>, caches: &[EstimatorCache<T>]) -> Result<RateSeries<T>> {
    let mut series = RateSeries {
        one_step: Vec::with_capacity(caches.len()),
        two_step: Vec::with_capacity(caches.len()),
    };
    for (k, cache) in caches.iter().enumerate() {
        series.one_step.push(rate_one_step(cache).gamma_hat);
        let two = if k == 0 {
            rate_one_step(cache).gamma_hat
        } else {
            rate_two_step(&RateState {
                secl,
                prev: &caches[k - 1],
            })?
            .gamma_hat
        };
        series.two_step.push(two);
    }
    Ok(series)
}

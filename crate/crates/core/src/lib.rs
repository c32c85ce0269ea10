//! Confidence-level event-triggered state estimation for linear Gaussian
//! systems.
//!
//! A sensor transmits its measurement only when the whitened innovation
//! leaves a chi-square confidence ball; the estimator keeps an approximate
//! MMSE estimate in both cases and can predict the resulting communication
//! rate one or two steps ahead.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix it to `f64`, which is what the experiment
//! harness uses.

pub mod error;
pub mod estimator;
pub mod harness;
pub mod model;
pub mod numerics;
pub mod rate;
pub mod scalar;
pub mod trigger;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Estimator = estimator::Secl<f64>;
pub type EstimatorState = estimator::EstimatorState<f64>;
pub type EstimatorCache = estimator::EstimatorCache<f64>;
pub type StepOutput = estimator::StepOutput<f64>;
pub type Model = model::LinearGaussianModel<f64>;
pub type Trigger = trigger::TriggerConfig<f64>;
pub type SpdMatrix = numerics::SpdMatrix<f64>;
pub type BallMoments = numerics::BallMoments<f64>;

pub type Estimator32 = estimator::Secl<f32>;
pub type Model32 = model::LinearGaussianModel<f32>;
pub type Trigger32 = trigger::TriggerConfig<f32>;

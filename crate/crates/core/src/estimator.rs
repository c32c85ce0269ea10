//! Approximate MMSE estimator under the confidence-level trigger.
//!
//! Each step predicts with the model, then either performs the ordinary
//! Kalman update (measurement received) or keeps the predicted mean and
//! inflates the covariance by the second moment of the whitened innovation
//! restricted to the silent ball:
//!
//! ```text
//! x̂_k = x̂_{k,k-1} + γ_k M_k Cᵀ (C M_k Cᵀ + R)⁻¹ ỹ_k
//! P_k = P_k^[z] + (1 - γ_k) K_k (Ψ_k / h_k) K_kᵀ
//! ```
//!
//! with `P_k^[z] = M_k - M_k Cᵀ (C M_k Cᵀ + R)⁻¹ C M_k` and
//! `K_k = M_k Cᵀ (C M_k Cᵀ + R)⁻¹ Φ⁻¹`.
//!
//! The sensor and estimator sides are exposed separately
//! ([`Secl::sensor_decide`] / [`Secl::estimator_update`]) but normally run
//! together through [`Secl::step`].

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::LinearGaussianModel;
use crate::numerics::linalg::{right_solve_spd, symmetrize};
use crate::numerics::{ball_moments, SpdMatrix, DEFAULT_TOL};
use crate::scalar::Scalar;
use crate::trigger::{decide, Decision, TriggerConfig};

/// Smallest acceptable unnormalised silent-region mass before the
/// covariance correction is considered meaningless.
const MIN_SILENT_MASS: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorOptions<T> {
    /// Use the Joseph form for the measurement-update covariance.
    pub joseph: bool,
    /// Accuracy of the ball-moment quadrature.
    pub quad_tol: T,
}

impl<T: Scalar> Default for EstimatorOptions<T> {
    fn default() -> Self {
        Self {
            joseph: true,
            quad_tol: crate::scalar::precision_floor(DEFAULT_TOL),
        }
    }
}

/// Per-step quantities that depend only on the predicted covariance `M_k`
/// (not on `γ_k`), kept for the rate predictors.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorCache<T: Scalar> {
    /// `P_k^[z]`.
    pub p_z: DMatrix<T>,
    /// Unnormalised silent-region mass `h_k`.
    pub h: T,
    /// `K_k`.
    pub gain: DMatrix<T>,
    /// Unnormalised second moment `Ψ_k`.
    pub psi: DMatrix<T>,
    /// `Ψ_k / h_k`.
    pub truncated_cov: DMatrix<T>,
    /// Unnormalised first moment `ψ_k`.
    pub first_moment: DVector<T>,
    /// `N_k^[z] = Φ (C M_k Cᵀ + R) Φᵀ`.
    pub n_z: SpdMatrix<T>,
    /// `P(γ_k = 0 | I_{k-1}) = h_k / ((2π)^{p/2} |N_k^[z]|^{1/2})`.
    pub prob0: T,
}

impl<T: Scalar> EstimatorCache<T> {
    /// `K_k (Ψ_k / h_k) K_kᵀ`.
    pub fn correction(&self) -> DMatrix<T> {
        symmetrize(&(&self.gain * &self.truncated_cov * self.gain.transpose()))
    }

    /// `P_k^[z] + K_k (Ψ_k / h_k) K_kᵀ`, the covariance after a silent step.
    pub fn silent_cov(&self) -> DMatrix<T> {
        &self.p_z + self.correction()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState<T: Scalar> {
    pub k: usize,
    /// `x̂_k`.
    pub xhat: DVector<T>,
    /// `P_k`.
    pub p: DMatrix<T>,
    pub cache: EstimatorCache<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<T: Scalar> {
    /// `x̂_{k,k-1}`.
    pub xpred: DVector<T>,
    /// `M_k`.
    pub m: DMatrix<T>,
    /// `C x̂_{k,k-1}`.
    pub ypred: DVector<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput<T: Scalar> {
    pub k: usize,
    pub gamma: bool,
    pub phi_stat: T,
    pub xhat: DVector<T>,
    pub p: DMatrix<T>,
    /// `ỹ_k` as seen by the sensor.
    pub innovation: DVector<T>,
    /// Unnormalised first moment `ψ_k` over the silent region; zero up to
    /// quadrature error.
    pub first_moment_diag: DVector<T>,
    /// The dropped mean correction `e_k = K_k ψ_k / h_k`.
    pub mean_correction: DVector<T>,
}

/// What reaches the estimator at one step.
#[derive(Debug, Clone, PartialEq)]
pub enum Transmission<T: Scalar> {
    Silent,
    Measurement(DVector<T>),
}

/// The event-triggered estimator: model, trigger and numerical options.
#[derive(Debug, Clone)]
pub struct Secl<T: Scalar> {
    model: LinearGaussianModel<T>,
    trigger: TriggerConfig<T>,
    options: EstimatorOptions<T>,
}

impl<T: Scalar> Secl<T> {
    pub fn new(model: LinearGaussianModel<T>, trigger: TriggerConfig<T>) -> Result<Self> {
        if model.measurement_dim() != trigger.dim() {
            return Err(Error::DimensionMismatch {
                what: "trigger bound",
                expected: model.measurement_dim(),
                found: trigger.dim(),
            });
        }
        Ok(Self {
            model,
            trigger,
            options: EstimatorOptions::default(),
        })
    }

    pub fn with_options(mut self, options: EstimatorOptions<T>) -> Self {
        self.options = options;
        self
    }

    pub fn with_trigger(&self, trigger: TriggerConfig<T>) -> Result<Self> {
        Ok(Self::new(self.model.clone(), trigger)?.with_options(self.options))
    }

    pub fn model(&self) -> &LinearGaussianModel<T> {
        &self.model
    }

    pub fn trigger(&self) -> &TriggerConfig<T> {
        &self.trigger
    }

    pub fn options(&self) -> &EstimatorOptions<T> {
        &self.options
    }

    /// The prior `(x̄_0, P̄_0)` in prediction form, used at `k = 0`.
    pub fn prior_prediction(&self) -> Prediction<T> {
        let xpred = self.model.x0_mean().clone();
        Prediction {
            ypred: self.model.c() * &xpred,
            m: self.model.x0_cov().clone(),
            xpred,
        }
    }

    /// Step 1: `x̂_{k,k-1} = A x̂_{k-1}`, `M_k = A P_{k-1} Aᵀ + Q`.
    pub fn predict(&self, state: &EstimatorState<T>) -> Prediction<T> {
        let a = self.model.a();
        let xpred = a * &state.xhat;
        let m = symmetrize(&(a * &state.p * a.transpose() + self.model.q()));
        Prediction {
            ypred: self.model.c() * &xpred,
            xpred,
            m,
        }
    }

    /// The `γ`-independent quantities for a predicted covariance `M`, plus the
    /// Kalman gain `M Cᵀ (C M Cᵀ + R)⁻¹`.
    pub fn gate(&self, m: &DMatrix<T>) -> Result<(EstimatorCache<T>, DMatrix<T>)> {
        let c = self.model.c();
        let r = self.model.r().as_matrix();
        let s = symmetrize(&(c * m * c.transpose() + r));
        let mct = m * c.transpose();
        let kalman_gain = right_solve_spd(&mct, &s)?;
        let p_z = if self.options.joseph {
            let n = self.model.state_dim();
            let i_gc = DMatrix::identity(n, n) - &kalman_gain * c;
            &i_gc * m * i_gc.transpose() + &kalman_gain * r * kalman_gain.transpose()
        } else {
            m - &kalman_gain * mct.transpose()
        };
        let p_z = symmetrize(&p_z);
        let gain = &kalman_gain * self.trigger.phi_inv();
        let n_z = SpdMatrix::named(
            symmetrize(&self.trigger.whiten_cov(&s)),
            "whitened innovation covariance",
        )?;
        let moments = ball_moments(&n_z, self.trigger.threshold(), self.options.quad_tol)?;
        Ok((
            EstimatorCache {
                p_z,
                h: moments.mass,
                gain,
                psi: moments.m2,
                truncated_cov: moments.conditional_second,
                first_moment: moments.m1,
                n_z,
                prob0: moments.prob,
            },
            kalman_gain,
        ))
    }

    /// Sensor side: innovation against the estimator's prediction and the
    /// trigger decision.
    pub fn sensor_decide(
        &self,
        pred: &Prediction<T>,
        y: &DVector<T>,
    ) -> Result<(Decision<T>, DVector<T>)> {
        if y.len() != self.model.measurement_dim() {
            return Err(Error::DimensionMismatch {
                what: "measurement",
                expected: self.model.measurement_dim(),
                found: y.len(),
            });
        }
        let innovation = y - &pred.ypred;
        Ok((decide(&self.trigger, &innovation)?, innovation))
    }

    /// Estimator side: Step 2 given what was (or was not) received.
    pub fn estimator_update(
        &self,
        k: usize,
        pred: Prediction<T>,
        received: &Transmission<T>,
    ) -> Result<EstimatorState<T>> {
        let (cache, kalman_gain) = self.gate(&pred.m)?;
        let (xhat, p) = match received {
            Transmission::Measurement(y) => {
                let innovation = y - &pred.ypred;
                (&pred.xpred + &kalman_gain * innovation, cache.p_z.clone())
            }
            Transmission::Silent => {
                let floor = T::lit(MIN_SILENT_MASS).max(T::min_positive());
                if !(cache.h >= floor) || !(cache.prob0 > T::zero()) {
                    return Err(Error::DegenerateTrigger {
                        step: k,
                        mass: cache.h.as_f64(),
                    });
                }
                (pred.xpred, cache.silent_cov())
            }
        };
        Ok(EstimatorState { k, xhat, p, cache })
    }

    fn advance(&self, k: usize, pred: Prediction<T>, y: &DVector<T>) -> Result<(StepOutput<T>, EstimatorState<T>)> {
        let (decision, innovation) = self.sensor_decide(&pred, y)?;
        let received = if decision.gamma {
            Transmission::Measurement(y.clone())
        } else {
            Transmission::Silent
        };
        let state = self.estimator_update(k, pred, &received)?;
        let cache = &state.cache;
        let mean_correction = if cache.h > T::zero() {
            &cache.gain * (&cache.first_moment / cache.h)
        } else {
            DVector::zeros(self.model.state_dim())
        };
        let out = StepOutput {
            k,
            gamma: decision.gamma,
            phi_stat: decision.phi_stat,
            xhat: state.xhat.clone(),
            p: state.p.clone(),
            innovation,
            first_moment_diag: cache.first_moment.clone(),
            mean_correction,
        };
        Ok((out, state))
    }

    /// Initialization from the prior and the first measurement `y_0`.
    pub fn init(&self, y0: &DVector<T>) -> Result<(StepOutput<T>, EstimatorState<T>)> {
        self.advance(0, self.prior_prediction(), y0)
    }

    /// One full recursion: predict, trigger, update. Advances `state` to `k+1`.
    pub fn step(&self, state: &mut EstimatorState<T>, y: &DVector<T>) -> Result<StepOutput<T>> {
        let pred = self.predict(state);
        let (out, next) = self.advance(state.k + 1, pred, y)?;
        *state = next;
        Ok(out)
    }

    /// Runs `init` then `step` over a measurement sequence.
    pub fn run(&self, measurements: &[DVector<T>]) -> Result<Vec<(StepOutput<T>, EstimatorCache<T>)>> {
        let mut out = Vec::with_capacity(measurements.len());
        let Some((first, rest)) = measurements.split_first() else {
            return Ok(out);
        };
        let (o, mut state) = self.init(first)?;
        out.push((o, state.cache.clone()));
        for y in rest {
            let o = self.step(&mut state, y)?;
            out.push((o, state.cache.clone()));
        }
        Ok(out)
    }
}

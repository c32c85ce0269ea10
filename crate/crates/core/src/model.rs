//! Discrete-time linear Gaussian system
//!
//! ```text
//! x_{k+1} = A x_k + ω_k,   ω_k ~ N(0, Q)
//! y_k     = C x_k + υ_k,   υ_k ~ N(0, R)
//! ```
//!
//! with `x_0 ~ N(x̄_0, P̄_0)`, plus trajectory simulation and the
//! maneuvering-target tracking preset.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::linalg::{check_psd, psd_sqrt};
use crate::numerics::SpdMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct LinearGaussianModel<T: Scalar> {
    a: DMatrix<T>,
    c: DMatrix<T>,
    q: DMatrix<T>,
    r: SpdMatrix<T>,
    x0_mean: DVector<T>,
    x0_cov: DMatrix<T>,
}

impl<T: Scalar> LinearGaussianModel<T> {
    /// Validates dimensions, `Q ⪰ 0`, `P̄_0 ⪰ 0` and `R ≻ 0`.
    pub fn new(
        a: DMatrix<T>,
        c: DMatrix<T>,
        q: DMatrix<T>,
        r: DMatrix<T>,
        x0_mean: DVector<T>,
        x0_cov: DMatrix<T>,
    ) -> Result<Self> {
        let n = a.nrows();
        let dim = |what, expected, found| {
            if expected == found {
                Ok(())
            } else {
                Err(Error::DimensionMismatch {
                    what,
                    expected,
                    found,
                })
            }
        };
        if n == 0 {
            return Err(Error::Domain("state dimension must be positive".into()));
        }
        dim("A columns", n, a.ncols())?;
        dim("C columns", n, c.ncols())?;
        let p = c.nrows();
        if p == 0 {
            return Err(Error::Domain("measurement dimension must be positive".into()));
        }
        dim("Q rows", n, q.nrows())?;
        dim("R rows", p, r.nrows())?;
        dim("prior mean length", n, x0_mean.len())?;
        dim("prior covariance rows", n, x0_cov.nrows())?;
        if a.iter().chain(c.iter()).chain(x0_mean.iter()).any(|v| !v.is_finite_value()) {
            return Err(Error::Domain("model has non-finite entries".into()));
        }
        let q = check_psd(&q, "process noise covariance")?;
        let x0_cov = check_psd(&x0_cov, "prior covariance")?;
        let r = SpdMatrix::named(r, "measurement noise covariance")?;
        Ok(Self {
            a,
            c,
            q,
            r,
            x0_mean,
            x0_cov,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn measurement_dim(&self) -> usize {
        self.c.nrows()
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }

    pub fn c(&self) -> &DMatrix<T> {
        &self.c
    }

    pub fn q(&self) -> &DMatrix<T> {
        &self.q
    }

    pub fn r(&self) -> &SpdMatrix<T> {
        &self.r
    }

    pub fn x0_mean(&self) -> &DVector<T> {
        &self.x0_mean
    }

    pub fn x0_cov(&self) -> &DMatrix<T> {
        &self.x0_cov
    }

    /// Simulates `steps + 1` states and measurements with `x_0` drawn from the prior.
    pub fn simulate<R: Rng + ?Sized>(&self, steps: usize, rng: &mut R) -> Trajectory<T> {
        let x0 = &self.x0_mean + psd_sqrt(&self.x0_cov) * standard_normal(self.state_dim(), rng);
        self.simulate_from(x0, steps, rng)
    }

    /// Simulates starting from a known true initial state.
    pub fn simulate_from<R: Rng + ?Sized>(
        &self,
        x0: DVector<T>,
        steps: usize,
        rng: &mut R,
    ) -> Trajectory<T> {
        let mut sampler = NoiseSampler::new(self);
        let mut states = Vec::with_capacity(steps + 1);
        let mut measurements = Vec::with_capacity(steps + 1);
        let mut x = x0;
        for k in 0..=steps {
            measurements.push(sampler.measure(&x, rng));
            if k < steps {
                let next = sampler.propagate(&x, rng);
                states.push(std::mem::replace(&mut x, next));
            }
        }
        states.push(x);
        Trajectory {
            states,
            measurements,
        }
    }
}

/// Precomputed noise square roots for repeated sampling.
#[derive(Debug, Clone)]
pub struct NoiseSampler<'m, T: Scalar> {
    model: &'m LinearGaussianModel<T>,
    q_sqrt: DMatrix<T>,
    r_sqrt: DMatrix<T>,
}

impl<'m, T: Scalar> NoiseSampler<'m, T> {
    pub fn new(model: &'m LinearGaussianModel<T>) -> Self {
        Self {
            model,
            q_sqrt: psd_sqrt(&model.q),
            r_sqrt: psd_sqrt(model.r.as_matrix()),
        }
    }

    /// `A x + ω`.
    pub fn propagate<R: Rng + ?Sized>(&mut self, x: &DVector<T>, rng: &mut R) -> DVector<T> {
        &self.model.a * x + &self.q_sqrt * standard_normal(self.model.state_dim(), rng)
    }

    /// `C x + υ`.
    pub fn measure<R: Rng + ?Sized>(&mut self, x: &DVector<T>, rng: &mut R) -> DVector<T> {
        &self.model.c * x + &self.r_sqrt * standard_normal(self.model.measurement_dim(), rng)
    }
}

pub(crate) fn standard_normal<T: Scalar, R: Rng + ?Sized>(len: usize, rng: &mut R) -> DVector<T> {
    DVector::from_fn(len, |_, _| T::lit(rng.sample::<f64, _>(StandardNormal)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T: Scalar> {
    /// `x_0 … x_K`.
    pub states: Vec<DVector<T>>,
    /// `y_0 … y_K`.
    pub measurements: Vec<DVector<T>>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// True initial state of the tracked target: position 3410 m, velocity 30 m/s,
/// acceleration 0 m/s².
pub const TRACKING_TRUE_INITIAL_STATE: [f64; 3] = [3410.0, 30.0, 0.0];

/// Sampling period, reciprocal maneuver time constant and acceleration
/// variance used by the tracking experiment.
pub const TRACKING_DEFAULTS: (f64, f64, f64) = (1.0, 2.0, 0.5);

/// Maneuvering-target model with state (position, velocity, acceleration),
/// position and acceleration measured.
///
/// `A = [[1, T, T²], [0, 1, T], [0, 0, 1]]` (the position/acceleration entry
/// is `T²`, not the kinematic `T²/2`), and
/// `Q = 2aσ_m² [[T⁵/20, T⁴/8, T³/6], [T⁴/8, T³/3, T²/2], [T³/6, T²/2, T]]`.
pub fn tracking_preset<T: Scalar>(
    period: T,
    maneuver_rate: T,
    accel_variance: T,
) -> Result<LinearGaussianModel<T>> {
    if !(period > T::zero()) || !period.is_finite_value() {
        return Err(Error::Domain(format!("sampling period must be positive, got {}", period.as_f64())));
    }
    if !(maneuver_rate > T::zero()) || !maneuver_rate.is_finite_value() {
        return Err(Error::Domain(format!(
            "maneuver rate must be positive, got {}",
            maneuver_rate.as_f64()
        )));
    }
    if !(accel_variance >= T::zero()) || !accel_variance.is_finite_value() {
        return Err(Error::Domain(format!(
            "acceleration variance must be non-negative, got {}",
            accel_variance.as_f64()
        )));
    }
    let t = period;
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let lit = T::lit;
    let zero = T::zero();
    let one = T::one();
    let a = DMatrix::from_row_slice(3, 3, &[one, t, t2, zero, one, t, zero, zero, one]);
    let q = DMatrix::from_row_slice(
        3,
        3,
        &[
            t5 / lit(20.0),
            t4 / lit(8.0),
            t3 / lit(6.0),
            t4 / lit(8.0),
            t3 / lit(3.0),
            t2 / lit(2.0),
            t3 / lit(6.0),
            t2 / lit(2.0),
            t,
        ],
    ) * (lit(2.0) * maneuver_rate * accel_variance);
    let c = DMatrix::from_row_slice(2, 3, &[one, zero, zero, zero, zero, one]);
    let r = DMatrix::from_row_slice(2, 2, &[lit(60.0), zero, zero, lit(10.0)]);
    let x0_mean = DVector::from_row_slice(&[lit(3500.0), lit(40.0), zero]);
    let s2 = lit(3600.0);
    let x0_cov = DMatrix::from_row_slice(
        3,
        3,
        &[s2, s2 / t, zero, s2 / t, lit(2.0) * s2 / t2, zero, zero, zero, zero],
    );
    LinearGaussianModel::new(a, c, q, r, x0_mean, x0_cov)
}

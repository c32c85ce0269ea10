//! Confidence-level send/skip rule.
//!
//! The sensor transmits (`γ_k = 1`) when `φ_k = ỹ_kᵀ N̄⁻¹ ỹ_k` exceeds the
//! upper-α chi-square percentile with `p` degrees of freedom, and stays
//! silent otherwise. A tie `φ_k = χ²_α(p)` is silent.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numerics::{chi_square_quantile, factor_precision, SpdMatrix};
use crate::scalar::Scalar;

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct TriggerConfig<T: Scalar> {
    nbar: SpdMatrix<T>,
    sigma: SpdMatrix<T>,
    phi: DMatrix<T>,
    phi_inv: DMatrix<T>,
    alpha: T,
    threshold: T,
}

impl<T: Scalar> TriggerConfig<T> {
    /// Builds the trigger for the tolerable innovation covariance bound `nbar`
    /// at upper-tail probability `alpha`.
    pub fn new(nbar: SpdMatrix<T>, alpha: T) -> Result<Self> {
        let threshold = chi_square_quantile(alpha, nbar.dim())?;
        let sigma = nbar.inverse()?;
        let phi = factor_precision(&nbar)?;
        let phi_inv = phi
            .clone()
            .try_inverse()
            .ok_or(Error::Factorization("precision factor"))?;
        Ok(Self {
            nbar,
            sigma,
            phi,
            phi_inv,
            alpha,
            threshold,
        })
    }

    pub fn with_default_alpha(nbar: SpdMatrix<T>) -> Result<Self> {
        Self::new(nbar, T::lit(DEFAULT_ALPHA))
    }

    /// Replaces `Φ` by `UΦ` for an orthogonal `U`. The decision rule and the
    /// estimator outputs do not depend on this choice.
    pub fn rotated(&self, u: &DMatrix<T>) -> Result<Self> {
        let p = self.dim();
        if u.nrows() != p || u.ncols() != p {
            return Err(Error::DimensionMismatch {
                what: "rotation",
                expected: p,
                found: u.nrows(),
            });
        }
        let resid = (u.transpose() * u - DMatrix::identity(p, p)).abs().max();
        if resid > crate::scalar::precision_floor::<T>(1e-10) {
            return Err(Error::Domain(format!("rotation is not orthogonal (residual {:e})", resid.as_f64())));
        }
        let phi = u * &self.phi;
        let phi_inv = &self.phi_inv * u.transpose();
        Ok(Self {
            phi,
            phi_inv,
            ..self.clone()
        })
    }

    /// Overrides the threshold (0 forces every step to transmit, `+∞` none).
    pub fn with_threshold(mut self, threshold: T) -> Result<Self> {
        if threshold.is_nan_value() || threshold < T::zero() {
            return Err(Error::Domain(format!("threshold must be non-negative, got {}", threshold.as_f64())));
        }
        self.threshold = threshold;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.nbar.dim()
    }

    pub fn nbar(&self) -> &SpdMatrix<T> {
        &self.nbar
    }

    /// `Σ = N̄⁻¹`.
    pub fn sigma(&self) -> &SpdMatrix<T> {
        &self.sigma
    }

    /// `Φ` with `ΦᵀΦ = Σ`.
    pub fn phi(&self) -> &DMatrix<T> {
        &self.phi
    }

    pub fn phi_inv(&self) -> &DMatrix<T> {
        &self.phi_inv
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    /// `χ²_α(p)`, the squared radius of the silent region in whitened coordinates.
    pub fn threshold(&self) -> T {
        self.threshold
    }

    /// `z = Φ ỹ`.
    pub fn whiten(&self, innovation: &DVector<T>) -> DVector<T> {
        &self.phi * innovation
    }

    /// `Φ S Φᵀ` for an innovation covariance `S`.
    pub fn whiten_cov(&self, s: &DMatrix<T>) -> DMatrix<T> {
        &self.phi * s * self.phi.transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision<T> {
    /// `true` when the measurement is transmitted (`γ = 1`).
    pub gamma: bool,
    /// `φ = ỹᵀ Σ ỹ`.
    pub phi_stat: T,
}

impl<T> Decision<T> {
    pub fn gamma_bit(&self) -> u8 {
        u8::from(self.gamma)
    }
}

pub fn make_config<T: Scalar>(nbar: SpdMatrix<T>, alpha: T) -> Result<TriggerConfig<T>> {
    TriggerConfig::new(nbar, alpha)
}

/// Evaluates the trigger on an innovation `ỹ`; `φ` is computed as `‖Φỹ‖²`.
pub fn decide<T: Scalar>(cfg: &TriggerConfig<T>, innovation: &DVector<T>) -> Result<Decision<T>> {
    if innovation.len() != cfg.dim() {
        return Err(Error::DimensionMismatch {
            what: "innovation",
            expected: cfg.dim(),
            found: innovation.len(),
        });
    }
    let phi_stat = cfg.whiten(innovation).norm_squared();
    Ok(Decision {
        gamma: phi_stat > cfg.threshold,
        phi_stat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case1() -> SpdMatrix<f64> {
        SpdMatrix::from_row_slice(2, &[50.0, 4.0, 4.0, 8.0]).unwrap()
    }

    #[test]
    fn case_three_threshold() {
        let nbar = SpdMatrix::from_row_slice(2, &[60.0, 10.0, 10.0, 20.0]).unwrap();
        let cfg = make_config(nbar, 0.05).unwrap();
        assert!((cfg.threshold() - 5.991f64).abs() < 5e-4);
    }

    #[test]
    fn identity_bound() {
        let cfg = make_config(SpdMatrix::<f64>::identity(2), 0.05).unwrap();
        assert!((cfg.sigma().as_matrix() - DMatrix::identity(2, 2)).abs().max() < 1e-15);
        assert!((cfg.phi() - DMatrix::identity(2, 2)).abs().max() < 1e-15);
    }

    #[test]
    fn precision_multiplies_back() {
        let nbar = case1();
        let cfg = make_config(nbar.clone(), 0.05).unwrap();
        let id = DMatrix::<f64>::identity(2, 2);
        assert!((cfg.sigma().as_matrix() * nbar.as_matrix() - &id).norm() < 1e-10);
        assert!((cfg.phi().transpose() * cfg.phi() * nbar.as_matrix() - &id).norm() < 1e-10);
    }

    #[test]
    fn zero_innovation_is_silent() {
        let cfg = make_config(case1(), 0.05).unwrap();
        let d = decide(&cfg, &DVector::zeros(2)).unwrap();
        assert!(!d.gamma);
        assert_eq!(d.phi_stat, 0.0);
    }

    #[test]
    fn large_innovation_transmits() {
        let cfg = make_config(SpdMatrix::identity(2), 0.05).unwrap();
        let d = decide(&cfg, &DVector::from_row_slice(&[3.0, 0.0])).unwrap();
        assert!((d.phi_stat - 9.0f64).abs() < 1e-14);
        assert!(d.gamma);
        assert_eq!(d.gamma_bit(), 1);
    }

    #[test]
    fn tie_is_silent() {
        let cfg = make_config(SpdMatrix::identity(1), 0.05).unwrap().with_threshold(4.0).unwrap();
        assert!(!decide(&cfg, &DVector::from_row_slice(&[2.0])).unwrap().gamma);
    }

    #[test]
    fn statistic_two_ways() {
        let nbar = case1();
        let cfg = make_config(nbar.clone(), 0.05).unwrap();
        let y = DVector::from_row_slice(&[1.0, 1.0]);
        let explicit = (y.transpose() * nbar.as_matrix().clone().try_inverse().unwrap() * &y)[(0, 0)];
        let d = decide(&cfg, &y).unwrap();
        assert!((d.phi_stat - explicit).abs() < 1e-12 * explicit);
    }

    #[test]
    fn wrong_dimension() {
        let cfg = make_config(case1(), 0.05).unwrap();
        assert!(decide(&cfg, &DVector::zeros(3)).is_err());
        assert!(make_config(case1(), 1.5).is_err());
    }
}

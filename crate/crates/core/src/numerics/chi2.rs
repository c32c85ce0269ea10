//! Chi-square distribution: survival function and upper-tail quantile.

use super::special::{gamma_p, gamma_q, ln_gamma, normal_quantile};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `P(χ²_dof ≤ x)`.
pub fn chi_square_cdf<T: Scalar>(x: T, dof: usize) -> T {
    gamma_p(T::lit(dof as f64 * 0.5), x * T::lit(0.5))
}

/// `P(χ²_dof > x)`.
pub fn chi_square_sf<T: Scalar>(x: T, dof: usize) -> T {
    gamma_q(T::lit(dof as f64 * 0.5), x * T::lit(0.5))
}

/// Upper `alpha` percentile of `χ²_dof`: the `c` with `P(χ²_dof > c) = alpha`.
///
/// Newton iteration on the regularized incomplete gamma function, seeded by
/// the Wilson–Hilferty cube approximation and safeguarded by bisection.
pub fn chi_square_quantile<T: Scalar>(alpha: T, dof: usize) -> Result<T> {
    if dof < 1 {
        return Err(Error::Domain(format!("chi-square needs dof >= 1, got {dof}")));
    }
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::Domain(format!(
            "upper-tail probability must lie in (0, 1), got {}",
            alpha.as_f64()
        )));
    }
    let lit = T::lit;
    let nu = lit(dof as f64);
    let shape = nu * lit(0.5);
    let lower_target = T::one() - alpha;

    let v = lit(2.0) / (lit(9.0) * nu);
    let z = normal_quantile(lower_target);
    let base = T::one() - v + z * v.sqrt();
    let mut x = nu * base * base * base;
    if !(x > T::zero()) || !x.is_finite_value() {
        // small-x expansion: P(a, x/2) ≈ (x/2)^a / Γ(a+1)
        x = lit(2.0) * ((ln_gamma(shape + T::one()) + lower_target.ln()) / shape).exp();
    }

    // Solve on whichever tail is small to keep relative precision.
    let use_upper = alpha < lit(0.5);
    let mut lo = T::zero();
    let mut hi = T::infinity();
    let ln_norm = ln_gamma(shape) + shape * lit(2.0f64.ln());
    for _ in 0..200 {
        let residual = if use_upper {
            alpha - chi_square_sf(x, dof)
        } else {
            chi_square_cdf(x, dof) - lower_target
        };
        if residual == T::zero() {
            break;
        }
        // residual is increasing in x on both branches
        if residual > T::zero() {
            hi = x;
        } else {
            lo = x;
        }
        let density = ((shape - T::one()) * x.ln() - x * lit(0.5) - ln_norm).exp();
        let mut next = x - residual / density;
        if !(next > lo && next < hi) || !next.is_finite_value() {
            next = if hi.is_finite_value() {
                (lo + hi) * lit(0.5)
            } else {
                x * lit(2.0)
            };
        }
        let done = (next - x).abs() <= x * T::machine_epsilon() * lit(4.0);
        x = next;
        if done {
            break;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_dof_has_closed_form() {
        // χ²_2 is exponential with mean 2: c = -2 ln(alpha)
        for &alpha in &[0.9, 0.5, 0.05, 0.01, 1e-6] {
            let c: f64 = chi_square_quantile(alpha, 2).unwrap();
            let want = -2.0 * f64::ln(alpha);
            assert!((c - want).abs() < 1e-12 * want.max(1.0), "alpha={alpha}");
        }
    }

    #[test]
    fn table_value_at_95_percent() {
        let c: f64 = chi_square_quantile(0.05, 2).unwrap();
        assert!((c - 5.991).abs() < 5e-4);
    }

    #[test]
    fn whole_tail_goes_to_zero() {
        let c: f64 = chi_square_quantile(1.0 - 1e-12, 3).unwrap();
        assert!(c >= 0.0 && c < 1e-6);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(chi_square_quantile(0.0f64, 2).is_err());
        assert!(chi_square_quantile(1.0f64, 2).is_err());
        assert!(chi_square_quantile(f64::NAN, 2).is_err());
        assert!(chi_square_quantile(0.05f64, 0).is_err());
    }

    #[test]
    fn quantile_round_trips_through_survival() {
        for dof in 1..12 {
            for &alpha in &[0.999, 0.7, 0.05, 1e-4] {
                let c: f64 = chi_square_quantile(alpha, dof).unwrap();
                let back = chi_square_sf(c, dof);
                assert!((back - alpha).abs() < 1e-12 * alpha.max(0.01), "dof={dof} alpha={alpha}");
            }
        }
    }
}

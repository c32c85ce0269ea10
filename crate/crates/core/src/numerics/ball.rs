//! Moments of a zero-mean Gaussian restricted to a centred ball.
//!
//! For `z ~ N(0, n)` and the region `Ω = {z : zᵀz ≤ r²}` this module computes
//!
//! * `h  = ∫_Ω exp(-½ zᵀn⁻¹z) dz` (the unnormalised mass),
//! * `ψ  = ∫_Ω exp(-½ zᵀn⁻¹z) z dz`,
//! * `Ψ  = ∫_Ω exp(-½ zᵀn⁻¹z) z zᵀ dz`,
//!
//! together with the probability `P(z ∈ Ω) = h / ((2π)^{p/2} |n|^{1/2})` and the
//! conditional second moment `Ψ / h`.
//!
//! The ball is invariant under rotations, so everything is evaluated in the
//! eigenframe `n = V Λ Vᵀ` with whitened coordinates `z = V Λ^{1/2} w`. There
//! the region becomes the ellipsoid `Σ λ_i w_i² ≤ r²` and the second moment
//! is diagonal, so `p` one-dimensional-outer nested integrals replace the
//! `p(p+1)/2` full integrals. Each level uses the substitution
//! `w = b sin θ`, which removes the square-root endpoint behaviour of the
//! nested limits; the innermost level is closed form through `erf`.
//! Dimensions above three fall back to randomized quasi-Monte Carlo.

use std::cell::Cell;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::linalg::{symmetrize, SpdMatrix};
use super::quadrature::{integrate, QuadResult, Tolerance};
use super::special::{erf, normal_pdf, normal_quantile};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default accuracy: relative on the mass, absolute on the moments.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Whitened half-width beyond which the Gaussian weight is negligible.
const WHITENED_CUTOFF: f64 = 12.0;
const MAX_SEGMENTS: usize = 400;
const NESTED_MAX_DIM: usize = 3;
const QMC_POINTS: usize = 1 << 14;
const QMC_SHIFTS: usize = 16;
const QMC_SEED: u64 = 0x5eed_ba11_0f_c0ffee;

#[derive(Debug, Clone, PartialEq)]
pub struct BallMoments<T: Scalar> {
    /// Unnormalised mass `h`.
    pub mass: T,
    /// `P(z ∈ Ω)`.
    pub prob: T,
    /// Unnormalised first moment `ψ`. Zero by symmetry up to quadrature error.
    pub m1: DVector<T>,
    /// Unnormalised second moment `Ψ`.
    pub m2: DMatrix<T>,
    /// `E[z zᵀ | z ∈ Ω] = Ψ / h`, computed without forming `h` explicitly.
    pub conditional_second: DMatrix<T>,
    /// Achieved error estimate on `prob`.
    pub error: T,
}

impl<T: Scalar> BallMoments<T> {
    /// `(2π)^{p/2} |n|^{1/2}`, the Gaussian normaliser.
    pub fn normaliser(&self) -> T {
        if self.prob > T::zero() {
            self.mass / self.prob
        } else {
            T::zero()
        }
    }
}

struct Eigenframe<T: Scalar> {
    values: Vec<T>,
    vectors: DMatrix<T>,
    ln_normaliser: T,
}

fn eigenframe<T: Scalar>(n: &SpdMatrix<T>) -> Result<Eigenframe<T>> {
    let eig = SymmetricEigen::new(symmetrize(n.as_matrix()));
    let values: Vec<T> = eig.eigenvalues.iter().copied().collect();
    if values.iter().any(|&v| !(v > T::zero())) {
        let min = values.iter().fold(T::infinity(), |m, &v| if v < m { v } else { m });
        return Err(Error::NotPositive {
            what: "ball covariance",
            kind: "definite",
            min_eigenvalue: min.as_f64(),
        });
    }
    let p = T::lit(values.len() as f64);
    let ln_det = values.iter().fold(T::zero(), |acc, &v| acc + v.ln());
    Ok(Eigenframe {
        values,
        vectors: eig.eigenvectors,
        ln_normaliser: p * T::lit(0.5) * T::two_pi().ln() + ln_det * T::lit(0.5),
    })
}

fn validate<T: Scalar>(radius2: T, tol: T) -> Result<()> {
    if radius2.is_nan_value() || radius2 < T::zero() {
        return Err(Error::Domain(format!(
            "ball radius² must be non-negative, got {}",
            radius2.as_f64()
        )));
    }
    if !(tol > T::zero()) {
        return Err(Error::Domain(format!("tolerance must be positive, got {}", tol.as_f64())));
    }
    Ok(())
}

/// Whitened per-coordinate moments of the ellipsoid `Σ λ_i w_i² ≤ r²`,
/// `w ~ N(0, I)`.
struct Whitened<T> {
    prob: T,
    first: Vec<T>,
    second: Vec<T>,
    error: T,
}

/// State shared by the nested integrals: records inner non-convergence.
struct Nested<T: Scalar> {
    tol: T,
    failed: Cell<bool>,
    worst: Cell<f64>,
}

impl<T: Scalar> Nested<T> {
    fn new(tol: T) -> Self {
        Self {
            tol,
            failed: Cell::new(false),
            worst: Cell::new(0.0),
        }
    }

    fn half_range(&self, lam: T, r2: T) -> (T, T) {
        let b = (r2 / lam).sqrt();
        let cutoff = T::lit(WHITENED_CUTOFF);
        let theta_max = if b > cutoff {
            (cutoff / b).asin()
        } else {
            T::frac_pi_2()
        };
        (b, theta_max)
    }

    /// `P(Σ λ_j w_j² ≤ r2)` for independent standard normal `w_j`.
    fn prob(&self, lams: &[T], r2: T, tol: T) -> T {
        if !(r2 > T::zero()) {
            return T::zero();
        }
        match lams.len() {
            0 => T::one(),
            1 => erf((r2 / (lams[0] * T::lit(2.0))).sqrt()),
            _ => {
                let (b, theta_max) = self.half_range(lams[0], r2);
                let rest = &lams[1..];
                let inner_tol = tol * T::lit(0.1);
                let res = self.integrate_split(
                    |theta: T| {
                        let (s, c) = theta.sin_cos();
                        [normal_pdf(b * s) * b * c * self.prob(rest, r2 * c * c, inner_tol)]
                    },
                    T::zero(),
                    theta_max,
                    &self.breakpoints(rest, r2),
                    Tolerance {
                        abs: tol * T::lit(0.5),
                        rel: tol,
                    },
                );
                res.value[0] * T::lit(2.0)
            }
        }
    }

    /// `[E 1_Ω, E w_i 1_Ω, E w_i² 1_Ω]` with coordinate `i` outermost.
    fn coordinate(&self, lams: &[T], i: usize, r2: T) -> ([T; 3], T) {
        let rest: Vec<T> = lams
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &v)| v)
            .collect();
        let (b, theta_max) = self.half_range(lams[i], r2);
        let inner_tol = self.tol * T::lit(0.1);
        let breaks: Vec<T> = self
            .breakpoints(&rest, r2)
            .into_iter()
            .flat_map(|t| [-t, t])
            .collect();
        let res = self.integrate_split(
            |theta: T| {
                let (s, c) = theta.sin_cos();
                let w = b * s;
                let weight = normal_pdf(w) * b * c * self.prob(&rest, r2 * c * c, inner_tol);
                [weight, weight * w, weight * w * w]
            },
            -theta_max,
            theta_max,
            &breaks,
            Tolerance {
                abs: self.tol * T::lit(0.1),
                rel: self.tol * T::lit(0.1),
            },
        );
        self.note(&res.converged, res.max_error());
        (res.value, res.max_error() + if rest.len() > 1 { inner_tol } else { T::zero() })
    }

    /// Angles `θ` where an inner direction's whitened half-range `b_j cos θ`
    /// passes 1 or the cutoff. Weakly weighted inner directions switch
    /// sharply there, so splitting the outer range keeps the adaptive rule
    /// from stepping over the transition.
    fn breakpoints(&self, inner: &[T], r2: T) -> Vec<T> {
        let mut out = Vec::new();
        for &lam in inner {
            let s = (lam / r2).sqrt();
            for c in [s, s * T::lit(WHITENED_CUTOFF)] {
                if c < T::one() {
                    out.push(c.acos());
                }
            }
        }
        out
    }

    /// Adaptive integration over `[a, b]` split at the given interior points.
    fn integrate_split<const M: usize, F: FnMut(T) -> [T; M]>(
        &self,
        mut f: F,
        a: T,
        b: T,
        breaks: &[T],
        tol: Tolerance<T>,
    ) -> QuadResult<T, M> {
        let mut cuts: Vec<T> = breaks.iter().copied().filter(|&t| t > a && t < b).collect();
        cuts.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
        cuts.dedup();
        let pieces = T::lit((cuts.len() + 1) as f64);
        let piece_tol = Tolerance {
            abs: tol.abs / pieces,
            rel: tol.rel,
        };
        let mut lo = a;
        let mut total: Option<QuadResult<T, M>> = None;
        for hi in cuts.into_iter().chain(std::iter::once(b)) {
            let r = integrate(&mut f, lo, hi, piece_tol, MAX_SEGMENTS);
            total = Some(match total {
                None => r,
                Some(mut t) => {
                    for c in 0..M {
                        t.value[c] += r.value[c];
                        t.error[c] += r.error[c];
                    }
                    t.evaluations += r.evaluations;
                    t.converged &= r.converged;
                    t
                }
            });
            lo = hi;
        }
        total.expect("at least one piece")
    }

    fn note(&self, converged: &bool, err: T) {
        if !converged {
            self.failed.set(true);
            self.worst.set(self.worst.get().max(err.as_f64()));
        }
    }
}

fn whitened_nested<T: Scalar>(lams: &[T], r2: T, tol: T) -> Result<Whitened<T>> {
    let nested = Nested::new(tol);
    let p = lams.len();
    let mut first = vec![T::zero(); p];
    let mut second = vec![T::zero(); p];
    let mut prob = T::zero();
    let mut error = T::zero();
    for i in 0..p {
        let (v, e) = nested.coordinate(lams, i, r2);
        if i == 0 {
            prob = v[0];
        }
        first[i] = v[1];
        second[i] = v[2];
        if e > error {
            error = e;
        }
    }
    if nested.failed.get() {
        return Err(Error::Quadrature {
            estimate: prob.as_f64(),
            error: nested.worst.get(),
            requested: tol.as_f64(),
        });
    }
    Ok(Whitened {
        prob,
        first,
        second,
        error,
    })
}

const PRIMES: [u32; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

// Randomly shifted Halton points over the first p-1 coordinates; the last
// coordinate is integrated in closed form, which smooths the indicator.
fn whitened_qmc<T: Scalar>(lams: &[T], r2: T) -> Result<Whitened<T>> {
    let p = lams.len();
    if p - 1 > PRIMES.len() {
        return Err(Error::Domain(format!("ball moments support p <= {}, got {p}", PRIMES.len() + 1)));
    }
    let last = lams[p - 1];
    let mut rng = ChaCha8Rng::seed_from_u64(QMC_SEED);
    let comps = 2 * p + 1;
    let mut shift_means: Vec<Vec<f64>> = Vec::with_capacity(QMC_SHIFTS);
    let mut w = vec![T::zero(); p - 1];
    for _ in 0..QMC_SHIFTS {
        let shift: Vec<f64> = (0..p - 1).map(|_| rng.random::<f64>()).collect();
        let mut acc = vec![T::zero(); comps];
        for idx in 1..=QMC_POINTS {
            let mut used = T::zero();
            for d in 0..p - 1 {
                let u = (radical_inverse(idx as u64, PRIMES[d]) + shift[d]).fract();
                let u = u.clamp(1e-300, 1.0 - 1e-16);
                w[d] = normal_quantile(T::lit(u));
                used += lams[d] * w[d] * w[d];
            }
            let rem = r2 - used;
            if !(rem > T::zero()) {
                continue;
            }
            let s = (rem / last).sqrt();
            let inner = erf(s * T::lit(std::f64::consts::FRAC_1_SQRT_2));
            acc[0] += inner;
            for d in 0..p - 1 {
                acc[1 + d] += w[d] * inner;
                acc[1 + p + d] += w[d] * w[d] * inner;
            }
            acc[2 * p] += inner - T::lit(2.0) * s * normal_pdf(s);
        }
        let n = QMC_POINTS as f64;
        shift_means.push(acc.iter().map(|v| v.as_f64() / n).collect());
    }
    let ns = QMC_SHIFTS as f64;
    let mut mean = vec![0.0; comps];
    for sm in &shift_means {
        for (m, v) in mean.iter_mut().zip(sm) {
            *m += v / ns;
        }
    }
    let mut error = 0.0f64;
    for c in 0..comps {
        let var = shift_means.iter().map(|sm| (sm[c] - mean[c]).powi(2)).sum::<f64>() / (ns - 1.0);
        error = error.max((var / ns).sqrt());
    }
    let mut first = vec![T::zero(); p];
    let mut second = vec![T::zero(); p];
    for d in 0..p - 1 {
        first[d] = T::lit(mean[1 + d]);
        second[d] = T::lit(mean[1 + p + d]);
    }
    second[p - 1] = T::lit(mean[2 * p]);
    Ok(Whitened {
        prob: T::lit(mean[0]),
        first,
        second,
        error: T::lit(error),
    })
}

fn whitened<T: Scalar>(lams: &[T], r2: T, tol: T) -> Result<Whitened<T>> {
    if lams.len() <= NESTED_MAX_DIM {
        whitened_nested(lams, r2, tol)
    } else {
        whitened_qmc(lams, r2)
    }
}

/// Mass, first and second moments of `exp(-½ zᵀn⁻¹z)` over `zᵀz ≤ radius2`.
///
/// `radius2 = +∞` yields the untruncated moments and `radius2 = 0` an empty
/// region. Dimensions `p ≤ 3` use nested adaptive quadrature to `tol`; larger
/// `p` use quasi-Monte Carlo and report the achieved error in
/// [`BallMoments::error`] instead of failing.
pub fn ball_moments<T: Scalar>(n: &SpdMatrix<T>, radius2: T, tol: T) -> Result<BallMoments<T>> {
    validate(radius2, tol)?;
    let frame = eigenframe(n)?;
    let p = frame.values.len();
    let normaliser = frame.ln_normaliser.exp();
    if !radius2.is_finite_value() {
        return Ok(BallMoments {
            mass: normaliser,
            prob: T::one(),
            m1: DVector::zeros(p),
            m2: n.as_matrix() * normaliser,
            conditional_second: n.as_matrix().clone(),
            error: T::zero(),
        });
    }
    if radius2 == T::zero() {
        return Ok(BallMoments {
            mass: T::zero(),
            prob: T::zero(),
            m1: DVector::zeros(p),
            m2: DMatrix::zeros(p, p),
            conditional_second: DMatrix::zeros(p, p),
            error: T::zero(),
        });
    }
    let wm = whitened(&frame.values, radius2, tol)?;
    let v = &frame.vectors;
    let first = DVector::from_iterator(p, (0..p).map(|i| frame.values[i].sqrt() * wm.first[i]));
    let second_diag = DVector::from_iterator(p, (0..p).map(|i| frame.values[i] * wm.second[i]));
    let raw_second = symmetrize(&(v * DMatrix::from_diagonal(&second_diag) * v.transpose()));
    let conditional_second = if wm.prob > T::zero() {
        &raw_second / wm.prob
    } else {
        DMatrix::zeros(p, p)
    };
    Ok(BallMoments {
        mass: wm.prob * normaliser,
        prob: wm.prob,
        m1: v * first * normaliser,
        m2: raw_second * normaliser,
        conditional_second,
        error: wm.error,
    })
}

/// `P(z ∈ Ω)` alone, for `z ~ N(0, n)`.
pub fn ball_probability<T: Scalar>(n: &SpdMatrix<T>, radius2: T, tol: T) -> Result<T> {
    validate(radius2, tol)?;
    if !radius2.is_finite_value() {
        return Ok(T::one());
    }
    if radius2 == T::zero() {
        return Ok(T::zero());
    }
    let frame = eigenframe(n)?;
    if frame.values.len() > NESTED_MAX_DIM {
        return Ok(whitened_qmc(&frame.values, radius2)?.prob);
    }
    let nested = Nested::new(tol);
    let prob = nested.prob(&frame.values, radius2, tol);
    if nested.failed.get() {
        return Err(Error::Quadrature {
            estimate: prob.as_f64(),
            error: nested.worst.get(),
            requested: tol.as_f64(),
        });
    }
    Ok(prob)
}

/// `E[z zᵀ | zᵀz ≤ radius2]` for `z ~ N(0, n)`.
pub fn truncated_second_moment<T: Scalar>(
    n: &SpdMatrix<T>,
    radius2: T,
    tol: T,
) -> Result<DMatrix<T>> {
    Ok(ball_moments(n, radius2, tol)?.conditional_second)
}

//! Special functions: log-gamma, regularized incomplete gamma, error function,
//! and the standard normal CDF and quantile.

use crate::scalar::Scalar;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const MAX_SERIES_TERMS: usize = 1_000;

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma<T: Scalar>(x: T) -> T {
    let half = T::lit(0.5);
    if x < half {
        // reflection: Γ(x)Γ(1-x) = π / sin(πx)
        let pi = T::pi();
        return (pi / (pi * x).sin()).abs().ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut acc = T::lit(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += T::lit(c) / (x + T::lit(i as f64));
    }
    let t = x + T::lit(LANCZOS_G) + half;
    half * T::two_pi().ln() + (x + half) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p<T: Scalar>(a: T, x: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    if !x.is_finite_value() {
        return T::one();
    }
    if x < a + T::one() {
        gamma_series(a, x)
    } else {
        T::one() - gamma_continued_fraction(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn gamma_q<T: Scalar>(a: T, x: T) -> T {
    if x <= T::zero() {
        return T::one();
    }
    if !x.is_finite_value() {
        return T::zero();
    }
    if x < a + T::one() {
        T::one() - gamma_series(a, x)
    } else {
        gamma_continued_fraction(a, x)
    }
}

// x^a e^{-x} / Γ(a), exact for the a = 1/2 case behind erf
fn gamma_prefactor<T: Scalar>(a: T, x: T) -> T {
    if a == T::lit(0.5) {
        return (-x).exp() * (x / T::pi()).sqrt();
    }
    (a * x.ln() - x - ln_gamma(a)).exp()
}

fn gamma_series<T: Scalar>(a: T, x: T) -> T {
    let eps = T::machine_epsilon();
    let mut ap = a;
    let mut term = T::one() / a;
    let mut sum = term;
    for _ in 0..MAX_SERIES_TERMS {
        ap += T::one();
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * eps {
            break;
        }
    }
    sum * gamma_prefactor(a, x)
}

// Modified Lentz evaluation of the continued fraction for Q(a, x).
fn gamma_continued_fraction<T: Scalar>(a: T, x: T) -> T {
    let eps = T::machine_epsilon();
    let tiny = T::min_positive() / eps;
    let mut b = x + T::one() - a;
    let mut c = T::one() / tiny;
    let mut d = T::one() / b;
    let mut h = d;
    for i in 1..MAX_SERIES_TERMS {
        let fi = T::lit(i as f64);
        let an = -fi * (fi - a);
        b += T::lit(2.0);
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = T::one() / d;
        let delta = d * c;
        h *= delta;
        if (delta - T::one()).abs() < eps {
            break;
        }
    }
    gamma_prefactor(a, x) * h
}

/// Error function, `erf(x) = P(1/2, x²)` for `x ≥ 0`.
pub fn erf<T: Scalar>(x: T) -> T {
    let v = gamma_p(T::lit(0.5), x * x);
    if x < T::zero() {
        -v
    } else {
        v
    }
}

/// Complementary error function, `erfc(x) = Q(1/2, x²)` for `x ≥ 0`.
pub fn erfc<T: Scalar>(x: T) -> T {
    if x < T::zero() {
        T::lit(2.0) - erfc(-x)
    } else {
        gamma_q(T::lit(0.5), x * x)
    }
}

/// Standard normal density.
#[inline]
pub fn normal_pdf<T: Scalar>(x: T) -> T {
    T::lit(1.0 / (2.0 * std::f64::consts::PI).sqrt()) * (-x * x * T::lit(0.5)).exp()
}

/// Standard normal CDF.
#[inline]
pub fn normal_cdf<T: Scalar>(x: T) -> T {
    T::lit(0.5) * erfc(-x * T::lit(std::f64::consts::FRAC_1_SQRT_2))
}

/// Standard normal quantile: Acklam's rational approximation refined by one
/// Halley step against [`normal_cdf`].
pub fn normal_quantile<T: Scalar>(p: T) -> T {
    if p <= T::zero() {
        return -T::infinity();
    }
    if p >= T::one() {
        return T::infinity();
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let lit = T::lit;
    let horner = |coeffs: &[f64], x: T| coeffs.iter().fold(T::zero(), |acc, &c| acc * x + lit(c));
    let p_low = lit(0.024_25);
    let x = if p < p_low {
        let q = (lit(-2.0) * p.ln()).sqrt();
        horner(&C, q) / (horner(&D, q) * q + T::one())
    } else if p <= T::one() - p_low {
        let q = p - lit(0.5);
        let r = q * q;
        horner(&A, r) * q / (horner(&B, r) * r + T::one())
    } else {
        let q = (lit(-2.0) * (T::one() - p).ln()).sqrt();
        -horner(&C, q) / (horner(&D, q) * q + T::one())
    };
    let e = normal_cdf(x) - p;
    let u = e * T::two_pi().sqrt() * (x * x * lit(0.5)).exp();
    x - u / (T::one() + x * u * lit(0.5))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_matches_factorials() {
        let mut fact = 1.0f64;
        for n in 1..20 {
            fact *= n as f64;
            assert!((ln_gamma(n as f64 + 1.0) - fact.ln()).abs() < 1e-12 * fact.ln().max(1.0));
        }
        assert!((ln_gamma(0.5f64) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
    }

    #[test]
    fn exponential_case_of_incomplete_gamma() {
        // P(1, x) = 1 - exp(-x)
        for &x in &[0.01, 0.5, 1.0, 2.0, 7.5, 30.0] {
            let want = 1.0 - (-x as f64).exp();
            assert!((gamma_p(1.0, x) - want).abs() < 1e-14);
            assert!((gamma_q(1.0, x) - (-x as f64).exp()).abs() < 1e-14 * (-x as f64).exp().max(1e-300) + 1e-300);
        }
    }

    #[test]
    fn erf_is_odd_and_complementary() {
        for &x in &[0.0, 0.3, 1.0, 2.9, 3.1, 5.0] {
            let e: f64 = erf(x);
            assert!((erf(-x) + e).abs() < 1e-16);
            assert!((e + erfc(x) - 1.0).abs() < 1e-15);
        }
        assert!((erf(1.0f64) - 0.842_700_792_949_714_9).abs() < 1e-15);
        assert!((erfc(4.0f64) - 1.541_725_790_028_002e-8).abs() < 1e-22);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-10, 0.001, 0.02, 0.3, 0.5, 0.9, 0.975, 0.999_999] {
            let x: f64 = normal_quantile(p);
            assert!((normal_cdf(x) - p).abs() < 1e-14 * p.max(1e-3), "p={p}");
        }
    }

    #[test]
    fn works_in_single_precision() {
        let e: f32 = erf(1.0f32);
        assert!((e - 0.842_700_8).abs() < 1e-6);
    }
}

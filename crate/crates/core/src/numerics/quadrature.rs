//! Globally adaptive Gauss–Kronrod (7/15) quadrature for small vector-valued
//! integrands.

use crate::scalar::Scalar;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerance<T> {
    pub abs: T,
    pub rel: T,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T, const M: usize> {
    pub value: [T; M],
    /// Error estimate per component.
    pub error: [T; M],
    pub evaluations: usize,
    pub converged: bool,
}

impl<T: Scalar, const M: usize> QuadResult<T, M> {
    pub fn max_error(&self) -> T {
        self.error.iter().fold(T::zero(), |m, &e| if e > m { e } else { m })
    }
}

#[derive(Clone, Copy)]
struct Segment<T, const M: usize> {
    a: T,
    b: T,
    value: [T; M],
    error: [T; M],
}

fn kronrod_segment<T: Scalar, const M: usize, F>(f: &mut F, a: T, b: T) -> Segment<T, M>
where
    F: FnMut(T) -> [T; M],
{
    let half = (b - a) * T::lit(0.5);
    let centre = (a + b) * T::lit(0.5);
    let fc = f(centre);
    let mut kron = [T::zero(); M];
    let mut gauss = [T::zero(); M];
    for c in 0..M {
        kron[c] = fc[c] * T::lit(WGK[7]);
        gauss[c] = fc[c] * T::lit(WG[3]);
    }
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let lo = f(centre - dx);
        let hi = f(centre + dx);
        for c in 0..M {
            let s = lo[c] + hi[c];
            kron[c] += s * T::lit(WGK[j]);
            if j % 2 == 1 {
                gauss[c] += s * T::lit(WG[j / 2]);
            }
        }
    }
    let mut value = [T::zero(); M];
    let mut error = [T::zero(); M];
    for c in 0..M {
        value[c] = kron[c] * half;
        error[c] = ((kron[c] - gauss[c]) * half).abs();
    }
    Segment { a, b, value, error }
}

/// Integrates `f` over `[a, b]`, bisecting the segment with the largest
/// scaled error until every component satisfies `err ≤ max(abs, rel·|value|)`
/// or `max_segments` is reached.
pub fn integrate<T, const M: usize, F>(
    mut f: F,
    a: T,
    b: T,
    tol: Tolerance<T>,
    max_segments: usize,
) -> QuadResult<T, M>
where
    T: Scalar,
    F: FnMut(T) -> [T; M],
{
    let mut segments = vec![kronrod_segment(&mut f, a, b)];
    let mut evaluations = 15;
    loop {
        let mut total = [T::zero(); M];
        let mut err = [T::zero(); M];
        for s in &segments {
            for c in 0..M {
                total[c] += s.value[c];
                err[c] += s.error[c];
            }
        }
        let mut budget = [T::zero(); M];
        let mut converged = true;
        for c in 0..M {
            let r = tol.rel * total[c].abs();
            budget[c] = if r > tol.abs { r } else { tol.abs };
            if err[c] > budget[c] {
                converged = false;
            }
        }
        if converged || segments.len() >= max_segments {
            return QuadResult {
                value: total,
                error: err,
                evaluations,
                converged,
            };
        }
        let worst = segments
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let score = (0..M).fold(T::zero(), |acc, c| acc + s.error[c] / budget[c]);
                (i, score)
            })
            .fold((0, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best })
            .0;
        let seg = segments.swap_remove(worst);
        let mid = (seg.a + seg.b) * T::lit(0.5);
        segments.push(kronrod_segment(&mut f, seg.a, mid));
        segments.push(kronrod_segment(&mut f, mid, seg.b));
        evaluations += 30;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol(v: f64) -> Tolerance<f64> {
        Tolerance { abs: v, rel: v }
    }

    #[test]
    fn polynomials_are_exact() {
        let r = integrate(|x: f64| [x.powi(7), 1.0], -1.0, 2.0, tol(1e-14), 10);
        assert!((r.value[0] - (256.0 - 1.0) / 8.0).abs() < 1e-12);
        assert!((r.value[1] - 3.0).abs() < 1e-14);
        assert_eq!(r.evaluations, 15);
    }

    #[test]
    fn adapts_to_a_narrow_peak() {
        let w = 1e-3;
        let r = integrate(
            |x: f64| [(-(x / w).powi(2)).exp()],
            -0.5,
            0.5,
            tol(1e-12),
            500,
        );
        let want = w * std::f64::consts::PI.sqrt();
        assert!(r.converged);
        assert!((r.value[0] - want).abs() < 1e-12 * want.max(1.0));
    }

    #[test]
    fn sqrt_endpoint_singularity_converges() {
        let r = integrate(|x: f64| [x.sqrt()], 0.0, 1.0, tol(1e-10), 1000);
        assert!(r.converged);
        assert!((r.value[0] - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn reports_non_convergence() {
        let r = integrate(|x: f64| [(1.0 / x).sin()], 1e-6, 1.0, tol(1e-15), 4);
        assert!(!r.converged);
        assert!(r.max_error() > 0.0);
    }
}

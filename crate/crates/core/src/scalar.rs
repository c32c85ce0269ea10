//! Floating point abstraction shared by every numerical routine in the crate.

use nalgebra::RealField;
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar usable by the estimator: `f32` or `f64`.
///
/// Everything numerical is written against this trait. Literal constants go
/// through [`Scalar::lit`], which is exact for `f64` and rounds for `f32`.
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    fn lit(x: f64) -> Self;
    /// Lossy conversion back to `f64` (used for error reporting and I/O).
    fn as_f64(self) -> f64;
    fn infinity() -> Self;
    fn machine_epsilon() -> Self;
    /// Smallest positive normal value.
    fn min_positive() -> Self;
    fn is_finite_value(self) -> bool;
    fn is_nan_value(self) -> bool;
}

impl<T> Scalar for T
where
    T: RealField + Float + Copy + FromPrimitive + ToPrimitive + Default + Send + Sync + 'static,
{
    #[inline]
    fn lit(x: f64) -> Self {
        <T as FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        <T as ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }

    #[inline]
    fn infinity() -> Self {
        <T as Float>::infinity()
    }

    #[inline]
    fn machine_epsilon() -> Self {
        <T as Float>::epsilon()
    }

    #[inline]
    fn min_positive() -> Self {
        <T as Float>::min_positive_value()
    }

    #[inline]
    fn is_finite_value(self) -> bool {
        <T as Float>::is_finite(self)
    }

    #[inline]
    fn is_nan_value(self) -> bool {
        <T as Float>::is_nan(self)
    }
}

/// Tolerance `rel` scaled up so it stays meaningful at the precision of `T`.
#[inline]
pub(crate) fn precision_floor<T: Scalar>(rel: f64) -> T {
    let floor = T::machine_epsilon() * T::lit(100.0);
    let want = T::lit(rel);
    if want > floor {
        want
    } else {
        floor
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_round_trip() {
        assert_eq!(<f64 as Scalar>::lit(0.1), 0.1);
        assert_eq!(<f32 as Scalar>::lit(0.5), 0.5f32);
        assert!(<f64 as Scalar>::infinity().as_f64().is_infinite());
    }

    #[test]
    fn precision_floor_tracks_epsilon() {
        assert_eq!(precision_floor::<f64>(1e-10), 1e-10);
        assert!(precision_floor::<f32>(1e-10) > 1e-6);
    }
}

//! Sampling estimate of the ball probability and conditional second moment.
//!
//! Shares no code path with the quadrature: it draws `z = L u` with `L` the
//! Cholesky factor of the covariance and counts hits.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::linalg::SpdMatrix;
use crate::error::Result;
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct McBallEstimate {
    pub prob: f64,
    /// `√(q(1−q)/M)`.
    pub std_error: f64,
    /// Sample mean of `z zᵀ` over the hits.
    pub conditional_second: DMatrix<f64>,
    /// Sample mean of `z` over the hits.
    pub conditional_first: DVector<f64>,
    pub samples: usize,
}

pub fn monte_carlo_ball<T: Scalar, R: Rng + ?Sized>(
    n: &SpdMatrix<T>,
    radius2: T,
    samples: usize,
    rng: &mut R,
) -> Result<McBallEstimate> {
    let p = n.dim();
    let l = n.cholesky()?.l().map(|v| v.as_f64());
    let r2 = radius2.as_f64();
    let mut hits = 0usize;
    let mut second = DMatrix::<f64>::zeros(p, p);
    let mut first = DVector::<f64>::zeros(p);
    let mut u = DVector::<f64>::zeros(p);
    for _ in 0..samples {
        for v in u.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let z = &l * &u;
        if z.norm_squared() <= r2 {
            hits += 1;
            second += &z * z.transpose();
            first += &z;
        }
    }
    let q = hits as f64 / samples as f64;
    let denom = hits.max(1) as f64;
    Ok(McBallEstimate {
        prob: q,
        std_error: (q * (1.0 - q) / samples as f64).sqrt(),
        conditional_second: second / denom,
        conditional_first: first / denom,
        samples,
    })
}

//! Numerical kernels: chi-square quantiles, precision factorization and
//! Gaussian moments over a centred ball.

pub mod ball;
pub mod chi2;
pub mod linalg;
pub mod oracle;
pub mod quadrature;
pub mod special;

pub use ball::{ball_moments, ball_probability, truncated_second_moment, BallMoments, DEFAULT_TOL};
pub use chi2::{chi_square_cdf, chi_square_quantile, chi_square_sf};
pub use linalg::{factor_precision, SpdMatrix};
pub use oracle::{monte_carlo_ball, McBallEstimate};

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{what} is not positive {kind} (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositive {
        what: &'static str,
        kind: &'static str,
        min_eigenvalue: f64,
    },

    #[error("{what} is not symmetric (relative asymmetry {asymmetry:e})")]
    NotSymmetric { what: &'static str, asymmetry: f64 },

    #[error("factorization of {0} broke down")]
    Factorization(&'static str),

    #[error(
        "quadrature did not converge: estimate {estimate:e}, achieved error {error:e}, requested {requested:e}"
    )]
    Quadrature {
        estimate: f64,
        error: f64,
        requested: f64,
    },

    #[error(
        "no-transmission region carries mass {mass:e} at step {step}: the trigger bound is too tight or too loose for this model"
    )]
    DegenerateTrigger { step: usize, mass: f64 },

    #[error("trial {trial} failed: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

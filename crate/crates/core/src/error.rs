use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("vector is not in the standard simplex (entry sum {sum}, min entry {min})")]
    NotInSimplex { sum: f64, min: f64 },

    #[error("model must contain at least one record")]
    EmptyModel,

    #[error(
        "records are not interpolable at L = {lipschitz}: pair ({i}, {j}) violated by {violation:.3e}; \
         smallest feasible L is {min_feasible}"
    )]
    NotInterpolable {
        lipschitz: f64,
        i: usize,
        j: usize,
        violation: f64,
        min_feasible: f64,
    },

    #[error("oracle returned a non-finite value at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

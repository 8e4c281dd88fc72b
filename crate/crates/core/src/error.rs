use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("generator index {index} out of range for {count} generators")]
    GeneratorOutOfRange { index: usize, count: usize },

    #[error("trivial module: every generator acts as the identity")]
    TrivialModule,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("perturbation too large: log-residual eigenvalue at angle {max_angle:.4} is too close to pi")]
    PerturbationTooLarge { max_angle: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("scenario validation failed at `{path}`: {message}")]
    Validation { path: String, message: String },
}

impl Error {
    /// Numerical failures map to CLI exit code 3; everything else is a
    /// validation problem (exit code 2).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::PerturbationTooLarge { .. } | Error::TrivialModule)
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

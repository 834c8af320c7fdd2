use thiserror::Error;

/// Everything that can go wrong in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller passed a value outside the documented domain.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// An input that should satisfy a structural invariant does not.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// A configuration file or specification string could not be accepted.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A profile file could not be parsed.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A witness does not have the shape its axiom requires.
    #[error("invalid witness: {0}")]
    WitnessInvalid(String),

    /// A matrix that should be invertible is not.
    #[error("singular matrix: {0}")]
    Singular(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Whether this error reflects bad user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Argument(_)
                | Error::Invariant(_)
                | Error::Config(_)
                | Error::Parse { .. }
                | Error::WitnessInvalid(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}

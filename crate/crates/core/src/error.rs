use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("point outside the domain: {0}")]
    Domain(String),

    #[error("unsupported dimension n = {0}")]
    UnsupportedDimension(usize),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

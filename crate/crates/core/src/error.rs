use thiserror::Error;

/// Errors raised across the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("matrix is singular or indefinite (lambda_min = {lambda_min:e})")]
    Singular { lambda_min: f64 },

    #[error("accumulator holds no observations")]
    Empty,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The maximum-likelihood estimate of `arm` lies on the boundary of the
    /// parameter space, so no interior normal approximation exists.
    #[error("boundary MLE on arm {arm}")]
    Boundary { arm: usize },

    #[error("data error: {0}")]
    Data(String),

    #[error("end of logged data")]
    EndOfData,

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

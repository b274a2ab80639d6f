use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid triplet: {0}")]
    InvalidTriplet(String),

    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),

    /// Raised whenever a(θ) (or a sum/difference of angles) is too close to
    /// zero for the requested quantity to be defined.
    #[error("degenerate theta {theta}: {detail}")]
    DegenerateTheta { theta: f64, detail: String },

    #[error("admissibility failure: {}", .0.join("; "))]
    AdmissibilityFailure(Vec<String>),

    #[error("family cannot be sampled: {0}")]
    UnsampleableFamily(String),

    #[error("grid step {step} exceeds horizon {horizon}")]
    StepTooCoarse { step: f64, horizon: f64 },

    #[error("driver horizon {horizon} is shorter than the required {required}")]
    HorizonTooShort { horizon: f64, required: f64 },

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("partition too fine: cell width {width} < {min_width} (2 eps^2)")]
    PartitionTooFine { width: f64, min_width: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("validation error in field `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("refusing to overwrite existing file {0} (pass --force)")]
    WouldOverwrite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn degenerate(theta: f64, detail: impl Into<String>) -> Self {
        Error::DegenerateTheta {
            theta,
            detail: detail.into(),
        }
    }

    pub(crate) fn validation(field: &str, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

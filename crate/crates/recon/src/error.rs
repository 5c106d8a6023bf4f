use recon_core::estimators::EstimatorError;
use recon_core::oracle::OracleError;
use recon_core::thresholds::ThresholdError;
use recon_core::{ColouringError, DistError, TreeError};
use thiserror::Error;

/// Process exit status for a failed validation.
pub const EXIT_VALIDATION: i32 = 2;
/// Process exit status for a run stopped by a resource cap.
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid `{field}`: {reason}")]
    Validation { field: String, reason: String },
    #[error("resource limit reached: {0}")]
    Resource(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Failed(String),
}

impl RunError {
    pub fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation { .. } => EXIT_VALIDATION,
            Self::Resource(_) => EXIT_RESOURCE,
            _ => 1,
        }
    }
}

impl From<TreeError> for RunError {
    fn from(e: TreeError) -> Self {
        match e {
            TreeError::ResourceLimit { .. } => Self::Resource(e.to_string()),
            other => Self::Failed(other.to_string()),
        }
    }
}

impl From<EstimatorError> for RunError {
    fn from(e: EstimatorError) -> Self {
        match e {
            EstimatorError::Tree(t) => t.into(),
            EstimatorError::InvalidParameter { name, reason } => Self::validation(name, reason),
            EstimatorError::Colouring(c) => c.into(),
        }
    }
}

impl From<ColouringError> for RunError {
    fn from(e: ColouringError) -> Self {
        match e {
            ColouringError::InvalidK(_) | ColouringError::InvalidColour { .. } => Self::validation("k", e.to_string()),
            other => Self::Failed(other.to_string()),
        }
    }
}

impl From<OracleError> for RunError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::LimitExceeded { .. } => Self::Resource(e.to_string()),
            OracleError::InvalidK(_) => Self::validation("k", e.to_string()),
            other => Self::Failed(other.to_string()),
        }
    }
}

impl From<ThresholdError> for RunError {
    fn from(e: ThresholdError) -> Self {
        match e {
            ThresholdError::InvalidParameter { name, reason } => Self::validation(name, reason),
            other => Self::Failed(other.to_string()),
        }
    }
}

impl From<DistError> for RunError {
    fn from(e: DistError) -> Self {
        Self::validation("dist", e.to_string())
    }
}

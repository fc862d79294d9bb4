use thiserror::Error;

/// Harness failure, one variant per process exit code.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("output error: {0}")]
    Output(String),
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => 2,
            LabError::Numeric(_) => 3,
            LabError::Dimension(_) => 4,
            LabError::Output(_) => 5,
        }
    }
}

impl From<lrip_core::Error> for LabError {
    fn from(e: lrip_core::Error) -> Self {
        use lrip_core::Error as E;
        match e {
            E::DimensionMismatch { .. } => LabError::Dimension(e.to_string()),
            E::InvalidInput(_) => LabError::Config(e.to_string()),
            E::NonFinite(_) | E::Sampling { .. } => LabError::Numeric(e.to_string()),
        }
    }
}

pub type LabResult<T> = Result<T, LabError>;

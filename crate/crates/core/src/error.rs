use thiserror::Error;

pub type Result<T> = std::result::Result<T, GalError>;

#[derive(Debug, Error)]
pub enum GalError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("parse error at row {row}, column {column:?}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("transport error (org {org}): {message}")]
    Transport { org: usize, message: String },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("configuration errors:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl GalError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        GalError::InvalidArgument(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        GalError::Shape(msg.into())
    }

    pub fn protocol(msg: impl Into<String>) -> Self {
        GalError::Protocol(msg.into())
    }

    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            GalError::Config(_) | GalError::InvalidArgument(_) | GalError::Parse { .. } => 2,
            GalError::Transport { .. } | GalError::Protocol(_) => 3,
            GalError::Numeric(_) | GalError::Shape(_) => 4,
            GalError::Io(_) | GalError::Json(_) => 1,
        }
    }
}

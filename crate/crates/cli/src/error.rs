use std::path::PathBuf;

use procstory_augment::AugmentError;
use procstory_core::CoreError;
use procstory_eval::EvalError;
use procstory_labeler::LabelerError;
use procstory_model::ModelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{what} not found: {}", .path.display())]
    MissingPath { what: &'static str, path: PathBuf },

    #[error("config {}: {message}", .path.display())]
    Config { path: PathBuf, message: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("external service failure: {0}")]
    Service(String),

    #[error("incompatible artifact: {0}")]
    Incompatible(String),

    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    /// 2 for usage, configuration and input problems, 3 for an unreachable external
    /// service, 4 for incompatible artifacts and 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::MissingPath { .. } | CliError::Config { .. } | CliError::Invalid(_) => 2,
            CliError::Service(_) => 3,
            CliError::Incompatible(_) => 4,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Runtime(format!("{}: {e}", path.display()))
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Parse { .. } | CoreError::Validation { .. } | CoreError::Schema(_) => {
                CliError::Invalid(e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::SchemaMismatch { .. } | ModelError::Json { .. } => CliError::Incompatible(e.to_string()),
            ModelError::Config(_) => CliError::Usage(e.to_string()),
            ModelError::Core(c) => c.into(),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<LabelerError> for CliError {
    fn from(e: LabelerError) -> Self {
        match e {
            LabelerError::Service(_) => CliError::Service(e.to_string()),
            LabelerError::Config(_) | LabelerError::Pool(_) => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<AugmentError> for CliError {
    fn from(e: AugmentError) -> Self {
        match e {
            AugmentError::LabelerUnavailable(inner) => inner.into(),
            AugmentError::SampleTooLarge { .. } => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Model(m) => m.into(),
            EvalError::Labeler(l) => l.into(),
            EvalError::Core(c) => c.into(),
            EvalError::Instance { .. } | EvalError::Empty(_) | EvalError::Misaligned(_) => {
                CliError::Invalid(e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

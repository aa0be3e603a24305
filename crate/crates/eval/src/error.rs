use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("predictions and gold are misaligned: {0}")]
    Misaligned(String),

    #[error("invalid instance {id}: {message}")]
    Instance { id: String, message: String },

    #[error("no {0} to evaluate")]
    Empty(&'static str),

    #[error("nothing to report")]
    NothingToReport,

    #[error(transparent)]
    Model(#[from] procstory_model::ModelError),

    #[error(transparent)]
    Labeler(#[from] procstory_labeler::LabelerError),

    #[error(transparent)]
    Core(#[from] procstory_core::CoreError),

    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = EvalError> = std::result::Result<T, E>;

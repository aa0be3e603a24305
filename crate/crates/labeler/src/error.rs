use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabelerError {
    #[error("sentence {sentence}: parser failed: {message}")]
    Parse { sentence: usize, message: String },

    #[error(transparent)]
    Service(#[from] ServiceError),

    #[error(transparent)]
    Lexicon(#[from] procstory_lexicon::LexiconError),

    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("demonstration pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ServiceError {
    #[error("completion service unavailable after {attempts} attempt(s): {last}")]
    Unavailable { attempts: u32, last: String },

    #[error("completion service returned an unusable response: {0}")]
    BadResponse(String),

    #[error("no completion registered for prompt {0}")]
    NoCompletion(String),
}

pub type Result<T, E = LabelerError> = std::result::Result<T, E>;

/// A recoverable problem recorded while labeling; the run continues.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub stage: String,
    pub message: String,
}

impl Warning {
    pub fn new(stage: &str, message: impl Into<String>) -> Self {
        Self {
            stage: stage.to_string(),
            message: message.into(),
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("labeler unavailable: {0}")]
    LabelerUnavailable(#[source] procstory_labeler::LabelerError),

    #[error("cannot sample {k} pairs from a corpus of {size}")]
    SampleTooLarge { k: usize, size: usize },

    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = AugmentError> = std::result::Result<T, E>;

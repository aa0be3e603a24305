use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("tensor error: {0}")]
    Candle(#[from] candle_core::Error),

    #[error("story has no sentences")]
    EmptyStory,

    #[error("participant surface is empty")]
    EmptyParticipant,

    #[error("step {step} out of range for a {len}-sentence story")]
    StepOutOfRange { step: usize, len: usize },

    #[error("question and current sentence need {needed} tokens but the encoder accepts {max}")]
    SequenceTooLong { needed: usize, max: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("label index {index} outside a space of {size} labels ({context})")]
    LabelOutOfSpace { index: usize, size: usize, context: String },

    #[error("label {label:?} is not in the {attribute} label space")]
    UnknownLabel { attribute: String, label: String },

    #[error("participant {0:?} is not part of the story")]
    UnknownParticipant(String),

    #[error("no participant predictions to aggregate")]
    NothingToAggregate,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint schema hash {checkpoint} does not match schema hash {schema}")]
    SchemaMismatch { checkpoint: String, schema: String },

    #[error("loss became {value} at epoch {epoch}, optimizer step {step}")]
    Divergent { epoch: usize, step: usize, value: f64 },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Core(#[from] procstory_core::CoreError),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

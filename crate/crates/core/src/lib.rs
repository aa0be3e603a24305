//! Domain types for annotated story pairs, the attribute schema, and JSONL persistence.

pub mod dataset;
pub mod error;
pub mod schema;
pub mod story;
pub mod text;
pub mod validate;

pub use dataset::{load_dataset, load_dataset_with, read_jsonl, save_dataset, write_jsonl};
pub use error::{CoreError, Result};
pub use schema::{AttributeSchema, AttributeSpec, StateSlot, IRRELEVANT};
pub use story::{
    pair_count, pair_index, AnnotatedStory, ConflictPair, Mention, Participant, Plausibility, StateAnnotation,
    StoryPair,
};
pub use validate::{validate_story, validate_story_pair, validate_story_pair_with, Violation};

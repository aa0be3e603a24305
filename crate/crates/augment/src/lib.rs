//! Augmentation of annotated story pairs. In-domain pairs are rewritten while keeping their
//! gold annotations (hypernym abstraction, word insertion); external pairs are labeled
//! automatically and subsampled per story type.

pub mod abstraction;
pub mod error;
pub mod external;
pub mod insertion;
pub mod sampling;

pub use abstraction::{abstract_participants, Abstraction};
pub use error::{AugmentError, Result};
pub use external::{ingest_external, read_raw_pairs, Dropped, Ingested, RawPair, TaggedPair};
pub use insertion::{insert_words, Insertion, InsertionConfig, InsertionModel, LexiconInsertionModel};
pub use sampling::{allocate, stratified_sample, UNTYPED};

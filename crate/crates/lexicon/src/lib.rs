//! Lexical database access: WordNet noun hierarchy, morphology, and word-class lookups
//! used for physicality checks, person detection and hypernym abstraction.

pub mod error;
pub mod morphy;
pub mod resource;
pub mod wordnet;

pub use error::{LexiconError, Result};
pub use morphy::WordClass;
pub use resource::{
    direct_hypernym_lemma, first_hypernym_path, hypernym_walk, is_person, phrase_is_person, phrase_synsets,
    physicality, LexicalResource, MemoryLexicon, Physicality, Roots, SynsetId,
};
pub use wordnet::{VerbForm, WordNet};

use std::path::PathBuf;

/// The WordNet 3.0 file set shipped with the workspace.
pub fn bundled_wordnet_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/wordnet-3.0")
}

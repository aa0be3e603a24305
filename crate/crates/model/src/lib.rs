//! Tiered procedural reasoning: participant-conditioned step encodings feed attribute
//! state classifiers, a conflicting-sentence detector and a story plausibility head.

pub mod checkpoint;
pub mod encoder;
pub mod error;
pub mod gradcheck;
pub mod heads;
pub mod input;
pub mod model;
pub mod ops;
pub mod params;
pub mod prediction;
pub mod synthetic;
pub mod tokenizer;
pub mod training;

pub use checkpoint::{load_checkpoint, read_manifest, save_checkpoint, Manifest};
pub use encoder::{load_pretrained_weights, Encoder, EncoderSpec, TransformerConfig, TransformerEncoder};
pub use error::{ModelError, Result};
pub use heads::{AttributeClassifier, ConflictDetector, FeedForward, StepRepresentations, StoryClassifier};
pub use input::{
    align_participants, InputBuilder, InputConfig, JointInputPair, ParticipantSlot, TokenizedInput, TS_CURRENT,
    TS_FUTURE, TS_PAST, TS_SPECIAL,
};
pub use model::{DecisionRule, ModelConfig, SlotOutputs, StoryMode, TieredModel};
pub use params::{ParamStore, Precision};
pub use prediction::{
    aggregate, predict_sentence_centric, PairPrediction, ParticipantStates, PlausibilityScore, StoryChoice,
    StoryDecision, StoryOutput, TieredPrediction,
};
pub use tokenizer::{HashedTokenizer, Tokenizer, TokenizerSpec, WordPieceTokenizer};

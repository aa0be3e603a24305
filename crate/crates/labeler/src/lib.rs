//! Automatic dense annotation of stories: three-stage participant extraction and
//! two-round code-prompt attribute annotation against a completion service.

pub mod annotate;
pub mod error;
pub mod extract;
pub mod fallback;
pub mod parse;
pub mod prompt;
pub mod remote;
pub mod retrieval;
pub mod service;
pub mod wsd;

pub use annotate::{annotate_states, detect_active, CompletionParams, LabeledStory, Labeler, LabelerConfig};
pub use error::{LabelerError, Result, ServiceError, Warning};
pub use extract::{
    detect_noun_phrases, filter_core_roles, filter_physical, Candidate, Extraction, ExtractionStages, Extractor,
};
pub use fallback::FallbackParser;
pub use parse::{
    NounTerm, OntologyConfig, ParseResult, RoleEdge, SentenceParse, SentenceParser, Token, DEFAULT_CLASSES,
    DEFAULT_CORE_ROLES,
};
pub use prompt::{build_code_prompt, canonical_order, parse_completion, Demonstration, ParsedCompletion, PromptMode};
pub use remote::{RemoteParser, RemoteParserConfig};
pub use retrieval::{
    cosine, retrieve_demonstrations, DemonstrationPool, Embedder, HashingEmbedder, PoolEntry, Ranked, RetrievalQuery,
};
pub use service::{
    CachedService, CompletionRequest, CompletionService, HttpCompletionService, HttpConfig, MockCompletionService,
    MockEntry, MockFallback, RateLimiter,
};
pub use wsd::{MostFrequentSense, SenseSelector};

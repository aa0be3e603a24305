//! Evaluation: tiered accuracy/consistency/verifiability, zero-shot transfer to
//! multiple-choice tasks, participant-extraction metrics and report files.

pub mod error;
pub mod extraction;
pub mod multichoice;
pub mod report;
pub mod tiered;

pub use error::{EvalError, Result};
pub use extraction::{score_extraction, ExtractionMetrics};
pub use multichoice::{
    convert_mc_instance, read_instances, zero_shot_evaluate, CandidateScorer, EvalMode, McInstance, ModelScorer,
    ParticipantSource, TaskKind, ZeroShotResult,
};
pub use report::{emit_report, render_table, AccuracyMetrics, Metrics};
pub use tiered::{
    evaluate_tiered, judge_pair, pair_verifiable, score_tiered, PairJudgement, StatePrediction, TieredMetrics,
};

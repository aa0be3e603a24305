pub mod labels;
pub mod loss;
pub mod trainer;

pub use labels::{
    assemble_labels, mentioned_in_conflict, pair_target, LossWeights, Regime, RegimeConfig, SequenceLabels,
};
pub use loss::{binary_cross_entropy, compute_joint_loss, compute_loss, cross_entropy, LossBreakdown};
pub use trainer::{decision_rule, pair_accuracy, presentation_order, train, EpochMetrics, TrainOutcome};

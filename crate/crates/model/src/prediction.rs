//! Per-participant outputs, participant aggregation and pair decisions.

use procstory_core::{ConflictPair, Plausibility};
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::heads::StateDistributions;
use crate::input::ParticipantSlot;
use crate::ops::argmax;

/// Story-level output of one participant-conditioned pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlausibilityScore {
    /// `[implausible, plausible]` for a single story.
    Binary([f64; 2]),
    /// Probability that this story is the plausible one of its pair.
    Pair(f64),
}

impl PlausibilityScore {
    /// Probability mass this output gives to "plausible".
    pub fn plausible(&self) -> f64 {
        match self {
            PlausibilityScore::Binary(p) => p[1],
            PlausibilityScore::Pair(p) => *p,
        }
    }
}

/// Tiered output for one participant over one story.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TieredPrediction {
    pub participant: ParticipantSlot,
    /// `[step][attribute][label]`
    pub precondition: StateDistributions,
    pub effect: StateDistributions,
    /// Conflict probability per pair `i < j`, row-major.
    pub conflict: Vec<f64>,
    pub plausibility: PlausibilityScore,
}

/// Participant-aggregated story decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryDecision {
    pub conflict: Vec<f64>,
    pub conflict_pair: Option<ConflictPair>,
    /// Mean probability of "plausible" over participants.
    pub plausible_score: f64,
}

/// Elementwise mean of conflict and plausibility outputs over participants.
pub fn aggregate(predictions: &[TieredPrediction], steps: usize) -> Result<StoryDecision> {
    let first = predictions.first().ok_or(ModelError::NothingToAggregate)?;
    let len = first.conflict.len();
    if predictions.iter().any(|p| p.conflict.len() != len) {
        return Err(ModelError::Dimension(
            "participants disagree on the number of conflict pairs".into(),
        ));
    }
    let k = predictions.len() as f64;
    let conflict: Vec<f64> = (0..len)
        .map(|i| predictions.iter().map(|p| p.conflict[i]).sum::<f64>() / k)
        .collect();
    let conflict_pair = argmax(&conflict).and_then(|i| ConflictPair::from_flat_index(i, steps));
    let plausible_score = predictions.iter().map(|p| p.plausibility.plausible()).sum::<f64>() / k;
    Ok(StoryDecision {
        conflict,
        conflict_pair,
        plausible_score,
    })
}

/// Argmax label per `(step, attribute)` for one participant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticipantStates {
    pub participant: ParticipantSlot,
    /// `[step][attribute]` label index.
    pub precondition: Vec<Vec<usize>>,
    pub effect: Vec<Vec<usize>>,
}

impl ParticipantStates {
    pub fn from_prediction(prediction: &TieredPrediction) -> Self {
        let pick = |table: &StateDistributions| -> Vec<Vec<usize>> {
            table
                .iter()
                .map(|step| step.iter().map(|d| argmax(d).unwrap_or(0)).collect())
                .collect()
        };
        Self {
            participant: prediction.participant.clone(),
            precondition: pick(&prediction.precondition),
            effect: pick(&prediction.effect),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryOutput {
    pub decision: StoryDecision,
    pub participants: Vec<TieredPrediction>,
    pub states: Vec<ParticipantStates>,
}

impl StoryOutput {
    pub fn new(participants: Vec<TieredPrediction>, steps: usize) -> Result<Self> {
        let decision = aggregate(&participants, steps)?;
        let states = participants.iter().map(ParticipantStates::from_prediction).collect();
        Ok(Self {
            decision,
            participants,
            states,
        })
    }

    /// Predicted states of a named participant, if it was scored.
    pub fn states_for(&self, participant: &str) -> Option<&ParticipantStates> {
        self.states.iter().find(|s| s.participant.name() == Some(participant))
    }
}

/// Which story of a pair is judged plausible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoryChoice {
    First,
    Second,
}

impl StoryChoice {
    pub fn index(self) -> usize {
        match self {
            StoryChoice::First => 0,
            StoryChoice::Second => 1,
        }
    }

    /// Higher score wins; a tie goes to the first story.
    pub fn from_scores(first: f64, second: f64) -> Self {
        if second > first {
            StoryChoice::Second
        } else {
            StoryChoice::First
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairPrediction {
    pub choice: StoryChoice,
    /// Decision scores for `[first, second]`.
    pub scores: [f64; 2],
    /// Conflict pair of the story judged implausible.
    pub conflict: Option<ConflictPair>,
    pub first: StoryOutput,
    pub second: StoryOutput,
}

impl PairPrediction {
    pub fn new(first: StoryOutput, second: StoryOutput, scores: [f64; 2]) -> Self {
        let choice = StoryChoice::from_scores(scores[0], scores[1]);
        let conflict = match choice {
            StoryChoice::First => second.decision.conflict_pair,
            StoryChoice::Second => first.decision.conflict_pair,
        };
        Self {
            choice,
            scores,
            conflict,
            first,
            second,
        }
    }

    /// Plausibility implied for each story by the choice.
    pub fn labels(&self) -> [Plausibility; 2] {
        match self.choice {
            StoryChoice::First => [Plausibility::Plausible, Plausibility::Implausible],
            StoryChoice::Second => [Plausibility::Implausible, Plausibility::Plausible],
        }
    }
}

/// Score each story by the negated sum of its aggregated conflict probabilities.
pub fn predict_sentence_centric(first: &[f64], second: &[f64]) -> (StoryChoice, [f64; 2]) {
    let scores = [-first.iter().sum::<f64>(), -second.iter().sum::<f64>()];
    (StoryChoice::from_scores(scores[0], scores[1]), scores)
}

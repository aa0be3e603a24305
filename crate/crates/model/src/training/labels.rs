//! Regime configuration and per-sequence training targets.

use procstory_core::{pair_count, AnnotatedStory, AttributeSchema, Plausibility, StateSlot};
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::input::ParticipantSlot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    #[default]
    StoryCentric,
    ParticipantCentric,
    SentenceCentric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub precondition: f64,
    pub effect: f64,
    pub conflict: f64,
    pub plausibility: f64,
}

impl LossWeights {
    pub fn for_regime(regime: Regime) -> Self {
        match regime {
            Regime::SentenceCentric => Self {
                precondition: 0.4,
                effect: 0.4,
                conflict: 0.2,
                plausibility: 0.0,
            },
            _ => Self {
                precondition: 0.4,
                effect: 0.4,
                conflict: 0.1,
                plausibility: 0.1,
            },
        }
    }

    pub fn sum(&self) -> f64 {
        self.precondition + self.effect + self.conflict + self.plausibility
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        Self::for_regime(Regime::StoryCentric)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeConfig {
    #[serde(default)]
    pub regime: Regime,
    /// Defaults to the regime's standard weights.
    #[serde(default)]
    pub weights: Option<LossWeights>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    /// Participant sequences per micro-batch.
    #[serde(default = "default_one")]
    pub batch_size: usize,
    /// Micro-batches per optimizer step.
    #[serde(default = "default_accum")]
    pub grad_accum: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub weight_decay: f64,
    /// Stop after this many optimizer steps.
    #[serde(default)]
    pub max_steps: Option<usize>,
}

fn default_epochs() -> usize {
    15
}
fn default_lr() -> f64 {
    1e-6
}
fn default_one() -> usize {
    1
}
fn default_accum() -> usize {
    2
}

impl Default for RegimeConfig {
    fn default() -> Self {
        Self {
            regime: Regime::StoryCentric,
            weights: None,
            epochs: default_epochs(),
            learning_rate: default_lr(),
            batch_size: 1,
            grad_accum: default_accum(),
            seed: 0,
            weight_decay: 0.0,
            max_steps: None,
        }
    }
}

impl RegimeConfig {
    pub fn weights(&self) -> LossWeights {
        self.weights.unwrap_or_else(|| LossWeights::for_regime(self.regime))
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.weights();
        let parts = [w.precondition, w.effect, w.conflict, w.plausibility];
        if parts.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(ModelError::Config("loss weights must be non-negative".into()));
        }
        if (w.sum() - 1.0).abs() > 1e-9 {
            return Err(ModelError::Config(format!(
                "loss weights sum to {}, expected 1",
                w.sum()
            )));
        }
        if self.regime == Regime::SentenceCentric && w.plausibility != 0.0 {
            return Err(ModelError::Config(
                "sentence_centric requires a zero plausibility weight".into(),
            ));
        }
        if self.batch_size == 0 || self.grad_accum == 0 {
            return Err(ModelError::Config("batch_size and grad_accum must be positive".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(ModelError::Config("learning_rate must be positive".into()));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(ModelError::Config("weight_decay must be non-negative".into()));
        }
        Ok(())
    }
}

/// Targets for one participant-conditioned story pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceLabels {
    /// `[step][attribute]` label index.
    pub precondition: Vec<Vec<usize>>,
    pub effect: Vec<Vec<usize>>,
    /// One binary target per sentence pair `i < j`.
    pub conflict: Vec<f64>,
    pub story: Option<Plausibility>,
}

/// Case-insensitive containment of `surface` in either conflict sentence.
pub fn mentioned_in_conflict(story: &AnnotatedStory, surface: &str) -> bool {
    let needle = surface.to_lowercase();
    story.conflict.is_some_and(|c| {
        [c.first, c.second]
            .iter()
            .filter_map(|&i| story.sentences.get(i))
            .any(|s| s.to_lowercase().contains(&needle))
    })
}

pub fn assemble_labels(
    story: &AnnotatedStory,
    slot: &ParticipantSlot,
    regime: Regime,
    schema: &AttributeSchema,
) -> Result<SequenceLabels> {
    let n = story.len();
    if n == 0 {
        return Err(ModelError::EmptyStory);
    }
    let mut precondition = vec![vec![0usize; schema.len()]; n];
    let mut effect = vec![vec![0usize; schema.len()]; n];
    if let ParticipantSlot::Named(name) = slot {
        if story.participant(name).is_none() {
            return Err(ModelError::UnknownParticipant(name.clone()));
        }
        for ann in story.annotations.iter().filter(|a| &a.participant == name) {
            if ann.step >= n {
                return Err(ModelError::StepOutOfRange { step: ann.step, len: n });
            }
            let attr = schema
                .attribute_index(&ann.attribute)
                .ok_or_else(|| ModelError::Config(format!("unknown attribute {}", ann.attribute)))?;
            let lookup = |slot: StateSlot, label: &str| {
                schema
                    .label_index(&ann.attribute, slot, label)
                    .ok_or_else(|| ModelError::UnknownLabel {
                        attribute: ann.attribute.clone(),
                        label: label.to_string(),
                    })
            };
            precondition[ann.step][attr] = lookup(StateSlot::Precondition, &ann.precondition)?;
            effect[ann.step][attr] = lookup(StateSlot::Effect, &ann.effect)?;
        }
    }

    let mut conflict = vec![0.0; pair_count(n)];
    if let Some(pair) = story.conflict {
        let idx = pair.flat_index(n).ok_or(ModelError::StepOutOfRange {
            step: pair.second,
            len: n,
        })?;
        conflict[idx] = 1.0;
    }

    let story_label = match regime {
        Regime::SentenceCentric => None,
        Regime::StoryCentric => Some(
            story
                .label
                .ok_or_else(|| ModelError::Config("story-level regimes need labeled stories".into()))?,
        ),
        Regime::ParticipantCentric => {
            let label = story
                .label
                .ok_or_else(|| ModelError::Config("story-level regimes need labeled stories".into()))?;
            Some(match (label, slot) {
                (Plausibility::Plausible, _) => Plausibility::Plausible,
                (Plausibility::Implausible, ParticipantSlot::Named(name)) if mentioned_in_conflict(story, name) => {
                    Plausibility::Implausible
                }
                (Plausibility::Implausible, _) => Plausibility::Plausible,
            })
        }
    };

    Ok(SequenceLabels {
        precondition,
        effect,
        conflict,
        story: story_label,
    })
}

/// Soft target over `[left, right]` for the pair softmax: the story labels normalised,
/// or an even split when both sides carry the same label.
pub fn pair_target(left: Option<Plausibility>, right: Option<Plausibility>) -> Option<[f64; 2]> {
    let (l, r) = (f64::from(u8::from(left?)), f64::from(u8::from(right?)));
    if l == r {
        Some([0.5, 0.5])
    } else {
        Some([l / (l + r), r / (l + r)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn implausible() -> AnnotatedStory {
        AnnotatedStory::from_sentences(&[
            "Ann took the Cup.",
            "Ann broke the cup.",
            "Ann drank from the cup.",
            "The dog slept.",
        ])
        .with_participant("ann", true)
        .with_participant("cup", false)
        .with_participant("dog", false)
        .with_annotation("cup", 1, "functional", "true", "false")
        .with_annotation("cup", 2, "location", "irrelevant", "picked up")
        .with_conflict(1, 2)
        .with_label(Plausibility::Implausible)
    }

    fn plausible() -> AnnotatedStory {
        AnnotatedStory::from_sentences(&["Ann took the cup.", "Ann drank from the cup."])
            .with_participant("ann", true)
            .with_participant("cup", false)
            .with_label(Plausibility::Plausible)
    }

    fn named(s: &str) -> ParticipantSlot {
        ParticipantSlot::Named(s.into())
    }

    #[test]
    fn story_centric_marks_every_participant() {
        let schema = AttributeSchema::trip_default();
        for p in ["ann", "cup", "dog"] {
            let l = assemble_labels(&implausible(), &named(p), Regime::StoryCentric, &schema).unwrap();
            assert_eq!(l.story, Some(Plausibility::Implausible));
        }
    }

    #[test]
    fn participant_centric_uses_conflict_mentions() {
        let schema = AttributeSchema::trip_default();
        let cup = assemble_labels(&implausible(), &named("cup"), Regime::ParticipantCentric, &schema).unwrap();
        let dog = assemble_labels(&implausible(), &named("dog"), Regime::ParticipantCentric, &schema).unwrap();
        assert_eq!(cup.story, Some(Plausibility::Implausible));
        assert_eq!(dog.story, Some(Plausibility::Plausible));
    }

    #[test]
    fn plausible_stories_agree_across_story_regimes() {
        let schema = AttributeSchema::trip_default();
        for p in ["ann", "cup"] {
            let a = assemble_labels(&plausible(), &named(p), Regime::StoryCentric, &schema).unwrap();
            let b = assemble_labels(&plausible(), &named(p), Regime::ParticipantCentric, &schema).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn sentence_centric_has_no_story_label() {
        let schema = AttributeSchema::trip_default();
        let l = assemble_labels(&plausible(), &named("cup"), Regime::SentenceCentric, &schema).unwrap();
        assert_eq!(l.story, None);
        assert_eq!(l.conflict, vec![0.0]);
    }

    #[test]
    fn attribute_and_conflict_targets() {
        let schema = AttributeSchema::trip_default();
        let l = assemble_labels(&implausible(), &named("cup"), Regime::StoryCentric, &schema).unwrap();
        let functional = schema.attribute_index("functional").unwrap();
        let location = schema.attribute_index("location").unwrap();
        assert_eq!(l.precondition[1][functional], 2);
        assert_eq!(l.effect[1][functional], 1);
        assert_eq!(l.effect[2][location], 3);
        assert_eq!(l.precondition[0].iter().sum::<usize>(), 0);
        assert_eq!(l.conflict.len(), 6);
        assert_eq!(l.conflict.iter().sum::<f64>(), 1.0);
        assert_eq!(l.conflict[3], 1.0);
    }

    #[test]
    fn unknown_participant_is_an_error() {
        let schema = AttributeSchema::trip_default();
        assert!(matches!(
            assemble_labels(&plausible(), &named("ghost"), Regime::StoryCentric, &schema),
            Err(ModelError::UnknownParticipant(_))
        ));
    }

    #[test]
    fn unknown_label_is_an_error() {
        let schema = AttributeSchema::trip_default();
        let story = plausible().with_annotation("cup", 0, "temperature", "lukewarm", "high");
        assert!(matches!(
            assemble_labels(&story, &named("cup"), Regime::StoryCentric, &schema),
            Err(ModelError::UnknownLabel { .. })
        ));
    }

    #[test]
    fn pair_targets() {
        use Plausibility::*;
        assert_eq!(pair_target(Some(Plausible), Some(Implausible)), Some([1.0, 0.0]));
        assert_eq!(pair_target(Some(Implausible), Some(Plausible)), Some([0.0, 1.0]));
        assert_eq!(pair_target(Some(Plausible), Some(Plausible)), Some([0.5, 0.5]));
        assert_eq!(pair_target(Some(Implausible), Some(Implausible)), Some([0.5, 0.5]));
        assert_eq!(pair_target(None, Some(Plausible)), None);
    }

    #[test]
    fn weights_validation() {
        let mut cfg = RegimeConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.regime = Regime::SentenceCentric;
        assert!(cfg.validate().is_ok());
        cfg.weights = Some(LossWeights::for_regime(Regime::StoryCentric));
        assert!(cfg.validate().is_err());
        cfg.weights = Some(LossWeights {
            precondition: 0.5,
            effect: 0.5,
            conflict: 0.5,
            plausibility: 0.0,
        });
        assert!(cfg.validate().is_err());
    }
}

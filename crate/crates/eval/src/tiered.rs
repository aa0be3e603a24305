//! Accuracy, consistency and verifiability over story pairs.

use std::collections::BTreeMap;

use procstory_core::{AttributeSchema, ConflictPair, StateSlot, StoryPair, IRRELEVANT};
use procstory_model::training::{mentioned_in_conflict, presentation_order};
use procstory_model::{DecisionRule, StoryChoice, StoryOutput, TieredModel};
use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatePrediction {
    pub participant: String,
    pub step: usize,
    pub attribute: String,
    pub precondition: String,
    pub effect: String,
}

/// A system's decisions on one gold pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairJudgement {
    pub pair_id: String,
    /// Whether the gold plausible story was chosen.
    pub chose_plausible: bool,
    /// Conflict pair predicted for the story judged implausible.
    pub conflict: Option<ConflictPair>,
    /// Predicted states for the gold implausible story; missing entries read as irrelevant.
    pub states: Vec<StatePrediction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TieredMetrics {
    pub accuracy: f64,
    pub consistency: f64,
    pub verifiability: f64,
    pub pairs: usize,
}

/// Conflicting participants are those whose surface occurs in either conflict sentence. For
/// each, every gold annotation at the first conflict sentence must match the predicted
/// effect, and every gold annotation at the second must match the predicted precondition.
pub fn pair_verifiable(pair: &StoryPair, states: &[StatePrediction]) -> bool {
    let story = &pair.implausible;
    let Some(conflict) = story.conflict else {
        return false;
    };
    let predicted: BTreeMap<(&str, usize, &str), &StatePrediction> = states
        .iter()
        .map(|s| ((s.participant.as_str(), s.step, s.attribute.as_str()), s))
        .collect();
    let lookup = |p: &str, step: usize, attr: &str, slot: StateSlot| -> &str {
        predicted.get(&(p, step, attr)).map_or(IRRELEVANT, |s| match slot {
            StateSlot::Precondition => s.precondition.as_str(),
            StateSlot::Effect => s.effect.as_str(),
        })
    };
    story
        .annotations
        .iter()
        .filter(|a| mentioned_in_conflict(story, &a.participant))
        .all(|a| {
            let effect_ok =
                a.step != conflict.first || lookup(&a.participant, a.step, &a.attribute, StateSlot::Effect) == a.effect;
            let pre_ok = a.step != conflict.second
                || lookup(&a.participant, a.step, &a.attribute, StateSlot::Precondition) == a.precondition;
            effect_ok && pre_ok
        })
}

/// Each level requires the previous one, so verifiability ≤ consistency ≤ accuracy.
pub fn score_tiered(judgements: &[PairJudgement], gold: &[StoryPair]) -> Result<TieredMetrics> {
    if judgements.len() != gold.len() {
        return Err(EvalError::Misaligned(format!(
            "{} judgements for {} pairs",
            judgements.len(),
            gold.len()
        )));
    }
    if gold.is_empty() {
        return Err(EvalError::Empty("pairs"));
    }
    let (mut acc, mut con, mut ver) = (0usize, 0usize, 0usize);
    for (j, pair) in judgements.iter().zip(gold) {
        if j.pair_id != pair.pair_id {
            return Err(EvalError::Misaligned(format!(
                "judgement {:?} against pair {:?}",
                j.pair_id, pair.pair_id
            )));
        }
        if !j.chose_plausible {
            continue;
        }
        acc += 1;
        if j.conflict.is_none() || j.conflict != pair.implausible.conflict {
            continue;
        }
        con += 1;
        if pair_verifiable(pair, &j.states) {
            ver += 1;
        }
    }
    let n = gold.len() as f64;
    Ok(TieredMetrics {
        accuracy: acc as f64 / n,
        consistency: con as f64 / n,
        verifiability: ver as f64 / n,
        pairs: gold.len(),
    })
}

fn state_predictions(output: &StoryOutput, schema: &AttributeSchema) -> Vec<StatePrediction> {
    let mut out = Vec::new();
    for s in &output.states {
        let Some(name) = s.participant.name() else {
            continue;
        };
        for (step, (pre, eff)) in s.precondition.iter().zip(&s.effect).enumerate() {
            for (ai, spec) in schema.attributes().iter().enumerate() {
                let label = |slot, idx: usize| schema.labels(ai, slot).get(idx).cloned().unwrap_or_default();
                out.push(StatePrediction {
                    participant: name.to_string(),
                    step,
                    attribute: spec.name.clone(),
                    precondition: label(StateSlot::Precondition, pre[ai]),
                    effect: label(StateSlot::Effect, eff[ai]),
                });
            }
        }
    }
    out
}

/// Runs the model on pair `index` in its alternating presentation order.
pub fn judge_pair(model: &TieredModel, pair: &StoryPair, index: usize, rule: DecisionRule) -> Result<PairJudgement> {
    let (first, second, correct) = presentation_order(pair, index);
    let prediction = model.predict_pair(first, second, rule)?;
    let implausible = match correct {
        StoryChoice::First => &prediction.second,
        StoryChoice::Second => &prediction.first,
    };
    Ok(PairJudgement {
        pair_id: pair.pair_id.clone(),
        chose_plausible: prediction.choice == correct,
        conflict: prediction.conflict,
        states: state_predictions(implausible, model.schema()),
    })
}

pub fn evaluate_tiered(model: &TieredModel, pairs: &[StoryPair], rule: DecisionRule) -> Result<TieredMetrics> {
    let judgements = pairs
        .iter()
        .enumerate()
        .map(|(i, p)| judge_pair(model, p, i, rule))
        .collect::<Result<Vec<_>>>()?;
    score_tiered(&judgements, pairs)
}

//! Zero-shot transfer: multiple-choice instances become candidate stories that the model ranks.

use std::path::Path;

use procstory_core::text::split_sentences;
use procstory_core::{read_jsonl, AnnotatedStory, Participant};
use procstory_labeler::Extractor;
use procstory_model::{DecisionRule, PlausibilityScore, TieredModel};
use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    /// Story ending selection.
    Cloze,
    /// Goal plus candidate solutions appended after the context.
    Qa,
    /// Beginning and ending observations; the hypothesis goes between them.
    Abductive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct McInstance {
    pub id: String,
    pub context: String,
    pub choices: Vec<String>,
    pub gold: usize,
    pub kind: TaskKind,
}

impl McInstance {
    pub fn validate(&self) -> Result<()> {
        let fail = |message: String| EvalError::Instance {
            id: self.id.clone(),
            message,
        };
        if self.choices.len() < 2 {
            return Err(fail(format!("{} choice(s); at least 2 required", self.choices.len())));
        }
        if self.gold >= self.choices.len() {
            return Err(fail(format!("gold index {} out of range", self.gold)));
        }
        Ok(())
    }
}

pub fn read_instances(path: impl AsRef<Path>) -> Result<Vec<McInstance>> {
    let instances: Vec<McInstance> = read_jsonl(path)?;
    for i in &instances {
        i.validate()?;
    }
    Ok(instances)
}

fn sentences(text: &str) -> Vec<String> {
    let split = split_sentences(text);
    if split.is_empty() && !text.trim().is_empty() {
        vec![text.trim().to_string()]
    } else {
        split
    }
}

/// One candidate story (as sentences) per choice. Abductive contexts end with the second
/// observation, so the hypothesis is inserted before the last context sentence.
pub fn convert_mc_instance(instance: &McInstance) -> Result<Vec<Vec<String>>> {
    instance.validate()?;
    let context = sentences(&instance.context);
    Ok(instance
        .choices
        .iter()
        .map(|choice| {
            let choice = sentences(choice);
            match instance.kind {
                TaskKind::Abductive if context.len() >= 2 => {
                    let (begin, end) = context.split_at(context.len() - 1);
                    begin.iter().chain(&choice).chain(end).cloned().collect()
                }
                _ => context.iter().chain(&choice).cloned().collect(),
            }
        })
        .collect())
}

/// Higher scores mean more plausible.
pub trait CandidateScorer {
    fn score_pair(&self, first: &AnnotatedStory, second: &AnnotatedStory) -> Result<[f64; 2]>;
    fn score_story(&self, story: &AnnotatedStory) -> Result<f64>;
}

pub struct ModelScorer<'a> {
    pub model: &'a TieredModel,
    pub rule: DecisionRule,
}

impl CandidateScorer for ModelScorer<'_> {
    fn score_pair(&self, first: &AnnotatedStory, second: &AnnotatedStory) -> Result<[f64; 2]> {
        Ok(self.model.predict_pair(first, second, self.rule)?.scores)
    }

    /// Mean over participants of the plausibility logit; needs a single-mode model.
    fn score_story(&self, story: &AnnotatedStory) -> Result<f64> {
        let out = self.model.predict_story(story)?;
        let logits: Vec<f64> = out
            .participants
            .iter()
            .map(|p| match p.plausibility {
                PlausibilityScore::Binary([no, yes]) => yes.max(1e-12).ln() - no.max(1e-12).ln(),
                PlausibilityScore::Pair(p) => p,
            })
            .collect();
        Ok(logits.iter().sum::<f64>() / logits.len().max(1) as f64)
    }
}

pub trait ParticipantSource {
    fn participants(&self, sentences: &[String]) -> Result<Vec<Participant>>;
}

impl ParticipantSource for Extractor {
    fn participants(&self, sentences: &[String]) -> Result<Vec<Participant>> {
        Ok(self.extract(sentences)?.participants)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    /// Two-choice instances are compared as a pair.
    Joint,
    /// Every candidate is scored on its own.
    Single,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroShotResult {
    pub accuracy: f64,
    pub instances: usize,
    /// Chosen choice index per instance.
    pub predictions: Vec<usize>,
}

/// Picks the highest-scoring candidate per instance (lowest index on ties). Instances with
/// more than two choices always use single-story scores.
pub fn zero_shot_evaluate(
    scorer: &dyn CandidateScorer,
    participants: &dyn ParticipantSource,
    instances: &[McInstance],
    mode: EvalMode,
) -> Result<ZeroShotResult> {
    if instances.is_empty() {
        return Err(EvalError::Empty("instances"));
    }
    let mut predictions = Vec::with_capacity(instances.len());
    let mut correct = 0usize;
    for inst in instances {
        let stories = convert_mc_instance(inst)?
            .into_iter()
            .map(|s| {
                let mut story = AnnotatedStory::new(s);
                story.participants = participants.participants(&story.sentences)?;
                story.recompute_mentions();
                Ok(story)
            })
            .collect::<Result<Vec<_>>>()?;
        let scores = if mode == EvalMode::Joint && stories.len() == 2 {
            scorer.score_pair(&stories[0], &stories[1])?.to_vec()
        } else {
            stories
                .iter()
                .map(|s| scorer.score_story(s))
                .collect::<Result<Vec<_>>>()?
        };
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = i;
            }
        }
        correct += usize::from(best == inst.gold);
        predictions.push(best);
    }
    Ok(ZeroShotResult {
        accuracy: correct as f64 / instances.len() as f64,
        instances: instances.len(),
        predictions,
    })
}

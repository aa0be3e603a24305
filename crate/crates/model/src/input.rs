//! Participant-conditioned input sequences with timestep marking.
//!
//! Layout: `[CLS] question [SEP] s_1 [SEP] ... s_n [SEP]`. Timestep ids are 0 for the
//! question and special tokens, 1 for sentences before the current step, 2 for the
//! current sentence and 3 for later sentences.

use std::collections::HashSet;
use std::ops::Range;

use procstory_core::AnnotatedStory;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::tokenizer::Tokenizer;

pub const TS_SPECIAL: u32 = 0;
pub const TS_PAST: u32 = 1;
pub const TS_CURRENT: u32 = 2;
pub const TS_FUTURE: u32 = 3;
pub const NUM_TIMESTEPS: usize = 4;

pub const DEFAULT_QUESTION_TEMPLATE: &str = "where is {}";
pub const DEFAULT_DUMMY_QUESTION: &str = "where is _";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputConfig {
    /// `{}` is replaced by the participant surface.
    pub question_template: String,
    pub dummy_question: String,
    pub max_len: usize,
}

impl Default for InputConfig {
    fn default() -> Self {
        Self {
            question_template: DEFAULT_QUESTION_TEMPLATE.into(),
            dummy_question: DEFAULT_DUMMY_QUESTION.into(),
            max_len: 512,
        }
    }
}

impl InputConfig {
    pub fn question_for(&self, slot: &ParticipantSlot) -> String {
        match slot {
            ParticipantSlot::Named(name) => self.question_template.replace("{}", name),
            ParticipantSlot::Dummy => self.dummy_question.clone(),
        }
    }
}

/// A participant, or the placeholder used where a story lacks one.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ParticipantSlot {
    Named(String),
    Dummy,
}

impl ParticipantSlot {
    pub fn name(&self) -> Option<&str> {
        match self {
            ParticipantSlot::Named(n) => Some(n),
            ParticipantSlot::Dummy => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedInput {
    pub token_ids: Vec<u32>,
    pub timestep_ids: Vec<u32>,
    /// Token range of the question.
    pub question: Range<usize>,
    /// Token range of each sentence (empty when truncated away).
    pub sentences: Vec<Range<usize>>,
    pub step: usize,
}

impl TokenizedInput {
    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }

    /// Position of the head token: the first token of the current sentence.
    pub fn head_position(&self) -> usize {
        self.sentences[self.step].start
    }

    pub fn count_timestep(&self, ts: u32) -> usize {
        self.timestep_ids.iter().filter(|&&t| t == ts).count()
    }
}

pub struct InputBuilder<'a> {
    tokenizer: &'a dyn Tokenizer,
    config: &'a InputConfig,
}

impl<'a> InputBuilder<'a> {
    pub fn new(tokenizer: &'a dyn Tokenizer, config: &'a InputConfig) -> Self {
        Self { tokenizer, config }
    }

    pub fn build_participant_sequence(
        &self,
        participant: &str,
        story: &AnnotatedStory,
        step: usize,
    ) -> Result<TokenizedInput> {
        if participant.trim().is_empty() {
            return Err(ModelError::EmptyParticipant);
        }
        self.build_slot_sequence(&ParticipantSlot::Named(participant.to_string()), story, step)
    }

    pub fn build_dummy_sequence(&self, story: &AnnotatedStory, step: usize) -> Result<TokenizedInput> {
        self.build_slot_sequence(&ParticipantSlot::Dummy, story, step)
    }

    pub fn build_slot_sequence(
        &self,
        slot: &ParticipantSlot,
        story: &AnnotatedStory,
        step: usize,
    ) -> Result<TokenizedInput> {
        let sentences = self.encode_sentences(story)?;
        self.assemble(slot, &sentences, step)
    }

    /// One sequence per step of `story`, all for the same participant slot.
    pub fn build_story_sequences(&self, slot: &ParticipantSlot, story: &AnnotatedStory) -> Result<Vec<TokenizedInput>> {
        if let ParticipantSlot::Named(n) = slot {
            if n.trim().is_empty() {
                return Err(ModelError::EmptyParticipant);
            }
        }
        let sentences = self.encode_sentences(story)?;
        (0..sentences.len())
            .map(|step| self.assemble(slot, &sentences, step))
            .collect()
    }

    /// One aligned input pair per participant of `E ∪ E'`.
    pub fn build_joint_pairs(&self, left: &AnnotatedStory, right: &AnnotatedStory) -> Result<Vec<JointInputPair>> {
        if left.is_empty() || right.is_empty() {
            return Err(ModelError::EmptyStory);
        }
        let slots = align_participants(&left.participant_names(), &right.participant_names());
        let slots = if slots.is_empty() {
            vec![(ParticipantSlot::Dummy, ParticipantSlot::Dummy)]
        } else {
            slots
        };
        slots
            .into_iter()
            .map(|(l, r)| {
                Ok(JointInputPair {
                    left_inputs: self.build_story_sequences(&l, left)?,
                    right_inputs: self.build_story_sequences(&r, right)?,
                    left: l,
                    right: r,
                })
            })
            .collect()
    }

    fn encode_sentences(&self, story: &AnnotatedStory) -> Result<Vec<Vec<u32>>> {
        if story.is_empty() {
            return Err(ModelError::EmptyStory);
        }
        Ok(story.sentences.iter().map(|s| self.tokenizer.encode(s)).collect())
    }

    fn assemble(&self, slot: &ParticipantSlot, sentences: &[Vec<u32>], step: usize) -> Result<TokenizedInput> {
        let n = sentences.len();
        if step >= n {
            return Err(ModelError::StepOutOfRange { step, len: n });
        }
        let question = self.tokenizer.encode(&self.config.question_for(slot));
        let keep = truncation_plan(question.len(), sentences, step, self.config.max_len)?;

        let mut token_ids = Vec::new();
        let mut timestep_ids = Vec::new();
        token_ids.push(self.tokenizer.cls_id());
        timestep_ids.push(TS_SPECIAL);
        let q_start = token_ids.len();
        token_ids.extend_from_slice(&question);
        timestep_ids.extend(std::iter::repeat_n(TS_SPECIAL, question.len()));
        let question_range = q_start..token_ids.len();
        token_ids.push(self.tokenizer.sep_id());
        timestep_ids.push(TS_SPECIAL);

        let mut ranges = Vec::with_capacity(n);
        for (i, (tokens, kept)) in sentences.iter().zip(&keep).enumerate() {
            let start = token_ids.len();
            if *kept == 0 && i != step {
                ranges.push(start..start);
                continue;
            }
            // Past sentences lose leading tokens, future sentences lose trailing ones.
            let slice = if i < step {
                &tokens[tokens.len() - kept..]
            } else {
                &tokens[..*kept]
            };
            let ts = match i.cmp(&step) {
                std::cmp::Ordering::Less => TS_PAST,
                std::cmp::Ordering::Equal => TS_CURRENT,
                std::cmp::Ordering::Greater => TS_FUTURE,
            };
            token_ids.extend_from_slice(slice);
            timestep_ids.extend(std::iter::repeat_n(ts, slice.len()));
            ranges.push(start..token_ids.len());
            token_ids.push(self.tokenizer.sep_id());
            timestep_ids.push(TS_SPECIAL);
        }

        Ok(TokenizedInput {
            token_ids,
            timestep_ids,
            question: question_range,
            sentences: ranges,
            step,
        })
    }
}

/// Tokens kept per sentence so the sequence fits in `max_len`. Future sentences are
/// trimmed first (from the end), then past sentences (from the start); the question and
/// the current sentence are never trimmed.
fn truncation_plan(question_len: usize, sentences: &[Vec<u32>], step: usize, max_len: usize) -> Result<Vec<usize>> {
    let mut keep: Vec<usize> = sentences.iter().map(Vec::len).collect();
    let fixed = 1 + question_len + 1 + keep[step] + 1;
    if fixed > max_len {
        return Err(ModelError::SequenceTooLong {
            needed: fixed,
            max: max_len,
        });
    }
    let total: usize = fixed
        + keep
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != step)
            .map(|(_, &k)| k + 1)
            .sum::<usize>();
    let mut overflow = total.saturating_sub(max_len);
    let order = (step + 1..sentences.len()).rev().chain(0..step);
    for i in order {
        if overflow == 0 {
            break;
        }
        let cost = keep[i] + 1;
        if overflow >= cost {
            overflow -= cost;
            keep[i] = 0;
        } else {
            keep[i] -= overflow;
            overflow = 0;
        }
    }
    Ok(keep)
}

/// Aligned inputs for one participant slot across a story pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointInputPair {
    pub left: ParticipantSlot,
    pub right: ParticipantSlot,
    pub left_inputs: Vec<TokenizedInput>,
    pub right_inputs: Vec<TokenizedInput>,
}

/// Common participants aligned with each other, in left order, followed by left-only
/// participants against a dummy and then right-only participants against a dummy.
pub fn align_participants(left: &[&str], right: &[&str]) -> Vec<(ParticipantSlot, ParticipantSlot)> {
    let right_set: HashSet<&str> = right.iter().copied().collect();
    let left_set: HashSet<&str> = left.iter().copied().collect();
    let named = |s: &str| ParticipantSlot::Named(s.to_string());
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for &e in left.iter().filter(|e| right_set.contains(*e)) {
        if seen.insert(e) {
            out.push((named(e), named(e)));
        }
    }
    for &e in left.iter().filter(|e| !right_set.contains(*e)) {
        if seen.insert(e) {
            out.push((named(e), ParticipantSlot::Dummy));
        }
    }
    for &e in right.iter().filter(|e| !left_set.contains(*e)) {
        if seen.insert(e) {
            out.push((ParticipantSlot::Dummy, named(e)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::HashedTokenizer;

    fn story(sentences: &[&str]) -> AnnotatedStory {
        AnnotatedStory::from_sentences(sentences)
    }

    fn builder_parts() -> (HashedTokenizer, InputConfig) {
        (HashedTokenizer::new(1000).unwrap(), InputConfig::default())
    }

    #[test]
    fn first_step_marks_current_and_future() {
        let (tok, cfg) = builder_parts();
        let b = InputBuilder::new(&tok, &cfg);
        let s = story(&["Tom took out the notebook.", "Tom wrote in it."]);
        let input = b.build_participant_sequence("notebook", &s, 0).unwrap();
        let q = input.question.clone();
        assert!(input.timestep_ids[q].iter().all(|&t| t == TS_SPECIAL));
        assert!(input.timestep_ids[input.sentences[0].clone()]
            .iter()
            .all(|&t| t == TS_CURRENT));
        assert!(input.timestep_ids[input.sentences[1].clone()]
            .iter()
            .all(|&t| t == TS_FUTURE));
        assert_eq!(input.token_ids[0], tok.cls_id());
        assert_eq!(input.token_ids.last(), Some(&tok.sep_id()));
        assert_eq!(input.head_position(), input.sentences[0].start);
    }

    #[test]
    fn second_step_marks_past_and_current() {
        let (tok, cfg) = builder_parts();
        let b = InputBuilder::new(&tok, &cfg);
        let s = story(&["Tom took out the notebook.", "Tom wrote in it."]);
        let input = b.build_participant_sequence("notebook", &s, 1).unwrap();
        assert!(input.timestep_ids[input.sentences[0].clone()]
            .iter()
            .all(|&t| t == TS_PAST));
        assert!(input.timestep_ids[input.sentences[1].clone()]
            .iter()
            .all(|&t| t == TS_CURRENT));
    }

    #[test]
    fn single_sentence_has_no_past_or_future() {
        let (tok, cfg) = builder_parts();
        let b = InputBuilder::new(&tok, &cfg);
        let input = b
            .build_participant_sequence("pan", &story(&["Ann heated the pan."]), 0)
            .unwrap();
        let values: HashSet<u32> = input.timestep_ids.iter().copied().collect();
        assert_eq!(values, HashSet::from([TS_SPECIAL, TS_CURRENT]));
    }

    #[test]
    fn dummy_question_is_verbatim_and_only_question_differs() {
        let (tok, cfg) = builder_parts();
        let b = InputBuilder::new(&tok, &cfg);
        let s = story(&["Ann heated the pan.", "Ann ate."]);
        let dummy = b.build_dummy_sequence(&s, 1).unwrap();
        assert_eq!(
            tok.encode(&cfg.dummy_question),
            dummy.token_ids[dummy.question.clone()].to_vec()
        );
        assert_eq!(cfg.question_for(&ParticipantSlot::Dummy), "where is _");
        let real = b.build_participant_sequence("pan", &s, 1).unwrap();
        let dummy_tail = &dummy.token_ids[dummy.question.end..];
        let real_tail = &real.token_ids[real.question.end..];
        assert_eq!(dummy_tail, real_tail);
        assert_eq!(dummy, b.build_dummy_sequence(&s, 1).unwrap());
    }

    #[test]
    fn rejects_bad_inputs() {
        let (tok, cfg) = builder_parts();
        let b = InputBuilder::new(&tok, &cfg);
        assert!(matches!(
            b.build_dummy_sequence(&story(&[]), 0),
            Err(ModelError::EmptyStory)
        ));
        assert!(matches!(
            b.build_participant_sequence(" ", &story(&["x."]), 0),
            Err(ModelError::EmptyParticipant)
        ));
        assert!(matches!(
            b.build_dummy_sequence(&story(&["x."]), 1),
            Err(ModelError::StepOutOfRange { .. })
        ));
    }

    #[test]
    fn truncates_future_then_past_but_keeps_current() {
        let tok = HashedTokenizer::new(1000).unwrap();
        // question "where is pan" = 3 tokens, each sentence = 4 tokens.
        let cfg = InputConfig {
            max_len: 16,
            ..InputConfig::default()
        };
        let b = InputBuilder::new(&tok, &cfg);
        let s = story(&["a b c d", "e f g h", "i j k l", "m n o p"]);
        let input = b.build_participant_sequence("pan", &s, 1).unwrap();
        assert!(input.len() <= 16);
        assert_eq!(input.sentences[1].len(), 4);
        assert_eq!(input.sentences[0].len(), 4);
        assert!(input.sentences[3].is_empty());
        assert_eq!(input.count_timestep(TS_FUTURE), input.sentences[2].len());
        // Tighter budget also eats into the past sentence, from its start.
        let cfg = InputConfig { max_len: 12, ..cfg };
        let b = InputBuilder::new(&tok, &cfg);
        let input = b.build_participant_sequence("pan", &s, 1).unwrap();
        assert_eq!(input.len(), 12);
        assert_eq!(input.count_timestep(TS_FUTURE), 0);
        assert_eq!(input.sentences[1].len(), 4);
        assert_eq!(input.token_ids[input.sentences[0].clone()], tok.encode("d")[..]);
        let cfg = InputConfig { max_len: 8, ..cfg };
        let b = InputBuilder::new(&tok, &cfg);
        assert!(matches!(
            b.build_participant_sequence("pan", &s, 1),
            Err(ModelError::SequenceTooLong { needed: 10, max: 8 })
        ));
    }

    #[test]
    fn joint_alignment_examples() {
        use ParticipantSlot::*;
        let n = |s: &str| Named(s.to_string());
        assert_eq!(
            align_participants(&["ann", "pan"], &["ann", "stove"]),
            vec![(n("ann"), n("ann")), (n("pan"), Dummy), (Dummy, n("stove"))]
        );
        let same = align_participants(&["a", "b"], &["b", "a"]);
        assert!(same.iter().all(|(l, r)| l == r));
        let disjoint = align_participants(&["a", "b"], &["c"]);
        assert_eq!(disjoint.len(), 3);
        assert!(disjoint.iter().all(|(l, r)| (*l == Dummy) != (*r == Dummy)));
    }

    #[test]
    fn joint_pairs_fall_back_to_dummy_when_no_participants() {
        let (tok, cfg) = builder_parts();
        let b = InputBuilder::new(&tok, &cfg);
        let pairs = b
            .build_joint_pairs(&story(&["It rained."]), &story(&["It snowed.", "Then sun."]))
            .unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].left, ParticipantSlot::Dummy);
        assert_eq!(pairs[0].left_inputs.len(), 1);
        assert_eq!(pairs[0].right_inputs.len(), 2);
    }
}

//! Adjective and adverb insertion that leaves every participant phrase intact.

use std::sync::Arc;

use procstory_core::text::{find_word_spans, word_tokens};
use procstory_core::{AnnotatedStory, StoryPair};
use procstory_lexicon::{VerbForm, WordClass, WordNet};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A proposed word, inserted (followed by a space) at byte offset `position`.
#[derive(Debug, Clone, PartialEq)]
pub struct Insertion {
    pub position: usize,
    pub word: String,
    pub score: f64,
}

pub trait InsertionModel: Send + Sync {
    /// Candidates for `sentence`. `slots` lists the byte offsets where an insertion is
    /// allowed; proposals elsewhere are rejected by the caller.
    fn propose(&self, sentence: &str, slots: &[usize], rng: &mut ChaCha8Rng) -> Vec<Insertion>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InsertionConfig {
    pub max_per_sentence: usize,
    /// Minimum model score for a candidate to be accepted.
    pub threshold: f64,
}

impl Default for InsertionConfig {
    fn default() -> Self {
        Self {
            max_per_sentence: 2,
            threshold: 0.5,
        }
    }
}

/// Applies accepted insertions to every sentence of both stories and recomputes mentions.
/// Each sentence draws from its own generator seeded by `seed` and the sentence text, so
/// sentences shared by the two stories receive the same insertions.
pub fn insert_words(pair: &StoryPair, model: &dyn InsertionModel, seed: u64, config: &InsertionConfig) -> StoryPair {
    StoryPair {
        pair_id: pair.pair_id.clone(),
        plausible: insert_story(&pair.plausible, model, seed, config),
        implausible: insert_story(&pair.implausible, model, seed, config),
    }
}

fn insert_story(
    story: &AnnotatedStory,
    model: &dyn InsertionModel,
    seed: u64,
    config: &InsertionConfig,
) -> AnnotatedStory {
    let mut out = story.clone();
    let surfaces: Vec<&str> = story.participants.iter().map(|p| p.surface.as_str()).collect();
    let participant_words: Vec<&str> = surfaces.iter().flat_map(|s| s.split(' ')).collect();
    out.sentences = story
        .sentences
        .iter()
        .map(|sentence| {
            let slots = allowed_slots(sentence, &surfaces);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(sentence));
            let mut candidates: Vec<Insertion> = model
                .propose(sentence, &slots, &mut rng)
                .into_iter()
                .filter(|c| {
                    c.score.is_finite()
                        && c.score >= config.threshold
                        && slots.contains(&c.position)
                        && !c.word.is_empty()
                        && c.word.chars().all(char::is_alphabetic)
                        && !participant_words.contains(&c.word.to_lowercase().as_str())
                })
                .collect();
            candidates.sort_by(|a, b| {
                b.score
                    .total_cmp(&a.score)
                    .then(a.position.cmp(&b.position))
                    .then(a.word.cmp(&b.word))
            });
            let mut chosen: Vec<Insertion> = Vec::new();
            for c in candidates {
                if chosen.len() == config.max_per_sentence {
                    break;
                }
                if chosen.iter().all(|x| x.position != c.position) {
                    chosen.push(c);
                }
            }
            chosen.sort_by_key(|c| std::cmp::Reverse(c.position));
            let mut text = sentence.clone();
            for c in chosen {
                text.insert_str(c.position, &format!("{} ", c.word));
            }
            text
        })
        .collect();
    out.recompute_mentions();
    out
}

/// Word starts preceded by whitespace, excluding the sentence start and any offset strictly
/// inside a participant mention.
pub fn allowed_slots(sentence: &str, surfaces: &[&str]) -> Vec<usize> {
    let spans: Vec<(usize, usize)> = surfaces.iter().flat_map(|s| find_word_spans(sentence, s)).collect();
    token_offsets(sentence)
        .into_iter()
        .map(|(start, _)| start)
        .filter(|&p| p > 0 && sentence[..p].ends_with(char::is_whitespace))
        .filter(|&p| spans.iter().all(|&(a, b)| p <= a || p >= b))
        .collect()
}

fn token_offsets(sentence: &str) -> Vec<(usize, &str)> {
    let base = sentence.as_ptr() as usize;
    word_tokens(sentence)
        .into_iter()
        .map(|t| (t.as_ptr() as usize - base, t))
        .collect()
}

fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x100_0000_01b3)
    })
}

const DETERMINERS: &[&str] = &[
    "a", "an", "the", "his", "her", "my", "their", "our", "your", "its", "this", "that", "some",
];
const SUBJECT_PRONOUNS: &[&str] = &["i", "he", "she", "we", "they", "you"];
const ADJECTIVES: &[&str] = &[
    "wonderful",
    "nice",
    "little",
    "big",
    "lovely",
    "favorite",
    "simple",
    "fancy",
];
const ADVERBS: &[&str] = &[
    "quickly",
    "carefully",
    "slowly",
    "quietly",
    "happily",
    "gently",
    "finally",
];

/// Proposes an adjective after a determiner (before a noun or adjective) and an adverb
/// between a subject and its inflected verb. Scores are uniform draws.
pub struct LexiconInsertionModel {
    wordnet: Arc<WordNet>,
    pub adjectives: Vec<String>,
    pub adverbs: Vec<String>,
}

impl LexiconInsertionModel {
    pub fn new(wordnet: Arc<WordNet>) -> Self {
        Self {
            wordnet,
            adjectives: ADJECTIVES.iter().map(|s| s.to_string()).collect(),
            adverbs: ADVERBS.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn nominal(&self, word: &str) -> bool {
        self.wordnet.is_word(word, WordClass::Noun) || self.wordnet.is_word(word, WordClass::Adjective)
    }

    fn subject(prev: &str) -> bool {
        let lower = prev.to_lowercase();
        SUBJECT_PRONOUNS.contains(&lower.as_str())
            || (prev.chars().next().is_some_and(char::is_uppercase)
                && !prev.ends_with("'s")
                && !DETERMINERS.contains(&lower.as_str()))
    }
}

impl InsertionModel for LexiconInsertionModel {
    fn propose(&self, sentence: &str, slots: &[usize], rng: &mut ChaCha8Rng) -> Vec<Insertion> {
        let tokens = token_offsets(sentence);
        let mut out = Vec::new();
        for i in 1..tokens.len() {
            let (position, word) = tokens[i];
            if !slots.contains(&position) || !word.chars().all(char::is_alphabetic) {
                continue;
            }
            let prev = tokens[i - 1].1;
            let lower = word.to_lowercase();
            let pool = if DETERMINERS.contains(&prev.to_lowercase().as_str()) && self.nominal(&lower) {
                &self.adjectives
            } else if Self::subject(prev) && matches!(self.wordnet.verb_form(&lower), Some(VerbForm::Inflected(_))) {
                &self.adverbs
            } else {
                continue;
            };
            if let Some(w) = pool.choose(rng) {
                out.push(Insertion {
                    position,
                    word: w.clone(),
                    score: rng.gen(),
                });
            }
        }
        out
    }
}

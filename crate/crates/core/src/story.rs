//! Stories, participants and their dense state annotations.

use serde::{Deserialize, Serialize};

use crate::text::{find_word_spans, normalize_surface};

/// One occurrence of a participant: sentence index plus a byte span into that sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mention {
    pub sentence: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Participant {
    pub surface: String,
    #[serde(default)]
    pub is_human: bool,
    /// Recomputed from the owning story's sentences; never serialized.
    #[serde(skip)]
    pub mentions: Vec<Mention>,
}

impl Participant {
    pub fn new(surface: &str, is_human: bool) -> Self {
        Self {
            surface: normalize_surface(surface),
            is_human,
            mentions: Vec::new(),
        }
    }

    pub fn mentioned_in(&self, sentence: usize) -> bool {
        self.mentions.iter().any(|m| m.sentence == sentence)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateAnnotation {
    pub participant: String,
    pub step: usize,
    pub attribute: String,
    pub precondition: String,
    pub effect: String,
}

/// The two contradicting sentences of an implausible story, serialized as `[first, second]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct ConflictPair {
    pub first: usize,
    pub second: usize,
}

impl ConflictPair {
    pub fn new(first: usize, second: usize) -> Self {
        Self { first, second }
    }

    /// Position of this pair in the row-major enumeration of `i < j` over `n` sentences.
    pub fn flat_index(&self, n: usize) -> Option<usize> {
        if self.first >= self.second || self.second >= n {
            return None;
        }
        Some(pair_index(self.first, self.second, n))
    }

    pub fn from_flat_index(index: usize, n: usize) -> Option<Self> {
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                if k == index {
                    return Some(Self::new(i, j));
                }
                k += 1;
            }
        }
        None
    }

    pub fn contains(&self, sentence: usize) -> bool {
        self.first == sentence || self.second == sentence
    }
}

impl From<(usize, usize)> for ConflictPair {
    fn from((first, second): (usize, usize)) -> Self {
        Self { first, second }
    }
}

impl From<ConflictPair> for (usize, usize) {
    fn from(p: ConflictPair) -> Self {
        (p.first, p.second)
    }
}

/// Row-major index of the pair `(i, j)`, `i < j < n`.
pub fn pair_index(i: usize, j: usize, n: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Plausibility {
    Implausible,
    Plausible,
}

impl TryFrom<u8> for Plausibility {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            0 => Ok(Self::Implausible),
            1 => Ok(Self::Plausible),
            other => Err(format!("plausibility label must be 0 or 1, got {other}")),
        }
    }
}

impl From<Plausibility> for u8 {
    fn from(p: Plausibility) -> u8 {
        match p {
            Plausibility::Implausible => 0,
            Plausibility::Plausible => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedStory {
    pub sentences: Vec<String>,
    #[serde(default)]
    pub participants: Vec<Participant>,
    #[serde(default)]
    pub annotations: Vec<StateAnnotation>,
    #[serde(default)]
    pub conflict: Option<ConflictPair>,
    #[serde(default)]
    pub label: Option<Plausibility>,
}

impl AnnotatedStory {
    pub fn new(sentences: Vec<String>) -> Self {
        Self {
            sentences,
            participants: Vec::new(),
            annotations: Vec::new(),
            conflict: None,
            label: None,
        }
    }

    pub fn from_sentences<S: AsRef<str>>(sentences: &[S]) -> Self {
        Self::new(sentences.iter().map(|s| s.as_ref().to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn participant(&self, surface: &str) -> Option<&Participant> {
        self.participants.iter().find(|p| p.surface == surface)
    }

    /// Normalize participant surfaces and recompute every mention span.
    pub fn refresh(&mut self) {
        for p in &mut self.participants {
            p.surface = normalize_surface(&p.surface);
        }
        for a in &mut self.annotations {
            a.participant = normalize_surface(&a.participant);
        }
        self.recompute_mentions();
    }

    pub fn recompute_mentions(&mut self) {
        for p in &mut self.participants {
            p.mentions = self
                .sentences
                .iter()
                .enumerate()
                .flat_map(|(sentence, text)| {
                    find_word_spans(text, &p.surface)
                        .into_iter()
                        .map(move |(start, end)| Mention { sentence, start, end })
                })
                .collect();
        }
    }

    pub fn with_participant(mut self, surface: &str, is_human: bool) -> Self {
        self.participants.push(Participant::new(surface, is_human));
        self.recompute_mentions();
        self
    }

    pub fn with_annotation(
        mut self,
        participant: &str,
        step: usize,
        attribute: &str,
        precondition: &str,
        effect: &str,
    ) -> Self {
        self.annotations.push(StateAnnotation {
            participant: normalize_surface(participant),
            step,
            attribute: attribute.to_string(),
            precondition: precondition.to_string(),
            effect: effect.to_string(),
        });
        self
    }

    pub fn with_conflict(mut self, first: usize, second: usize) -> Self {
        self.conflict = Some(ConflictPair::new(first, second));
        self
    }

    pub fn with_label(mut self, label: Plausibility) -> Self {
        self.label = Some(label);
        self
    }

    /// Surfaces in listing order.
    pub fn participant_names(&self) -> Vec<&str> {
        self.participants.iter().map(|p| p.surface.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoryPair {
    pub pair_id: String,
    pub plausible: AnnotatedStory,
    pub implausible: AnnotatedStory,
}

impl StoryPair {
    pub fn refresh(&mut self) {
        self.plausible.refresh();
        self.implausible.refresh();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_index_matches_enumeration() {
        for n in 0..8 {
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    assert_eq!(pair_index(i, j, n), k);
                    assert_eq!(ConflictPair::from_flat_index(k, n), Some(ConflictPair::new(i, j)));
                    k += 1;
                }
            }
            assert_eq!(k, pair_count(n));
        }
    }

    #[test]
    fn mentions_are_recomputed() {
        let story = AnnotatedStory::from_sentences(&["Tom took out the notebook.", "Tom wrote in the notebook."])
            .with_participant("Notebook", false);
        let p = story.participant("notebook").unwrap();
        assert_eq!(p.mentions.len(), 2);
        assert!(p.mentioned_in(1));
        let m = p.mentions[0];
        assert_eq!(&story.sentences[0][m.start..m.end], "notebook");
    }

    #[test]
    fn conflict_serializes_as_array() {
        let json = serde_json::to_string(&ConflictPair::new(1, 3)).unwrap();
        assert_eq!(json, "[1,3]");
        let label: Result<Plausibility, _> = serde_json::from_str("2");
        assert!(label.is_err());
    }
}

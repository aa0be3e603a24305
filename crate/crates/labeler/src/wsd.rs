//! Word-sense selection for participant candidates.

use std::sync::Arc;

use procstory_lexicon::{phrase_synsets, LexicalResource, Roots, SynsetId};

use crate::extract::Candidate;

pub trait SenseSelector: Send + Sync {
    /// Sense of the candidate in context, or `None` when no sense applies.
    fn select(&self, candidate: &Candidate, sentence: &str) -> Option<SynsetId>;
}

/// First-listed sense of the full phrase, then of its head word. Pronouns get no
/// sense; proper names resolve to the person synset.
#[derive(Clone)]
pub struct MostFrequentSense {
    lexicon: Arc<dyn LexicalResource>,
    roots: Roots,
}

impl MostFrequentSense {
    pub fn new(lexicon: Arc<dyn LexicalResource>, roots: Roots) -> Self {
        Self { lexicon, roots }
    }
}

impl SenseSelector for MostFrequentSense {
    fn select(&self, candidate: &Candidate, _sentence: &str) -> Option<SynsetId> {
        if candidate.pronoun {
            return None;
        }
        if candidate.proper {
            return Some(self.roots.person);
        }
        let lexicon = self.lexicon.as_ref();
        phrase_synsets(lexicon, &candidate.lemma)
            .first()
            .copied()
            .or_else(|| phrase_synsets(lexicon, &candidate.surface).first().copied())
    }
}

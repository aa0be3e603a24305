//! The lexical-resource contract and hypernym traversals over it.

use std::collections::{BTreeMap, HashSet, VecDeque};

/// Noun synset identifier (the byte offset in WordNet's data file).
pub type SynsetId = u32;

pub trait LexicalResource: Send + Sync {
    /// Noun senses of `lemma` in sense-frequency order. Multi-word lemmas use spaces
    /// or underscores; inflected forms are normalized by the implementation.
    fn noun_synsets(&self, lemma: &str) -> Vec<SynsetId>;

    /// Direct hypernyms, class hypernyms before instance hypernyms.
    fn hypernyms(&self, synset: SynsetId) -> Vec<SynsetId>;

    /// Member lemmas with underscores replaced by spaces.
    fn lemmas(&self, synset: SynsetId) -> Vec<String>;
}

/// The three synsets the traversals test against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Roots {
    pub physical: SynsetId,
    pub abstraction: SynsetId,
    pub person: SynsetId,
}

impl Roots {
    /// physical_entity.n.01, abstraction.n.06 and person.n.01 in WordNet 3.0.
    pub const WORDNET_30: Roots = Roots {
        physical: 1930,
        abstraction: 2137,
        person: 7846,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Physicality {
    Physical,
    Abstract,
}

/// Breadth-first walk over the hypernym graph starting at (and including) `start`.
/// Each synset is visited once, so cyclic or shared up-links terminate.
pub fn hypernym_walk(resource: &dyn LexicalResource, start: SynsetId) -> Vec<SynsetId> {
    let mut seen = HashSet::from([start]);
    let mut queue = VecDeque::from([start]);
    let mut order = Vec::new();
    while let Some(s) = queue.pop_front() {
        order.push(s);
        for h in resource.hypernyms(s) {
            if seen.insert(h) {
                queue.push_back(h);
            }
        }
    }
    order
}

/// Chain of first hypernyms from `start` up to a synset with none.
pub fn first_hypernym_path(resource: &dyn LexicalResource, start: SynsetId) -> Vec<SynsetId> {
    let mut path = vec![start];
    let mut seen = HashSet::from([start]);
    let mut current = start;
    while let Some(&next) = resource.hypernyms(current).first() {
        if !seen.insert(next) {
            break;
        }
        path.push(next);
        current = next;
    }
    path
}

/// Whichever of the physical or abstract roots the breadth-first walk meets first.
pub fn physicality(resource: &dyn LexicalResource, synset: SynsetId, roots: &Roots) -> Option<Physicality> {
    hypernym_walk(resource, synset).into_iter().find_map(|s| {
        if s == roots.physical {
            Some(Physicality::Physical)
        } else if s == roots.abstraction {
            Some(Physicality::Abstract)
        } else {
            None
        }
    })
}

pub fn is_person(resource: &dyn LexicalResource, synset: SynsetId, roots: &Roots) -> bool {
    hypernym_walk(resource, synset).contains(&roots.person)
}

/// Senses for a possibly multi-word phrase: the full phrase first, then its last word.
pub fn phrase_synsets(resource: &dyn LexicalResource, phrase: &str) -> Vec<SynsetId> {
    let phrase = phrase.trim().to_lowercase();
    let found = resource.noun_synsets(&phrase);
    if !found.is_empty() {
        return found;
    }
    match phrase.rsplit_once(' ') {
        Some((_, head)) => resource.noun_synsets(head),
        None => Vec::new(),
    }
}

/// First lemma of the first direct hypernym of the phrase's first sense.
pub fn direct_hypernym_lemma(resource: &dyn LexicalResource, phrase: &str) -> Option<String> {
    let sense = *phrase_synsets(resource, phrase).first()?;
    let parent = *resource.hypernyms(sense).first()?;
    resource.lemmas(parent).into_iter().next()
}

/// Whether the first sense of `phrase` descends from the person synset.
pub fn phrase_is_person(resource: &dyn LexicalResource, phrase: &str, roots: &Roots) -> bool {
    phrase_synsets(resource, phrase)
        .first()
        .is_some_and(|&s| is_person(resource, s, roots))
}

/// Small in-memory resource for tests and hand-built hierarchies.
#[derive(Debug, Clone, Default)]
pub struct MemoryLexicon {
    senses: BTreeMap<String, Vec<SynsetId>>,
    hypernyms: BTreeMap<SynsetId, Vec<SynsetId>>,
    lemmas: BTreeMap<SynsetId, Vec<String>>,
}

impl MemoryLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a synset with its lemmas and direct hypernyms; lemmas gain this synset as
    /// their next sense.
    pub fn synset(mut self, id: SynsetId, lemmas: &[&str], hypernyms: &[SynsetId]) -> Self {
        for l in lemmas {
            self.senses.entry(l.to_lowercase()).or_default().push(id);
        }
        self.lemmas.insert(id, lemmas.iter().map(|s| s.to_string()).collect());
        self.hypernyms.insert(id, hypernyms.to_vec());
        self
    }
}

impl LexicalResource for MemoryLexicon {
    fn noun_synsets(&self, lemma: &str) -> Vec<SynsetId> {
        let key = lemma.trim().to_lowercase().replace('_', " ");
        self.senses.get(&key).cloned().unwrap_or_default()
    }

    fn hypernyms(&self, synset: SynsetId) -> Vec<SynsetId> {
        self.hypernyms.get(&synset).cloned().unwrap_or_default()
    }

    fn lemmas(&self, synset: SynsetId) -> Vec<String> {
        self.lemmas.get(&synset).cloned().unwrap_or_default()
    }
}

//! Offline parser: closed-class word lists plus WordNet word classes drive a tagger,
//! a noun-phrase chunker and clause-level role assignment. Determiners select the
//! ontology class; subject, object and prepositional attachments select the role.

use std::sync::Arc;

use procstory_core::text::word_tokens;
use procstory_lexicon::{VerbForm, WordClass, WordNet};

use crate::error::Result;
use crate::parse::{NounTerm, RoleEdge, SentenceParse, SentenceParser, Token};

const DEFINITE: &[&str] = &["the", "this", "that", "these", "those"];
const INDEFINITE: &[&str] = &["a", "an", "another"];
const PARTITIVE: &[&str] = &["some", "any"];
const QUANTIFIERS: &[&str] = &[
    "every", "each", "all", "no", "both", "either", "neither", "most", "many", "several", "few", "much", "more",
    "enough",
];
const POSSESSIVES: &[&str] = &["my", "your", "his", "its", "our", "their"];
const SINGULAR_PRONOUNS: &[&str] = &[
    "i",
    "me",
    "you",
    "he",
    "him",
    "she",
    "it",
    "myself",
    "yourself",
    "himself",
    "herself",
    "itself",
    "someone",
    "something",
    "everyone",
    "everything",
    "anyone",
    "anything",
    "nothing",
    "nobody",
    "somebody",
    "everybody",
    "one",
    "mine",
    "yours",
    "hers",
];
const PLURAL_PRONOUNS: &[&str] = &["we", "us", "they", "them", "ourselves", "themselves", "theirs", "ours"];
const WH: &[&str] = &["who", "whom", "what", "which", "whose"];
const NUMBERS: &[&str] = &[
    "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven", "twelve", "dozen",
];
const PREPOSITIONS: &[&str] = &[
    "in",
    "into",
    "on",
    "onto",
    "at",
    "from",
    "with",
    "without",
    "for",
    "of",
    "by",
    "under",
    "over",
    "through",
    "across",
    "behind",
    "near",
    "inside",
    "outside",
    "out",
    "off",
    "up",
    "down",
    "around",
    "about",
    "after",
    "before",
    "during",
    "toward",
    "towards",
    "upon",
    "between",
    "beside",
    "along",
    "against",
    "past",
    "than",
    "like",
    "away",
    "back",
    "underneath",
    "beneath",
    "above",
    "below",
    "within",
    "throughout",
    "as",
];
const CONJUNCTIONS: &[&str] = &[
    "and", "but", "or", "so", "then", "because", "when", "while", "until", "although", "though", "if", "once",
    "whenever", "where", "since",
];
const COPULAS: &[&str] = &["is", "was", "were", "are", "be", "been", "being", "am", "'s"];
const AUXILIARIES: &[&str] = &[
    "has",
    "had",
    "have",
    "do",
    "did",
    "does",
    "will",
    "would",
    "could",
    "should",
    "can",
    "may",
    "might",
    "must",
    "shall",
    "didn't",
    "don't",
    "doesn't",
    "wasn't",
    "weren't",
    "isn't",
    "aren't",
    "couldn't",
    "wouldn't",
    "can't",
    "won't",
    "hadn't",
    "hasn't",
    "haven't",
    "shouldn't",
];
const NEGATIONS: &[&str] = &["not", "never", "n't"];
const ADVERBS: &[&str] = &[
    "very",
    "too",
    "also",
    "still",
    "just",
    "really",
    "again",
    "there",
    "here",
    "later",
    "soon",
    "now",
    "finally",
    "suddenly",
    "then",
    "already",
    "almost",
    "always",
    "often",
    "quickly",
    "slowly",
    "carefully",
    "home",
    "together",
    "everywhere",
    "somewhere",
    "outdoors",
    "indoors",
    "upstairs",
    "downstairs",
    "afterwards",
    "instead",
    "even",
    "only",
    "well",
];
const INTERJECTIONS: &[&str] = &[
    "wow", "oh", "ah", "oops", "yes", "okay", "ok", "hey", "hello", "ouch", "yay", "ugh", "alas", "hmm", "yikes",
    "whoa",
];
const LINKING_VERBS: &[&str] = &[
    "feel", "look", "seem", "become", "get", "turn", "go", "grow", "smell", "taste", "stay", "remain", "appear",
    "sound",
];
const EXPERIENCER_VERBS: &[&str] = &[
    "feel", "see", "hear", "smell", "taste", "want", "like", "love", "hate", "know", "notice", "need", "enjoy",
    "realize", "think", "watch", "prefer", "miss",
];
const RELATIONAL_PREPOSITIONS: &[&str] = &["of", "about", "like", "than", "as"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DetKind {
    Definite,
    Indefinite,
    Partitive,
    Quantifier,
    Number,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tag {
    Det(DetKind),
    Poss,
    Possessor,
    Pron { plural: bool },
    Wh,
    Prep,
    To,
    Conj,
    Aux { copula: bool },
    Neg,
    Adv,
    Adj,
    Noun,
    Propn,
    Verb,
    Punct,
    Open,
}

impl Tag {
    fn penn(self, plural: bool) -> &'static str {
        match self {
            Tag::Det(DetKind::Number) => "CD",
            Tag::Det(_) => "DT",
            Tag::Poss => "PRP$",
            Tag::Possessor => "NNP",
            Tag::Pron { .. } => "PRP",
            Tag::Wh => "WP",
            Tag::Prep => "IN",
            Tag::To => "TO",
            Tag::Conj => "CC",
            Tag::Aux { .. } => "MD",
            Tag::Neg | Tag::Adv => "RB",
            Tag::Adj => "JJ",
            Tag::Noun if plural => "NNS",
            Tag::Noun => "NN",
            Tag::Propn => "NNP",
            Tag::Verb => "VB",
            Tag::Punct => ".",
            Tag::Open => "XX",
        }
    }

    fn is_subjectlike(self) -> bool {
        matches!(self, Tag::Noun | Tag::Propn | Tag::Pron { .. })
    }
}

struct Word<'a> {
    raw: &'a str,
    lower: String,
    start: usize,
    end: usize,
}

#[derive(Debug, Clone)]
struct Chunk {
    nouns: Vec<usize>,
    det: Option<DetKind>,
    plural: bool,
    pronoun: Option<bool>,
    propn: bool,
    possessor: bool,
    first: usize,
}

/// Offline approximation of a deep semantic parser.
#[derive(Clone)]
pub struct FallbackParser {
    lexicon: Arc<WordNet>,
}

impl FallbackParser {
    pub fn new(lexicon: Arc<WordNet>) -> Self {
        Self { lexicon }
    }

    fn is(&self, w: &str, class: WordClass) -> bool {
        self.lexicon.is_word(w, class)
    }

    fn is_plural(&self, w: &str) -> bool {
        self.lexicon.noun_lemma(w).is_some_and(|l| l != w && !w.ends_with("ss"))
    }

    fn lexical_tag(&self, words: &[Word], i: usize, first_word: usize) -> Tag {
        let w = words[i].lower.as_str();
        let next_open = words
            .get(i + 1)
            .is_some_and(|n| n.raw.chars().next().is_some_and(char::is_alphanumeric));
        if !words[i].raw.chars().next().is_some_and(char::is_alphanumeric) {
            return Tag::Punct;
        }
        if w.ends_with("'s") && w.len() > 2 && !COPULAS.contains(&w) {
            return Tag::Possessor;
        }
        let in_list = |list: &[&str]| list.contains(&w);
        if in_list(DEFINITE) {
            return Tag::Det(DetKind::Definite);
        }
        if in_list(INDEFINITE) {
            return Tag::Det(DetKind::Indefinite);
        }
        if in_list(PARTITIVE) {
            return Tag::Det(DetKind::Partitive);
        }
        if in_list(QUANTIFIERS) {
            return Tag::Det(DetKind::Quantifier);
        }
        if w == "her" {
            let next_lower = words.get(i + 1).map(|n| n.lower.as_str()).unwrap_or("");
            let closed = next_lower.is_empty()
                || [PREPOSITIONS, CONJUNCTIONS, DEFINITE, INDEFINITE, ADVERBS]
                    .iter()
                    .any(|l| l.contains(&next_lower));
            return if next_open && !closed {
                Tag::Poss
            } else {
                Tag::Pron { plural: false }
            };
        }
        if in_list(POSSESSIVES) {
            return Tag::Poss;
        }
        if (in_list(NUMBERS) && w != "one") || w.chars().all(|c| c.is_ascii_digit()) {
            return Tag::Det(DetKind::Number);
        }
        if in_list(SINGULAR_PRONOUNS) {
            return Tag::Pron { plural: false };
        }
        if in_list(PLURAL_PRONOUNS) {
            return Tag::Pron { plural: true };
        }
        if in_list(WH) {
            return Tag::Wh;
        }
        if w == "to" {
            let next = words.get(i + 1).map(|n| n.lower.as_str()).unwrap_or("");
            let infinitive = self.lexicon.verb_form(next).is_some() && !self.is(next, WordClass::Noun);
            return if infinitive { Tag::To } else { Tag::Prep };
        }
        if in_list(PREPOSITIONS) {
            return Tag::Prep;
        }
        if in_list(CONJUNCTIONS) {
            return Tag::Conj;
        }
        if in_list(COPULAS) {
            return Tag::Aux { copula: true };
        }
        if in_list(AUXILIARIES) {
            return Tag::Aux { copula: false };
        }
        if in_list(NEGATIONS) {
            return Tag::Neg;
        }
        if in_list(ADVERBS) || in_list(INTERJECTIONS) {
            return Tag::Adv;
        }
        let capitalized = words[i].raw.chars().next().is_some_and(char::is_uppercase);
        if capitalized {
            if i != first_word {
                return Tag::Propn;
            }
            return if self.is_plural(w) { Tag::Open } else { Tag::Propn };
        }
        if w.ends_with("ly") && self.is(w, WordClass::Adverb) && !self.is(w, WordClass::Noun) {
            return Tag::Adv;
        }
        Tag::Open
    }

    /// End (exclusive) of the noun-phrase run of open words starting at `i`.
    fn np_run(&self, words: &[Word], tags: &[Tag], i: usize, clause_has_verb: bool) -> usize {
        let mut j = i;
        while j < words.len() && tags[j] == Tag::Open {
            let w = words[j].lower.as_str();
            let noun = self.is(w, WordClass::Noun);
            let adj = self.is(w, WordClass::Adjective);
            let verb = self.lexicon.verb_form(w);
            if j > i {
                if let Some(VerbForm::Inflected(_)) = &verb {
                    let past = w.ends_with("ed") || !w.ends_with('s');
                    if !clause_has_verb || (past && !noun) {
                        break;
                    }
                }
            }
            if verb.is_some() && !noun && !adj {
                break;
            }
            j += 1;
        }
        // "the trash can." : a modal directly before clause-final punctuation is a noun.
        if j > i
            && j < words.len()
            && tags[j] == (Tag::Aux { copula: false })
            && self.is(&words[j].lower, WordClass::Noun)
            && words
                .get(j + 1)
                .is_none_or(|n| !n.raw.chars().next().is_some_and(char::is_alphanumeric))
        {
            j += 1;
        }
        j
    }

    fn resolve(&self, words: &[Word], tags: &mut [Tag]) {
        let mut clause_has_verb = false;
        let mut i = 0;
        while i < words.len() {
            match tags[i] {
                Tag::Conj | Tag::Punct => {
                    if tags[i] == Tag::Conj || words[i].raw == "," || words[i].raw == ";" {
                        clause_has_verb = false;
                    }
                    i += 1;
                    continue;
                }
                Tag::Verb | Tag::Aux { .. } => {
                    clause_has_verb = true;
                    i += 1;
                    continue;
                }
                Tag::Open => {}
                _ => {
                    i += 1;
                    continue;
                }
            }
            let w = words[i].lower.clone();
            let prev = if i > 0 { Some(tags[i - 1]) } else { None };
            let verb = self.lexicon.verb_form(&w);
            let noun = self.is(&w, WordClass::Noun);
            let adj = self.is(&w, WordClass::Adjective);
            let after_det = matches!(prev, Some(Tag::Det(_) | Tag::Poss | Tag::Possessor | Tag::Adj));
            let after_prep = matches!(prev, Some(Tag::Prep));
            let linking = prev == Some(Tag::Aux { copula: true })
                || (prev == Some(Tag::Verb) && i > 0 && self.is_linking(&words[i - 1].lower));

            let starts_np = if after_det || after_prep {
                true
            } else if !clause_has_verb {
                match &verb {
                    Some(VerbForm::Inflected(_)) => false,
                    Some(VerbForm::Base(_)) if prev.is_some_and(Tag::is_subjectlike) => false,
                    _ => noun || !adj,
                }
            } else if (linking && adj)
                || (matches!(verb, Some(VerbForm::Inflected(_)))
                    && (w.ends_with("ing") || w.ends_with("ed") || !w.ends_with('s'))
                    && matches!(prev, Some(Tag::Verb | Tag::Aux { .. } | Tag::Neg | Tag::Adv | Tag::To)))
                || (prev == Some(Tag::To) && verb.is_some())
            {
                false
            } else {
                noun || (!adj && verb.is_none())
            };

            if starts_np {
                let end = self.np_run(words, tags, i, clause_has_verb).max(i + 1);
                for (k, tag) in tags.iter_mut().enumerate().take(end).skip(i) {
                    let wk = words[k].lower.as_str();
                    *tag = if k + 1 < end && self.is(wk, WordClass::Adjective) {
                        Tag::Adj
                    } else {
                        Tag::Noun
                    };
                }
                i = end;
            } else {
                tags[i] = if adj && (linking || verb.is_none()) {
                    Tag::Adj
                } else if verb.is_some() {
                    clause_has_verb = true;
                    Tag::Verb
                } else if self.is(&w, WordClass::Adverb) {
                    Tag::Adv
                } else {
                    Tag::Adj
                };
                i += 1;
            }
        }
    }

    fn is_linking(&self, w: &str) -> bool {
        self.lexicon
            .verb_form(w)
            .is_some_and(|v| LINKING_VERBS.contains(&v.lemma()))
    }

    fn chunks(&self, words: &[Word], tags: &[Tag]) -> Vec<Chunk> {
        let mut chunks = Vec::new();
        let mut i = 0;
        while i < tags.len() {
            match tags[i] {
                Tag::Pron { .. } | Tag::Wh => {
                    let pronoun = plural_of(tags[i]);
                    chunks.push(Chunk {
                        nouns: vec![i],
                        det: None,
                        plural: pronoun.unwrap_or(false),
                        pronoun,
                        propn: false,
                        possessor: false,
                        first: i,
                    });
                    i += 1;
                }
                Tag::Possessor => {
                    chunks.push(Chunk {
                        nouns: vec![i],
                        det: None,
                        plural: false,
                        pronoun: None,
                        propn: true,
                        possessor: true,
                        first: i,
                    });
                    i += 1;
                }
                Tag::Det(_) | Tag::Poss | Tag::Adj | Tag::Noun | Tag::Propn => {
                    let first = i;
                    let mut det = None;
                    let mut definite_by_possessive = false;
                    while i < tags.len() && matches!(tags[i], Tag::Det(_) | Tag::Poss | Tag::Adj | Tag::Adv) {
                        match tags[i] {
                            Tag::Det(k) => det = det.or(Some(k)),
                            Tag::Poss => definite_by_possessive = true,
                            _ => {}
                        }
                        i += 1;
                    }
                    let mut nouns = Vec::new();
                    let mut propn = false;
                    while i < tags.len() && matches!(tags[i], Tag::Noun | Tag::Propn) {
                        propn |= tags[i] == Tag::Propn;
                        nouns.push(i);
                        i += 1;
                        if propn && tags.get(i) == Some(&Tag::Noun) {
                            break;
                        }
                    }
                    if nouns.is_empty() {
                        if i == first {
                            i += 1;
                        }
                        continue;
                    }
                    if definite_by_possessive || (i > first && first > 0 && tags[first - 1] == Tag::Possessor) {
                        det = det.or(Some(DetKind::Definite));
                    }
                    let head = *nouns.last().unwrap();
                    chunks.push(Chunk {
                        plural: !propn && self.is_plural(&words[head].lower),
                        nouns,
                        det,
                        pronoun: None,
                        propn,
                        possessor: false,
                        first,
                    });
                }
                _ => i += 1,
            }
        }
        chunks
    }

    fn class_of(&self, chunk: &Chunk, words: &[Word], tags: &[Tag]) -> String {
        if let Some(plural) = chunk.pronoun {
            let w = words[chunk.nouns[0]].lower.as_str();
            let next = tags.get(chunk.nouns[0] + 1).copied();
            if w == "it" && next == Some(Tag::Aux { copula: true }) {
                return "ONT::IMPRO".into();
            }
            return if plural { "ONT::PRO-SET" } else { "ONT::PRO" }.into();
        }
        if tags[chunk.nouns[0]] == Tag::Wh {
            return "ONT::WH-TERM".into();
        }
        let class = match (chunk.det, chunk.plural) {
            (Some(DetKind::Definite), false) => "ONT::THE",
            (Some(DetKind::Definite), true) => "ONT::THE-SET",
            (Some(DetKind::Indefinite), _) => "ONT::A",
            (Some(DetKind::Partitive), false) => "ONT::SM",
            (Some(DetKind::Partitive), true) => "ONT::INDEF-SET",
            (Some(DetKind::Quantifier), _) => "ONT::QUANTIFIER",
            (Some(DetKind::Number), _) => "ONT::INDEF-SET",
            (None, _) if chunk.propn => "ONT::THE",
            (None, true) => "ONT::INDEF-SET",
            (None, false) => "ONT::BARE",
        };
        class.into()
    }

    fn roles(&self, words: &[Word], tags: &[Tag], chunks: &[Chunk]) -> Vec<(String, usize)> {
        let mut out = Vec::with_capacity(chunks.len());
        let clause_of = clause_ids(words, tags);
        let first_verb_in_sentence = tags.iter().position(|t| matches!(t, Tag::Verb | Tag::Aux { .. }));
        for (c, chunk) in chunks.iter().enumerate() {
            let head = *chunk.nouns.last().unwrap();
            if chunk.possessor {
                let governor = chunks.get(c + 1).map_or(head, |n| *n.nouns.last().unwrap());
                out.push(("ASSOC-WITH".to_string(), governor));
                continue;
            }
            let clause = clause_of[chunk.first];
            let verb = main_verb(tags, &clause_of, clause);
            let mut k = chunk.first;
            while k > 0 && matches!(tags[k - 1], Tag::Adv | Tag::Neg) {
                k -= 1;
            }
            let prep = (k > 0 && tags[k - 1] == Tag::Prep).then(|| {
                let mut p = k - 1;
                while p > 0 && tags[p - 1] == Tag::Prep {
                    p -= 1;
                }
                p
            });
            if let Some(p) = prep {
                let lower = words[p].lower.as_str();
                let role = if RELATIONAL_PREPOSITIONS.contains(&lower) && k - 1 == p {
                    "ASSOC-WITH"
                } else if lower == "for" {
                    "BENEFICIARY"
                } else if (lower == "into" || lower == "onto") && chunk.det.is_none() && !chunk.propn {
                    "AFFECTED-RESULT"
                } else {
                    "GROUND"
                };
                let governor = if role == "ASSOC-WITH" && c > 0 {
                    *chunks[c - 1].nouns.last().unwrap()
                } else {
                    p
                };
                out.push((role.to_string(), governor));
                continue;
            }
            match verb {
                Some((v, copula)) if chunk.first < v => {
                    let passive = copula_before(tags, &clause_of, clause, v);
                    let lemma = self
                        .lexicon
                        .verb_form(&words[v].lower)
                        .map(|f| f.lemma().to_string())
                        .unwrap_or_default();
                    let role = if copula {
                        "FIGURE"
                    } else if passive {
                        "AFFECTED"
                    } else if EXPERIENCER_VERBS.contains(&lemma.as_str()) {
                        "EXPERIENCER"
                    } else {
                        "AGENT"
                    };
                    out.push((role.to_string(), v));
                }
                Some((v, copula)) => {
                    let next_is_object = chunks
                        .get(c + 1)
                        .is_some_and(|n| clause_of[n.first] == clause && n.first == head + 1 && n.pronoun.is_none());
                    let role = if copula {
                        "FORMAL"
                    } else if next_is_object {
                        "BENEFICIARY"
                    } else {
                        "AFFECTED"
                    };
                    out.push((role.to_string(), v));
                }
                None => {
                    let before_any_verb = first_verb_in_sentence.is_none_or(|v| chunk.first < v);
                    let role = if before_any_verb { "AGENT" } else { "AFFECTED" };
                    out.push((role.to_string(), first_verb_in_sentence.unwrap_or(head)));
                }
            }
        }
        out
    }
}

fn plural_of(tag: Tag) -> Option<bool> {
    match tag {
        Tag::Pron { plural } => Some(plural),
        _ => None,
    }
}

fn clause_ids(words: &[Word], tags: &[Tag]) -> Vec<usize> {
    let mut id = 0;
    tags.iter()
        .zip(words)
        .map(|(t, w)| {
            if *t == Tag::Conj || w.raw == "," || w.raw == ";" {
                id += 1;
            }
            id
        })
        .collect()
}

/// Main verb of a clause: the last verb of the first verb group, with a flag for a bare copula.
fn main_verb(tags: &[Tag], clause_of: &[usize], clause: usize) -> Option<(usize, bool)> {
    let start = tags
        .iter()
        .enumerate()
        .position(|(i, t)| clause_of[i] == clause && matches!(t, Tag::Verb | Tag::Aux { .. }))?;
    let mut v = start;
    let mut k = start + 1;
    while k < tags.len()
        && clause_of[k] == clause
        && matches!(tags[k], Tag::Verb | Tag::Aux { .. } | Tag::Neg | Tag::Adv)
    {
        if matches!(tags[k], Tag::Verb | Tag::Aux { .. }) {
            v = k;
        }
        k += 1;
    }
    Some((v, tags[v] == Tag::Aux { copula: true }))
}

fn copula_before(tags: &[Tag], clause_of: &[usize], clause: usize, verb: usize) -> bool {
    tags[verb] == Tag::Verb
        && (0..verb)
            .rev()
            .take_while(|&k| clause_of[k] == clause && matches!(tags[k], Tag::Aux { .. } | Tag::Neg | Tag::Adv))
            .any(|k| tags[k] == Tag::Aux { copula: true })
}

fn split_words(text: &str) -> Vec<Word<'_>> {
    let base = text.as_ptr() as usize;
    word_tokens(text)
        .into_iter()
        .map(|raw| {
            let start = raw.as_ptr() as usize - base;
            Word {
                raw,
                lower: raw.to_lowercase().replace('’', "'"),
                start,
                end: start + raw.len(),
            }
        })
        .collect()
}

impl SentenceParser for FallbackParser {
    fn parse_sentence(&self, text: &str, _index: usize) -> Result<SentenceParse> {
        let mut words = split_words(text);
        let first_word = words
            .iter()
            .position(|w| w.raw.chars().next().is_some_and(char::is_alphanumeric))
            .unwrap_or(0);
        let mut tags: Vec<Tag> = (0..words.len())
            .map(|i| self.lexical_tag(&words, i, first_word))
            .collect();
        self.resolve(&words, &mut tags);
        for (w, t) in words.iter_mut().zip(&tags) {
            if *t == Tag::Possessor {
                let cut = w.raw.len() - 2;
                w.end = w.start + cut;
                w.raw = &w.raw[..cut];
                w.lower.truncate(w.lower.len() - 2);
            }
        }
        let chunks = self.chunks(&words, &tags);
        let roles = self.roles(&words, &tags, &chunks);

        let mut plural_tokens = vec![false; words.len()];
        for c in &chunks {
            if c.plural {
                plural_tokens[*c.nouns.last().unwrap()] = true;
            }
        }
        let tokens = words
            .iter()
            .zip(&tags)
            .enumerate()
            .map(|(i, (w, t))| Token {
                text: w.raw.to_string(),
                lemma: self.lemma_of(&w.lower, *t),
                pos: t.penn(plural_tokens[i]).to_string(),
                start: w.start,
                end: w.end,
            })
            .collect();
        let mut terms = Vec::new();
        let mut edges = Vec::new();
        for (chunk, (role, governor)) in chunks.iter().zip(roles) {
            let class = self.class_of(chunk, &words, &tags);
            for &n in &chunk.nouns {
                terms.push(NounTerm {
                    token: n,
                    class: class.clone(),
                });
                edges.push(RoleEdge {
                    role: role.clone(),
                    governor,
                    dependent: n,
                });
            }
        }
        Ok(SentenceParse { tokens, terms, edges })
    }
}

impl FallbackParser {
    fn lemma_of(&self, lower: &str, tag: Tag) -> String {
        match tag {
            Tag::Noun => self.lexicon.noun_lemma(lower).unwrap_or_else(|| lower.to_string()),
            Tag::Verb => self
                .lexicon
                .verb_form(lower)
                .map_or_else(|| lower.to_string(), |v| v.lemma().to_string()),
            _ => lower.to_string(),
        }
    }
}

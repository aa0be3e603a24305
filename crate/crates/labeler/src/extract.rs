//! Participant extraction: noun-phrase detection, core-role filtering and a
//! physicality filter, each stage switchable for ablations.

use std::collections::HashSet;
use std::sync::Arc;

use procstory_core::text::normalize_surface;
use procstory_core::Participant;
use procstory_lexicon::{is_person, physicality, LexicalResource, Physicality, Roots};
use serde::{Deserialize, Serialize};

use crate::error::{Result, Warning};
use crate::parse::{OntologyConfig, ParseResult, SentenceParser};
use crate::wsd::SenseSelector;

/// A maximal run of adjacent noun terms sharing one role edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub sentence: usize,
    pub tokens: Vec<usize>,
    /// Normalized text span.
    pub surface: String,
    /// Space-joined token lemmas.
    pub lemma: String,
    pub class: String,
    pub role: Option<String>,
    pub governor: Option<usize>,
    pub proper: bool,
    pub pronoun: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionStages {
    pub core_roles: bool,
    pub physical: bool,
}

impl Default for ExtractionStages {
    fn default() -> Self {
        Self {
            core_roles: true,
            physical: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extraction {
    pub participants: Vec<Participant>,
    pub candidates: Vec<Candidate>,
    pub warnings: Vec<Warning>,
}

/// Groups accepted noun terms of every sentence into candidates.
pub fn detect_noun_phrases(parse: &ParseResult, sentences: &[String], ontology: &OntologyConfig) -> Vec<Candidate> {
    let mut out = Vec::new();
    for (s, sp) in parse.sentences.iter().enumerate() {
        let mut terms: Vec<_> = sp.terms.iter().filter(|t| ontology.accepts_class(&t.class)).collect();
        terms.sort_by_key(|t| t.token);
        let mut groups: Vec<Vec<&crate::parse::NounTerm>> = Vec::new();
        for term in terms {
            let edge = sp.edges_of(term.token).next();
            let joins = groups.last().is_some_and(|g| {
                let last = g.last().unwrap();
                let prev_edge = sp.edges_of(last.token).next();
                last.token + 1 == term.token
                    && last.class == term.class
                    && prev_edge.map(|e| (&e.role, e.governor)) == edge.map(|e| (&e.role, e.governor))
            });
            if joins {
                groups.last_mut().unwrap().push(term);
            } else {
                groups.push(vec![term]);
            }
        }
        let text = sentences.get(s).map(String::as_str).unwrap_or("");
        for group in groups {
            let tokens: Vec<usize> = group.iter().map(|t| t.token).collect();
            let first = &sp.tokens[tokens[0]];
            let last = &sp.tokens[*tokens.last().unwrap()];
            let span = text.get(first.start..last.end).unwrap_or(&first.text);
            let head = *tokens.last().unwrap();
            let edge = sp.edges_of(head).next();
            let class = group[0].class.clone();
            out.push(Candidate {
                sentence: s,
                surface: normalize_surface(span),
                lemma: tokens
                    .iter()
                    .map(|&t| sp.tokens[t].lemma.to_lowercase())
                    .collect::<Vec<_>>()
                    .join(" "),
                proper: tokens.iter().all(|&t| sp.tokens[t].pos.starts_with("NNP")),
                pronoun: class.starts_with("ONT::PRO")
                    || sp.tokens[head].pos.starts_with("PRP")
                    || sp.tokens[head].pos == "WP",
                role: edge.map(|e| e.role.clone()),
                governor: edge.map(|e| e.governor),
                class,
                tokens,
            });
        }
    }
    out
}

pub fn filter_core_roles(candidates: Vec<Candidate>, ontology: &OntologyConfig) -> Vec<Candidate> {
    candidates
        .into_iter()
        .filter(|c| c.role.as_deref().is_some_and(|r| ontology.is_core(r)))
        .collect()
}

/// Keeps candidates whose selected sense descends from the physical root. Candidates
/// with no sense are dropped with a warning.
pub fn filter_physical(
    candidates: Vec<Candidate>,
    sentences: &[String],
    selector: &dyn SenseSelector,
    lexicon: &dyn LexicalResource,
    roots: &Roots,
    warnings: &mut Vec<Warning>,
) -> Vec<Candidate> {
    candidates
        .into_iter()
        .filter(|c| {
            let sentence = sentences.get(c.sentence).map(String::as_str).unwrap_or("");
            match selector.select(c, sentence) {
                Some(sense) => physicality(lexicon, sense, roots) == Some(Physicality::Physical),
                None => {
                    warnings.push(Warning::new(
                        "extract",
                        format!("no sense for \"{}\" in sentence {}; dropped", c.surface, c.sentence),
                    ));
                    false
                }
            }
        })
        .collect()
}

/// Everything extraction needs besides the story.
#[derive(Clone)]
pub struct Extractor {
    pub parser: Arc<dyn SentenceParser>,
    pub selector: Arc<dyn SenseSelector>,
    pub lexicon: Arc<dyn LexicalResource>,
    pub roots: Roots,
    pub ontology: OntologyConfig,
    pub stages: ExtractionStages,
}

impl Extractor {
    pub fn extract(&self, sentences: &[String]) -> Result<Extraction> {
        self.ontology.validate()?;
        let parse = self.parser.parse_story(sentences)?;
        let mut warnings = Vec::new();
        let mut candidates = detect_noun_phrases(&parse, sentences, &self.ontology);
        if self.stages.core_roles {
            candidates = filter_core_roles(candidates, &self.ontology);
        }
        if self.stages.physical {
            candidates = filter_physical(
                candidates,
                sentences,
                self.selector.as_ref(),
                self.lexicon.as_ref(),
                &self.roots,
                &mut warnings,
            );
        }
        let mut seen = HashSet::new();
        let mut participants = Vec::new();
        for c in &candidates {
            if c.surface.is_empty() || !seen.insert(c.surface.clone()) {
                continue;
            }
            let sentence = &sentences[c.sentence];
            let human = self
                .selector
                .select(c, sentence)
                .is_some_and(|s| is_person(self.lexicon.as_ref(), s, &self.roots));
            participants.push(Participant::new(&c.surface, human));
        }
        Ok(Extraction {
            participants,
            candidates,
            warnings,
        })
    }
}

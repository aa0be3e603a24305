//! Parser output: tokens, ontology-tagged noun terms and semantic role edges.

use serde::{Deserialize, Serialize};

use crate::error::{LabelerError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub lemma: String,
    /// Penn-style tag; `NNP` marks proper nouns.
    pub pos: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NounTerm {
    pub token: usize,
    /// Ontology class such as `ONT::THE`.
    pub class: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RoleEdge {
    pub role: String,
    pub governor: usize,
    pub dependent: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceParse {
    pub tokens: Vec<Token>,
    pub terms: Vec<NounTerm>,
    pub edges: Vec<RoleEdge>,
}

impl SentenceParse {
    /// Every term and edge must point at a token of this sentence.
    pub fn check(&self, sentence: usize) -> Result<()> {
        let n = self.tokens.len();
        let bad = |message: String| LabelerError::Parse { sentence, message };
        if let Some(t) = self.terms.iter().find(|t| t.token >= n) {
            return Err(bad(format!("term token {} outside {n} tokens", t.token)));
        }
        if let Some(e) = self.edges.iter().find(|e| e.governor >= n || e.dependent >= n) {
            return Err(bad(format!(
                "edge {}({}, {}) outside {n} tokens",
                e.role, e.governor, e.dependent
            )));
        }
        Ok(())
    }

    pub fn edges_of(&self, token: usize) -> impl Iterator<Item = &RoleEdge> {
        self.edges.iter().filter(move |e| e.dependent == token)
    }
}

/// Per-sentence parses of one story.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseResult {
    pub sentences: Vec<SentenceParse>,
}

pub trait SentenceParser: Send + Sync {
    fn parse_sentence(&self, text: &str, index: usize) -> Result<SentenceParse>;

    fn parse_story(&self, sentences: &[String]) -> Result<ParseResult> {
        let sentences = sentences
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let parse = self.parse_sentence(s, i)?;
                parse.check(i)?;
                Ok(parse)
            })
            .collect::<Result<_>>()?;
        Ok(ParseResult { sentences })
    }
}

pub const DEFAULT_CLASSES: [&str; 11] = [
    "ONT::THE",
    "ONT::THE-SET",
    "ONT::A",
    "ONT::INDEF-SET",
    "ONT::SM",
    "ONT::PRO",
    "ONT::PRO-SET",
    "ONT::BARE",
    "ONT::QUANTIFIER",
    "ONT::WH-TERM",
    "ONT::WH-TERM-SET",
];

pub const DEFAULT_CORE_ROLES: [&str; 9] = [
    "AGENT",
    "AFFECTED",
    "FIGURE",
    "GROUND",
    "AFFECTED-RESULT",
    "BENEFICIARY",
    "NEUTRAL",
    "EXPERIENCER",
    "FORMAL",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OntologyConfig {
    #[serde(default = "default_classes")]
    pub classes: Vec<String>,
    #[serde(default = "default_core_roles")]
    pub core_roles: Vec<String>,
}

fn default_classes() -> Vec<String> {
    DEFAULT_CLASSES.iter().map(|s| s.to_string()).collect()
}

fn default_core_roles() -> Vec<String> {
    DEFAULT_CORE_ROLES.iter().map(|s| s.to_string()).collect()
}

impl Default for OntologyConfig {
    fn default() -> Self {
        Self {
            classes: default_classes(),
            core_roles: default_core_roles(),
        }
    }
}

impl OntologyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() || self.core_roles.is_empty() {
            return Err(LabelerError::Config(
                "ontology classes and core roles must both be non-empty".into(),
            ));
        }
        Ok(())
    }

    pub fn accepts_class(&self, class: &str) -> bool {
        self.classes.iter().any(|c| c == class)
    }

    pub fn is_core(&self, role: &str) -> bool {
        self.core_roles.iter().any(|r| r == role)
    }
}

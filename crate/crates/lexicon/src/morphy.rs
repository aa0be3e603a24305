//! Suffix-detachment lemmatization in the style of WordNet's morphy.

use std::collections::HashMap;

/// Open word classes with their own detachment rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WordClass {
    Noun,
    Verb,
    Adjective,
    Adverb,
}

const NOUN_RULES: &[(&str, &str)] = &[
    ("s", ""),
    ("ses", "s"),
    ("xes", "x"),
    ("zes", "z"),
    ("ches", "ch"),
    ("shes", "sh"),
    ("men", "man"),
    ("ies", "y"),
];

const VERB_RULES: &[(&str, &str)] = &[
    ("s", ""),
    ("ies", "y"),
    ("es", "e"),
    ("es", ""),
    ("ed", "e"),
    ("ed", ""),
    ("ing", "e"),
    ("ing", ""),
];

const ADJ_RULES: &[(&str, &str)] = &[("er", ""), ("est", ""), ("er", "e"), ("est", "e")];

pub fn rules(class: WordClass) -> &'static [(&'static str, &'static str)] {
    match class {
        WordClass::Noun => NOUN_RULES,
        WordClass::Verb => VERB_RULES,
        WordClass::Adjective => ADJ_RULES,
        WordClass::Adverb => &[],
    }
}

/// Candidate base forms of `word`, in lookup order: the word itself, then exception
/// entries if any, otherwise every suffix-rule rewrite. Candidates are not checked
/// against an index; callers filter them.
pub fn base_forms(word: &str, class: WordClass, exceptions: &HashMap<String, Vec<String>>) -> Vec<String> {
    let mut out = vec![word.to_string()];
    if let Some(bases) = exceptions.get(word) {
        for b in bases {
            push_unique(&mut out, b.clone());
        }
        return out;
    }
    for (suffix, replacement) in rules(class) {
        if let Some(stem) = word.strip_suffix(suffix) {
            if !stem.is_empty() {
                push_unique(&mut out, format!("{stem}{replacement}"));
            }
        }
    }
    out
}

fn push_unique(out: &mut Vec<String>, s: String) {
    if !out.contains(&s) {
        out.push(s);
    }
}

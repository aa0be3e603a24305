//! Replace non-human participants by the lemma of their first sense's direct hypernym.

use std::collections::{BTreeMap, BTreeSet};

use procstory_core::text::{find_word_spans, normalize_surface};
use procstory_core::{AnnotatedStory, StoryPair};
use procstory_labeler::Warning;
use procstory_lexicon::{direct_hypernym_lemma, phrase_is_person, LexicalResource, Roots};

#[derive(Debug, Clone, PartialEq)]
pub struct Abstraction {
    pub pair: StoryPair,
    /// Original surface to its replacement, for every participant that was renamed.
    pub renamed: BTreeMap<String, String>,
    pub warnings: Vec<Warning>,
}

/// Renames every non-human participant in both stories, in sentences and annotation
/// records. A participant keeps its surface (with a warning) when it has no hypernym or
/// when the hypernym would collide with another participant of the pair.
pub fn abstract_participants(pair: &StoryPair, resource: &dyn LexicalResource, roots: &Roots) -> Abstraction {
    let mut humans = BTreeSet::new();
    let mut surfaces = BTreeSet::new();
    for p in pair.plausible.participants.iter().chain(&pair.implausible.participants) {
        surfaces.insert(p.surface.clone());
        if p.is_human || phrase_is_person(resource, &p.surface, roots) {
            humans.insert(p.surface.clone());
        }
    }

    let mut renamed = BTreeMap::new();
    let mut taken: BTreeSet<String> = surfaces.clone();
    let mut warnings = Vec::new();
    for surface in surfaces.iter().filter(|s| !humans.contains(*s)) {
        let Some(lemma) = direct_hypernym_lemma(resource, surface) else {
            warnings.push(Warning::new(
                "abstraction",
                format!("no hypernym for {surface:?}; left unchanged"),
            ));
            continue;
        };
        let target = normalize_surface(&lemma);
        if taken.contains(&target) {
            warnings.push(Warning::new(
                "abstraction",
                format!("hypernym {target:?} of {surface:?} collides with another participant; left unchanged"),
            ));
            continue;
        }
        taken.insert(target.clone());
        renamed.insert(surface.clone(), target);
    }

    let out = StoryPair {
        pair_id: pair.pair_id.clone(),
        plausible: rename_story(&pair.plausible, &renamed),
        implausible: rename_story(&pair.implausible, &renamed),
    };
    Abstraction {
        pair: out,
        renamed,
        warnings,
    }
}

fn rename_story(story: &AnnotatedStory, renamed: &BTreeMap<String, String>) -> AnnotatedStory {
    let mut out = story.clone();
    let surfaces: Vec<&str> = story.participants.iter().map(|p| p.surface.as_str()).collect();
    out.sentences = story
        .sentences
        .iter()
        .map(|s| rename_sentence(s, &surfaces, renamed))
        .collect();
    for p in &mut out.participants {
        if let Some(t) = renamed.get(&p.surface) {
            p.surface = t.clone();
        }
    }
    for a in &mut out.annotations {
        if let Some(t) = renamed.get(&a.participant) {
            a.participant = t.clone();
        }
    }
    out.recompute_mentions();
    out
}

/// Longer participant phrases claim their text first, so "dog" inside "dog cage" is only
/// rewritten as part of the longer phrase.
fn rename_sentence(sentence: &str, surfaces: &[&str], renamed: &BTreeMap<String, String>) -> String {
    let mut spans: Vec<(usize, usize, &str)> = surfaces
        .iter()
        .flat_map(|s| find_word_spans(sentence, s).into_iter().map(move |(a, b)| (a, b, *s)))
        .collect();
    spans.sort_by(|x, y| (y.1 - y.0).cmp(&(x.1 - x.0)).then(x.0.cmp(&y.0)));
    let mut kept: Vec<(usize, usize, &str)> = Vec::new();
    for span in spans {
        if kept.iter().all(|k| span.1 <= k.0 || span.0 >= k.1) {
            kept.push(span);
        }
    }
    kept.sort_by_key(|k| std::cmp::Reverse(k.0));
    let mut text = sentence.to_string();
    for (start, end, surface) in kept {
        if let Some(target) = renamed.get(surface) {
            let capital = text[start..end].chars().next().is_some_and(char::is_uppercase);
            text.replace_range(start..end, &match_case(target, capital));
        }
    }
    text
}

fn match_case(word: &str, capital: bool) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) if capital => c.to_uppercase().chain(chars).collect(),
        _ => word.to_string(),
    }
}

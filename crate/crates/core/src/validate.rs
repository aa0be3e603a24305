use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use crate::schema::{AttributeSchema, StateSlot};
use crate::story::{AnnotatedStory, Plausibility, StoryPair};

/// One broken invariant, located by a dotted field path such as `implausible.conflict`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

pub fn validate_story_pair(pair: &StoryPair, schema: &AttributeSchema) -> Vec<Violation> {
    validate_story_pair_with(pair, schema, true)
}

/// As [`validate_story_pair`]; with `require_conflict` off an implausible story may lack a
/// conflict pair (automatically labeled external stories).
pub fn validate_story_pair_with(pair: &StoryPair, schema: &AttributeSchema, require_conflict: bool) -> Vec<Violation> {
    let mut out = Vec::new();
    if pair.pair_id.trim().is_empty() {
        out.push(Violation::new("pair_id", "pair id must be non-empty"));
    }
    out.extend(validate_story(&pair.plausible, schema, "plausible"));
    out.extend(validate_story(&pair.implausible, schema, "implausible"));

    if pair.plausible.label != Some(Plausibility::Plausible) {
        out.push(Violation::new("plausible.label", "plausible story must carry label 1"));
    }
    if pair.implausible.label != Some(Plausibility::Implausible) {
        out.push(Violation::new(
            "implausible.label",
            "implausible story must carry label 0",
        ));
    }
    if require_conflict && pair.implausible.conflict.is_none() {
        out.push(Violation::new("implausible.conflict", "conflict pair required"));
    }
    out
}

/// Checks every single-story invariant. `prefix` names the story in violation paths.
pub fn validate_story(story: &AnnotatedStory, schema: &AttributeSchema, prefix: &str) -> Vec<Violation> {
    let mut out = Vec::new();
    let field = |name: &str| format!("{prefix}.{name}");
    let n = story.sentences.len();

    if n == 0 {
        out.push(Violation::new(field("sentences"), "story has no sentences"));
    }
    for (i, s) in story.sentences.iter().enumerate() {
        if s.trim().is_empty() {
            out.push(Violation::new(format!("{prefix}.sentences[{i}]"), "empty sentence"));
        }
    }

    let mut surfaces = HashSet::new();
    for (i, p) in story.participants.iter().enumerate() {
        let path = format!("{prefix}.participants[{i}]");
        if p.surface.trim().is_empty() {
            out.push(Violation::new(path.clone(), "empty participant surface"));
        }
        if p.surface != crate::text::normalize_surface(&p.surface) {
            out.push(Violation::new(
                path.clone(),
                format!("surface {:?} is not normalized", p.surface),
            ));
        }
        if !surfaces.insert(p.surface.as_str()) {
            out.push(Violation::new(
                path.clone(),
                format!("duplicate participant {:?}", p.surface),
            ));
        }
        for m in &p.mentions {
            let ok = story
                .sentences
                .get(m.sentence)
                .and_then(|s| s.get(m.start..m.end))
                .is_some_and(|slice| slice.to_lowercase() == p.surface);
            if !ok {
                out.push(Violation::new(
                    path.clone(),
                    format!("mention span {m:?} does not index {:?}", p.surface),
                ));
            }
        }
    }

    let mut triples = HashSet::new();
    for (i, a) in story.annotations.iter().enumerate() {
        let path = format!("{prefix}.annotations[{i}]");
        if !surfaces.contains(a.participant.as_str()) {
            out.push(Violation::new(
                path.clone(),
                format!("annotation references unlisted participant {:?}", a.participant),
            ));
        }
        if a.step >= n {
            out.push(Violation::new(
                path.clone(),
                format!("step {} out of range for {n} sentences", a.step),
            ));
        }
        match schema.attribute_index(&a.attribute) {
            None => out.push(Violation::new(
                path.clone(),
                format!("unknown attribute {:?}", a.attribute),
            )),
            Some(_) => {
                for (slot, label) in [
                    (StateSlot::Precondition, &a.precondition),
                    (StateSlot::Effect, &a.effect),
                ] {
                    if schema.label_index(&a.attribute, slot, label).is_none() {
                        out.push(Violation::new(
                            path.clone(),
                            format!("label {label:?} not in {:?} {slot:?} space", a.attribute),
                        ));
                    }
                }
            }
        }
        if !triples.insert((a.participant.as_str(), a.step, a.attribute.as_str())) {
            out.push(Violation::new(
                path,
                format!(
                    "duplicate annotation for ({:?}, {}, {:?})",
                    a.participant, a.step, a.attribute
                ),
            ));
        }
    }

    if let Some(c) = story.conflict {
        if c.first >= c.second {
            out.push(Violation::new(field("conflict"), "first < second required"));
        }
        if c.first >= n || c.second >= n {
            out.push(Violation::new(
                field("conflict"),
                format!("conflict {c:?} out of range for {n} sentences"),
            ));
        }
        if story.label == Some(Plausibility::Plausible) {
            out.push(Violation::new(
                field("conflict"),
                "plausible story cannot carry a conflict pair",
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::story::Plausibility::*;

    fn valid_pair() -> StoryPair {
        let plausible = AnnotatedStory::from_sentences(&["Ann took out the notebook.", "Ann wrote in the notebook."])
            .with_participant("Ann", true)
            .with_participant("notebook", false)
            .with_annotation("notebook", 0, "location", "irrelevant", "moved somewhere new")
            .with_label(Plausible);
        let implausible = AnnotatedStory::from_sentences(&["Ann put away the notebook.", "Ann wrote in the notebook."])
            .with_participant("Ann", true)
            .with_participant("notebook", false)
            .with_conflict(0, 1)
            .with_label(Implausible);
        StoryPair {
            pair_id: "p1".into(),
            plausible,
            implausible,
        }
    }

    #[test]
    fn valid_pair_has_no_violations() {
        assert_eq!(
            validate_story_pair(&valid_pair(), &AttributeSchema::trip_default()),
            vec![]
        );
    }

    #[test]
    fn reversed_conflict_is_reported() {
        let mut pair = valid_pair();
        pair.implausible.conflict = Some((1, 0).into());
        let v = validate_story_pair(&pair, &AttributeSchema::trip_default());
        assert!(v.iter().any(|v| v.message == "first < second required"), "{v:?}");
    }

    #[test]
    fn unlisted_participant_is_named() {
        let mut pair = valid_pair();
        pair.plausible = pair.plausible.with_annotation("ghost", 1, "exist", "true", "false");
        let v = validate_story_pair(&pair, &AttributeSchema::trip_default());
        assert!(v.iter().any(|v| v.message.contains("\"ghost\"")), "{v:?}");
    }

    #[test]
    fn missing_conflict_is_required() {
        let mut pair = valid_pair();
        pair.implausible.conflict = None;
        let v = validate_story_pair(&pair, &AttributeSchema::trip_default());
        assert!(v.iter().any(|v| v.message == "conflict pair required"));
        assert!(validate_story_pair_with(&pair, &AttributeSchema::trip_default(), false).is_empty());
    }

    #[test]
    fn label_outside_space_and_duplicates() {
        let mut pair = valid_pair();
        pair.plausible = pair
            .plausible
            .with_annotation("notebook", 1, "wet", "soggy", "irrelevant")
            .with_annotation("notebook", 1, "wet", "true", "irrelevant");
        let v = validate_story_pair(&pair, &AttributeSchema::trip_default());
        assert!(v.iter().any(|v| v.message.contains("\"soggy\"")));
        assert!(v.iter().any(|v| v.message.contains("duplicate annotation")));
    }

    #[test]
    fn conflict_on_plausible_story_is_rejected() {
        let mut pair = valid_pair();
        pair.plausible.conflict = Some((0, 1).into());
        let v = validate_story_pair(&pair, &AttributeSchema::trip_default());
        assert!(v.iter().any(|v| v.field == "plausible.conflict"));
    }
}

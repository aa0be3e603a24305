//! Automatic labeling of unannotated external story pairs.

use std::fs;
use std::path::Path;

use procstory_core::{validate_story_pair_with, AnnotatedStory, Plausibility, StoryPair};
use procstory_labeler::{Labeler, LabelerError, Warning};
use serde::{Deserialize, Serialize};

use crate::error::{AugmentError, Result};
use crate::sampling::UNTYPED;

/// One raw input record. `id` is optional; records without one are named by position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawPair {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub sentences_a: Vec<String>,
    pub sentences_b: Vec<String>,
    /// `"a"` or `"b"`.
    pub plausible: String,
    #[serde(rename = "type", default)]
    pub story_type: Option<String>,
}

/// A story pair plus its external story type, serialized as the pair's fields and `"type"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedPair {
    #[serde(flatten)]
    pub pair: StoryPair,
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    pub story_type: Option<String>,
}

impl TaggedPair {
    pub fn stratum(&self) -> &str {
        self.story_type.as_deref().unwrap_or(UNTYPED)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Dropped {
    pub pair_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub pairs: Vec<TaggedPair>,
    pub dropped: Vec<Dropped>,
    pub warnings: Vec<Warning>,
}

/// Reads raw JSONL. Lines that do not parse are returned as dropped records named
/// `line-<n>` (1-based); parsed records without an id receive that name too.
pub fn read_raw_pairs(path: impl AsRef<Path>) -> Result<(Vec<RawPair>, Vec<Dropped>)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| AugmentError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut pairs = Vec::new();
    let mut dropped = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let name = format!("line-{}", i + 1);
        match serde_json::from_str::<RawPair>(line) {
            Ok(mut raw) => {
                raw.id.get_or_insert(name);
                pairs.push(raw);
            }
            Err(e) => dropped.push(Dropped {
                pair_id: name,
                reason: format!("malformed record: {e}"),
            }),
        }
    }
    Ok((pairs, dropped))
}

/// Labels both stories of every raw pair. Records that fail checks or labeling are dropped
/// with a reason; an unreachable completion service aborts the whole run. Implausible
/// stories carry no conflict pair.
pub fn ingest_external(raw: &[RawPair], labeler: &Labeler) -> Result<Ingested> {
    let mut out = Ingested::default();
    for (i, r) in raw.iter().enumerate() {
        let pair_id = r.id.clone().unwrap_or_else(|| format!("ext-{i}"));
        match ingest_one(r, &pair_id, labeler, &mut out.warnings) {
            Ok(pair) => out.pairs.push(TaggedPair {
                pair,
                story_type: r.story_type.clone(),
            }),
            Err(Reject::Unavailable(e)) => return Err(AugmentError::LabelerUnavailable(e)),
            Err(Reject::Drop(reason)) => out.dropped.push(Dropped { pair_id, reason }),
        }
    }
    Ok(out)
}

enum Reject {
    Unavailable(LabelerError),
    Drop(String),
}

fn check(r: &RawPair) -> Option<String> {
    if r.sentences_a.is_empty() || r.sentences_b.is_empty() {
        return Some("story without sentences".into());
    }
    if r.sentences_a.iter().chain(&r.sentences_b).any(|s| s.trim().is_empty()) {
        return Some("empty sentence".into());
    }
    if r.plausible != "a" && r.plausible != "b" {
        return Some(format!("plausible must be \"a\" or \"b\", got {:?}", r.plausible));
    }
    None
}

fn ingest_one(r: &RawPair, pair_id: &str, labeler: &Labeler, warnings: &mut Vec<Warning>) -> Result<StoryPair, Reject> {
    if let Some(reason) = check(r) {
        return Err(Reject::Drop(reason));
    }
    let (good, bad) = if r.plausible == "a" {
        (&r.sentences_a, &r.sentences_b)
    } else {
        (&r.sentences_b, &r.sentences_a)
    };
    let mut label = |sentences: &[String], p: Plausibility| -> Result<AnnotatedStory, Reject> {
        let labeled = labeler.label_story(sentences).map_err(|e| match e {
            LabelerError::Service(_) => Reject::Unavailable(e),
            other => Reject::Drop(format!("labeling failed: {other}")),
        })?;
        warnings.extend(
            labeled
                .warnings
                .into_iter()
                .map(|w| Warning::new(&w.stage, format!("{pair_id}: {}", w.message))),
        );
        Ok(labeled.story.with_label(p))
    };
    let pair = StoryPair {
        pair_id: pair_id.to_string(),
        plausible: label(good, Plausibility::Plausible)?,
        implausible: label(bad, Plausibility::Implausible)?,
    };
    let violations = validate_story_pair_with(&pair, &labeler.schema, false);
    if !violations.is_empty() {
        let msg: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(Reject::Drop(format!("invalid labeled pair: {}", msg.join("; "))));
    }
    Ok(pair)
}

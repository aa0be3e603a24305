//! Demonstration retrieval by mean cosine similarity of story and participant embeddings.

use procstory_core::text::{normalize_surface, word_tokens};
use procstory_core::AnnotatedStory;
use serde::{Deserialize, Serialize};

use crate::error::{LabelerError, Result};
use crate::prompt::Demonstration;

pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Vec<f64>;
}

/// Signed feature hashing of lowercase words and character trigrams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashingEmbedder {
    pub dim: usize,
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self { dim: 256 }
    }
}

fn fnv1a(bytes: &[u8], seed: u64) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl HashingEmbedder {
    fn add(&self, v: &mut [f64], feature: &str, weight: f64) {
        let h = fnv1a(feature.as_bytes(), 0);
        let bucket = (h % self.dim as u64) as usize;
        let sign = if (h >> 63) == 0 { 1.0 } else { -1.0 };
        v[bucket] += sign * weight;
    }
}

impl Embedder for HashingEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim.max(1)];
        for word in word_tokens(&text.to_lowercase()) {
            if !word.chars().any(char::is_alphanumeric) {
                continue;
            }
            self.add(&mut v, &format!("w:{word}"), 1.0);
            let padded: Vec<char> = format!("<{word}>").chars().collect();
            for tri in padded.windows(3) {
                self.add(&mut v, &format!("c:{}", tri.iter().collect::<String>()), 0.5);
            }
        }
        v
    }
}

/// Cosine similarity; zero when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub story: usize,
    /// `None` for story-level entries used by active detection.
    pub participant: Option<String>,
    pub story_embedding: Vec<f64>,
    pub participant_embedding: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalQuery {
    pub story_embedding: Vec<f64>,
    pub participant_embedding: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ranked {
    pub index: usize,
    pub score: f64,
}

pub fn score(query: &RetrievalQuery, entry: &PoolEntry) -> f64 {
    0.5 * (cosine(&query.story_embedding, &entry.story_embedding)
        + cosine(&query.participant_embedding, &entry.participant_embedding))
}

/// Top-`k` entries by score, ties broken by lower index. `k` is clamped to the entry count.
pub fn retrieve_demonstrations(query: &RetrievalQuery, entries: &[PoolEntry], k: usize) -> Result<Vec<Ranked>> {
    if entries.is_empty() {
        return Err(LabelerError::Pool("cannot retrieve from an empty pool".into()));
    }
    let mut ranked: Vec<Ranked> = entries
        .iter()
        .enumerate()
        .map(|(index, e)| Ranked {
            index,
            score: score(query, e),
        })
        .collect();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.index.cmp(&b.index)));
    ranked.truncate(k.min(entries.len()));
    Ok(ranked)
}

pub fn story_text(story: &AnnotatedStory) -> String {
    story.sentences.join(" ")
}

pub fn participants_text(story: &AnnotatedStory) -> String {
    story
        .participants
        .iter()
        .map(|p| normalize_surface(&p.surface))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Annotated in-domain stories with story-level and per-participant entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemonstrationPool {
    stories: Vec<AnnotatedStory>,
    story_entries: Vec<PoolEntry>,
    participant_entries: Vec<PoolEntry>,
    dim: usize,
}

impl DemonstrationPool {
    pub fn build(stories: Vec<AnnotatedStory>, embedder: &dyn Embedder) -> Result<Self> {
        let mut story_entries = Vec::new();
        let mut participant_entries = Vec::new();
        for (i, story) in stories.iter().enumerate() {
            let story_embedding = embedder.embed(&story_text(story));
            story_entries.push(PoolEntry {
                story: i,
                participant: None,
                story_embedding: story_embedding.clone(),
                participant_embedding: embedder.embed(&participants_text(story)),
            });
            for p in &story.participants {
                participant_entries.push(PoolEntry {
                    story: i,
                    participant: Some(p.surface.clone()),
                    story_embedding: story_embedding.clone(),
                    participant_embedding: embedder.embed(&p.surface),
                });
            }
        }
        Self::from_entries(stories, story_entries, participant_entries)
    }

    pub fn from_entries(
        stories: Vec<AnnotatedStory>,
        story_entries: Vec<PoolEntry>,
        participant_entries: Vec<PoolEntry>,
    ) -> Result<Self> {
        if stories.is_empty() {
            return Err(LabelerError::Pool("no stories".into()));
        }
        let dim = story_entries
            .first()
            .or(participant_entries.first())
            .map_or(0, |e| e.story_embedding.len());
        for e in story_entries.iter().chain(&participant_entries) {
            if e.story_embedding.len() != dim || e.participant_embedding.len() != dim {
                return Err(LabelerError::Pool(format!(
                    "entry for story {} has embedding dimension {}/{}, expected {dim}",
                    e.story,
                    e.story_embedding.len(),
                    e.participant_embedding.len()
                )));
            }
            if e.story >= stories.len() {
                return Err(LabelerError::Pool(format!(
                    "entry references missing story {}",
                    e.story
                )));
            }
        }
        Ok(Self {
            stories,
            story_entries,
            participant_entries,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn stories(&self) -> &[AnnotatedStory] {
        &self.stories
    }

    pub fn story_entries(&self) -> &[PoolEntry] {
        &self.story_entries
    }

    pub fn participant_entries(&self) -> &[PoolEntry] {
        &self.participant_entries
    }

    pub fn demonstration(&self, entry: &PoolEntry) -> Demonstration {
        Demonstration {
            story: self.stories[entry.story].clone(),
            participant: entry.participant.clone(),
        }
    }

    /// Story-level demonstrations for active detection.
    pub fn for_story(&self, query: &RetrievalQuery, k: usize) -> Result<Vec<Demonstration>> {
        if k == 0 || self.story_entries.is_empty() {
            return Ok(Vec::new());
        }
        let ranked = retrieve_demonstrations(query, &self.story_entries, k)?;
        Ok(ranked
            .iter()
            .map(|r| self.demonstration(&self.story_entries[r.index]))
            .collect())
    }

    /// Participant-level demonstrations for state annotation.
    pub fn for_participant(&self, query: &RetrievalQuery, k: usize) -> Result<Vec<Demonstration>> {
        if k == 0 || self.participant_entries.is_empty() {
            return Ok(Vec::new());
        }
        let ranked = retrieve_demonstrations(query, &self.participant_entries, k)?;
        Ok(ranked
            .iter()
            .map(|r| self.demonstration(&self.participant_entries[r.index]))
            .collect())
    }
}

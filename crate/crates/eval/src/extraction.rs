//! Micro-averaged participant extraction metrics.

use std::collections::BTreeSet;

use procstory_core::text::normalize_surface;
use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionMetrics {
    pub precision: f64,
    pub recall: f64,
}

/// Per-story surface sets are normalized and deduplicated; counts are pooled over stories.
/// A zero denominator gives 0.
pub fn score_extraction<S: AsRef<str>>(predicted: &[Vec<S>], gold: &[Vec<S>]) -> Result<ExtractionMetrics> {
    if predicted.len() != gold.len() {
        return Err(EvalError::Misaligned(format!(
            "{} predicted stories for {} gold stories",
            predicted.len(),
            gold.len()
        )));
    }
    let set = |v: &Vec<S>| -> BTreeSet<String> { v.iter().map(|s| normalize_surface(s.as_ref())).collect() };
    let (mut tp, mut np, mut ng) = (0usize, 0usize, 0usize);
    for (p, g) in predicted.iter().zip(gold) {
        let (p, g) = (set(p), set(g));
        tp += p.intersection(&g).count();
        np += p.len();
        ng += g.len();
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    Ok(ExtractionMetrics {
        precision: ratio(tp, np),
        recall: ratio(tp, ng),
    })
}

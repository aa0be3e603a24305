//! JSON and fixed-width text reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};
use crate::extraction::ExtractionMetrics;
use crate::tiered::TieredMetrics;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyMetrics {
    pub accuracy: f64,
    pub instances: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Metrics {
    Tiered(TieredMetrics),
    Extraction(ExtractionMetrics),
    Accuracy(AccuracyMetrics),
}

const COLUMNS: [&str; 5] = ["accuracy", "consistency", "verifiability", "precision", "recall"];

impl Metrics {
    fn cells(&self) -> [Option<f64>; 5] {
        match *self {
            Metrics::Tiered(t) => [Some(t.accuracy), Some(t.consistency), Some(t.verifiability), None, None],
            Metrics::Extraction(e) => [None, None, None, Some(e.precision), Some(e.recall)],
            Metrics::Accuracy(a) => [Some(a.accuracy), None, None, None, None],
        }
    }
}

/// One row per entry, percentages with one decimal, `-` where a metric does not apply.
pub fn render_table(metrics: &BTreeMap<String, Metrics>) -> Result<String> {
    if metrics.is_empty() {
        return Err(EvalError::NothingToReport);
    }
    let width = metrics.keys().map(|k| k.chars().count()).max().unwrap_or(0).max(4);
    let mut out = format!("{:<width$}", "name");
    for c in COLUMNS {
        let _ = write!(out, "  {c:>13}");
    }
    out.push('\n');
    for (name, m) in metrics {
        let _ = write!(out, "{name:<width$}");
        for cell in m.cells() {
            let text = cell.map_or_else(|| "-".to_string(), |v| format!("{:.1}", v * 100.0));
            let _ = write!(out, "  {text:>13}");
        }
        out.push('\n');
    }
    Ok(out)
}

/// Writes pretty JSON to `path` and the text table next to it with a `.txt` extension.
pub fn emit_report(metrics: &BTreeMap<String, Metrics>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let table = render_table(metrics)?;
    let mut json = serde_json::to_string_pretty(metrics)?;
    json.push('\n');
    let write = |p: &Path, text: &str| {
        fs::write(p, text).map_err(|source| EvalError::Io {
            path: p.to_path_buf(),
            source,
        })
    };
    write(path, &json)?;
    write(&path.with_extension("txt"), &table)
}

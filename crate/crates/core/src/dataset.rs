//! JSON Lines persistence, one record per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{io_err, CoreError, Result};
use crate::schema::AttributeSchema;
use crate::story::StoryPair;
use crate::validate::validate_story_pair_with;

/// Reads every non-blank line of `path` as a `T`. Line numbers in errors are 1-based.
pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|source| CoreError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(records: &[T], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn load_dataset(path: impl AsRef<Path>, schema: &AttributeSchema) -> Result<Vec<StoryPair>> {
    load_dataset_with(path, schema, true)
}

/// Loads and validates; `require_conflict` off accepts implausible stories without a conflict pair.
pub fn load_dataset_with(
    path: impl AsRef<Path>,
    schema: &AttributeSchema,
    require_conflict: bool,
) -> Result<Vec<StoryPair>> {
    let mut pairs: Vec<StoryPair> = read_jsonl(path)?;
    for pair in &mut pairs {
        pair.refresh();
        let violations = validate_story_pair_with(pair, schema, require_conflict);
        if !violations.is_empty() {
            return Err(CoreError::Validation {
                pair_id: pair.pair_id.clone(),
                violations,
            });
        }
    }
    Ok(pairs)
}

pub fn save_dataset(pairs: &[StoryPair], path: impl AsRef<Path>) -> Result<()> {
    write_jsonl(pairs, path)
}

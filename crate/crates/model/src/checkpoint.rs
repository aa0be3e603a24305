//! Checkpoint directories: `manifest.json`, `weights.safetensors`, `schema.json` and,
//! for vocabulary-backed tokenizers, the vocabulary file.

use std::fs;
use std::path::{Path, PathBuf};

use procstory_core::AttributeSchema;
use serde::{Deserialize, Serialize};

use crate::encoder::EncoderSpec;
use crate::error::{ModelError, Result};
use crate::model::{ModelConfig, StoryMode, TieredModel};
use crate::tokenizer::TokenizerSpec;

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const WEIGHTS_FILE: &str = "weights.safetensors";
pub const SCHEMA_FILE: &str = "schema.json";
const VOCAB_FILE: &str = "vocab.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub schema_hash: String,
    pub hidden_size: usize,
    pub attribute_count: usize,
    pub mode: StoryMode,
    pub tie_rule: String,
    pub model: ModelConfig,
    pub encoder: EncoderSpec,
    pub tokenizer: TokenizerSpec,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ModelError + '_ {
    move |source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| ModelError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| ModelError::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn save_checkpoint(model: &TieredModel, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let encoder = model
        .encoder()
        .spec()
        .ok_or_else(|| ModelError::Config("encoder has no rebuildable description".into()))?;
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    let mut tokenizer = model.tokenizer().spec();
    if let TokenizerSpec::WordPiece { vocab_file, .. } = &mut tokenizer {
        let vocab = model
            .tokenizer()
            .vocabulary()
            .ok_or_else(|| ModelError::Config("word-piece tokenizer did not expose its vocabulary".into()))?;
        let path = dir.join(VOCAB_FILE);
        let mut text = vocab.join("\n");
        text.push('\n');
        fs::write(&path, text).map_err(io_err(&path))?;
        *vocab_file = VOCAB_FILE.into();
    }

    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        schema_hash: model.schema().hash(),
        hidden_size: model.encoder().hidden_size(),
        attribute_count: model.schema().len(),
        mode: model.mode(),
        tie_rule: "lowest_index".into(),
        model: model.config().clone(),
        encoder,
        tokenizer,
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    write_json(&dir.join(SCHEMA_FILE), model.schema())?;
    model.varmap().save(dir.join(WEIGHTS_FILE))?;
    Ok(dir.to_path_buf())
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<Manifest> {
    let manifest: Manifest = read_json(&dir.as_ref().join(MANIFEST_FILE))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(ModelError::Config(format!(
            "checkpoint format {} is not supported (expected {FORMAT_VERSION})",
            manifest.format_version
        )));
    }
    Ok(manifest)
}

/// Loads a checkpoint. When `expected` is given its hash must match the stored one.
pub fn load_checkpoint(dir: impl AsRef<Path>, expected: Option<&AttributeSchema>) -> Result<TieredModel> {
    let dir = dir.as_ref();
    let manifest = read_manifest(dir)?;
    if let Some(schema) = expected {
        let hash = schema.hash();
        if hash != manifest.schema_hash {
            return Err(ModelError::SchemaMismatch {
                checkpoint: manifest.schema_hash,
                schema: hash,
            });
        }
    }
    let schema: AttributeSchema = read_json(&dir.join(SCHEMA_FILE))?;
    if schema.hash() != manifest.schema_hash {
        return Err(ModelError::SchemaMismatch {
            checkpoint: manifest.schema_hash,
            schema: schema.hash(),
        });
    }
    let tokenizer = manifest.tokenizer.build(dir)?;
    let mut model = TieredModel::new(manifest.model, schema, tokenizer, &manifest.encoder)?;
    model.load_weights(&dir.join(WEIGHTS_FILE))?;
    Ok(model)
}

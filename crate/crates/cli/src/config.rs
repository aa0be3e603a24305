//! Run configuration: a TOML file with one section per command plus shared settings.
//! Relative paths in the file are resolved against the file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use procstory_augment::InsertionConfig;
use procstory_core::AttributeSchema;
use procstory_eval::EvalMode;
use procstory_labeler::{HttpConfig, LabelerConfig, MockFallback, RemoteParserConfig};
use procstory_model::training::RegimeConfig;
use procstory_model::{DecisionRule, EncoderSpec, ModelConfig, TokenizerSpec};
use serde::Deserialize;

use crate::error::{CliError, Result};

/// Environment variable read for the completion-service token when the config names none.
pub const API_KEY_ENV: &str = "PROCSTORY_API_KEY";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Required by stochastic commands (train, augment insert, augment sample).
    pub seed: Option<u64>,
    /// Attribute schema file; the built-in 20-attribute schema when absent.
    pub schema: Option<PathBuf>,
    /// WordNet 3.0 directory; the bundled copy when absent.
    pub wordnet: Option<PathBuf>,
    #[serde(default)]
    pub annotator: AnnotatorConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub label: LabelConfig,
    #[serde(default)]
    pub augment: AugmentConfig,
    #[serde(default)]
    pub evaluate: EvaluateConfig,
    #[serde(default)]
    pub extract: IoConfig,
    /// Directory the config was read from; the working directory without a file.
    #[serde(skip)]
    pub base: PathBuf,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotatorConfig {
    #[serde(default)]
    pub service: ServiceConfig,
    #[serde(default)]
    pub parser: ParserConfig,
    #[serde(default)]
    pub labeler: LabelerConfig,
    /// Annotated story pairs whose plausible stories become the demonstration pool.
    pub pool: Option<PathBuf>,
    /// Completion cache directory; no caching when absent.
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ServiceConfig {
    Mock {
        #[serde(default = "rules")]
        fallback: MockFallback,
        /// JSONL of `{"prompt", "completion"}` entries.
        #[serde(default)]
        table: Option<PathBuf>,
    },
    Http(HttpConfig),
}

fn rules() -> MockFallback {
    MockFallback::Rules
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig::Mock {
            fallback: rules(),
            table: None,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParserConfig {
    #[default]
    Fallback,
    Remote(RemoteParserConfig),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub dataset: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    /// Checkpoint directory.
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub model: ModelConfig,
    pub encoder: Option<EncoderSpec>,
    pub tokenizer: Option<TokenizerSpec>,
    #[serde(default)]
    pub regime: RegimeConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoConfig {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelConfig {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub participants_only: bool,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentConfig {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub insertion: InsertionConfig,
    /// Sample size for `sample`.
    pub k: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateConfig {
    pub checkpoint: Option<PathBuf>,
    pub in_domain: Option<PathBuf>,
    #[serde(default)]
    pub zero_shot: Vec<PathBuf>,
    /// Report path; a `.txt` table is written next to it.
    pub report: Option<PathBuf>,
    #[serde(default = "joint")]
    pub mode: EvalMode,
    #[serde(default)]
    pub rule: DecisionRule,
    /// Only recorded in the report; selecting training data is up to the caller.
    #[serde(default)]
    pub augmentation_subset: Option<String>,
}

fn joint() -> EvalMode {
    EvalMode::Joint
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        Self {
            checkpoint: None,
            in_domain: None,
            zero_shot: Vec::new(),
            report: None,
            mode: joint(),
            rule: DecisionRule::default(),
            augmentation_subset: None,
        }
    }
}

impl RunConfig {
    /// Reads `path` (or returns defaults rooted at the working directory when `None`).
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self {
                base: PathBuf::from("."),
                ..Self::default()
            });
        };
        if !path.is_file() {
            return Err(CliError::MissingPath {
                what: "config",
                path: path.to_path_buf(),
            });
        }
        let text = fs::read_to_string(path).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut config: RunConfig = toml::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        config.base = path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
        if config.base.as_os_str().is_empty() {
            config.base = PathBuf::from(".");
        }
        config.resolve_paths();
        Ok(config)
    }

    fn resolve_paths(&mut self) {
        let base = self.base.clone();
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                *path = base.join(&*path);
            }
        };
        fix(&mut self.schema);
        fix(&mut self.wordnet);
        fix(&mut self.annotator.pool);
        fix(&mut self.annotator.cache_dir);
        if let ServiceConfig::Mock { table, .. } = &mut self.annotator.service {
            fix(table);
        }
        for p in [&mut self.train.dataset, &mut self.train.dev, &mut self.train.output] {
            fix(p);
        }
        for p in [&mut self.label.input, &mut self.label.output] {
            fix(p);
        }
        for p in [&mut self.augment.input, &mut self.augment.output] {
            fix(p);
        }
        for p in [&mut self.extract.input, &mut self.extract.output] {
            fix(p);
        }
        for p in [
            &mut self.evaluate.checkpoint,
            &mut self.evaluate.in_domain,
            &mut self.evaluate.report,
        ] {
            fix(p);
        }
        for p in &mut self.evaluate.zero_shot {
            *p = base.join(&*p);
        }
    }

    pub fn require_seed(&self, command: &str) -> Result<u64> {
        self.seed.ok_or_else(|| {
            CliError::Usage(format!(
                "{command} is stochastic and needs a seed (--seed or `seed` in the config)"
            ))
        })
    }

    pub fn schema(&self) -> Result<AttributeSchema> {
        match &self.schema {
            Some(path) => Ok(AttributeSchema::from_path(existing("schema", path)?)?),
            None => Ok(AttributeSchema::trip_default()),
        }
    }

    pub fn wordnet_dir(&self) -> Result<PathBuf> {
        match &self.wordnet {
            Some(dir) if dir.is_dir() => Ok(dir.clone()),
            Some(dir) => Err(CliError::MissingPath {
                what: "wordnet directory",
                path: dir.clone(),
            }),
            None => Ok(procstory_lexicon::bundled_wordnet_dir()),
        }
    }
}

/// The value of a required path setting, checked for existence.
pub fn required<'a>(what: &'static str, value: &'a Option<PathBuf>) -> Result<&'a Path> {
    let path = value
        .as_deref()
        .ok_or_else(|| CliError::Usage(format!("{what} path is required")))?;
    existing(what, path)
}

pub fn existing<'a>(what: &'static str, path: &'a Path) -> Result<&'a Path> {
    if path.exists() {
        Ok(path)
    } else {
        Err(CliError::MissingPath {
            what,
            path: path.to_path_buf(),
        })
    }
}

/// An output path setting; only its presence is checked.
pub fn output<'a>(what: &'static str, value: &'a Option<PathBuf>) -> Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| CliError::Usage(format!("{what} path is required")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths_follow_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(
            &path,
            "seed = 3\n[train]\ndataset = \"data/train.jsonl\"\n[evaluate]\nzero_shot = [\"a.jsonl\", \"/abs/b.jsonl\"]\n",
        )
        .unwrap();
        let cfg = RunConfig::load(Some(&path)).unwrap();
        assert_eq!(cfg.train.dataset.unwrap(), dir.path().join("data/train.jsonl"));
        assert_eq!(cfg.evaluate.zero_shot[0], dir.path().join("a.jsonl"));
        assert_eq!(cfg.evaluate.zero_shot[1], PathBuf::from("/abs/b.jsonl"));
        assert_eq!(cfg.seed, Some(3));
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(&path, "[train]\nepochs = 3\n").unwrap();
        let err = RunConfig::load(Some(&path)).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn service_sections_parse() {
        let cfg: RunConfig = toml::from_str(
            "[annotator.service]\nkind = \"http\"\nendpoint = \"http://localhost:1/v1/completions\"\nmodel = \"m\"\nmax_attempts = 2\n",
        )
        .unwrap();
        match cfg.annotator.service {
            ServiceConfig::Http(h) => assert_eq!(h.max_attempts, 2),
            other => panic!("{other:?}"),
        }
        let cfg: RunConfig = toml::from_str("").unwrap();
        assert!(matches!(
            cfg.annotator.service,
            ServiceConfig::Mock {
                fallback: MockFallback::Rules,
                table: None
            }
        ));
    }
}

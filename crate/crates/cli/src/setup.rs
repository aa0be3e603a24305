//! Builders shared by commands: lexical database, extractor, completion service, labeler.

use std::path::Path;
use std::sync::Arc;

use procstory_core::{load_dataset, read_jsonl, AttributeSchema};
use procstory_labeler::{
    CachedService, CompletionService, DemonstrationPool, Extractor, FallbackParser, HashingEmbedder,
    HttpCompletionService, Labeler, MockCompletionService, MockEntry, MostFrequentSense, RemoteParser, SentenceParser,
};
use procstory_lexicon::{Roots, WordNet};

use crate::config::{existing, ParserConfig, RunConfig, ServiceConfig, API_KEY_ENV};
use crate::error::{CliError, Result};

pub fn wordnet(cfg: &RunConfig) -> Result<Arc<WordNet>> {
    let dir = cfg.wordnet_dir()?;
    WordNet::load(&dir)
        .map(Arc::new)
        .map_err(|e| CliError::Invalid(format!("wordnet {}: {e}", dir.display())))
}

pub fn extractor(cfg: &RunConfig, wn: Arc<WordNet>) -> Extractor {
    let parser: Arc<dyn SentenceParser> = match &cfg.annotator.parser {
        ParserConfig::Fallback => Arc::new(FallbackParser::new(wn.clone())),
        ParserConfig::Remote(remote) => Arc::new(RemoteParser::new(remote)),
    };
    Extractor {
        parser,
        selector: Arc::new(MostFrequentSense::new(wn.clone(), Roots::WORDNET_30)),
        lexicon: wn,
        roots: Roots::WORDNET_30,
        ontology: cfg.annotator.labeler.ontology.clone(),
        stages: cfg.annotator.labeler.stages,
    }
}

fn cached<S: CompletionService + 'static>(service: S, cache: Option<&Path>) -> Result<Arc<dyn CompletionService>> {
    Ok(match cache {
        Some(dir) => Arc::new(CachedService::new(service, dir)?),
        None => Arc::new(service),
    })
}

pub fn service(cfg: &RunConfig) -> Result<Arc<dyn CompletionService>> {
    let cache = cfg.annotator.cache_dir.as_deref();
    match &cfg.annotator.service {
        ServiceConfig::Mock { fallback, table } => {
            let entries: Vec<MockEntry> = match table {
                Some(path) => read_jsonl(existing("mock completion table", path)?)?,
                None => Vec::new(),
            };
            cached(MockCompletionService::from_entries(entries, *fallback), cache)
        }
        ServiceConfig::Http(http) => {
            let mut http = http.clone();
            http.api_key_env.get_or_insert_with(|| API_KEY_ENV.to_string());
            cached(HttpCompletionService::new(http), cache)
        }
    }
}

pub fn labeler(cfg: &RunConfig, schema: AttributeSchema, wn: Arc<WordNet>) -> Result<Labeler> {
    let embedder = HashingEmbedder::default();
    let pool = match &cfg.annotator.pool {
        Some(path) => {
            let pairs = load_dataset(existing("demonstration pool", path)?, &schema)?;
            let stories = pairs.into_iter().map(|p| p.plausible).collect();
            Some(Arc::new(DemonstrationPool::build(stories, &embedder)?))
        }
        None => None,
    };
    Ok(Labeler::new(
        extractor(cfg, wn),
        service(cfg)?,
        Arc::new(embedder),
        pool,
        schema,
        cfg.annotator.labeler.clone(),
    )?)
}

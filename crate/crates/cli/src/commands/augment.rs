use std::collections::BTreeMap;

use procstory_augment::{
    abstract_participants, ingest_external, insert_words, read_raw_pairs, stratified_sample, LexiconInsertionModel,
    TaggedPair,
};
use procstory_core::{load_dataset, read_jsonl, StoryPair};
use procstory_lexicon::Roots;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::RecordWriter;
use crate::args::{AugmentArgs, IoArgs, Strategy};
use crate::config::{output, required, RunConfig};
use crate::error::{CliError, Result};
use crate::{log, setup};

fn prepare(io: &IoArgs) -> Result<RunConfig> {
    let mut cfg = super::load_config(&io.common)?;
    if io.input.is_some() {
        cfg.augment.input.clone_from(&io.input);
    }
    if io.output.is_some() {
        cfg.augment.output.clone_from(&io.output);
    }
    Ok(cfg)
}

fn write_all<T: serde::Serialize>(cfg: &RunConfig, records: &[T]) -> Result<()> {
    let mut w = RecordWriter::create(output("augment output", &cfg.augment.output)?)?;
    records.iter().try_for_each(|r| w.write(r))
}

fn done(strategy: &str, input: usize, out: usize) {
    log::event(
        "augment_done",
        json!({ "strategy": strategy, "input_pairs": input, "output_pairs": out }),
    );
}

pub fn run(args: AugmentArgs) -> Result<()> {
    match args.strategy {
        Strategy::Abstract(io) => abstraction(&prepare(&io)?),
        Strategy::Insert(io) => insertion(&prepare(&io)?),
        Strategy::External(io) => external(&prepare(&io)?),
        Strategy::Sample(s) => {
            let mut cfg = prepare(&s.io)?;
            if s.k.is_some() {
                cfg.augment.k = s.k;
            }
            sample(&cfg)
        }
    }
}

fn annotated_input(cfg: &RunConfig) -> Result<Vec<StoryPair>> {
    Ok(load_dataset(
        required("augment input", &cfg.augment.input)?,
        &cfg.schema()?,
    )?)
}

fn abstraction(cfg: &RunConfig) -> Result<()> {
    let pairs = annotated_input(cfg)?;
    let wn = setup::wordnet(cfg)?;
    let mut out = Vec::with_capacity(pairs.len());
    for pair in &pairs {
        let a = abstract_participants(pair, wn.as_ref(), &Roots::WORDNET_30);
        log::warnings("augment abstract", &a.warnings);
        if !a.renamed.is_empty() {
            log::event("renamed", json!({ "pair_id": pair.pair_id, "renamed": a.renamed }));
        }
        out.push(a.pair);
    }
    write_all(cfg, &out)?;
    done("abstract", pairs.len(), out.len());
    Ok(())
}

fn insertion(cfg: &RunConfig) -> Result<()> {
    let seed = cfg.require_seed("augment insert")?;
    let pairs = annotated_input(cfg)?;
    let model = LexiconInsertionModel::new(setup::wordnet(cfg)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out: Vec<StoryPair> = pairs
        .iter()
        .map(|p| insert_words(p, &model, rng.next_u64(), &cfg.augment.insertion))
        .collect();
    write_all(cfg, &out)?;
    done("insert", pairs.len(), out.len());
    Ok(())
}

fn external(cfg: &RunConfig) -> Result<()> {
    let (raw, mut dropped) = read_raw_pairs(required("augment input", &cfg.augment.input)?)?;
    let labeler = setup::labeler(cfg, cfg.schema()?, setup::wordnet(cfg)?)?;
    let ingested = ingest_external(&raw, &labeler)?;
    let records = raw.len() + dropped.len();
    log::warnings("augment external", &ingested.warnings);
    dropped.extend(ingested.dropped);
    for d in &dropped {
        log::event("dropped", json!({ "pair_id": d.pair_id, "reason": d.reason }));
    }
    write_all(cfg, &ingested.pairs)?;
    done("external", records, ingested.pairs.len());
    Ok(())
}

fn sample(cfg: &RunConfig) -> Result<()> {
    let seed = cfg.require_seed("augment sample")?;
    let k = cfg
        .augment
        .k
        .ok_or_else(|| CliError::Usage("augment sample needs --k".into()))?;
    let corpus: Vec<TaggedPair> = read_jsonl(required("augment input", &cfg.augment.input)?)?;
    let picked = stratified_sample(&corpus, k, ChaCha8Rng::seed_from_u64(seed).next_u64())?;
    let tally = |items: &[TaggedPair]| {
        let mut m: BTreeMap<String, usize> = BTreeMap::new();
        for p in items {
            *m.entry(p.stratum().to_string()).or_default() += 1;
        }
        m
    };
    log::event(
        "stratified_counts",
        json!({ "k": k, "counts": tally(&picked), "available": tally(&corpus) }),
    );
    write_all(cfg, &picked)?;
    done("sample", corpus.len(), picked.len());
    Ok(())
}

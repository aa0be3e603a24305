use std::fs;

use procstory_core::load_dataset;
use procstory_model::training::{decision_rule, pair_accuracy, train, Regime};
use procstory_model::{save_checkpoint, EncoderSpec, TieredModel, TokenizerSpec};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::args::{RegimeArg, TrainArgs};
use crate::config::{existing, output, required, RunConfig};
use crate::error::{CliError, Result};
use crate::log;

pub const METRICS_FILE: &str = "metrics.jsonl";

fn apply(cfg: &mut RunConfig, args: &TrainArgs) {
    let t = &mut cfg.train;
    if args.dataset.is_some() {
        t.dataset.clone_from(&args.dataset);
    }
    if args.dev.is_some() {
        t.dev.clone_from(&args.dev);
    }
    if args.output.is_some() {
        t.output.clone_from(&args.output);
    }
    if let Some(e) = args.epochs {
        t.regime.epochs = e;
    }
    if let Some(lr) = args.learning_rate {
        t.regime.learning_rate = lr;
    }
    if args.max_steps.is_some() {
        t.regime.max_steps = args.max_steps;
    }
    if let Some(r) = args.regime {
        t.regime.regime = match r {
            RegimeArg::StoryCentric => Regime::StoryCentric,
            RegimeArg::ParticipantCentric => Regime::ParticipantCentric,
            RegimeArg::SentenceCentric => Regime::SentenceCentric,
        };
    }
}

/// The untrained model a run starts from. Model initialization and the training order
/// both draw their seeds from one generator seeded with the run seed.
pub fn initial_model(cfg: &RunConfig, seed: u64) -> Result<(TieredModel, procstory_model::training::RegimeConfig)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model_cfg = cfg.train.model.clone();
    model_cfg.seed = rng.next_u64();
    let mut regime = cfg.train.regime.clone();
    regime.seed = rng.next_u64();
    let encoder = cfg
        .train
        .encoder
        .clone()
        .ok_or_else(|| CliError::Usage("train.encoder is required".into()))?;
    let tokenizer = cfg.train.tokenizer.clone().unwrap_or(match &encoder {
        EncoderSpec::Transformer(t) => TokenizerSpec::Hashed {
            vocab_size: t.vocab_size,
        },
    });
    let tokenizer = tokenizer.build(&cfg.base)?;
    let model = TieredModel::new(model_cfg, cfg.schema()?, tokenizer, &encoder)?;
    Ok((model, regime))
}

pub fn run(args: TrainArgs) -> Result<()> {
    let mut cfg = super::load_config(&args.common)?;
    apply(&mut cfg, &args);
    let seed = cfg.require_seed("train")?;
    let schema = cfg.schema()?;
    let pairs = load_dataset(required("dataset", &cfg.train.dataset)?, &schema)?;
    let dev = match &cfg.train.dev {
        Some(p) => Some(load_dataset(existing("dev set", p)?, &schema)?),
        None => None,
    };
    let out = output("checkpoint", &cfg.train.output)?.to_path_buf();
    let (mut model, regime) = initial_model(&cfg, seed)?;
    fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    log::event(
        "train_start",
        json!({ "pairs": pairs.len(), "dev_pairs": dev.as_ref().map(Vec::len), "regime": regime.regime, "epochs": regime.epochs, "seed": seed }),
    );
    let outcome = train(
        &mut model,
        &pairs,
        &regime,
        dev.as_deref(),
        Some(&out.join(METRICS_FILE)),
    )?;
    for epoch in &outcome.history {
        log::event("epoch", serde_json::to_value(epoch).unwrap_or_default());
    }
    save_checkpoint(&model, &out)?;
    let accuracy = pair_accuracy(&model, &pairs, decision_rule(regime.regime))?;
    log::event(
        "train_done",
        json!({
            "checkpoint": out.display().to_string(),
            "steps": outcome.steps,
            "best_epoch": outcome.best_epoch,
            "best_accuracy": outcome.best_accuracy,
            "train_accuracy": accuracy,
        }),
    );
    Ok(())
}

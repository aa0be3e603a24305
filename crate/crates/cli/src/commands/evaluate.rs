use std::collections::BTreeMap;
use std::path::Path;

use procstory_core::load_dataset;
use procstory_eval::{
    emit_report, evaluate_tiered, read_instances, render_table, zero_shot_evaluate, AccuracyMetrics, EvalMode, Metrics,
    ModelScorer,
};
use procstory_model::load_checkpoint;
use serde_json::json;

use super::ensure_parent;
use crate::args::{EvaluateArgs, ModeArg};
use crate::config::{existing, output, required};
use crate::error::{CliError, Result};
use crate::{log, setup};

pub const IN_DOMAIN: &str = "in_domain";

/// Report key for a task file: its stem, or the whole path when stems collide.
fn task_key(path: &Path, taken: &BTreeMap<String, Metrics>) -> String {
    let stem = path
        .file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
    if taken.contains_key(&stem) {
        path.display().to_string()
    } else {
        stem
    }
}

pub fn run(args: EvaluateArgs) -> Result<()> {
    let mut cfg = super::load_config(&args.common)?;
    let ev = &mut cfg.evaluate;
    if args.checkpoint.is_some() {
        ev.checkpoint.clone_from(&args.checkpoint);
    }
    if args.in_domain.is_some() {
        ev.in_domain.clone_from(&args.in_domain);
    }
    if !args.zero_shot.is_empty() {
        ev.zero_shot.clone_from(&args.zero_shot);
    }
    if args.report.is_some() {
        ev.report.clone_from(&args.report);
    }
    if let Some(m) = args.mode {
        ev.mode = match m {
            ModeArg::Joint => EvalMode::Joint,
            ModeArg::Single => EvalMode::Single,
        };
    }
    let ev = cfg.evaluate.clone();
    if ev.in_domain.is_none() && ev.zero_shot.is_empty() {
        return Err(CliError::Usage(
            "nothing to evaluate: pass --in-domain and/or --zero-shot".into(),
        ));
    }
    let report = output("report", &ev.report)?;
    let checkpoint = required("checkpoint", &ev.checkpoint)?;
    let in_domain = ev
        .in_domain
        .as_deref()
        .map(|p| existing("in-domain set", p))
        .transpose()?;
    for task in &ev.zero_shot {
        existing("task file", task)?;
    }

    let schema = cfg.schema()?;
    let model = load_checkpoint(checkpoint, Some(&schema))?;
    if let Some(subset) = &ev.augmentation_subset {
        log::event("augmentation_subset", json!({ "subset": subset }));
    }

    let mut metrics = BTreeMap::new();
    if let Some(path) = in_domain {
        let pairs = load_dataset(path, &schema)?;
        let m = evaluate_tiered(&model, &pairs, ev.rule)?;
        log::event("in_domain", serde_json::to_value(m).unwrap_or_default());
        metrics.insert(IN_DOMAIN.to_string(), Metrics::Tiered(m));
    }
    if !ev.zero_shot.is_empty() {
        let extractor = setup::extractor(&cfg, setup::wordnet(&cfg)?);
        let scorer = ModelScorer {
            model: &model,
            rule: ev.rule,
        };
        for task in &ev.zero_shot {
            let instances = read_instances(task)?;
            let result = zero_shot_evaluate(&scorer, &extractor, &instances, ev.mode)?;
            let key = task_key(task, &metrics);
            log::event(
                "zero_shot",
                json!({ "task": key, "accuracy": result.accuracy, "instances": result.instances }),
            );
            metrics.insert(
                key,
                Metrics::Accuracy(AccuracyMetrics {
                    accuracy: result.accuracy,
                    instances: result.instances,
                }),
            );
        }
    }
    ensure_parent(report)?;
    emit_report(&metrics, report)?;
    print!("{}", render_table(&metrics)?);
    log::event("evaluate_done", json!({ "report": report.display().to_string() }));
    Ok(())
}

//! Training loop with gradient accumulation and best-epoch selection.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use candle_core::Tensor;
use candle_nn::{AdamW, Optimizer, ParamsAdamW};
use procstory_core::{AnnotatedStory, StoryPair};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::input::{InputBuilder, TokenizedInput};
use crate::model::{DecisionRule, StoryMode, TieredModel};
use crate::params::{restore, snapshot};
use crate::prediction::StoryChoice;
use crate::training::labels::{assemble_labels, pair_target, Regime, RegimeConfig, SequenceLabels};
use crate::training::loss::{compute_joint_loss, compute_loss, LossBreakdown};

/// Best epoch, its selection accuracy and a parameter snapshot.
type Checkpointed = (usize, f64, Vec<(String, Tensor)>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean per-sequence loss and components over the epoch.
    pub loss: f64,
    pub precondition: f64,
    pub effect: f64,
    pub conflict: f64,
    pub plausibility: f64,
    /// In-domain pair accuracy after the epoch.
    pub accuracy: f64,
    /// Optimizer steps taken so far.
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub history: Vec<EpochMetrics>,
    /// Epoch whose weights were kept; `None` when no epoch ran.
    pub best_epoch: Option<usize>,
    pub best_accuracy: Option<f64>,
    pub steps: usize,
}

enum Unit {
    Single {
        inputs: Vec<TokenizedInput>,
        labels: SequenceLabels,
    },
    Joint {
        left_inputs: Vec<TokenizedInput>,
        right_inputs: Vec<TokenizedInput>,
        left_labels: SequenceLabels,
        right_labels: SequenceLabels,
        target: Option<[f64; 2]>,
    },
}

fn build_units(model: &TieredModel, pair: &StoryPair, regime: Regime) -> Result<Vec<Unit>> {
    let schema = model.schema();
    match model.mode() {
        StoryMode::Single => {
            let mut units = Vec::new();
            for story in [&pair.plausible, &pair.implausible] {
                for slot in TieredModel::story_slots(story) {
                    units.push(Unit::Single {
                        inputs: model.build_inputs(&slot, story)?,
                        labels: assemble_labels(story, &slot, regime, schema)?,
                    });
                }
            }
            Ok(units)
        }
        StoryMode::Joint => {
            let mut cfg = model.config().input.clone();
            cfg.max_len = cfg.max_len.min(model.encoder().max_positions());
            let builder = InputBuilder::new(model.tokenizer(), &cfg);
            builder
                .build_joint_pairs(&pair.plausible, &pair.implausible)?
                .into_iter()
                .map(|jp| {
                    let left_labels = assemble_labels(&pair.plausible, &jp.left, regime, schema)?;
                    let right_labels = assemble_labels(&pair.implausible, &jp.right, regime, schema)?;
                    Ok(Unit::Joint {
                        target: pair_target(left_labels.story, right_labels.story),
                        left_inputs: jp.left_inputs,
                        right_inputs: jp.right_inputs,
                        left_labels,
                        right_labels,
                    })
                })
                .collect()
        }
    }
}

fn unit_loss(model: &TieredModel, unit: &Unit, cfg: &RegimeConfig) -> Result<LossBreakdown> {
    let weights = cfg.weights();
    match unit {
        Unit::Single { inputs, labels } => compute_loss(&model.forward_inputs(inputs)?, labels, &weights),
        Unit::Joint {
            left_inputs,
            right_inputs,
            left_labels,
            right_labels,
            target,
        } => {
            let left = model.forward_inputs(left_inputs)?;
            let right = model.forward_inputs(right_inputs)?;
            compute_joint_loss(&left, &right, left_labels, right_labels, *target, &weights)
        }
    }
}

pub fn decision_rule(regime: Regime) -> DecisionRule {
    match regime {
        Regime::SentenceCentric => DecisionRule::ConflictSum,
        _ => DecisionRule::Plausibility,
    }
}

/// Presentation order used when scoring pair `index`: odd pairs put the implausible
/// story first so the first-story tie rule cannot inflate accuracy.
pub fn presentation_order(pair: &StoryPair, index: usize) -> (&AnnotatedStory, &AnnotatedStory, StoryChoice) {
    if index.is_multiple_of(2) {
        (&pair.plausible, &pair.implausible, StoryChoice::First)
    } else {
        (&pair.implausible, &pair.plausible, StoryChoice::Second)
    }
}

/// Fraction of pairs whose plausible story is chosen.
pub fn pair_accuracy(model: &TieredModel, pairs: &[StoryPair], rule: DecisionRule) -> Result<f64> {
    if pairs.is_empty() {
        return Err(ModelError::Config("no pairs to evaluate".into()));
    }
    let mut correct = 0usize;
    for (i, pair) in pairs.iter().enumerate() {
        let (a, b, gold) = presentation_order(pair, i);
        if model.predict_pair(a, b, rule)?.choice == gold {
            correct += 1;
        }
    }
    Ok(correct as f64 / pairs.len() as f64)
}

#[derive(Default)]
struct Running {
    count: usize,
    loss: f64,
    precondition: f64,
    effect: f64,
    conflict: f64,
    plausibility: f64,
}

impl Running {
    fn add(&mut self, value: f64, b: &LossBreakdown) {
        self.count += 1;
        self.loss += value;
        self.precondition += b.precondition;
        self.effect += b.effect;
        self.conflict += b.conflict;
        self.plausibility += b.plausibility;
    }

    fn mean(&self, v: f64) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            v / self.count as f64
        }
    }
}

/// Trains in place and leaves the best epoch's weights in `model`. Selection uses
/// accuracy on `dev` when given, otherwise on the training pairs.
pub fn train(
    model: &mut TieredModel,
    dataset: &[StoryPair],
    cfg: &RegimeConfig,
    dev: Option<&[StoryPair]>,
    metrics_log: Option<&Path>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(ModelError::Config("training set is empty".into()));
    }
    let units: Vec<Vec<Unit>> = dataset
        .iter()
        .map(|p| build_units(model, p, cfg.regime))
        .collect::<Result<_>>()?;
    let mut log = match metrics_log {
        Some(path) => Some(BufWriter::new(File::create(path).map_err(|source| ModelError::Io {
            path: path.to_path_buf(),
            source,
        })?)),
        None => None,
    };

    let mut opt = AdamW::new(
        model.varmap().all_vars(),
        ParamsAdamW {
            lr: cfg.learning_rate,
            weight_decay: cfg.weight_decay,
            ..ParamsAdamW::default()
        },
    )?;
    let rule = decision_rule(cfg.regime);
    let selection = dev.unwrap_or(dataset);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut history = Vec::new();
    let mut best: Option<Checkpointed> = None;
    let mut steps = 0usize;
    let per_step = cfg.batch_size * cfg.grad_accum;

    'epochs: for epoch in 1..=cfg.epochs {
        let mut order: Vec<usize> = (0..units.len()).collect();
        order.shuffle(&mut rng);
        let mut running = Running::default();
        let mut window: Vec<Tensor> = Vec::with_capacity(per_step);
        let mut stop = false;
        let flat = order.iter().flat_map(|&i| units[i].iter());
        for unit in flat {
            let breakdown = unit_loss(model, unit, cfg)?;
            let value = breakdown.value()?;
            if !value.is_finite() {
                return Err(ModelError::Divergent {
                    epoch,
                    step: steps,
                    value,
                });
            }
            running.add(value, &breakdown);
            window.push(breakdown.total);
            if window.len() == per_step {
                step(&mut opt, &mut window)?;
                steps += 1;
                if cfg.max_steps.is_some_and(|m| steps >= m) {
                    stop = true;
                    break;
                }
            }
        }
        if !window.is_empty() {
            step(&mut opt, &mut window)?;
            steps += 1;
        }

        let accuracy = pair_accuracy(model, selection, rule)?;
        let metrics = EpochMetrics {
            epoch,
            loss: running.mean(running.loss),
            precondition: running.mean(running.precondition),
            effect: running.mean(running.effect),
            conflict: running.mean(running.conflict),
            plausibility: running.mean(running.plausibility),
            accuracy,
            steps,
        };
        if let Some(w) = log.as_mut() {
            let line = serde_json::to_string(&metrics).expect("metrics serialize");
            writeln!(w, "{line}").map_err(|source| ModelError::Io {
                path: metrics_log.expect("log path").to_path_buf(),
                source,
            })?;
        }
        if best.as_ref().is_none_or(|(_, acc, _)| accuracy > *acc) {
            best = Some((epoch, accuracy, snapshot(model.varmap())?));
        }
        history.push(metrics);
        if stop {
            break 'epochs;
        }
    }
    if let Some(w) = log.as_mut() {
        w.flush().map_err(|source| ModelError::Io {
            path: metrics_log.expect("log path").to_path_buf(),
            source,
        })?;
    }

    let (best_epoch, best_accuracy) = match &best {
        Some((epoch, acc, values)) => {
            restore(model.varmap(), values)?;
            (Some(*epoch), Some(*acc))
        }
        None => (None, None),
    };
    Ok(TrainOutcome {
        history,
        best_epoch,
        best_accuracy,
        steps,
    })
}

/// One optimizer step on the mean of the accumulated sequence losses.
fn step(opt: &mut AdamW, window: &mut Vec<Tensor>) -> Result<()> {
    let n = window.len() as f64;
    let sum = Tensor::stack(window, 0)?.sum_all()?.affine(1.0 / n, 0.0)?;
    opt.backward_step(&sum)?;
    window.clear();
    Ok(())
}

use std::time::Instant;

use procstory_core::AttributeSchema;
use procstory_model::params::snapshot;
use procstory_model::synthetic::toy_pairs;
use procstory_model::training::{pair_accuracy, train, Regime, RegimeConfig};
use procstory_model::{EncoderSpec, HashedTokenizer, ModelConfig, StoryMode, TieredModel, TransformerConfig};

fn toy_model(mode: StoryMode, seed: u64) -> TieredModel {
    let cfg = ModelConfig {
        mode,
        seed,
        ..ModelConfig::default()
    };
    TieredModel::new(
        cfg,
        AttributeSchema::trip_default(),
        Box::new(HashedTokenizer::new(256).unwrap()),
        &EncoderSpec::Transformer(TransformerConfig::tiny(256, 32)),
    )
    .unwrap()
}

fn toy_config(regime: Regime) -> RegimeConfig {
    RegimeConfig {
        regime,
        epochs: 10,
        learning_rate: 2e-3,
        batch_size: 1,
        grad_accum: 2,
        seed: 7,
        max_steps: Some(200),
        ..RegimeConfig::default()
    }
}

fn overfit(mode: StoryMode, regime: Regime) -> (f64, f64) {
    let pairs = toy_pairs(20, 1);
    let mut model = toy_model(mode, 3);
    let rule = procstory_model::training::decision_rule(regime);
    let initial = pair_accuracy(&model, &pairs, rule).unwrap();
    let started = Instant::now();
    let outcome = train(&mut model, &pairs, &toy_config(regime), None, None).unwrap();
    let secs = started.elapsed().as_secs_f64();
    assert!(outcome.steps <= 200);
    let acc = pair_accuracy(&model, &pairs, rule).unwrap();
    eprintln!(
        "{mode:?} {regime:?}: accuracy {initial} -> {acc} in {secs:.1}s over {} steps",
        outcome.steps
    );
    (acc, secs)
}

#[test]
fn story_centric_overfits_toy_pairs() {
    let (acc, secs) = overfit(StoryMode::Single, Regime::StoryCentric);
    assert_eq!(acc, 1.0);
    assert!(secs < 60.0);
}

#[test]
fn participant_centric_overfits_toy_pairs() {
    let (acc, _) = overfit(StoryMode::Single, Regime::ParticipantCentric);
    assert!(acc >= 0.9);
}

#[test]
fn sentence_centric_overfits_toy_pairs() {
    let (acc, _) = overfit(StoryMode::Single, Regime::SentenceCentric);
    assert!(acc >= 0.9);
}

#[test]
fn joint_mode_overfits_toy_pairs() {
    let (acc, _) = overfit(StoryMode::Joint, Regime::StoryCentric);
    assert!(acc >= 0.9);
}

#[test]
fn zero_epochs_keeps_initial_weights() {
    let pairs = toy_pairs(4, 0);
    let mut model = toy_model(StoryMode::Single, 5);
    let before = snapshot(model.varmap()).unwrap();
    let cfg = RegimeConfig {
        epochs: 0,
        ..toy_config(Regime::StoryCentric)
    };
    let outcome = train(&mut model, &pairs, &cfg, None, None).unwrap();
    assert!(outcome.history.is_empty());
    assert_eq!(outcome.best_epoch, None);
    let after = snapshot(model.varmap()).unwrap();
    for ((na, a), (nb, b)) in before.iter().zip(&after) {
        assert_eq!(na, nb);
        let (a, b): (Vec<f32>, Vec<f32>) = (
            a.flatten_all().unwrap().to_vec1().unwrap(),
            b.flatten_all().unwrap().to_vec1().unwrap(),
        );
        assert_eq!(a, b, "{na}");
    }
}

#[test]
fn same_seed_gives_identical_loss_curves() {
    let pairs = toy_pairs(6, 2);
    let cfg = RegimeConfig {
        epochs: 2,
        ..toy_config(Regime::StoryCentric)
    };
    let dir = tempfile::tempdir().unwrap();
    let (la, lb) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    let a = train(&mut toy_model(StoryMode::Single, 1), &pairs, &cfg, None, Some(&la)).unwrap();
    let b = train(&mut toy_model(StoryMode::Single, 1), &pairs, &cfg, None, Some(&lb)).unwrap();
    assert_eq!(a, b);
    assert_eq!(std::fs::read(&la).unwrap(), std::fs::read(&lb).unwrap());
    assert_eq!(std::fs::read_to_string(&la).unwrap().lines().count(), 2);
}

#[test]
fn loss_does_not_rise_above_first_epoch() {
    let pairs = toy_pairs(20, 1);
    let mut model = toy_model(StoryMode::Single, 3);
    let cfg = RegimeConfig {
        epochs: 4,
        max_steps: None,
        ..toy_config(Regime::StoryCentric)
    };
    let outcome = train(&mut model, &pairs, &cfg, None, None).unwrap();
    let first = outcome.history[0].loss;
    for h in &outcome.history[1..] {
        assert!(h.loss <= first * 1.05, "{:?}", outcome.history);
    }
}

#[test]
fn invalid_weights_are_rejected() {
    let mut cfg = toy_config(Regime::SentenceCentric);
    cfg.weights = Some(procstory_model::training::LossWeights::default());
    let err = train(&mut toy_model(StoryMode::Single, 0), &toy_pairs(2, 0), &cfg, None, None);
    assert!(err.is_err());
}

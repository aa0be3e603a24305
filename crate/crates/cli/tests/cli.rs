use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use procstory_augment::{allocate, TaggedPair};
use procstory_cli::commands::label::LabeledRecord;
use procstory_cli::commands::train::initial_model;
use procstory_cli::RunConfig;
use procstory_core::{load_dataset, read_jsonl, write_jsonl, AttributeSchema};
use procstory_model::params::snapshot;
use procstory_model::synthetic::toy_pairs;
use procstory_model::{load_checkpoint, TieredModel};
use serde_json::Value;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn toy_config() -> PathBuf {
    root().join("configs/toy.toml")
}

fn procstory(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_procstory"))
        .args(args)
        .env_remove("PROCSTORY_API_KEY")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn events(out: &Output) -> Vec<Value> {
    stderr(out)
        .lines()
        .filter_map(|l| serde_json::from_str(l).ok())
        .collect()
}

fn event(out: &Output, name: &str) -> Value {
    events(out)
        .into_iter()
        .find(|e| e["event"] == name)
        .unwrap_or_else(|| panic!("no {name} event in {}", stderr(out)))
}

fn values(model: &TieredModel) -> Vec<(String, Vec<f32>)> {
    snapshot(model.varmap())
        .unwrap()
        .into_iter()
        .map(|(n, t)| (n, t.flatten_all().unwrap().to_vec1::<f32>().unwrap()))
        .collect()
}

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn train_short(out: &Path, extra: &[&str]) -> Output {
    let config = toy_config();
    let mut args = vec!["train", "--config", s(&config), "--output", s(out)];
    args.extend_from_slice(extra);
    procstory(&args)
}

#[test]
fn toy_fixture_matches_the_generator() {
    let on_disk = load_dataset(
        root().join("fixtures/toy_pairs.jsonl"),
        &AttributeSchema::trip_default(),
    )
    .unwrap();
    assert_eq!(on_disk, toy_pairs(20, 1));
}

#[test]
fn toy_training_writes_a_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("ckpt");
    let out = train_short(&ckpt, &["--max-steps", "20"]);
    assert!(out.status.success(), "{}", stderr(&out));
    for f in ["manifest.json", "weights.safetensors", "schema.json", "metrics.jsonl"] {
        assert!(ckpt.join(f).is_file(), "{f}");
    }
    assert!(load_checkpoint(&ckpt, Some(&AttributeSchema::trip_default())).is_ok());
    assert_eq!(event(&out, "train_done")["steps"], 20);
}

#[test]
fn missing_dataset_is_a_usage_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere/train.jsonl");
    let out = train_short(&dir.path().join("ckpt"), &["--dataset", s(&missing)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(event(&out, "error")["message"].as_str().unwrap().contains(s(&missing)));
    assert!(!dir.path().join("ckpt").exists());
}

#[test]
fn training_without_a_seed_is_refused() {
    let out = procstory(&["train", "--dataset", s(&root().join("fixtures/toy_pairs.jsonl"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(event(&out, "error")["message"].as_str().unwrap().contains("seed"));
}

#[test]
fn zero_epochs_checkpoint_is_the_initialization() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("ckpt");
    let out = train_short(&ckpt, &["--epochs", "0", "--seed", "11"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let cfg = RunConfig::load(Some(&toy_config())).unwrap();
    let (init, _) = initial_model(&cfg, 11).unwrap();
    let saved = load_checkpoint(&ckpt, None).unwrap();
    assert_eq!(values(&saved), values(&init));
}

#[test]
fn training_is_bit_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let out = train_short(d, &["--max-steps", "10"]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    assert_eq!(dir_bytes(&a), dir_bytes(&b));
    let c = dir.path().join("c");
    assert!(train_short(&c, &["--max-steps", "10", "--seed", "8"]).status.success());
    assert_ne!(
        fs::read(a.join("weights.safetensors")).unwrap(),
        fs::read(c.join("weights.safetensors")).unwrap()
    );
}

fn label(out: &Path, extra: &[&str]) -> Output {
    let config = toy_config();
    let mut args = vec!["label", "--config", s(&config), "--output", s(out)];
    args.extend_from_slice(extra);
    procstory(&args)
}

#[test]
fn mock_labeling_annotates_every_story() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("labeled.jsonl");
    let out = label(&path, &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let records: Vec<LabeledRecord> = read_jsonl(&path).unwrap();
    assert_eq!(records.len(), 3);
    assert_eq!(
        records.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(),
        ["s1", "s2", "s3"]
    );
    assert!(records.iter().all(|r| !r.story.participants.is_empty()));
    assert!(records.iter().all(|r| !r.story.annotations.is_empty()));
    let pizza = &records[0].story;
    assert!(pizza
        .annotations
        .iter()
        .any(|a| a.participant == "pizza" && a.attribute == "temperature"));
}

#[test]
fn participants_only_skips_annotation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("labeled.jsonl");
    let out = label(&path, &["--participants-only"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let records: Vec<LabeledRecord> = read_jsonl(&path).unwrap();
    assert_eq!(records.len(), 3);
    assert!(records
        .iter()
        .all(|r| !r.story.participants.is_empty() && r.story.annotations.is_empty()));
}

#[test]
fn labeling_is_bit_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    assert!(label(&a, &[]).status.success());
    assert!(label(&b, &[]).status.success());
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

/// Answers `served` requests with a completion, then stops listening.
fn flaky_server(served: usize) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        for _ in 0..served {
            let (mut stream, _) = listener.accept().unwrap();
            let mut buf = Vec::new();
            let mut chunk = [0u8; 8192];
            loop {
                let n = stream.read(&mut chunk).unwrap();
                buf.extend_from_slice(&chunk[..n]);
                let text = String::from_utf8_lossy(&buf);
                if let Some(end) = text.find("\r\n\r\n") {
                    let len = text[..end]
                        .lines()
                        .find_map(|l| {
                            l.to_lowercase()
                                .strip_prefix("content-length:")
                                .map(|v| v.trim().parse::<usize>().unwrap())
                        })
                        .unwrap_or(0);
                    if buf.len() >= end + 4 + len {
                        break;
                    }
                }
                if n == 0 {
                    break;
                }
            }
            let body = r#"{"choices": [{"text": "step 0: []"}]}"#;
            let reply = format!(
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(reply.as_bytes()).unwrap();
        }
    });
    format!("http://{addr}/v1/completions")
}

#[test]
fn unreachable_service_exits_3_and_keeps_the_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let config = dir.path().join("live.toml");
    fs::write(
        &config,
        format!(
            "[annotator]\ncache_dir = \"cache\"\n[annotator.labeler]\nworkers = 1\n\
             [annotator.service]\nkind = \"http\"\nendpoint = \"{}\"\nmodel = \"m\"\nmax_attempts = 2\nbackoff_ms = 1\ntimeout_s = 5\nrequests_per_minute = 0\n\
             [label]\ninput = \"{}\"\noutput = \"out.jsonl\"\n",
            flaky_server(4),
            s(&root().join("fixtures/stories.jsonl"))
        ),
    )
    .unwrap();
    let out = procstory(&["label", "--config", s(&config)]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    let cached = fs::read_dir(&cache)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "txt"));
    assert_eq!(cached.count(), 4);
    assert!(dir.path().join("out.jsonl").is_file());
}

fn augment(strategy: &str, input: &Path, output: &Path, extra: &[&str]) -> Output {
    let config = toy_config();
    let mut args = vec![
        "augment",
        strategy,
        "--config",
        s(&config),
        "--input",
        s(input),
        "--output",
        s(output),
    ];
    args.extend_from_slice(extra);
    procstory(&args)
}

#[test]
fn abstraction_keeps_the_pair_count() {
    let dir = tempfile::tempdir().unwrap();
    let input = root().join("fixtures/trip_fixture.jsonl");
    let output = dir.path().join("abstract.jsonl");
    let out = augment("abstract", &input, &output, &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let schema = AttributeSchema::trip_default();
    let before = load_dataset(&input, &schema).unwrap();
    let after = load_dataset(&output, &schema).unwrap();
    assert_eq!(before.len(), after.len());
    assert_ne!(before, after);
}

#[test]
fn insertion_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let input = root().join("fixtures/trip_fixture.jsonl");
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    assert!(augment("insert", &input, &a, &[]).status.success());
    assert!(augment("insert", &input, &b, &[]).status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let c = dir.path().join("c.jsonl");
    assert!(augment("insert", &input, &c, &["--seed", "99"]).status.success());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn external_pairs_are_labeled() {
    let dir = tempfile::tempdir().unwrap();
    let output = dir.path().join("external.jsonl");
    let out = augment("external", &root().join("fixtures/external_raw.jsonl"), &output, &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let pairs: Vec<TaggedPair> = read_jsonl(&output).unwrap();
    assert!(!pairs.is_empty());
    assert!(pairs.iter().all(|p| p.pair.implausible.conflict.is_none()));
}

#[test]
fn sampling_reports_stratified_counts() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("typed.jsonl");
    let sizes = [
        ("object modifications", 700),
        ("substitutions", 1000),
        ("unmet expectations", 1500),
    ];
    let base = toy_pairs(1, 0).remove(0);
    let corpus: Vec<TaggedPair> = sizes
        .iter()
        .flat_map(|&(t, n)| (0..n).map(move |i| (t, i)))
        .map(|(t, i)| {
            let mut pair = base.clone();
            pair.pair_id = format!("{t}-{i}");
            TaggedPair {
                pair,
                story_type: Some(t.to_string()),
            }
        })
        .collect();
    write_jsonl(&corpus, &input).unwrap();
    let output = dir.path().join("sample.jsonl");
    let out = augment("sample", &input, &output, &["--k", "3000"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let counts: BTreeMap<String, usize> =
        serde_json::from_value(event(&out, "stratified_counts")["counts"].clone()).unwrap();
    let available: BTreeMap<String, usize> = sizes.iter().map(|&(t, n)| (t.to_string(), n)).collect();
    assert_eq!(counts, allocate(&available, 3000).unwrap());
    assert_eq!(read_jsonl::<TaggedPair>(&output).unwrap().len(), 3000);
}

#[test]
fn unknown_strategy_prints_usage() {
    let out = procstory(&["augment", "paraphrase", "--input", "x"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("Usage"));
}

fn quick_checkpoint(dir: &Path) -> PathBuf {
    let ckpt = dir.join("ckpt");
    let out = train_short(&ckpt, &["--epochs", "0"]);
    assert!(out.status.success(), "{}", stderr(&out));
    ckpt
}

#[test]
fn evaluation_reports_in_domain_and_zero_shot_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = quick_checkpoint(dir.path());
    let report = dir.path().join("report.json");
    let out = procstory(&[
        "evaluate",
        "--config",
        s(&toy_config()),
        "--checkpoint",
        s(&ckpt),
        "--report",
        s(&report),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let json: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["in_domain"]["kind"], "tiered");
    let tiered = &json["in_domain"];
    let (a, c, v) = (
        tiered["accuracy"].as_f64().unwrap(),
        tiered["consistency"].as_f64().unwrap(),
        tiered["verifiability"].as_f64().unwrap(),
    );
    assert!(v <= c && c <= a);
    for (task, n) in [("cloze", 4), ("qa", 3)] {
        assert_eq!(json[task]["kind"], "accuracy");
        assert_eq!(json[task]["instances"], n);
    }
    assert!(report.with_extension("txt").is_file());
    assert!(String::from_utf8_lossy(&out.stdout).contains("in_domain"));
}

#[test]
fn zero_shot_flag_alone_reports_one_accuracy_per_task() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = quick_checkpoint(dir.path());
    let report = dir.path().join("zs.json");
    let out = procstory(&[
        "evaluate",
        "--checkpoint",
        s(&ckpt),
        "--report",
        s(&report),
        "--zero-shot",
        s(&root().join("fixtures/tasks/cloze.jsonl")),
        "--zero-shot",
        s(&root().join("fixtures/tasks/qa.jsonl")),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let json: BTreeMap<String, Value> = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json.keys().collect::<Vec<_>>(), ["cloze", "qa"]);
}

#[test]
fn schema_mismatch_exits_4_naming_both_hashes() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = quick_checkpoint(dir.path());
    let mut schema: Value = serde_json::from_str(&fs::read_to_string(ckpt.join("schema.json")).unwrap()).unwrap();
    schema["attributes"].as_array_mut().unwrap().pop();
    let other = dir.path().join("schema.json");
    fs::write(&other, schema.to_string()).unwrap();
    let other_hash = AttributeSchema::from_path(&other).unwrap().hash();
    let config = dir.path().join("eval.toml");
    fs::write(&config, "schema = \"schema.json\"\n").unwrap();
    let out = procstory(&[
        "evaluate",
        "--config",
        s(&config),
        "--checkpoint",
        s(&ckpt),
        "--in-domain",
        s(&root().join("fixtures/toy_pairs.jsonl")),
        "--report",
        s(&dir.path().join("r.json")),
    ]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    let message = event(&out, "error")["message"].as_str().unwrap().to_string();
    assert!(message.contains(&AttributeSchema::trip_default().hash()), "{message}");
    assert!(message.contains(&other_hash), "{message}");
}

#[test]
fn participants_are_extracted_per_story() {
    let dir = tempfile::tempdir().unwrap();
    let output = dir.path().join("participants.jsonl");
    let out = procstory(&[
        "extract-participants",
        "--config",
        s(&toy_config()),
        "--output",
        s(&output),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let records: Vec<Value> = read_jsonl(&output).unwrap();
    assert_eq!(records.len(), 3);
    let surfaces: Vec<&str> = records[1]["participants"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["surface"].as_str().unwrap())
        .collect();
    assert!(
        surfaces.contains(&"glass") && surfaces.contains(&"water"),
        "{surfaces:?}"
    );
}

#[test]
fn stderr_is_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let out = label(&dir.path().join("l.jsonl"), &["--participants-only"]);
    assert!(out.status.success());
    for line in stderr(&out).lines() {
        let v: Value = serde_json::from_str(line).unwrap_or_else(|e| panic!("{line}: {e}"));
        assert!(v["event"].is_string());
    }
}

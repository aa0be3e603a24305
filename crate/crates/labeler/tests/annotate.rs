use std::io::{Read, Write};
use std::net::TcpListener;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::{Arc, OnceLock};

use procstory_core::{load_dataset, validate_story, AnnotatedStory, AttributeSchema, StoryPair};
use procstory_labeler::{
    annotate_states, build_code_prompt, detect_active, CachedService, CompletionParams, CompletionRequest,
    CompletionService, DemonstrationPool, Extractor, FallbackParser, HashingEmbedder, HttpCompletionService,
    HttpConfig, Labeler, LabelerConfig, MockCompletionService, MockFallback, MostFrequentSense, OntologyConfig,
    PromptMode, ServiceError,
};
use procstory_lexicon::{bundled_wordnet_dir, Roots, WordNet};

fn wordnet() -> Arc<WordNet> {
    static WN: OnceLock<Arc<WordNet>> = OnceLock::new();
    WN.get_or_init(|| Arc::new(WordNet::load(bundled_wordnet_dir()).unwrap()))
        .clone()
}

fn fixture() -> Vec<StoryPair> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/trip_fixture.jsonl");
    load_dataset(path, &AttributeSchema::trip_default()).unwrap()
}

fn pizza() -> AnnotatedStory {
    AnnotatedStory::from_sentences(&[
        "Mary put the pizza in the oven.",
        "Mary heated the pizza.",
        "Mary ate the pizza.",
    ])
    .with_participant("mary", true)
    .with_participant("pizza", false)
    .with_participant("oven", false)
}

fn active_prompt(story: &AnnotatedStory) -> String {
    build_code_prompt(
        story,
        &story.participants,
        &[],
        &[],
        &PromptMode::ActiveDetection {
            attribute: "temperature".into(),
        },
    )
}

fn state_prompt(story: &AnnotatedStory, participant: &str) -> String {
    build_code_prompt(
        story,
        &story.participants,
        &[],
        &[],
        &PromptMode::StateAnnotation {
            participant: participant.into(),
            attribute: "temperature".into(),
        },
    )
}

fn detect(story: &AnnotatedStory, service: &dyn CompletionService) -> (Vec<Vec<String>>, Vec<String>) {
    let mut warnings = Vec::new();
    let active = detect_active(
        story,
        &story.participants,
        "temperature",
        &[],
        service,
        &CompletionParams::default(),
        &mut warnings,
    )
    .unwrap();
    (active, warnings.into_iter().map(|w| w.message).collect())
}

#[test]
fn step_list_completion_sets_active_participants() {
    let story = pizza();
    let mock = MockCompletionService::new(MockFallback::Fail).with(active_prompt(&story), "step_2: [pizza]");
    let (active, warnings) = detect(&story, &mock);
    assert_eq!(active[2], ["pizza"]);
    assert!(active[0].is_empty() && active[1].is_empty());
    assert_eq!(mock.calls(), 2, "incomplete answer is retried once");
    assert!(warnings.iter().any(|w| w.contains("step 0")));
}

#[test]
fn unknown_names_are_discarded() {
    let story = pizza();
    let mock = MockCompletionService::new(MockFallback::Fail)
        .with(active_prompt(&story), "step_0: []\nstep_1: [p_1, ghost]\nstep_2: []\n");
    let (active, warnings) = detect(&story, &mock);
    assert_eq!(active[1], ["pizza"]);
    assert_eq!(mock.calls(), 1);
    assert!(warnings.iter().any(|w| w.contains("ghost")));
}

struct GarbageThenGood(AtomicU32);

impl CompletionService for GarbageThenGood {
    fn model(&self) -> &str {
        "test"
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, ServiceError> {
        self.0.fetch_add(1, Ordering::SeqCst);
        Ok(if request.attempt == 0 {
            "I think the pizza gets hot".into()
        } else {
            "step_0: []\nstep_1: [p_1]\nstep_2: []".into()
        })
    }
}

#[test]
fn malformed_completion_is_retried_once() {
    let service = GarbageThenGood(AtomicU32::new(0));
    let (active, warnings) = detect(&pizza(), &service);
    assert_eq!(service.0.load(Ordering::SeqCst), 2);
    assert_eq!(active, vec![vec![], vec!["pizza".to_string()], vec![]]);
    assert!(warnings.is_empty());
}

#[test]
fn persistent_garbage_yields_empty_sets_with_warnings() {
    let mock = MockCompletionService::new(MockFallback::Empty);
    let (active, warnings) = detect(&pizza(), &mock);
    assert!(active.iter().all(Vec::is_empty));
    assert_eq!(warnings.len(), 3);
}

#[test]
fn heating_makes_pizza_active_for_temperature() {
    let mock = MockCompletionService::new(MockFallback::Rules);
    let (active, _) = detect(&pizza(), &mock);
    assert_eq!(active[1], ["pizza"]);
    assert!(active[0].is_empty());
}

fn states(completion: Option<&str>, steps: &[usize]) -> (Vec<(usize, String, String)>, Vec<String>) {
    let story = pizza();
    let mut mock = MockCompletionService::new(MockFallback::Fail);
    if let Some(c) = completion {
        mock = mock.with(state_prompt(&story, "pizza"), c);
    }
    let mut warnings = Vec::new();
    let out = annotate_states(
        &story,
        &story.participants,
        "pizza",
        "temperature",
        steps,
        &[],
        &mock,
        &AttributeSchema::trip_default(),
        &CompletionParams::default(),
        &mut warnings,
    );
    (
        out.into_iter().map(|a| (a.step, a.precondition, a.effect)).collect(),
        warnings.into_iter().map(|w| w.message).collect(),
    )
}

#[test]
fn bare_effect_line_labels_first_active_step() {
    let (out, warnings) = states(Some("temperature.effect = high"), &[1]);
    assert_eq!(out, [(1, "irrelevant".to_string(), "high".to_string())]);
    assert!(warnings.is_empty());
}

#[test]
fn out_of_space_label_becomes_irrelevant() {
    let text =
        "def step_1():\n    p_1.temperature.precondition = \"lukewarm\"\n    p_1.temperature.effect = \"high\"\n";
    let (out, warnings) = states(Some(text), &[1]);
    assert_eq!(out, [(1, "irrelevant".to_string(), "high".to_string())]);
    assert!(warnings.iter().any(|w| w.contains("lukewarm")));
}

#[test]
fn inactive_steps_are_ignored() {
    let text =
        "def step_0():\n    p_1.temperature.effect = \"high\"\ndef step_1():\n    p_1.temperature.effect = \"low\"\n";
    let (out, _) = states(Some(text), &[1]);
    assert_eq!(out, [(1, "irrelevant".to_string(), "low".to_string())]);
}

#[test]
fn service_failure_skips_and_records() {
    let (out, warnings) = states(None, &[1, 2]);
    assert!(out.is_empty());
    assert!(warnings[0].contains("skipped"));
}

fn labeler(pool: bool) -> Labeler {
    let wn = wordnet();
    let extractor = Extractor {
        parser: Arc::new(FallbackParser::new(wn.clone())),
        selector: Arc::new(MostFrequentSense::new(wn.clone(), Roots::WORDNET_30)),
        lexicon: wn,
        roots: Roots::WORDNET_30,
        ontology: OntologyConfig::default(),
        stages: Default::default(),
    };
    let pool = pool.then(|| {
        let stories = fixture().into_iter().map(|p| p.plausible).collect();
        Arc::new(DemonstrationPool::build(stories, &HashingEmbedder::default()).unwrap())
    });
    Labeler::new(
        extractor,
        Arc::new(MockCompletionService::new(MockFallback::Rules)),
        Arc::new(HashingEmbedder::default()),
        pool,
        AttributeSchema::trip_default(),
        LabelerConfig::default(),
    )
    .unwrap()
}

#[test]
fn labeled_stories_are_closed_and_valid() {
    let lab = labeler(true);
    let schema = AttributeSchema::trip_default();
    let mut total = 0;
    for pair in fixture().iter().take(5) {
        let out = lab.label_story(&pair.plausible.sentences).unwrap();
        assert!(validate_story(&out.story, &schema, "story").is_empty());
        let names = out.story.participant_names();
        assert!(out
            .story
            .annotations
            .iter()
            .all(|a| names.contains(&a.participant.as_str())));
        assert!(out.story.label.is_none());
        total += out.story.annotations.len();
    }
    assert!(total > 0);
}

#[test]
fn labeling_is_deterministic() {
    let story = &fixture()[1].implausible.sentences;
    let a = serde_json::to_string(&labeler(true).label_story(story).unwrap()).unwrap();
    let b = serde_json::to_string(&labeler(true).label_story(story).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn story_without_physical_participants_has_no_annotations() {
    let out = labeler(false)
        .label_story(&["It was fun.".to_string(), "The idea seemed good.".to_string()])
        .unwrap();
    assert!(out.story.participants.is_empty());
    assert!(out.story.annotations.is_empty());
}

#[test]
fn unknown_attribute_in_config_is_rejected() {
    let lab = labeler(false);
    let config = LabelerConfig {
        attributes: Some(vec!["colour".into()]),
        ..LabelerConfig::default()
    };
    let err = Labeler::new(lab.extractor, lab.service, lab.embedder, None, lab.schema, config);
    assert!(err.is_err());
}

#[test]
fn cache_serves_repeat_requests() {
    let dir = tempfile::tempdir().unwrap();
    let cached = CachedService::new(MockCompletionService::new(MockFallback::Rules), dir.path()).unwrap();
    let mut request = CompletionRequest::new(active_prompt(&pizza()), &[], 64);
    let first = cached.complete(&request).unwrap();
    assert_eq!(cached.complete(&request).unwrap(), first);
    assert_eq!(cached.inner().calls(), 1);
    request.attempt = 1;
    cached.complete(&request).unwrap();
    assert_eq!(cached.inner().calls(), 2);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
}

/// Serves the given status/body pairs, one per connection.
fn fake_server(responses: Vec<(u16, &'static str)>) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        for (status, body) in responses {
            let (mut stream, _) = listener.accept().unwrap();
            let mut buf = [0u8; 65536];
            let mut read = 0;
            loop {
                let n = stream.read(&mut buf[read..]).unwrap();
                read += n;
                let text = String::from_utf8_lossy(&buf[..read]);
                if let Some(head_end) = text.find("\r\n\r\n") {
                    let len = text[..head_end]
                        .lines()
                        .find_map(|l| {
                            l.to_lowercase()
                                .strip_prefix("content-length:")
                                .map(|v| v.trim().parse::<usize>().unwrap())
                        })
                        .unwrap_or(0);
                    if read >= head_end + 4 + len {
                        break;
                    }
                }
                if n == 0 {
                    break;
                }
            }
            let reply = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(reply.as_bytes()).unwrap();
        }
    });
    format!("http://{addr}/v1/completions")
}

fn http(endpoint: String) -> HttpCompletionService {
    HttpCompletionService::new(HttpConfig {
        endpoint,
        model: "test-model".into(),
        api_key_env: None,
        max_attempts: 3,
        backoff_ms: 1,
        timeout_s: 5,
        requests_per_minute: 0,
        max_concurrent: 2,
    })
}

#[test]
fn http_client_retries_server_errors() {
    let endpoint = fake_server(vec![
        (500, "{}"),
        (503, "{}"),
        (200, r#"{"choices":[{"text":"step_0: []"}]}"#),
    ]);
    let out = http(endpoint)
        .complete(&CompletionRequest::new("x".into(), &[], 8))
        .unwrap();
    assert_eq!(out, "step_0: []");
}

#[test]
fn http_client_gives_up_after_three_attempts() {
    let endpoint = fake_server(vec![(500, "{}"), (500, "{}"), (500, "{}")]);
    let err = http(endpoint)
        .complete(&CompletionRequest::new("x".into(), &[], 8))
        .unwrap_err();
    assert!(matches!(err, ServiceError::Unavailable { attempts: 3, .. }));
}

#[test]
fn http_client_does_not_retry_bad_requests() {
    let endpoint = fake_server(vec![(400, r#"{"error":"bad"}"#)]);
    let err = http(endpoint)
        .complete(&CompletionRequest::new("x".into(), &[], 8))
        .unwrap_err();
    assert!(matches!(err, ServiceError::BadResponse(_)));
}

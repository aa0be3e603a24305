//! Completion services: a deterministic mock, an HTTP client with retry and rate
//! limiting, and a file cache keyed by request hash.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use procstory_core::text::find_word_spans;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabelerError, Result, ServiceError};
use crate::prompt::TRACK_PREFIX;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub stop: Vec<String>,
    pub max_tokens: u32,
    /// 0 for the first try; retries of a malformed answer use higher values.
    pub attempt: u32,
}

impl CompletionRequest {
    pub fn new(prompt: String, stop: &[String], max_tokens: u32) -> Self {
        Self {
            prompt,
            stop: stop.to_vec(),
            max_tokens,
            attempt: 0,
        }
    }
}

/// Text completion at temperature 0.
pub trait CompletionService: Send + Sync {
    fn model(&self) -> &str;
    fn complete(&self, request: &CompletionRequest) -> Result<String, ServiceError>;
}

/// What the mock does for prompts missing from its table.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MockFallback {
    /// Return an empty completion.
    Empty,
    /// Fail with `NoCompletion`.
    #[default]
    Fail,
    /// Answer from verb cues in the query story.
    Rules,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockEntry {
    pub prompt: String,
    pub completion: String,
}

/// Deterministic prompt-to-completion table.
#[derive(Debug, Default)]
pub struct MockCompletionService {
    table: BTreeMap<String, String>,
    fallback: MockFallback,
    calls: AtomicUsize,
}

impl MockCompletionService {
    pub fn new(fallback: MockFallback) -> Self {
        Self {
            fallback,
            ..Self::default()
        }
    }

    pub fn with(mut self, prompt: impl Into<String>, completion: impl Into<String>) -> Self {
        self.table.insert(prompt.into(), completion.into());
        self
    }

    pub fn from_entries(entries: Vec<MockEntry>, fallback: MockFallback) -> Self {
        let mut mock = Self::new(fallback);
        for e in entries {
            mock.table.insert(e.prompt, e.completion);
        }
        mock
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl CompletionService for MockCompletionService {
    fn model(&self) -> &str {
        "mock"
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, ServiceError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        if let Some(c) = self.table.get(&request.prompt) {
            return Ok(c.clone());
        }
        match self.fallback {
            MockFallback::Empty => Ok(String::new()),
            MockFallback::Fail => Err(ServiceError::NoCompletion(short_hash(&request.prompt))),
            MockFallback::Rules => Ok(rule_completion(&request.prompt)),
        }
    }
}

fn short_hash(text: &str) -> String {
    hex::encode(&Sha256::digest(text.as_bytes())[..8])
}

struct Cue {
    attribute: &'static str,
    stems: &'static [&'static str],
    pre: &'static str,
    effect: &'static str,
}

const CUES: &[Cue] = &[
    Cue {
        attribute: "temperature",
        stems: &[
            "heat", "warm", "boil", "cook", "bak", "microwav", "fri", "fry", "toast", "burn", "grill",
        ],
        pre: "low",
        effect: "high",
    },
    Cue {
        attribute: "temperature",
        stems: &["froze", "freez", "cool", "chill", "refrigerat"],
        pre: "high",
        effect: "low",
    },
    Cue {
        attribute: "location",
        stems: &["pick", "grab", "took", "take", "lift"],
        pre: "irrelevant",
        effect: "picked up",
    },
    Cue {
        attribute: "location",
        stems: &["put", "plac", "set", "drop", "laid", "lay"],
        pre: "irrelevant",
        effect: "put down",
    },
    Cue {
        attribute: "location",
        stems: &[
            "threw", "throw", "mov", "carri", "carry", "brought", "bring", "hung", "hang",
        ],
        pre: "irrelevant",
        effect: "moved somewhere new",
    },
    Cue {
        attribute: "open",
        stems: &["open"],
        pre: "false",
        effect: "true",
    },
    Cue {
        attribute: "open",
        stems: &["clos", "shut"],
        pre: "true",
        effect: "false",
    },
    Cue {
        attribute: "power",
        stems: &["unplug"],
        pre: "true",
        effect: "false",
    },
    Cue {
        attribute: "power",
        stems: &["plug", "charg"],
        pre: "false",
        effect: "true",
    },
    Cue {
        attribute: "clean",
        stems: &["wash", "clean", "rins", "wip", "scrub"],
        pre: "false",
        effect: "true",
    },
    Cue {
        attribute: "clean",
        stems: &["spill", "stain", "dirt", "muddi"],
        pre: "true",
        effect: "false",
    },
    Cue {
        attribute: "wet",
        stems: &["wash", "rins", "soak", "spill", "pour", "water"],
        pre: "false",
        effect: "true",
    },
    Cue {
        attribute: "wet",
        stems: &["dri", "dry"],
        pre: "true",
        effect: "false",
    },
    Cue {
        attribute: "exist",
        stems: &["ate", "eat", "drank", "drink", "burn", "destroy"],
        pre: "true",
        effect: "false",
    },
    Cue {
        attribute: "edible",
        stems: &["burn", "spoil", "rot"],
        pre: "true",
        effect: "false",
    },
    Cue {
        attribute: "functional",
        stems: &["broke", "break", "smash", "crack"],
        pre: "true",
        effect: "false",
    },
    Cue {
        attribute: "functional",
        stems: &["fix", "repair"],
        pre: "false",
        effect: "true",
    },
    Cue {
        attribute: "pieces",
        stems: &[
            "broke", "break", "cut", "slic", "chop", "peel", "tore", "tear", "shred", "smash",
        ],
        pre: "false",
        effect: "true",
    },
    Cue {
        attribute: "wearing",
        stems: &["wore", "wear", "dress"],
        pre: "false",
        effect: "true",
    },
    Cue {
        attribute: "h_wet",
        stems: &["shower", "bath", "swim", "swam"],
        pre: "false",
        effect: "true",
    },
    Cue {
        attribute: "hygiene",
        stems: &["shower", "bath", "brush"],
        pre: "false",
        effect: "true",
    },
    Cue {
        attribute: "conscious",
        stems: &["woke", "wake"],
        pre: "false",
        effect: "true",
    },
    Cue {
        attribute: "conscious",
        stems: &["slept", "sleep", "fell asleep"],
        pre: "true",
        effect: "false",
    },
    Cue {
        attribute: "contain",
        stems: &["fill", "pour"],
        pre: "false",
        effect: "true",
    },
    Cue {
        attribute: "contain",
        stems: &["empt"],
        pre: "true",
        effect: "false",
    },
    Cue {
        attribute: "solid",
        stems: &["melt"],
        pre: "true",
        effect: "false",
    },
    Cue {
        attribute: "running",
        stems: &["start", "ran", "run"],
        pre: "false",
        effect: "true",
    },
    Cue {
        attribute: "running",
        stems: &["stop"],
        pre: "true",
        effect: "false",
    },
    Cue {
        attribute: "mixed",
        stems: &["stir", "mix", "blend"],
        pre: "false",
        effect: "true",
    },
    Cue {
        attribute: "h_location",
        stems: &["went", "walk", "left", "arriv", "came", "drove", "return"],
        pre: "irrelevant",
        effect: "moved somewhere new",
    },
];

/// Attributes describing the sentence's subject rather than its objects.
const SUBJECT_ATTRIBUTES: &[&str] = &["h_location", "conscious", "hygiene", "h_wet"];

struct QueryStory {
    track_var: Option<String>,
    attribute: String,
    nodes: Vec<(String, String)>,
    steps: Vec<(usize, String)>,
}

fn parse_query(prompt: &str) -> Option<QueryStory> {
    let at = prompt.rfind(&format!("\n{TRACK_PREFIX}"))? + 1;
    let mut lines = prompt[at..].lines();
    let track = lines.next()?.strip_prefix(TRACK_PREFIX)?.trim().to_string();
    let (track_var, attribute) = match track.split_once('.') {
        Some((v, a)) => (Some(v.to_string()), a.to_string()),
        None => (None, track),
    };
    let mut nodes = Vec::new();
    let mut steps = Vec::new();
    for line in lines {
        if let Some((var, rest)) = line.split_once(" = Node(\"") {
            nodes.push((var.to_string(), rest.trim_end_matches("\")").replace("\\\"", "\"")));
        } else if let Some(rest) = line.strip_prefix("def step_") {
            if let Some((j, sentence)) = rest.split_once("():  # ") {
                steps.push((j.parse().ok()?, sentence.to_string()));
            }
        }
    }
    Some(QueryStory {
        track_var,
        attribute,
        nodes,
        steps,
    })
}

/// First cue of `attribute` present in `sentence`, with the byte offset of its word.
fn find_cue(attribute: &str, sentence: &str) -> Option<(&'static Cue, usize)> {
    let lower = sentence.to_lowercase();
    let words: Vec<(usize, &str)> = lower
        .split(|c: char| !c.is_alphanumeric())
        .scan(0usize, |pos, w| {
            let start = *pos;
            *pos += w.len() + 1;
            Some((start, w))
        })
        .filter(|(_, w)| !w.is_empty())
        .collect();
    for cue in CUES.iter().filter(|c| c.attribute == attribute) {
        for &(offset, w) in &words {
            if cue.stems.iter().any(|s| stem_matches(s, w)) {
                return Some((cue, offset));
            }
        }
    }
    None
}

const SHORT_STEM_SUFFIXES: &[&str] = &["", "s", "es", "d", "ed", "ing", "ted", "ting", "ped", "ping", "ten"];

/// Stems of up to three letters only take inflectional suffixes; longer ones are prefixes.
fn stem_matches(stem: &str, word: &str) -> bool {
    if stem.len() > 3 {
        return word.starts_with(stem);
    }
    word.strip_prefix(stem)
        .is_some_and(|rest| SHORT_STEM_SUFFIXES.contains(&rest))
}

fn is_affected(attribute: &str, sentence: &str, surface: &str, cue_at: usize) -> bool {
    let Some(&(start, _)) = find_word_spans(sentence, surface).first() else {
        return false;
    };
    if SUBJECT_ATTRIBUTES.contains(&attribute) {
        start < cue_at
    } else {
        start > cue_at
    }
}

/// Completion derived from verb cues: a participant is active when it follows a cue
/// verb of the tracked attribute (or precedes it, for attributes of the subject).
pub fn rule_completion(prompt: &str) -> String {
    let Some(q) = parse_query(prompt) else {
        return String::new();
    };
    let mut out = String::new();
    for (j, sentence) in &q.steps {
        let cue = find_cue(&q.attribute, sentence);
        let active: Vec<&str> = q
            .nodes
            .iter()
            .filter(|(_, surface)| cue.is_some_and(|(_, at)| is_affected(&q.attribute, sentence, surface, at)))
            .map(|(v, _)| v.as_str())
            .collect();
        match &q.track_var {
            None => out.push_str(&format!("step_{j}: [{}]\n", active.join(", "))),
            Some(var) if active.contains(&var.as_str()) => {
                let (cue, _) = cue.expect("active implies a cue");
                out.push_str(&format!(
                    "def step_{j}():\n    {var}.{a}.precondition = \"{}\"\n    {var}.{a}.effect = \"{}\"\n",
                    cue.pre,
                    cue.effect,
                    a = q.attribute
                ));
            }
            Some(_) => {}
        }
    }
    out
}

/// Spaces requests at least `min_interval` apart and bounds concurrent requests.
#[derive(Debug)]
pub struct RateLimiter {
    min_interval: Duration,
    max_concurrent: usize,
    next_slot: Mutex<Instant>,
    in_flight: Mutex<usize>,
    freed: Condvar,
}

pub struct Permit<'a>(&'a RateLimiter);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.0.freed.notify_one();
    }
}

impl RateLimiter {
    pub fn new(requests_per_minute: u32, max_concurrent: usize) -> Self {
        let min_interval = if requests_per_minute == 0 {
            Duration::ZERO
        } else {
            Duration::from_secs_f64(60.0 / f64::from(requests_per_minute))
        };
        Self {
            min_interval,
            max_concurrent: max_concurrent.max(1),
            next_slot: Mutex::new(Instant::now()),
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.max_concurrent {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        drop(n);
        let wait = {
            let mut slot = self.next_slot.lock().unwrap_or_else(|e| e.into_inner());
            let now = Instant::now();
            let start = (*slot).max(now);
            *slot = start + self.min_interval;
            start - now
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
        Permit(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpConfig {
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the bearer token, if any.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_attempts")]
    pub max_attempts: u32,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    #[serde(default = "default_timeout_s")]
    pub timeout_s: u64,
    #[serde(default = "default_rpm")]
    pub requests_per_minute: u32,
    #[serde(default = "default_concurrency")]
    pub max_concurrent: usize,
}

fn default_attempts() -> u32 {
    3
}
fn default_backoff_ms() -> u64 {
    500
}
fn default_timeout_s() -> u64 {
    60
}
fn default_rpm() -> u32 {
    60
}
fn default_concurrency() -> usize {
    4
}

/// OpenAI-style `/completions` client.
pub struct HttpCompletionService {
    config: HttpConfig,
    agent: ureq::Agent,
    limiter: RateLimiter,
}

impl HttpCompletionService {
    pub fn new(config: HttpConfig) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(config.timeout_s))
            .build();
        let limiter = RateLimiter::new(config.requests_per_minute, config.max_concurrent);
        Self { config, agent, limiter }
    }

    fn send(&self, request: &CompletionRequest) -> std::result::Result<String, (bool, String)> {
        let body = serde_json::json!({
            "model": self.config.model,
            "prompt": request.prompt,
            "max_tokens": request.max_tokens,
            "temperature": 0,
            "stop": request.stop,
        });
        let mut call = self
            .agent
            .post(&self.config.endpoint)
            .set("Content-Type", "application/json");
        if let Some(var) = &self.config.api_key_env {
            if let Ok(key) = std::env::var(var) {
                call = call.set("Authorization", &format!("Bearer {key}"));
            }
        }
        let _permit = self.limiter.acquire();
        let response = match call.send_json(body) {
            Ok(r) => r,
            Err(ureq::Error::Status(code, r)) => {
                let retryable = code == 429 || code >= 500;
                let text = r.into_string().unwrap_or_default();
                return Err((
                    retryable,
                    format!("HTTP {code}: {}", text.chars().take(200).collect::<String>()),
                ));
            }
            Err(e) => return Err((true, e.to_string())),
        };
        let value: serde_json::Value = response.into_json().map_err(|e| (false, e.to_string()))?;
        value["choices"][0]["text"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| (false, "response has no choices[0].text".to_string()))
    }
}

impl CompletionService for HttpCompletionService {
    fn model(&self) -> &str {
        &self.config.model
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, ServiceError> {
        let attempts = self.config.max_attempts.max(1);
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(self.config.backoff_ms << (attempt - 1)));
            }
            match self.send(request) {
                Ok(text) => return Ok(text),
                Err((false, message)) => return Err(ServiceError::BadResponse(message)),
                Err((true, message)) => last = message,
            }
        }
        Err(ServiceError::Unavailable { attempts, last })
    }
}

/// Wraps a service with a directory of cached completions. Entries are written to a
/// temporary file and renamed, so concurrent writers never expose partial files.
pub struct CachedService<S> {
    inner: S,
    dir: PathBuf,
}

impl<S: CompletionService> CachedService<S> {
    pub fn new(inner: S, dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|source| LabelerError::Io {
            path: dir.clone(),
            source,
        })?;
        Ok(Self { inner, dir })
    }

    pub fn key(&self, request: &CompletionRequest) -> String {
        let mut h = Sha256::new();
        let stop = serde_json::to_string(&request.stop).unwrap_or_default();
        for part in [
            self.inner.model(),
            &request.prompt,
            &stop,
            &request.max_tokens.to_string(),
        ] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part.as_bytes());
        }
        if request.attempt > 0 {
            h.update(request.attempt.to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.txt"))
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }
}

fn write_atomic(path: &Path, text: &str) -> std::io::Result<()> {
    static COUNTER: AtomicUsize = AtomicUsize::new(0);
    let tmp = path.with_extension(format!(
        "tmp{}-{}",
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::SeqCst)
    ));
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)
}

impl<S: CompletionService> CompletionService for CachedService<S> {
    fn model(&self) -> &str {
        self.inner.model()
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, ServiceError> {
        let path = self.path(&self.key(request));
        if let Ok(text) = fs::read_to_string(&path) {
            return Ok(text);
        }
        let text = self.inner.complete(request)?;
        let _ = write_atomic(&path, &text);
        Ok(text)
    }
}

impl<S: CompletionService + ?Sized> CompletionService for std::sync::Arc<S> {
    fn model(&self) -> &str {
        (**self).model()
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, ServiceError> {
        (**self).complete(request)
    }
}

//! Code-style prompts: each participant is a `Node`, each sentence a `step_<j>` function.
//! Also parses completions written in the same grammar.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use procstory_core::text::{find_word_spans, normalize_surface};
use procstory_core::{AnnotatedStory, Participant, StateAnnotation};
use regex::Regex;
use serde::{Deserialize, Serialize};

pub const CLASS_HEADER: &str = "class Node: ...";
pub const OPEN_MARKER: &str = "# complete below";
pub const TRACK_PREFIX: &str = "# track: ";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PromptMode {
    /// Which participants change `attribute` at each step.
    ActiveDetection { attribute: String },
    /// Precondition and effect of `attribute` for one participant.
    StateAnnotation { participant: String, attribute: String },
}

impl PromptMode {
    pub fn attribute(&self) -> &str {
        match self {
            PromptMode::ActiveDetection { attribute } | PromptMode::StateAnnotation { attribute, .. } => attribute,
        }
    }
}

/// An annotated in-domain story shown before the query. In state mode `participant`
/// names the participant whose states are shown.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demonstration {
    pub story: AnnotatedStory,
    pub participant: Option<String>,
}

/// Participants sorted by first mention (sentence, then byte offset); unmentioned ones
/// follow in surface order.
pub fn canonical_order(sentences: &[String], participants: &[Participant]) -> Vec<Participant> {
    type Keyed = (Option<(usize, usize)>, String, Participant);
    let mut keyed: Vec<Keyed> = participants
        .iter()
        .map(|p| {
            let first = sentences
                .iter()
                .enumerate()
                .find_map(|(s, text)| find_word_spans(text, &p.surface).first().map(|&(start, _)| (s, start)));
            (first, normalize_surface(&p.surface), p.clone())
        })
        .collect();
    keyed.sort_by(|a, b| match (a.0, b.0) {
        (Some(x), Some(y)) => x.cmp(&y).then_with(|| a.1.cmp(&b.1)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.1.cmp(&b.1),
    });
    keyed.dedup_by(|a, b| a.1 == b.1);
    keyed.into_iter().map(|(_, _, p)| p).collect()
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' | '\\' => {
                out.push('\\');
                out.push(c);
            }
            '\n' | '\r' => out.push(' '),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn var_of(order: &[Participant], surface: &str) -> Option<String> {
    let key = normalize_surface(surface);
    order
        .iter()
        .position(|p| normalize_surface(&p.surface) == key)
        .map(|i| format!("p_{i}"))
}

fn state_lines(var: &str, attribute: &str, ann: &StateAnnotation) -> String {
    format!(
        "    {var}.{attribute}.precondition = {}\n    {var}.{attribute}.effect = {}\n",
        quote(&ann.precondition),
        quote(&ann.effect)
    )
}

enum Body<'a> {
    Active(&'a str),
    State { participant: String, attribute: &'a str },
}

fn render_story(
    out: &mut String,
    sentences: &[String],
    participants: &[Participant],
    annotations: &[StateAnnotation],
    body: Body,
    open: bool,
) {
    let order = canonical_order(sentences, participants);
    let track = match &body {
        Body::Active(attribute) => attribute.to_string(),
        Body::State { participant, attribute } => {
            let var = var_of(&order, participant).unwrap_or_else(|| "p_?".into());
            format!("{var}.{attribute}")
        }
    };
    out.push_str(TRACK_PREFIX);
    out.push_str(&track);
    out.push('\n');
    for (i, p) in order.iter().enumerate() {
        out.push_str(&format!("p_{i} = Node({})\n", quote(&normalize_surface(&p.surface))));
    }
    for (j, sentence) in sentences.iter().enumerate() {
        if !open || j == 0 {
            out.push('\n');
        }
        out.push_str(&format!("def step_{j}():  # {}\n", one_line(sentence)));
        let rendered = match &body {
            Body::Active(attribute) => {
                if open {
                    None
                } else {
                    let active: Vec<String> = order
                        .iter()
                        .enumerate()
                        .filter(|(_, p)| {
                            let key = normalize_surface(&p.surface);
                            annotations.iter().any(|a| {
                                a.step == j && a.attribute == *attribute && normalize_surface(&a.participant) == key
                            })
                        })
                        .map(|(i, _)| format!("p_{i}"))
                        .collect();
                    Some(format!("    active = [{}]\n", active.join(", ")))
                }
            }
            Body::State { participant, attribute } => {
                let key = normalize_surface(participant);
                let var = var_of(&order, participant).unwrap_or_else(|| "p_?".into());
                match annotations
                    .iter()
                    .find(|a| a.step == j && a.attribute == *attribute && normalize_surface(&a.participant) == key)
                {
                    Some(ann) => Some(state_lines(&var, attribute, ann)),
                    None if open => None,
                    None => Some("    pass\n".into()),
                }
            }
        };
        if let Some(text) = rendered {
            out.push_str(&text);
        }
    }
    if open {
        out.push_str("    ");
        out.push_str(OPEN_MARKER);
        out.push('\n');
    }
}

/// Demonstration participant for state mode: the named one, else the first (canonical
/// order) with an annotation of the attribute, else the first participant.
fn demo_participant(demo: &Demonstration, attribute: &str) -> Option<String> {
    if let Some(p) = &demo.participant {
        return Some(p.clone());
    }
    let order = canonical_order(&demo.story.sentences, &demo.story.participants);
    order
        .iter()
        .find(|p| {
            let key = normalize_surface(&p.surface);
            demo.story
                .annotations
                .iter()
                .any(|a| a.attribute == attribute && normalize_surface(&a.participant) == key)
        })
        .or(order.first())
        .map(|p| p.surface.clone())
}

/// Demonstrations first, then the query story with its answer region left open. In state
/// mode, steps already labeled in `annotations_so_far` are rendered like demonstrations.
pub fn build_code_prompt(
    story: &AnnotatedStory,
    participants: &[Participant],
    annotations_so_far: &[StateAnnotation],
    demonstrations: &[Demonstration],
    mode: &PromptMode,
) -> String {
    let mut out = String::new();
    out.push_str(CLASS_HEADER);
    out.push('\n');
    let attribute = mode.attribute();
    for demo in demonstrations {
        out.push_str("\n\n");
        let body = match mode {
            PromptMode::ActiveDetection { .. } => Body::Active(attribute),
            PromptMode::StateAnnotation { .. } => match demo_participant(demo, attribute) {
                Some(participant) => Body::State { participant, attribute },
                None => Body::Active(attribute),
            },
        };
        render_story(
            &mut out,
            &demo.story.sentences,
            &demo.story.participants,
            &demo.story.annotations,
            body,
            false,
        );
    }
    out.push_str("\n\n");
    let body = match mode {
        PromptMode::ActiveDetection { .. } => Body::Active(attribute),
        PromptMode::StateAnnotation { participant, .. } => Body::State {
            participant: participant.clone(),
            attribute,
        },
    };
    render_story(&mut out, &story.sentences, participants, annotations_so_far, body, true);
    out
}

/// One `<participant>.<attribute>.<slot> = <label>` line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateLine {
    pub step: Option<usize>,
    /// Resolved surface; `None` when the line omits the variable.
    pub participant: Option<String>,
    pub attribute: String,
    pub effect: bool,
    pub label: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedCompletion {
    /// Step index to participant surfaces, in completion order.
    pub active: BTreeMap<usize, Vec<String>>,
    pub states: Vec<StateLine>,
    /// Names that did not resolve to a participant.
    pub unknown: Vec<String>,
    /// Lines that fit no production of the grammar.
    pub malformed: Vec<String>,
}

struct Patterns {
    def: Regex,
    step_list: Regex,
    active: Regex,
    state: Regex,
    node: Regex,
}

fn patterns() -> &'static Patterns {
    static P: OnceLock<Patterns> = OnceLock::new();
    P.get_or_init(|| Patterns {
        def: Regex::new(r"^def\s+step_(\d+)\s*\(\s*\)\s*:").unwrap(),
        step_list: Regex::new(r"^step_(\d+)\s*:\s*\[(.*)\]\s*$").unwrap(),
        active: Regex::new(r"^active\s*=\s*\[(.*)\]\s*$").unwrap(),
        state: Regex::new(r#"^(?:(p_\d+)\.)?([A-Za-z_][A-Za-z0-9_]*)\.(precondition|effect)\s*=\s*(?:"((?:[^"\\]|\\.)*)"|'([^']*)'|([^#]*?))\s*(?:#.*)?$"#).unwrap(),
        node: Regex::new(r"^p_\d+\s*=\s*Node\(").unwrap(),
    })
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            if let Some(n) = chars.next() {
                out.push(n);
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Maps `p_<i>` or a bare surface to the participant surface.
fn resolve(name: &str, order: &[Participant]) -> Option<String> {
    let name = name.trim().trim_matches(|c| c == '"' || c == '\'');
    if let Some(i) = name.strip_prefix("p_").and_then(|n| n.parse::<usize>().ok()) {
        return order.get(i).map(|p| p.surface.clone());
    }
    let key = normalize_surface(name);
    order
        .iter()
        .find(|p| normalize_surface(&p.surface) == key)
        .map(|p| p.surface.clone())
}

/// Parses a completion against the prompt grammar. `order` is the canonical participant
/// order used in the prompt. Parsing stops at the start of a new story.
pub fn parse_completion(text: &str, order: &[Participant]) -> ParsedCompletion {
    let pat = patterns();
    let mut parsed = ParsedCompletion::default();
    let mut step: Option<usize> = None;
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with(TRACK_PREFIX.trim_end()) || line.starts_with("class Node") {
            break;
        }
        if line.starts_with('#') || line == "pass" || pat.node.is_match(line) {
            continue;
        }
        let names = |list: &str, parsed: &mut ParsedCompletion| -> Vec<String> {
            let mut out = Vec::new();
            for n in list.split(',').map(str::trim).filter(|n| !n.is_empty()) {
                match resolve(n, order) {
                    Some(s) if !out.contains(&s) => out.push(s),
                    Some(_) => {}
                    None => parsed.unknown.push(n.to_string()),
                }
            }
            out
        };
        if let Some(c) = pat.def.captures(line) {
            step = c[1].parse().ok();
            let rest = line[c.get(0).unwrap().end()..].trim();
            if !rest.is_empty() && !rest.starts_with('#') {
                parsed.malformed.push(raw.to_string());
            }
        } else if let Some(c) = pat.step_list.captures(line) {
            let j: usize = c[1].parse().unwrap_or(usize::MAX);
            let list = names(&c[2], &mut parsed);
            parsed.active.entry(j).or_default().extend(list);
            step = Some(j);
        } else if let Some(c) = pat.active.captures(line) {
            match step {
                Some(j) => {
                    let list = names(&c[1], &mut parsed);
                    parsed.active.entry(j).or_default().extend(list);
                }
                None => parsed.malformed.push(raw.to_string()),
            }
        } else if let Some(c) = pat.state.captures(line) {
            let participant = match c.get(1) {
                Some(v) => match resolve(v.as_str(), order) {
                    Some(s) => Some(s),
                    None => {
                        parsed.unknown.push(v.as_str().to_string());
                        continue;
                    }
                },
                None => None,
            };
            let label = c
                .get(4)
                .map(|m| unescape(m.as_str()))
                .or_else(|| c.get(5).map(|m| m.as_str().to_string()))
                .or_else(|| c.get(6).map(|m| m.as_str().trim().to_string()))
                .unwrap_or_default();
            parsed.states.push(StateLine {
                step,
                participant,
                attribute: c[2].to_string(),
                effect: &c[3] == "effect",
                label,
            });
        } else {
            parsed.malformed.push(raw.to_string());
        }
    }
    for list in parsed.active.values_mut() {
        let mut seen = Vec::new();
        list.retain(|s| {
            let fresh = !seen.contains(s);
            seen.push(s.clone());
            fresh
        });
    }
    parsed
}

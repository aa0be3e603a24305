//! Two-round attribute annotation: active-participant detection, then precondition and
//! effect labeling for each active participant.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use procstory_core::text::normalize_surface;
use procstory_core::{AnnotatedStory, AttributeSchema, Participant, StateAnnotation, StateSlot, IRRELEVANT};
use serde::{Deserialize, Serialize};

use crate::error::{Result, Warning};
use crate::extract::{ExtractionStages, Extractor};
use crate::parse::OntologyConfig;
use crate::prompt::{build_code_prompt, canonical_order, parse_completion, Demonstration, PromptMode};
use crate::retrieval::{DemonstrationPool, Embedder, RetrievalQuery};
use crate::service::{CompletionRequest, CompletionService};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompletionParams {
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default = "default_stop")]
    pub stop: Vec<String>,
}

fn default_max_tokens() -> u32 {
    256
}

fn default_stop() -> Vec<String> {
    vec!["\n# track:".into(), "\nclass Node".into()]
}

impl Default for CompletionParams {
    fn default() -> Self {
        Self {
            max_tokens: default_max_tokens(),
            stop: default_stop(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelerConfig {
    #[serde(default = "default_k_active")]
    pub k_active: usize,
    #[serde(default = "default_k_state")]
    pub k_state: usize,
    #[serde(default)]
    pub completion: CompletionParams,
    #[serde(default)]
    pub ontology: OntologyConfig,
    #[serde(default)]
    pub stages: ExtractionStages,
    /// Attributes to annotate; all schema attributes when absent.
    #[serde(default)]
    pub attributes: Option<Vec<String>>,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_k_active() -> usize {
    3
}

fn default_k_state() -> usize {
    4
}

fn default_workers() -> usize {
    4
}

impl Default for LabelerConfig {
    fn default() -> Self {
        Self {
            k_active: default_k_active(),
            k_state: default_k_state(),
            completion: CompletionParams::default(),
            ontology: OntologyConfig::default(),
            stages: ExtractionStages::default(),
            attributes: None,
            workers: default_workers(),
        }
    }
}

fn ask(service: &dyn CompletionService, prompt: &str, params: &CompletionParams, attempt: u32) -> Result<String> {
    let mut request = CompletionRequest::new(prompt.to_string(), &params.stop, params.max_tokens);
    request.attempt = attempt;
    Ok(service.complete(&request)?)
}

/// Active participant surfaces per step. A malformed or incomplete completion is retried
/// once; steps still missing get an empty set and a warning.
pub fn detect_active(
    story: &AnnotatedStory,
    participants: &[Participant],
    attribute: &str,
    demonstrations: &[Demonstration],
    service: &dyn CompletionService,
    params: &CompletionParams,
    warnings: &mut Vec<Warning>,
) -> Result<Vec<Vec<String>>> {
    let n = story.sentences.len();
    let order = canonical_order(&story.sentences, participants);
    let mode = PromptMode::ActiveDetection {
        attribute: attribute.to_string(),
    };
    let prompt = build_code_prompt(story, participants, &[], demonstrations, &mode);
    let mut parsed = parse_completion(&ask(service, &prompt, params, 0)?, &order);
    let incomplete =
        |p: &crate::prompt::ParsedCompletion| !p.malformed.is_empty() || (0..n).any(|j| !p.active.contains_key(&j));
    if incomplete(&parsed) {
        parsed = parse_completion(&ask(service, &prompt, params, 1)?, &order);
    }
    for line in &parsed.malformed {
        warnings.push(Warning::new(
            "active",
            format!("{attribute}: malformed completion line {:?}", line.trim()),
        ));
    }
    for name in &parsed.unknown {
        warnings.push(Warning::new(
            "active",
            format!("{attribute}: unknown participant {name:?} discarded"),
        ));
    }
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        match parsed.active.get(&j) {
            Some(names) => {
                let mut step: Vec<String> = order
                    .iter()
                    .map(|p| p.surface.clone())
                    .filter(|s| names.contains(s))
                    .collect();
                step.dedup();
                out.push(step);
            }
            None => {
                warnings.push(Warning::new(
                    "active",
                    format!("{attribute}: no answer for step {j}; empty set used"),
                ));
                out.push(Vec::new());
            }
        }
    }
    let extra: BTreeSet<usize> = parsed.active.keys().copied().filter(|&j| j >= n).collect();
    if !extra.is_empty() {
        warnings.push(Warning::new(
            "active",
            format!("{attribute}: answers for nonexistent steps {extra:?} ignored"),
        ));
    }
    Ok(out)
}

fn map_label(
    schema: &AttributeSchema,
    attribute: &str,
    slot: StateSlot,
    label: &str,
    warnings: &mut Vec<Warning>,
) -> String {
    let label = label.trim();
    if schema.label_index(attribute, slot, label).is_some() {
        return label.to_string();
    }
    warnings.push(Warning::new(
        "state",
        format!("{attribute}: label {label:?} outside the {slot:?} space; mapped to {IRRELEVANT:?}"),
    ));
    IRRELEVANT.to_string()
}

/// Precondition and effect labels for `participant` at each of its active steps. A service
/// failure skips the participant and is recorded as a warning. Steps whose labels are both
/// irrelevant are omitted.
#[allow(clippy::too_many_arguments)]
pub fn annotate_states(
    story: &AnnotatedStory,
    participants: &[Participant],
    participant: &str,
    attribute: &str,
    active_steps: &[usize],
    demonstrations: &[Demonstration],
    service: &dyn CompletionService,
    schema: &AttributeSchema,
    params: &CompletionParams,
    warnings: &mut Vec<Warning>,
) -> Vec<StateAnnotation> {
    let Some(&first_active) = active_steps.first() else {
        return Vec::new();
    };
    let participant = normalize_surface(participant);
    let order = canonical_order(&story.sentences, participants);
    let mode = PromptMode::StateAnnotation {
        participant: participant.clone(),
        attribute: attribute.to_string(),
    };
    let prompt = build_code_prompt(story, participants, &[], demonstrations, &mode);
    let completion = match ask(service, &prompt, params, 0) {
        Ok(c) => c,
        Err(e) => {
            warnings.push(Warning::new(
                "state",
                format!("{attribute}/{participant}: steps {active_steps:?} skipped: {e}"),
            ));
            return Vec::new();
        }
    };
    let parsed = parse_completion(&completion, &order);
    for line in &parsed.malformed {
        warnings.push(Warning::new(
            "state",
            format!("{attribute}/{participant}: malformed line {:?}", line.trim()),
        ));
    }
    let mut labels: Vec<(Option<String>, Option<String>)> = vec![(None, None); active_steps.len()];
    for line in &parsed.states {
        if line.attribute != attribute
            || line
                .participant
                .as_ref()
                .is_some_and(|p| normalize_surface(p) != participant)
        {
            continue;
        }
        let step = line.step.unwrap_or(first_active);
        let Some(slot_at) = active_steps.iter().position(|&s| s == step) else {
            continue;
        };
        let (slot, target) = if line.effect {
            (StateSlot::Effect, &mut labels[slot_at].1)
        } else {
            (StateSlot::Precondition, &mut labels[slot_at].0)
        };
        *target = Some(map_label(schema, attribute, slot, &line.label, warnings));
    }
    active_steps
        .iter()
        .zip(labels)
        .filter_map(|(&step, (pre, effect))| {
            let pre = pre.unwrap_or_else(|| IRRELEVANT.to_string());
            let effect = effect.unwrap_or_else(|| IRRELEVANT.to_string());
            (pre != IRRELEVANT || effect != IRRELEVANT).then(|| StateAnnotation {
                participant: participant.clone(),
                step,
                attribute: attribute.to_string(),
                precondition: pre,
                effect,
            })
        })
        .collect()
}

type AttributeLabels = (Vec<StateAnnotation>, Vec<Warning>);

/// All contracts needed to label a story.
#[derive(Clone)]
pub struct Labeler {
    pub extractor: Extractor,
    pub service: Arc<dyn CompletionService>,
    pub embedder: Arc<dyn Embedder>,
    pub pool: Option<Arc<DemonstrationPool>>,
    pub schema: AttributeSchema,
    pub config: LabelerConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledStory {
    pub story: AnnotatedStory,
    pub warnings: Vec<Warning>,
}

impl Labeler {
    pub fn new(
        extractor: Extractor,
        service: Arc<dyn CompletionService>,
        embedder: Arc<dyn Embedder>,
        pool: Option<Arc<DemonstrationPool>>,
        schema: AttributeSchema,
        config: LabelerConfig,
    ) -> Result<Self> {
        config.ontology.validate()?;
        if let Some(attrs) = &config.attributes {
            if let Some(bad) = attrs.iter().find(|a| schema.get(a).is_none()) {
                return Err(crate::error::LabelerError::Config(format!("unknown attribute {bad:?}")));
            }
        }
        let mut extractor = extractor;
        extractor.ontology = config.ontology.clone();
        extractor.stages = config.stages;
        Ok(Self {
            extractor,
            service,
            embedder,
            pool,
            schema,
            config,
        })
    }

    fn attributes(&self) -> Vec<String> {
        match &self.config.attributes {
            Some(a) => a.clone(),
            None => self.schema.attributes().iter().map(|a| a.name.clone()).collect(),
        }
    }

    fn label_attribute(
        &self,
        story: &AnnotatedStory,
        story_embedding: &[f64],
        attribute: &str,
    ) -> Result<AttributeLabels> {
        let mut warnings = Vec::new();
        let participants = &story.participants;
        let all_names = participants
            .iter()
            .map(|p| p.surface.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        let demos = match &self.pool {
            Some(pool) => pool.for_story(
                &RetrievalQuery {
                    story_embedding: story_embedding.to_vec(),
                    participant_embedding: self.embedder.embed(&all_names),
                },
                self.config.k_active,
            )?,
            None => Vec::new(),
        };
        let active = detect_active(
            story,
            participants,
            attribute,
            &demos,
            self.service.as_ref(),
            &self.config.completion,
            &mut warnings,
        )?;
        let mut annotations = Vec::new();
        for p in canonical_order(&story.sentences, participants) {
            let steps: Vec<usize> = (0..active.len()).filter(|&j| active[j].contains(&p.surface)).collect();
            if steps.is_empty() {
                continue;
            }
            let demos = match &self.pool {
                Some(pool) => pool.for_participant(
                    &RetrievalQuery {
                        story_embedding: story_embedding.to_vec(),
                        participant_embedding: self.embedder.embed(&p.surface),
                    },
                    self.config.k_state,
                )?,
                None => Vec::new(),
            };
            annotations.extend(annotate_states(
                story,
                participants,
                &p.surface,
                attribute,
                &steps,
                &demos,
                self.service.as_ref(),
                &self.schema,
                &self.config.completion,
                &mut warnings,
            ));
        }
        Ok((annotations, warnings))
    }

    /// Extracts participants, then annotates every attribute. Attributes run on up to
    /// `workers` threads; results are assembled in attribute order.
    pub fn label_story(&self, sentences: &[String]) -> Result<LabeledStory> {
        let extraction = self.extractor.extract(sentences)?;
        let mut story = AnnotatedStory::new(sentences.to_vec());
        story.participants = extraction.participants;
        story.recompute_mentions();
        let mut warnings = extraction.warnings;
        if story.participants.is_empty() {
            return Ok(LabeledStory { story, warnings });
        }
        let attributes = self.attributes();
        let story_embedding = self.embedder.embed(&story.sentences.join(" "));
        let results: Mutex<Vec<Option<Result<AttributeLabels>>>> =
            Mutex::new((0..attributes.len()).map(|_| None).collect());
        let next = AtomicUsize::new(0);
        let workers = self.config.workers.clamp(1, attributes.len().max(1));
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(attribute) = attributes.get(i) else {
                        break;
                    };
                    let r = self.label_attribute(&story, &story_embedding, attribute);
                    results.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(r);
                });
            }
        });
        for r in results.into_inner().unwrap_or_else(|e| e.into_inner()) {
            let (annotations, w) = r.expect("every attribute processed")?;
            story.annotations.extend(annotations);
            warnings.extend(w);
        }
        Ok(LabeledStory { story, warnings })
    }
}

//! The tiered model: encoder plus attribute, conflict and story heads.

use candle_core::{DType, Device, Tensor};
use candle_nn::VarMap;
use procstory_core::{AnnotatedStory, AttributeSchema};
use serde::{Deserialize, Serialize};

use crate::encoder::{batch_tensors, gather_positions, Encoder, EncoderSpec};
use crate::error::{ModelError, Result};
use crate::heads::{
    to_step_major, AttributeClassifier, AttributeLogits, ConflictDetector, StepRepresentations, StoryClassifier,
};
use crate::input::{InputBuilder, InputConfig, ParticipantSlot, TokenizedInput};
use crate::ops::{sigmoid_f64, softmax_f64};
use crate::params::{ParamStore, Precision};
use crate::prediction::{predict_sentence_centric, PairPrediction, PlausibilityScore, StoryOutput, TieredPrediction};
use crate::tokenizer::Tokenizer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoryMode {
    #[default]
    Single,
    Joint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(default)]
    pub mode: StoryMode,
    #[serde(default)]
    pub input: InputConfig,
    /// Hidden width of the attribute classifiers; defaults to the encoder width.
    #[serde(default)]
    pub head_hidden: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub precision: Precision,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            mode: StoryMode::Single,
            input: InputConfig::default(),
            head_hidden: None,
            seed: 0,
            precision: Precision::F32,
        }
    }
}

/// How a pair decision is made from the aggregated story outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionRule {
    /// Story head output.
    #[default]
    Plausibility,
    /// Negated sum of conflict probabilities.
    ConflictSum,
}

pub struct Heads {
    pub attributes: AttributeClassifier,
    pub conflict: ConflictDetector,
    pub story: StoryClassifier,
}

/// Differentiable outputs for one participant slot over one story.
pub struct SlotOutputs {
    pub reps: StepRepresentations,
    pub attributes: AttributeLogits,
    /// `(n(n-1)/2,)` pre-sigmoid scores.
    pub conflict: Tensor,
    /// `(2,)` logits in single mode, `(1,)` score in joint mode.
    pub story: Tensor,
}

pub struct TieredModel {
    config: ModelConfig,
    schema: AttributeSchema,
    tokenizer: Box<dyn Tokenizer>,
    encoder: Box<dyn Encoder>,
    heads: Heads,
    varmap: VarMap,
    dtype: DType,
}

impl TieredModel {
    pub fn new(
        config: ModelConfig,
        schema: AttributeSchema,
        tokenizer: Box<dyn Tokenizer>,
        encoder: &EncoderSpec,
    ) -> Result<Self> {
        Self::with_encoder(config, schema, tokenizer, |store| encoder.build(store))
    }

    /// Builds the heads around an encoder created by `build` in the same parameter store.
    pub fn with_encoder<F>(
        config: ModelConfig,
        schema: AttributeSchema,
        tokenizer: Box<dyn Tokenizer>,
        build: F,
    ) -> Result<Self>
    where
        F: FnOnce(&mut ParamStore) -> Result<Box<dyn Encoder>>,
    {
        let mut store = ParamStore::new(config.seed, config.precision);
        let encoder = build(&mut store)?;
        let d = encoder.hidden_size();
        let hidden = config.head_hidden.unwrap_or(d);
        if hidden == 0 {
            return Err(ModelError::Config("head_hidden must be positive".into()));
        }
        let heads = Heads {
            attributes: AttributeClassifier::new(&mut store, &schema, d, hidden)?,
            conflict: ConflictDetector::new(&mut store, d)?,
            story: match config.mode {
                StoryMode::Single => StoryClassifier::binary(&mut store, d)?,
                StoryMode::Joint => StoryClassifier::pairwise(&mut store, d)?,
            },
        };
        let dtype = store.dtype();
        Ok(Self {
            config,
            schema,
            tokenizer,
            encoder,
            heads,
            varmap: store.into_varmap(),
            dtype,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn mode(&self) -> StoryMode {
        self.config.mode
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn tokenizer(&self) -> &dyn Tokenizer {
        self.tokenizer.as_ref()
    }

    pub fn encoder(&self) -> &dyn Encoder {
        self.encoder.as_ref()
    }

    pub fn heads(&self) -> &Heads {
        &self.heads
    }

    pub fn varmap(&self) -> &VarMap {
        &self.varmap
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    /// Overwrites one named parameter.
    pub fn set_parameter(&self, name: &str, value: &Tensor) -> Result<()> {
        let data = self.varmap.data().lock().expect("varmap lock poisoned");
        let var = data
            .get(name)
            .ok_or_else(|| ModelError::Config(format!("no parameter named {name}")))?;
        var.set(&value.to_dtype(self.dtype)?)?;
        Ok(())
    }

    /// Replaces every variable with the value stored under the same name.
    pub fn load_weights(&mut self, path: &std::path::Path) -> Result<()> {
        self.varmap.load(path)?;
        Ok(())
    }

    pub fn parameter_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .varmap
            .data()
            .lock()
            .expect("varmap lock poisoned")
            .keys()
            .cloned()
            .collect();
        names.sort();
        names
    }

    fn input_config(&self) -> InputConfig {
        let mut cfg = self.config.input.clone();
        cfg.max_len = cfg.max_len.min(self.encoder.max_positions());
        cfg
    }

    /// One input sequence per step for `slot`.
    pub fn build_inputs(&self, slot: &ParticipantSlot, story: &AnnotatedStory) -> Result<Vec<TokenizedInput>> {
        let cfg = self.input_config();
        InputBuilder::new(self.tokenizer.as_ref(), &cfg).build_story_sequences(slot, story)
    }

    /// Encodes the per-step sequences in one batch and gathers the head tokens.
    pub fn encode_inputs(&self, inputs: &[TokenizedInput]) -> Result<StepRepresentations> {
        if inputs.is_empty() {
            return Err(ModelError::EmptyStory);
        }
        let rows: Vec<(&[u32], &[u32])> = inputs
            .iter()
            .map(|i| (i.token_ids.as_slice(), i.timestep_ids.as_slice()))
            .collect();
        let (ids, ts, mask) = batch_tensors(&rows, self.tokenizer.pad_id(), self.dtype, &Device::Cpu)?;
        let hidden = self.encoder.forward(&ids, &ts, &mask)?;
        let positions: Vec<usize> = inputs.iter().map(TokenizedInput::head_position).collect();
        Ok(StepRepresentations::trusted(gather_positions(&hidden, &positions)?))
    }

    pub fn step_representations(&self, slot: &ParticipantSlot, story: &AnnotatedStory) -> Result<StepRepresentations> {
        self.encode_inputs(&self.build_inputs(slot, story)?)
    }

    pub fn forward_inputs(&self, inputs: &[TokenizedInput]) -> Result<SlotOutputs> {
        let reps = self.encode_inputs(inputs)?;
        Ok(SlotOutputs {
            attributes: self.heads.attributes.logits(&reps)?,
            conflict: self.heads.conflict.logits(&reps)?,
            story: self.heads.story.logits(&reps)?,
            reps,
        })
    }

    pub fn forward_slot(&self, slot: &ParticipantSlot, story: &AnnotatedStory) -> Result<SlotOutputs> {
        self.forward_inputs(&self.build_inputs(slot, story)?)
    }

    /// Slots scored for a story on its own: every participant, or one dummy slot.
    pub fn story_slots(story: &AnnotatedStory) -> Vec<ParticipantSlot> {
        if story.participants.is_empty() {
            vec![ParticipantSlot::Dummy]
        } else {
            story
                .participants
                .iter()
                .map(|p| ParticipantSlot::Named(p.surface.clone()))
                .collect()
        }
    }

    fn to_prediction(
        &self,
        slot: ParticipantSlot,
        out: &SlotOutputs,
        plausibility: PlausibilityScore,
    ) -> Result<TieredPrediction> {
        let n = out.reps.steps();
        let conflict: Vec<f64> = out
            .conflict
            .to_dtype(DType::F64)?
            .to_vec1::<f64>()?
            .into_iter()
            .map(sigmoid_f64)
            .collect();
        Ok(TieredPrediction {
            participant: slot,
            precondition: to_step_major(&out.attributes.precondition, n)?,
            effect: to_step_major(&out.attributes.effect, n)?,
            conflict,
            plausibility,
        })
    }

    /// Per-participant predictions for one story in single mode.
    pub fn predict_story(&self, story: &AnnotatedStory) -> Result<StoryOutput> {
        if self.config.mode != StoryMode::Single {
            return Err(ModelError::Config(
                "single-story prediction needs a single-mode model".into(),
            ));
        }
        let preds = Self::story_slots(story)
            .into_iter()
            .map(|slot| {
                let out = self.forward_slot(&slot, story)?;
                let logits = out.story.to_dtype(DType::F64)?.to_vec1::<f64>()?;
                let p = softmax_f64(&logits);
                self.to_prediction(slot, &out, PlausibilityScore::Binary([p[0], p[1]]))
            })
            .collect::<Result<Vec<_>>>()?;
        StoryOutput::new(preds, story.len())
    }

    /// Full tiered output for a story pair.
    pub fn predict_pair(
        &self,
        first: &AnnotatedStory,
        second: &AnnotatedStory,
        rule: DecisionRule,
    ) -> Result<PairPrediction> {
        let (a, b) = match self.config.mode {
            StoryMode::Single => (self.predict_story(first)?, self.predict_story(second)?),
            StoryMode::Joint => self.predict_joint(first, second)?,
        };
        let scores = match rule {
            DecisionRule::Plausibility => [a.decision.plausible_score, b.decision.plausible_score],
            DecisionRule::ConflictSum => predict_sentence_centric(&a.decision.conflict, &b.decision.conflict).1,
        };
        Ok(PairPrediction::new(a, b, scores))
    }

    fn predict_joint(&self, first: &AnnotatedStory, second: &AnnotatedStory) -> Result<(StoryOutput, StoryOutput)> {
        let cfg = self.input_config();
        let pairs = InputBuilder::new(self.tokenizer.as_ref(), &cfg).build_joint_pairs(first, second)?;
        let mut left = Vec::with_capacity(pairs.len());
        let mut right = Vec::with_capacity(pairs.len());
        for pair in pairs {
            let lo = self.forward_inputs(&pair.left_inputs)?;
            let ro = self.forward_inputs(&pair.right_inputs)?;
            let p = self.heads.story.score_joint(&lo.reps, &ro.reps)?;
            left.push(self.to_prediction(pair.left, &lo, PlausibilityScore::Pair(p[0]))?);
            right.push(self.to_prediction(pair.right, &ro, PlausibilityScore::Pair(p[1]))?);
        }
        Ok((
            StoryOutput::new(left, first.len())?,
            StoryOutput::new(right, second.len())?,
        ))
    }
}

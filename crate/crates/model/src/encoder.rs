//! Encoder contract and a BERT-layout transformer implementation.
//!
//! The transformer sums word, position, token-type and timestep embeddings at the input.
//! Parameter names follow the BERT checkpoint layout, so pretrained weights can be
//! loaded by name; the timestep table has no pretrained counterpart and stays at its
//! initial value.

use std::path::Path;

use candle_core::{DType, IndexOp, Tensor};
use candle_nn::{Embedding, Linear, Module, VarMap};
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::input::NUM_TIMESTEPS;
use crate::ops::{gelu, layer_norm, softmax_last};
use crate::params::ParamStore;

pub trait Encoder: Send + Sync {
    fn hidden_size(&self) -> usize;

    fn max_positions(&self) -> usize;

    /// `token_ids` and `timestep_ids` are `(batch, len)` u32 tensors, `attention_mask` is
    /// `(batch, len)` in the model dtype with 1 for real tokens. Returns `(batch, len, hidden)`.
    fn forward(
        &self,
        token_ids: &Tensor,
        timestep_ids: &Tensor,
        attention_mask: &Tensor,
    ) -> candle_core::Result<Tensor>;

    /// Description from which the architecture can be rebuilt, if it has one.
    fn spec(&self) -> Option<EncoderSpec>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EncoderSpec {
    Transformer(TransformerConfig),
}

impl EncoderSpec {
    pub fn build(&self, store: &mut ParamStore) -> Result<Box<dyn Encoder>> {
        match self {
            EncoderSpec::Transformer(cfg) => Ok(Box::new(TransformerEncoder::new(cfg.clone(), store)?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformerConfig {
    pub vocab_size: usize,
    pub hidden_size: usize,
    pub num_layers: usize,
    pub num_heads: usize,
    pub intermediate_size: usize,
    pub max_positions: usize,
    #[serde(default = "default_type_vocab")]
    pub type_vocab_size: usize,
    #[serde(default = "default_eps")]
    pub layer_norm_eps: f64,
}

fn default_type_vocab() -> usize {
    2
}

fn default_eps() -> f64 {
    1e-12
}

impl TransformerConfig {
    /// Small randomly initialised encoder for tests and desk-scale runs.
    pub fn tiny(vocab_size: usize, hidden_size: usize) -> Self {
        let num_heads = if hidden_size.is_multiple_of(4) { 4 } else { 1 };
        Self {
            vocab_size,
            hidden_size,
            num_layers: 2,
            num_heads,
            intermediate_size: 2 * hidden_size,
            max_positions: 256,
            type_vocab_size: 2,
            layer_norm_eps: 1e-12,
        }
    }

    /// Reads a Hugging Face BERT-family `config.json`.
    pub fn from_hf_config(path: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        struct Hf {
            vocab_size: usize,
            hidden_size: usize,
            num_hidden_layers: usize,
            num_attention_heads: usize,
            intermediate_size: usize,
            max_position_embeddings: usize,
            #[serde(default = "default_type_vocab")]
            type_vocab_size: usize,
            #[serde(default = "default_eps")]
            layer_norm_eps: f64,
        }
        let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let hf: Hf = serde_json::from_str(&text).map_err(|source| ModelError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self {
            vocab_size: hf.vocab_size,
            hidden_size: hf.hidden_size,
            num_layers: hf.num_hidden_layers,
            num_heads: hf.num_attention_heads,
            intermediate_size: hf.intermediate_size,
            max_positions: hf.max_position_embeddings,
            type_vocab_size: hf.type_vocab_size,
            layer_norm_eps: hf.layer_norm_eps,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.hidden_size == 0 || self.num_heads == 0 || !self.hidden_size.is_multiple_of(self.num_heads) {
            return Err(ModelError::Config(format!(
                "hidden size {} must be a positive multiple of {} heads",
                self.hidden_size, self.num_heads
            )));
        }
        Ok(())
    }
}

struct Norm {
    weight: Tensor,
    bias: Tensor,
    eps: f64,
}

impl Norm {
    fn new(store: &mut ParamStore, prefix: &str, dim: usize, eps: f64) -> Result<Self> {
        Ok(Self {
            weight: store.ones(&format!("{prefix}.weight"), &[dim])?,
            bias: store.zeros(&format!("{prefix}.bias"), &[dim])?,
            eps,
        })
    }

    fn forward(&self, x: &Tensor) -> candle_core::Result<Tensor> {
        layer_norm(x, &self.weight, &self.bias, self.eps)
    }
}

struct Layer {
    query: Linear,
    key: Linear,
    value: Linear,
    attn_out: Linear,
    attn_norm: Norm,
    intermediate: Linear,
    output: Linear,
    out_norm: Norm,
    num_heads: usize,
}

impl Layer {
    fn new(store: &mut ParamStore, cfg: &TransformerConfig, index: usize) -> Result<Self> {
        let p = format!("encoder.layer.{index}");
        let d = cfg.hidden_size;
        Ok(Self {
            query: store.linear(&format!("{p}.attention.self.query"), d, d)?,
            key: store.linear(&format!("{p}.attention.self.key"), d, d)?,
            value: store.linear(&format!("{p}.attention.self.value"), d, d)?,
            attn_out: store.linear(&format!("{p}.attention.output.dense"), d, d)?,
            attn_norm: Norm::new(store, &format!("{p}.attention.output.LayerNorm"), d, cfg.layer_norm_eps)?,
            intermediate: store.linear(&format!("{p}.intermediate.dense"), d, cfg.intermediate_size)?,
            output: store.linear(&format!("{p}.output.dense"), cfg.intermediate_size, d)?,
            out_norm: Norm::new(store, &format!("{p}.output.LayerNorm"), d, cfg.layer_norm_eps)?,
            num_heads: cfg.num_heads,
        })
    }

    fn forward(&self, x: &Tensor, mask_bias: &Tensor) -> candle_core::Result<Tensor> {
        let (b, m, d) = x.dims3()?;
        let dh = d / self.num_heads;
        let split = |t: Tensor| -> candle_core::Result<Tensor> {
            t.reshape((b, m, self.num_heads, dh))?.transpose(1, 2)?.contiguous()
        };
        let q = split(self.query.forward(x)?)?;
        let k = split(self.key.forward(x)?)?;
        let v = split(self.value.forward(x)?)?;
        let scores = (q.matmul(&k.t()?.contiguous()?)? / (dh as f64).sqrt())?;
        let probs = softmax_last(&scores.broadcast_add(mask_bias)?)?;
        let ctx = probs.matmul(&v)?.transpose(1, 2)?.contiguous()?.reshape((b, m, d))?;
        let attended = self.attn_norm.forward(&(self.attn_out.forward(&ctx)? + x)?)?;
        let ff = self.output.forward(&gelu(&self.intermediate.forward(&attended)?)?)?;
        self.out_norm.forward(&(ff + attended)?)
    }
}

pub struct TransformerEncoder {
    cfg: TransformerConfig,
    word: Embedding,
    position: Embedding,
    token_type: Tensor,
    timestep: Embedding,
    norm: Norm,
    layers: Vec<Layer>,
}

impl TransformerEncoder {
    pub fn new(cfg: TransformerConfig, store: &mut ParamStore) -> Result<Self> {
        cfg.validate()?;
        let d = cfg.hidden_size;
        let std = 0.02f64.max(1.0 / (d as f64).sqrt() / 2.0);
        let word = store.normal_like("embeddings.word_embeddings.weight", &[cfg.vocab_size, d], std)?;
        let position = store.normal_like("embeddings.position_embeddings.weight", &[cfg.max_positions, d], std)?;
        let token_type = store.normal_like(
            "embeddings.token_type_embeddings.weight",
            &[cfg.type_vocab_size, d],
            std,
        )?;
        let timestep = store.normal_like("embeddings.timestep_embeddings.weight", &[NUM_TIMESTEPS, d], std)?;
        let norm = Norm::new(store, "embeddings.LayerNorm", d, cfg.layer_norm_eps)?;
        let layers = (0..cfg.num_layers)
            .map(|i| Layer::new(store, &cfg, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            word: Embedding::new(word, d),
            position: Embedding::new(position, d),
            token_type,
            timestep: Embedding::new(timestep, d),
            norm,
            layers,
            cfg,
        })
    }

    pub fn config(&self) -> &TransformerConfig {
        &self.cfg
    }
}

impl Encoder for TransformerEncoder {
    fn hidden_size(&self) -> usize {
        self.cfg.hidden_size
    }

    fn max_positions(&self) -> usize {
        self.cfg.max_positions
    }

    fn forward(
        &self,
        token_ids: &Tensor,
        timestep_ids: &Tensor,
        attention_mask: &Tensor,
    ) -> candle_core::Result<Tensor> {
        let (b, m) = token_ids.dims2()?;
        if m > self.cfg.max_positions {
            candle_core::bail!("sequence length {m} exceeds {} positions", self.cfg.max_positions);
        }
        let positions = Tensor::arange(0u32, m as u32, token_ids.device())?;
        let emb = self
            .word
            .forward(token_ids)?
            .broadcast_add(&self.position.forward(&positions)?)?
            .broadcast_add(&self.token_type.i(0)?)?
            .add(&self.timestep.forward(timestep_ids)?)?;
        let mut x = self.norm.forward(&emb)?;
        // (b, 1, 1, m) additive bias: 0 for real tokens, -1e4 for padding.
        let mask_bias = ((attention_mask.to_dtype(x.dtype())? - 1.0)? * 1e4)?.reshape((b, 1, 1, m))?;
        for layer in &self.layers {
            x = layer.forward(&x, &mask_bias)?;
        }
        Ok(x)
    }

    fn spec(&self) -> Option<EncoderSpec> {
        Some(EncoderSpec::Transformer(self.cfg.clone()))
    }
}

/// Outcome of copying pretrained tensors into the variable map.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PretrainedLoad {
    pub loaded: Vec<String>,
    pub missing: Vec<String>,
}

/// Sets every encoder variable whose name (optionally under a `bert.` or `roberta.`
/// prefix, or with `gamma`/`beta` LayerNorm names) exists in the safetensors file.
pub fn load_pretrained_weights(varmap: &VarMap, weights: &Path) -> Result<PretrainedLoad> {
    let file = unsafe { candle_core::safetensors::MmapedSafetensors::new(weights)? };
    let available: std::collections::HashSet<String> = file.tensors().into_iter().map(|(n, _)| n).collect();
    let data = varmap.data().lock().expect("varmap lock poisoned");
    let mut names: Vec<&String> = data
        .keys()
        .filter(|k| k.starts_with("embeddings.") || k.starts_with("encoder."))
        .collect();
    names.sort();
    let mut report = PretrainedLoad::default();
    for name in names {
        let var = &data[name];
        let found = candidate_names(name).into_iter().find(|c| available.contains(c));
        match found {
            Some(source) => {
                let tensor = file.load(&source, var.device())?.to_dtype(var.dtype())?;
                if tensor.shape() != var.shape() {
                    return Err(ModelError::Dimension(format!(
                        "pretrained {source} has shape {:?}, expected {:?}",
                        tensor.shape(),
                        var.shape()
                    )));
                }
                var.set(&tensor)?;
                report.loaded.push(name.clone());
            }
            None => report.missing.push(name.clone()),
        }
    }
    Ok(report)
}

fn candidate_names(name: &str) -> Vec<String> {
    let mut bases = vec![name.to_string()];
    if name.ends_with("LayerNorm.weight") {
        bases.push(name.replace("LayerNorm.weight", "LayerNorm.gamma"));
    } else if name.ends_with("LayerNorm.bias") {
        bases.push(name.replace("LayerNorm.bias", "LayerNorm.beta"));
    }
    let mut out = Vec::new();
    for prefix in ["", "bert.", "roberta."] {
        for b in &bases {
            out.push(format!("{prefix}{b}"));
        }
    }
    out
}

/// Builds `(batch, len)` id, timestep and mask tensors, right-padding shorter rows.
pub fn batch_tensors(
    rows: &[(&[u32], &[u32])],
    pad_id: u32,
    dtype: DType,
    device: &candle_core::Device,
) -> candle_core::Result<(Tensor, Tensor, Tensor)> {
    let b = rows.len();
    let m = rows.iter().map(|(ids, _)| ids.len()).max().unwrap_or(0);
    let mut ids = Vec::with_capacity(b * m);
    let mut ts = Vec::with_capacity(b * m);
    let mut mask = Vec::with_capacity(b * m);
    for (row_ids, row_ts) in rows {
        for j in 0..m {
            let real = j < row_ids.len();
            ids.push(if real { row_ids[j] } else { pad_id });
            ts.push(if real { row_ts[j] } else { 0 });
            mask.push(if real { 1f32 } else { 0f32 });
        }
    }
    Ok((
        Tensor::from_vec(ids, (b, m), device)?,
        Tensor::from_vec(ts, (b, m), device)?,
        Tensor::from_vec(mask, (b, m), device)?.to_dtype(dtype)?,
    ))
}

/// Rows of `hidden` (`(batch, len, d)`) at one position per batch entry.
pub fn gather_positions(hidden: &Tensor, positions: &[usize]) -> candle_core::Result<Tensor> {
    let (b, m, d) = hidden.dims3()?;
    let flat_idx: Vec<u32> = positions.iter().enumerate().map(|(i, &p)| (i * m + p) as u32).collect();
    let idx = Tensor::from_vec(flat_idx, b, hidden.device())?;
    hidden.contiguous()?.reshape((b * m, d))?.index_select(&idx, 0)
}

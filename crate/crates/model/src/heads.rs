//! Output heads over per-step representations: attribute states, conflicting sentence
//! pairs, and story plausibility.

use candle_core::{Tensor, D};
use candle_nn::{Linear, Module};
use procstory_core::{pair_count, AttributeSchema, StateSlot};

use crate::error::{ModelError, Result};
use crate::ops::{gelu, sigmoid_f64, softmax_f64};
use crate::params::ParamStore;

/// An `n × d` matrix with one finite row per story step.
#[derive(Debug, Clone)]
pub struct StepRepresentations(Tensor);

impl StepRepresentations {
    pub fn new(tensor: Tensor) -> Result<Self> {
        let (n, _) = tensor
            .dims2()
            .map_err(|_| ModelError::Dimension(format!("expected n × d, got {:?}", tensor.dims())))?;
        if n == 0 {
            return Err(ModelError::EmptyStory);
        }
        let finite = tensor
            .to_dtype(candle_core::DType::F64)?
            .flatten_all()?
            .to_vec1::<f64>()?
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(ModelError::Dimension(
                "step representations contain non-finite values".into(),
            ));
        }
        Ok(Self(tensor))
    }

    /// Skips the finiteness scan; used inside the differentiable training path.
    pub(crate) fn trusted(tensor: Tensor) -> Self {
        Self(tensor)
    }

    pub fn tensor(&self) -> &Tensor {
        &self.0
    }

    pub fn steps(&self) -> usize {
        self.0.dims()[0]
    }

    pub fn dim(&self) -> usize {
        self.0.dims()[1]
    }

    /// Mean over steps, `(d,)`.
    pub fn pooled(&self) -> Result<Tensor> {
        Ok(self.0.mean(0)?)
    }
}

fn check_dim(reps: &StepRepresentations, expected: usize, head: &str) -> Result<()> {
    if reps.dim() != expected {
        return Err(ModelError::Dimension(format!(
            "{head} expects {expected}-dimensional steps, got {}",
            reps.dim()
        )));
    }
    Ok(())
}

fn rows_f64(t: &Tensor) -> Result<Vec<Vec<f64>>> {
    Ok(t.to_dtype(candle_core::DType::F64)?.to_vec2::<f64>()?)
}

fn vec_f64(t: &Tensor) -> Result<Vec<f64>> {
    Ok(t.to_dtype(candle_core::DType::F64)?.flatten_all()?.to_vec1::<f64>()?)
}

/// Two-layer feed-forward classifier: `W2 · gelu(W1 x + b1) + b2`.
pub struct FeedForward {
    hidden: Linear,
    out: Linear,
}

impl FeedForward {
    pub fn new(store: &mut ParamStore, prefix: &str, input: usize, hidden: usize, classes: usize) -> Result<Self> {
        Ok(Self {
            hidden: store.linear(&format!("{prefix}.dense"), input, hidden)?,
            out: store.linear(&format!("{prefix}.out"), hidden, classes)?,
        })
    }

    pub fn from_layers(hidden: Linear, out: Linear) -> Self {
        Self { hidden, out }
    }

    pub fn forward(&self, x: &Tensor) -> candle_core::Result<Tensor> {
        self.out.forward(&gelu(&self.hidden.forward(x)?)?)
    }
}

/// Attribute logits, indexed `[attribute]` and shaped `n × |labels|`.
pub struct AttributeLogits {
    pub precondition: Vec<Tensor>,
    pub effect: Vec<Tensor>,
}

/// Per-step probability tables, indexed `[step][attribute][label]`.
pub type StateDistributions = Vec<Vec<Vec<f64>>>;

/// One precondition and one effect classifier per attribute.
pub struct AttributeClassifier {
    input_dim: usize,
    heads: Vec<(FeedForward, FeedForward)>,
}

impl AttributeClassifier {
    pub fn new(store: &mut ParamStore, schema: &AttributeSchema, input_dim: usize, hidden: usize) -> Result<Self> {
        let heads = schema
            .attributes()
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                let pre = FeedForward::new(
                    store,
                    &format!("heads.attribute.{}.precondition", spec.name),
                    input_dim,
                    hidden,
                    schema.labels(i, StateSlot::Precondition).len(),
                )?;
                let eff = FeedForward::new(
                    store,
                    &format!("heads.attribute.{}.effect", spec.name),
                    input_dim,
                    hidden,
                    schema.labels(i, StateSlot::Effect).len(),
                )?;
                Ok((pre, eff))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { input_dim, heads })
    }

    pub fn from_heads(input_dim: usize, heads: Vec<(FeedForward, FeedForward)>) -> Self {
        Self { input_dim, heads }
    }

    pub fn logits(&self, reps: &StepRepresentations) -> Result<AttributeLogits> {
        check_dim(reps, self.input_dim, "attribute classifier")?;
        let x = reps.tensor();
        let mut precondition = Vec::with_capacity(self.heads.len());
        let mut effect = Vec::with_capacity(self.heads.len());
        for (pre, eff) in &self.heads {
            precondition.push(pre.forward(x)?);
            effect.push(eff.forward(x)?);
        }
        Ok(AttributeLogits { precondition, effect })
    }

    /// Softmax distributions for every step and attribute: `(precondition, effect)`.
    pub fn classify(&self, reps: &StepRepresentations) -> Result<(StateDistributions, StateDistributions)> {
        let logits = self.logits(reps)?;
        Ok((
            to_step_major(&logits.precondition, reps.steps())?,
            to_step_major(&logits.effect, reps.steps())?,
        ))
    }
}

pub(crate) fn to_step_major(per_attribute: &[Tensor], steps: usize) -> Result<StateDistributions> {
    let mut out = vec![Vec::with_capacity(per_attribute.len()); steps];
    for t in per_attribute {
        for (step, row) in rows_f64(t)?.into_iter().enumerate() {
            out[step].push(softmax_f64(&row));
        }
    }
    Ok(out)
}

/// Scores every sentence pair `i < j` with a linear layer over `[rep_i ; rep_j]`.
pub struct ConflictDetector {
    linear: Linear,
    input_dim: usize,
}

impl ConflictDetector {
    pub fn new(store: &mut ParamStore, input_dim: usize) -> Result<Self> {
        Ok(Self {
            linear: store.linear("heads.conflict", 2 * input_dim, 1)?,
            input_dim,
        })
    }

    pub fn from_linear(input_dim: usize, linear: Linear) -> Self {
        Self { linear, input_dim }
    }

    /// Pre-sigmoid scores in row-major pair order, length `n(n-1)/2`.
    pub fn logits(&self, reps: &StepRepresentations) -> Result<Tensor> {
        check_dim(reps, self.input_dim, "conflict detector")?;
        let n = reps.steps();
        let x = reps.tensor();
        if n < 2 {
            return Ok(Tensor::zeros(0, x.dtype(), x.device())?);
        }
        let mut firsts = Vec::with_capacity(pair_count(n));
        let mut seconds = Vec::with_capacity(pair_count(n));
        for i in 0..n {
            for j in i + 1..n {
                firsts.push(i as u32);
                seconds.push(j as u32);
            }
        }
        let count = firsts.len();
        let fi = Tensor::from_vec(firsts, count, x.device())?;
        let si = Tensor::from_vec(seconds, count, x.device())?;
        let stacked = Tensor::cat(&[x.index_select(&fi, 0)?, x.index_select(&si, 0)?], 1)?;
        Ok(self.linear.forward(&stacked)?.squeeze(D::Minus1)?)
    }

    /// Conflict probability per pair.
    pub fn detect(&self, reps: &StepRepresentations) -> Result<Vec<f64>> {
        Ok(vec_f64(&self.logits(reps)?)?.into_iter().map(sigmoid_f64).collect())
    }
}

/// Story-level classifier over the mean step vector.
pub enum StoryClassifier {
    /// Two-class logits `[implausible, plausible]`.
    Binary(Linear),
    /// One scalar score per story; a softmax over the pair picks the plausible one.
    Pairwise(Linear),
}

impl StoryClassifier {
    pub fn binary(store: &mut ParamStore, input_dim: usize) -> Result<Self> {
        Ok(Self::Binary(store.linear("heads.story", input_dim, 2)?))
    }

    pub fn pairwise(store: &mut ParamStore, input_dim: usize) -> Result<Self> {
        Ok(Self::Pairwise(store.linear("heads.story_pair", input_dim, 1)?))
    }

    fn linear(&self) -> &Linear {
        match self {
            Self::Binary(l) | Self::Pairwise(l) => l,
        }
    }

    fn input_dim(&self) -> usize {
        self.linear().weight().dims()[1]
    }

    /// `(2,)` logits for `Binary`, `(1,)` score for `Pairwise`.
    pub fn logits(&self, reps: &StepRepresentations) -> Result<Tensor> {
        check_dim(reps, self.input_dim(), "story classifier")?;
        let pooled = reps.pooled()?.unsqueeze(0)?;
        Ok(self.linear().forward(&pooled)?.squeeze(0)?)
    }

    /// Single-story plausibility distribution `[implausible, plausible]`.
    pub fn score_single(&self, reps: &StepRepresentations) -> Result<[f64; 2]> {
        match self {
            Self::Binary(_) => {
                let p = softmax_f64(&vec_f64(&self.logits(reps)?)?);
                Ok([p[0], p[1]])
            }
            Self::Pairwise(_) => Err(ModelError::Config(
                "pairwise story head cannot score a single story".into(),
            )),
        }
    }

    /// Softmax over the two per-story scores: `[P(first is plausible), P(second is plausible)]`.
    pub fn score_joint(&self, first: &StepRepresentations, second: &StepRepresentations) -> Result<[f64; 2]> {
        if first.dim() != second.dim() {
            return Err(ModelError::Dimension(format!(
                "joint scoring needs equal widths, got {} and {}",
                first.dim(),
                second.dim()
            )));
        }
        match self {
            Self::Pairwise(_) => {
                let a = vec_f64(&self.logits(first)?)?[0];
                let b = vec_f64(&self.logits(second)?)?[0];
                let p = softmax_f64(&[a, b]);
                Ok([p[0], p[1]])
            }
            Self::Binary(_) => Err(ModelError::Config("binary story head cannot score a pair".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Precision;
    use candle_core::{DType, Device};

    fn reps(rows: &[Vec<f64>]) -> StepRepresentations {
        let n = rows.len();
        let d = rows[0].len();
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        StepRepresentations::new(Tensor::from_vec(flat, (n, d), &Device::Cpu).unwrap()).unwrap()
    }

    fn linear(w: Vec<f64>, out: usize, inp: usize, b: Vec<f64>) -> Linear {
        Linear::new(
            Tensor::from_vec(w, (out, inp), &Device::Cpu).unwrap(),
            Some(Tensor::from_vec(b, out, &Device::Cpu).unwrap()),
        )
    }

    #[test]
    fn twenty_attributes_per_step() {
        let schema = AttributeSchema::trip_default();
        let mut store = ParamStore::new(0, Precision::F64);
        let clf = AttributeClassifier::new(&mut store, &schema, 4, 4).unwrap();
        let r = reps(&[vec![0.1; 4], vec![0.2; 4], vec![-0.3; 4]]);
        let (pre, eff) = clf.classify(&r).unwrap();
        assert_eq!(pre.len(), 3);
        for step in pre.iter().chain(eff.iter()) {
            assert_eq!(step.len(), 20);
            for (a, dist) in step.iter().enumerate() {
                assert_eq!(dist.len(), schema.labels(a, StateSlot::Precondition).len());
                assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_weight_heads_are_uniform() {
        let zero_ff = |classes: usize| {
            FeedForward::from_layers(
                linear(vec![0.0; 6], 2, 3, vec![0.0; 2]),
                linear(vec![0.0; 2 * classes], classes, 2, vec![0.0; classes]),
            )
        };
        let clf = AttributeClassifier::from_heads(3, vec![(zero_ff(3), zero_ff(5))]);
        let (pre, eff) = clf.classify(&reps(&[vec![1.0, -2.0, 0.5]])).unwrap();
        assert!(pre[0][0].iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-12));
        assert!(eff[0][0].iter().all(|p| (p - 0.2).abs() < 1e-12));
    }

    #[test]
    fn unit_weights_match_hand_computed_logits() {
        // hidden = gelu(W1 x + b1) with W1 = ones(2x2), b1 = 0; out = W2 h with W2 = ones(3x2), b2 = [0, 1, 2].
        let ff = FeedForward::from_layers(
            linear(vec![1.0; 4], 2, 2, vec![0.0; 2]),
            linear(vec![1.0; 6], 3, 2, vec![0.0, 1.0, 2.0]),
        );
        let x = Tensor::new(&[[0.5f64, 1.0]], &Device::Cpu).unwrap();
        let got: Vec<f64> = ff.forward(&x).unwrap().flatten_all().unwrap().to_vec1().unwrap();
        let s = 1.5f64;
        let gelu = 0.5 * s * (1.0 + erf(s / 2f64.sqrt()));
        let expected = [2.0 * gelu, 2.0 * gelu + 1.0, 2.0 * gelu + 2.0];
        for (g, e) in got.iter().zip(expected) {
            assert!((g - e).abs() < 1e-6, "{g} vs {e}");
        }
    }

    // Abramowitz–Stegun 7.1.26 is too coarse; integrate the Gaussian with Simpson's rule instead.
    fn erf(x: f64) -> f64 {
        let steps = 10_000;
        let h = x / steps as f64;
        let f = |t: f64| (-t * t).exp();
        let mut sum = f(0.0) + f(x);
        for i in 1..steps {
            let t = i as f64 * h;
            sum += if i % 2 == 1 { 4.0 * f(t) } else { 2.0 * f(t) };
        }
        sum * h / 3.0 * 2.0 / std::f64::consts::PI.sqrt()
    }

    #[test]
    fn conflict_counts_and_closed_form() {
        let d = 3;
        let det = ConflictDetector::from_linear(d, linear(vec![1.0; 2 * d], 1, 2 * d, vec![0.0]));
        assert!(det.detect(&reps(&[vec![1.0; 3]])).unwrap().is_empty());
        let five = reps(&vec![vec![1.0; 3]; 5]);
        let probs = det.detect(&five).unwrap();
        assert_eq!(probs.len(), 10);
        let expected = 1.0 / (1.0 + (-(2.0 * d as f64)).exp());
        assert!(probs.iter().all(|p| (p - expected).abs() < 1e-12));
    }

    #[test]
    fn conflict_pairs_follow_row_major_order() {
        // Weight picks rep_i[0] - rep_j[0]; steps carry their index in column 0.
        let det = ConflictDetector::from_linear(1, linear(vec![1.0, -1.0], 1, 2, vec![0.0]));
        let logits: Vec<f64> = det
            .logits(&reps(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]))
            .unwrap()
            .to_vec1()
            .unwrap();
        assert_eq!(logits, vec![-1.0, -2.0, -3.0, -1.0, -2.0, -1.0]);
    }

    #[test]
    fn single_story_score() {
        let zero = StoryClassifier::Binary(linear(vec![0.0; 4], 2, 2, vec![0.0; 2]));
        assert_eq!(zero.score_single(&reps(&[vec![3.0, 1.0]])).unwrap(), [0.5, 0.5]);

        // Independent mean + softmax.
        let w = vec![0.3, -0.7, 1.1, 0.4];
        let b = vec![0.05, -0.1];
        let clf = StoryClassifier::Binary(linear(w.clone(), 2, 2, b.clone()));
        let rows = vec![vec![0.2, -1.0], vec![1.5, 0.3], vec![-0.4, 0.9]];
        let mean = [(0.2 + 1.5 - 0.4) / 3.0, (-1.0 + 0.3 + 0.9) / 3.0];
        let l0 = w[0] * mean[0] + w[1] * mean[1] + b[0];
        let l1 = w[2] * mean[0] + w[3] * mean[1] + b[1];
        let p1 = l1.exp() / (l0.exp() + l1.exp());
        let got = clf.score_single(&reps(&rows)).unwrap();
        assert!((got[1] - p1).abs() < 1e-12 && (got[0] + got[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_step_mean_is_identity() {
        let r = reps(&[vec![0.25, -4.0]]);
        let pooled: Vec<f64> = r.pooled().unwrap().to_vec1().unwrap();
        assert_eq!(pooled, vec![0.25, -4.0]);
    }

    #[test]
    fn joint_score_symmetry_and_softmax() {
        let clf = StoryClassifier::Pairwise(linear(vec![1.0, 0.0], 1, 2, vec![0.0]));
        let a = reps(&[vec![2.0, 5.0]]);
        let b = reps(&[vec![0.0, -1.0]]);
        let ab = clf.score_joint(&a, &b).unwrap();
        assert!((ab[0] - 0.880_797_077_977_882_3).abs() < 1e-12);
        let ba = clf.score_joint(&b, &a).unwrap();
        assert_eq!([ab[1], ab[0]], ba);
        assert_eq!(clf.score_joint(&a, &a).unwrap(), [0.5, 0.5]);
        let wide = StepRepresentations::new(Tensor::zeros((1, 3), DType::F64, &Device::Cpu).unwrap()).unwrap();
        assert!(matches!(clf.score_joint(&a, &wide), Err(ModelError::Dimension(_))));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let mut store = ParamStore::new(0, Precision::F64);
        let det = ConflictDetector::new(&mut store, 4).unwrap();
        assert!(matches!(
            det.detect(&reps(&[vec![1.0; 3], vec![1.0; 3]])),
            Err(ModelError::Dimension(_))
        ));
    }
}

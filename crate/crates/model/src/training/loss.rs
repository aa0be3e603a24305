//! Weighted sum of attribute, conflict and plausibility losses.

use candle_core::{DType, Tensor};

use crate::error::{ModelError, Result};
use crate::model::SlotOutputs;
use crate::ops::{log_softmax_last, softplus};
use crate::training::labels::{LossWeights, SequenceLabels};

/// The differentiable total plus each component's value.
pub struct LossBreakdown {
    pub total: Tensor,
    pub precondition: f64,
    pub effect: f64,
    pub conflict: f64,
    pub plausibility: f64,
}

impl LossBreakdown {
    pub fn value(&self) -> Result<f64> {
        Ok(self.total.to_dtype(DType::F64)?.to_scalar::<f64>()?)
    }
}

fn scalar(t: &Tensor) -> Result<f64> {
    Ok(t.to_dtype(DType::F64)?.to_scalar::<f64>()?)
}

fn one_hot(
    labels: &[usize],
    classes: usize,
    dtype: DType,
    device: &candle_core::Device,
    context: &str,
) -> Result<Tensor> {
    let mut v = vec![0f64; labels.len() * classes];
    for (row, &label) in labels.iter().enumerate() {
        if label >= classes {
            return Err(ModelError::LabelOutOfSpace {
                index: label,
                size: classes,
                context: context.to_string(),
            });
        }
        v[row * classes + label] = 1.0;
    }
    Ok(Tensor::from_vec(v, (labels.len(), classes), device)?.to_dtype(dtype)?)
}

/// Mean cross-entropy over rows of `(n, classes)` logits.
pub fn cross_entropy(logits: &Tensor, labels: &[usize], context: &str) -> Result<Tensor> {
    let (n, classes) = logits.dims2()?;
    if n != labels.len() {
        return Err(ModelError::Dimension(format!(
            "{context}: {n} rows but {} labels",
            labels.len()
        )));
    }
    let target = one_hot(labels, classes, logits.dtype(), logits.device(), context)?;
    Ok((log_softmax_last(logits)? * target)?
        .sum_all()?
        .neg()?
        .affine(1.0 / n as f64, 0.0)?)
}

/// Cross-entropy against a soft target distribution over a `(classes,)` vector.
pub fn soft_cross_entropy(logits: &Tensor, target: &[f64]) -> Result<Tensor> {
    let t = Tensor::new(target, logits.device())?.to_dtype(logits.dtype())?;
    Ok((log_softmax_last(logits)? * t)?.sum_all()?.neg()?)
}

/// Mean binary cross-entropy of pre-sigmoid scores: `softplus(x) - t·x`.
pub fn binary_cross_entropy(logits: &Tensor, targets: &[f64]) -> Result<Tensor> {
    let n = logits.dims1()?;
    if n != targets.len() {
        return Err(ModelError::Dimension(format!(
            "{n} conflict scores but {} targets",
            targets.len()
        )));
    }
    if n == 0 {
        return Ok(Tensor::zeros((), logits.dtype(), logits.device())?);
    }
    let t = Tensor::new(targets, logits.device())?.to_dtype(logits.dtype())?;
    Ok((softplus(logits)? - (logits * t)?)?.mean_all()?)
}

/// `(1/A) Σ_a CE_a`, each CE averaged over steps.
fn attribute_loss(per_attribute: &[Tensor], labels: &[Vec<usize>], which: &str) -> Result<Tensor> {
    let a = per_attribute.len();
    if a == 0 {
        return Err(ModelError::Dimension("schema has no attributes".into()));
    }
    let mut total: Option<Tensor> = None;
    for (attr, logits) in per_attribute.iter().enumerate() {
        let column: Vec<usize> = labels.iter().map(|step| step[attr]).collect();
        let ce = cross_entropy(logits, &column, &format!("{which} attribute {attr}"))?;
        total = Some(match total {
            None => ce,
            Some(t) => (t + ce)?,
        });
    }
    Ok(total.expect("at least one attribute").affine(1.0 / a as f64, 0.0)?)
}

fn check_steps(out: &SlotOutputs, labels: &SequenceLabels) -> Result<()> {
    let n = out.reps.steps();
    if labels.precondition.len() != n || labels.effect.len() != n {
        return Err(ModelError::Dimension(format!(
            "{n} steps but labels for {} / {}",
            labels.precondition.len(),
            labels.effect.len()
        )));
    }
    let a = out.attributes.precondition.len();
    if labels.precondition.iter().chain(&labels.effect).any(|s| s.len() != a) {
        return Err(ModelError::Dimension(format!("labels do not cover {a} attributes")));
    }
    Ok(())
}

struct SideTerms {
    precondition: Tensor,
    effect: Tensor,
    conflict: Tensor,
}

fn side_terms(out: &SlotOutputs, labels: &SequenceLabels) -> Result<SideTerms> {
    check_steps(out, labels)?;
    Ok(SideTerms {
        precondition: attribute_loss(&out.attributes.precondition, &labels.precondition, "precondition")?,
        effect: attribute_loss(&out.attributes.effect, &labels.effect, "effect")?,
        conflict: binary_cross_entropy(&out.conflict, &labels.conflict)?,
    })
}

fn combine(weights: &LossWeights, terms: SideTerms, plausibility: Option<Tensor>) -> Result<LossBreakdown> {
    let mut total = ((terms.precondition.affine(weights.precondition, 0.0)?
        + terms.effect.affine(weights.effect, 0.0)?)?
        + terms.conflict.affine(weights.conflict, 0.0)?)?;
    let mut plau_value = 0.0;
    if let Some(p) = plausibility {
        plau_value = scalar(&p)?;
        total = (total + p.affine(weights.plausibility, 0.0)?)?;
    }
    Ok(LossBreakdown {
        precondition: scalar(&terms.precondition)?,
        effect: scalar(&terms.effect)?,
        conflict: scalar(&terms.conflict)?,
        plausibility: plau_value,
        total,
    })
}

/// Single-story loss for one participant pass. The plausibility term is present iff
/// the labels carry a story label.
pub fn compute_loss(out: &SlotOutputs, labels: &SequenceLabels, weights: &LossWeights) -> Result<LossBreakdown> {
    let terms = side_terms(out, labels)?;
    let plausibility = match labels.story {
        Some(label) => {
            let logits = out.story.reshape((1, out.story.elem_count()))?;
            if logits.dims()[1] != 2 {
                return Err(ModelError::Dimension("single-story loss needs two story logits".into()));
            }
            Some(cross_entropy(&logits, &[usize::from(u8::from(label))], "story")?)
        }
        None => None,
    };
    combine(weights, terms, plausibility)
}

/// Joint loss for one aligned slot pair: attribute and conflict terms averaged over the
/// two sides, plausibility as cross-entropy of the pair softmax against `pair_target`.
pub fn compute_joint_loss(
    left: &SlotOutputs,
    right: &SlotOutputs,
    left_labels: &SequenceLabels,
    right_labels: &SequenceLabels,
    pair_target: Option<[f64; 2]>,
    weights: &LossWeights,
) -> Result<LossBreakdown> {
    let l = side_terms(left, left_labels)?;
    let r = side_terms(right, right_labels)?;
    let half = |a: Tensor, b: Tensor| -> Result<Tensor> { Ok((a + b)?.affine(0.5, 0.0)?) };
    let terms = SideTerms {
        precondition: half(l.precondition, r.precondition)?,
        effect: half(l.effect, r.effect)?,
        conflict: half(l.conflict, r.conflict)?,
    };
    let plausibility = match pair_target {
        Some(target) => {
            let scores = Tensor::cat(&[left.story.flatten_all()?, right.story.flatten_all()?], 0)?;
            if scores.dims1()? != 2 {
                return Err(ModelError::Dimension("joint loss needs one score per story".into()));
            }
            Some(soft_cross_entropy(&scores, &target)?)
        }
        None => None,
    };
    combine(weights, terms, plausibility)
}

#[cfg(test)]
mod tests {
    use super::*;
    use candle_core::Device;

    #[test]
    fn uniform_story_prediction_costs_ln2() {
        let logits = Tensor::new(&[[0.3f64, 0.3]], &Device::Cpu).unwrap();
        let ce = cross_entropy(&logits, &[1], "story").unwrap();
        assert!((scalar(&ce).unwrap() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn confident_correct_predictions_cost_nothing() {
        let logits = Tensor::new(&[[-1e3f64, 1e3, -1e3], [1e3, -1e3, -1e3]], &Device::Cpu).unwrap();
        assert!(scalar(&cross_entropy(&logits, &[1, 0], "x").unwrap()).unwrap() < 1e-9);
        let scores = Tensor::new(&[-1e3f64, 1e3], &Device::Cpu).unwrap();
        assert!(scalar(&binary_cross_entropy(&scores, &[0.0, 1.0]).unwrap()).unwrap() < 1e-9);
    }

    #[test]
    fn bce_matches_closed_form() {
        let x = [0.4f64, -1.3, 2.2];
        let t = [1.0, 0.0, 1.0];
        let scores = Tensor::new(&x, &Device::Cpu).unwrap();
        let got = scalar(&binary_cross_entropy(&scores, &t).unwrap()).unwrap();
        let expected: f64 = x
            .iter()
            .zip(&t)
            .map(|(x, t)| {
                let p = 1.0 / (1.0 + (-x).exp());
                -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
            })
            .sum::<f64>()
            / 3.0;
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn out_of_space_label_is_rejected() {
        let logits = Tensor::new(&[[0.0f64, 0.0]], &Device::Cpu).unwrap();
        assert!(matches!(
            cross_entropy(&logits, &[2], "x"),
            Err(ModelError::LabelOutOfSpace { index: 2, size: 2, .. })
        ));
    }

    #[test]
    fn soft_target_cross_entropy() {
        let s = Tensor::new(&[2.0f64, 0.0], &Device::Cpu).unwrap();
        let got = scalar(&soft_cross_entropy(&s, &[0.5, 0.5]).unwrap()).unwrap();
        let p0: f64 = 1.0 / (1.0 + (-2f64).exp());
        let expected = -(0.5 * p0.ln() + 0.5 * (1.0 - p0).ln());
        assert!((got - expected).abs() < 1e-12);
    }
}

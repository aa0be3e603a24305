//! Central finite-difference check of autograd gradients.

use candle_core::{DType, Tensor, Var};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_relative_error: f64,
    /// `(variable index, element, analytic, numeric)` of the worst element.
    pub worst: Option<(usize, usize, f64, f64)>,
}

/// Relative error with an absolute floor so near-zero gradients compare sensibly.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compares `loss` gradients w.r.t. every element of `vars` (f64 only) against
/// `(L(x+h) - L(x-h)) / 2h`. At most `max_per_var` elements of each variable are probed.
pub fn check_gradients<F>(vars: &[Var], loss: F, step: f64, max_per_var: usize, floor: f64) -> Result<GradCheckReport>
where
    F: Fn() -> Result<Tensor>,
{
    let grads = loss()?.backward()?;
    let mut report = GradCheckReport {
        checked: 0,
        max_relative_error: 0.0,
        worst: None,
    };
    let eval = || -> Result<f64> { Ok(loss()?.to_dtype(DType::F64)?.to_scalar::<f64>()?) };
    for (vi, var) in vars.iter().enumerate() {
        let shape = var.shape().clone();
        let original: Vec<f64> = var.as_tensor().flatten_all()?.to_vec1::<f64>()?;
        let analytic: Vec<f64> = match grads.get(var.as_tensor()) {
            Some(g) => g.flatten_all()?.to_vec1::<f64>()?,
            None => vec![0.0; original.len()],
        };
        let stride = (original.len() / max_per_var.max(1)).max(1);
        for e in (0..original.len()).step_by(stride).take(max_per_var) {
            let mut bumped = original.clone();
            bumped[e] = original[e] + step;
            var.set(&Tensor::from_vec(bumped.clone(), &shape, var.device())?)?;
            let up = eval()?;
            bumped[e] = original[e] - step;
            var.set(&Tensor::from_vec(bumped, &shape, var.device())?)?;
            let down = eval()?;
            var.set(&Tensor::from_vec(original.clone(), &shape, var.device())?)?;
            let numeric = (up - down) / (2.0 * step);
            let err = relative_error(analytic[e], numeric, floor);
            report.checked += 1;
            if report.worst.is_none() || err > report.max_relative_error {
                report.max_relative_error = err;
                report.worst = Some((vi, e, analytic[e], numeric));
            }
        }
    }
    Ok(report)
}

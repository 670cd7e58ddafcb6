//! Central-difference verification of the analytic gradients.

use ndarray::Array2;

use super::loss::{FbiLossConfig, LossWeights};
use super::network::{RegressorParams, TensorKind};
use super::train::{backward, objective, Batch};
use super::RegressorError;

/// Worst disagreement found by [`gradient_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_relative_error: f64,
    /// Tensor element with the worst error, with both values.
    pub worst: String,
    pub checked: usize,
}

/// Compares every trainable gradient element against
/// `(L(θ + step) − L(θ − step)) / 2·step`, with the same dropout masks on
/// both sides. The relative error uses `max(|numeric|, |analytic|, floor)`
/// as denominator, so elements whose true gradient is zero are judged
/// against the round-off floor. Running statistics must get zero gradient.
pub fn gradient_check(
    params: &RegressorParams,
    batch: &Batch,
    weights: &LossWeights,
    fbi: &FbiLossConfig,
    masks: impl Fn() -> Option<Vec<Array2<f64>>>,
    step: f64,
    denom_floor: f64,
) -> Result<GradCheck, RegressorError> {
    let (_, grad, _) = backward(params, batch, weights, fbi, masks())?;
    let grads = grad.tensors();
    let mut report = GradCheck { max_relative_error: 0.0, worst: String::new(), checked: 0 };
    let mut probe = params.clone();
    for (ti, t) in params.tensors().iter().enumerate() {
        if t.kind == TensorKind::RunningStat {
            if grads[ti].data.iter().any(|&g| g != 0.0) {
                report.max_relative_error = f64::INFINITY;
                report.worst = format!("{}: statistic received a gradient", t.name);
            }
            continue;
        }
        for k in 0..t.data.len() {
            let orig = t.data[k];
            probe.tensors_mut()[ti].data[k] = orig + step;
            let up = objective(&probe, batch, weights, fbi, masks())?.total;
            probe.tensors_mut()[ti].data[k] = orig - step;
            let down = objective(&probe, batch, weights, fbi, masks())?.total;
            probe.tensors_mut()[ti].data[k] = orig;
            let numeric = (up - down) / (2.0 * step);
            let analytic = grads[ti].data[k];
            let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(denom_floor);
            report.checked += 1;
            if rel > report.max_relative_error {
                report.max_relative_error = rel;
                report.worst = format!("{}[{k}]: analytic {analytic:e}, numeric {numeric:e}", t.name);
            }
        }
    }
    Ok(report)
}

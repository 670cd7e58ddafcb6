//! FBI classification losses, the supervised pose loss and their gradients.

use serde::{Deserialize, Serialize};

use crate::lifting::ProbabilityRows;
use crate::skeleton::{FbiMatrix, FbiStatus, NUM_STATUS};

/// Probabilities are clamped to `[PROB_FLOOR, 1]` before any logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

fn clamp(p: f64) -> f64 {
    p.clamp(PROB_FLOOR, 1.0)
}

/// `-(1 - p)^gamma * ln p` for the probability of the true class.
pub fn focal_term(p: f64, gamma: f64) -> f64 {
    let p = clamp(p);
    -(1.0 - p).powf(gamma) * p.ln()
}

/// Derivative of [`focal_term`] with respect to `p`; zero where the clamp is active.
pub fn focal_term_grad(p: f64, gamma: f64) -> f64 {
    if !(PROB_FLOOR..=1.0).contains(&p) {
        return 0.0;
    }
    let q = 1.0 - p;
    let modulating = match (gamma, q) {
        (g, _) if g == 0.0 => 0.0,
        (g, q) if q == 0.0 => {
            if g == 1.0 {
                1.0
            } else {
                0.0
            }
        }
        (g, q) => g * q.powf(g - 1.0),
    };
    modulating * p.ln() - q.powf(gamma) / p
}

/// Focal loss summed over bones.
pub fn focal_fbi_loss(probs: &ProbabilityRows, labels: &FbiMatrix, gamma: f64) -> f64 {
    probs.iter().zip(labels.0.iter()).map(|(row, l)| focal_term(row[l.index()], gamma)).sum()
}

/// Class weight of a ground-truth label.
pub fn status_weight(label: FbiStatus, w_clear: f64, w_uncertain: f64) -> f64 {
    if label.is_clear() {
        w_clear
    } else {
        w_uncertain
    }
}

/// Weighted cross-entropy summed over bones.
pub fn fixed_weight_fbi_loss(probs: &ProbabilityRows, labels: &FbiMatrix, w_clear: f64, w_uncertain: f64) -> f64 {
    probs
        .iter()
        .zip(labels.0.iter())
        .map(|(row, &l)| {
            let w = status_weight(l, w_clear, w_uncertain);
            if w == 0.0 {
                0.0
            } else {
                -w * clamp(row[l.index()]).ln()
            }
        })
        .sum()
}

/// Mean squared error over all components.
pub fn pose_l2_loss(pred: &[f64], gt: &[f64]) -> f64 {
    assert_eq!(pred.len(), gt.len());
    pred.iter().zip(gt).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / pred.len() as f64
}

/// Hyperparameters of the two FBI classification losses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FbiLossConfig {
    pub gamma: f64,
    pub w_clear: f64,
    pub w_uncertain: f64,
}

impl Default for FbiLossConfig {
    fn default() -> Self {
        Self { gamma: 2.0, w_clear: 1.0, w_uncertain: 0.05 }
    }
}

/// Coefficients of the composed objective.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub final_pose: f64,
    pub coarse_pose: f64,
    pub fbi_fixed: f64,
    pub fbi_focal: f64,
}

impl LossWeights {
    pub fn supervised() -> Self {
        Self { final_pose: 1.0, coarse_pose: 1.0, ..Self::default() }
    }

    pub fn uses_fbi(&self) -> bool {
        self.fbi_fixed != 0.0 || self.fbi_focal != 0.0
    }

    pub fn uses_pose(&self) -> bool {
        self.final_pose != 0.0 || self.coarse_pose != 0.0
    }
}

/// Per-term batch means and their weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub final_pose: f64,
    pub coarse_pose: f64,
    pub fbi_fixed: f64,
    pub fbi_focal: f64,
}

/// `dL/dp` of one bone's row for the weighted mix of both FBI losses.
pub(crate) fn fbi_row_grad(
    row: &[f64],
    label: FbiStatus,
    fixed_weight: f64,
    focal_weight: f64,
    config: &FbiLossConfig,
) -> [f64; NUM_STATUS] {
    let mut d = [0.0; NUM_STATUS];
    let k = label.index();
    let p = row[k];
    if fixed_weight != 0.0 {
        let w = status_weight(label, config.w_clear, config.w_uncertain);
        if w != 0.0 && p >= PROB_FLOOR {
            d[k] -= fixed_weight * w / p;
        }
    }
    if focal_weight != 0.0 {
        d[k] += focal_weight * focal_term_grad(p, config.gamma);
    }
    d
}

/// Backpropagates `dL/dp` through a softmax row: `dz_j = p_j (dp_j - Σ_k p_k dp_k)`.
pub(crate) fn softmax_backward(p: &[f64], dp: &[f64], dz: &mut [f64]) {
    let dot: f64 = p.iter().zip(dp).map(|(a, b)| a * b).sum();
    for j in 0..p.len() {
        dz[j] = p[j] * (dp[j] - dot);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::{FbiStatus::*, NUM_FBI_BONES};

    fn rows(row: [f64; 3]) -> ProbabilityRows {
        [row; NUM_FBI_BONES]
    }

    #[test]
    fn focal_examples() {
        let one = |l| FbiMatrix([l; NUM_FBI_BONES]);
        let v = focal_fbi_loss(&rows([0.5, 0.3, 0.2]), &one(Forward), 2.0) / 14.0;
        assert!((v - 0.25 * 2f64.ln()).abs() < 1e-15);
        let v = focal_fbi_loss(&rows([1.0 / 3.0; 3]), &one(Backward), 2.0) / 14.0;
        assert!((v - 4.0 / 9.0 * 3f64.ln()).abs() < 1e-15);
        assert_eq!(focal_fbi_loss(&rows([0.0, 0.0, 1.0]), &one(Uncertain), 2.0), 0.0);
        assert!(focal_fbi_loss(&rows([0.0, 1.0, 0.0]), &one(Forward), 2.0).is_finite());
    }

    #[test]
    fn fixed_weight_examples() {
        let mut labels = FbiMatrix([Forward; NUM_FBI_BONES]);
        labels.0[4] = Uncertain;
        let mut p = rows([1.0, 0.0, 0.0]);
        p[4] = [0.5 * (1.0 - (-1f64).exp()), 0.5 * (1.0 - (-1f64).exp()), (-1f64).exp()];
        assert!((fixed_weight_fbi_loss(&p, &labels, 1.0, 0.05) - 0.05).abs() < 1e-15);
        assert_eq!(fixed_weight_fbi_loss(&p, &labels, 1.0, 0.0), 0.0);
        assert_eq!(fbi_row_grad(&p[4], Uncertain, 1.0, 0.0, &FbiLossConfig { w_uncertain: 0.0, ..Default::default() }), [0.0; 3]);
    }

    #[test]
    fn pose_l2_examples() {
        let gt: Vec<f64> = (0..48).map(|i| i as f64).collect();
        assert_eq!(pose_l2_loss(&gt, &gt), 0.0);
        let shifted: Vec<f64> = gt.iter().map(|v| v + 1.0).collect();
        assert_eq!(pose_l2_loss(&shifted, &gt), 1.0);
    }

    #[test]
    fn focal_grad_matches_finite_difference() {
        for gamma in [0.0, 0.5, 1.0, 2.0, 3.5] {
            for p in [0.01, 0.2, 0.5, 0.9, 0.999] {
                let h = 1e-6;
                let fd = (focal_term(p + h, gamma) - focal_term(p - h, gamma)) / (2.0 * h);
                let an = focal_term_grad(p, gamma);
                assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "{gamma} {p}: {fd} vs {an}");
            }
        }
        assert_eq!(focal_term_grad(1.0, 2.0), 0.0);
        assert_eq!(focal_term_grad(1.0, 0.0), -1.0);
        assert!(focal_term_grad(1.0, 0.5).is_finite());
    }
}

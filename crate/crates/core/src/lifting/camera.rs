use serde::{Deserialize, Serialize};

use crate::skeleton::{BoneLengthPrior, Pose2D, Pose3D, SkeletonTopology, NUM_JOINTS};

use super::LiftError;

/// Weak-perspective camera: `u = s·X + cx`, `v = s·Y + cy`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledOrthoCamera {
    /// Pixels per world unit.
    pub scale: f64,
    pub cx: f64,
    pub cy: f64,
}

impl ScaledOrthoCamera {
    pub fn new(scale: f64, cx: f64, cy: f64) -> Result<Self, LiftError> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(LiftError::ZeroScale);
        }
        Ok(Self { scale, cx, cy })
    }

    pub fn identity() -> Self {
        Self { scale: 1.0, cx: 0.0, cy: 0.0 }
    }
}

pub fn project(pose: &Pose3D, camera: &ScaledOrthoCamera) -> Pose2D {
    let mut out = [[0.0; 2]; NUM_JOINTS];
    for (uv, p) in out.iter_mut().zip(pose.0.iter()) {
        uv[0] = camera.scale * p[0] + camera.cx;
        uv[1] = camera.scale * p[1] + camera.cy;
    }
    Pose2D(out)
}

/// Smallest scale that keeps every depth radicand `L² − ‖Δu‖²/s²`
/// non-negative. Under-estimates the true scale unless some bone lies
/// exactly in the image plane.
pub fn estimate_scale(
    pose2d: &Pose2D,
    priors: &BoneLengthPrior,
    topology: &SkeletonTopology,
) -> Result<f64, LiftError> {
    let s = topology
        .tree_edges()
        .iter()
        .enumerate()
        .map(|(i, e)| image_length(pose2d, e.parent, e.child) / priors.edge(i))
        .fold(0.0, f64::max);
    if s > 0.0 && s.is_finite() {
        Ok(s)
    } else {
        Err(LiftError::ZeroScale)
    }
}

pub(crate) fn image_length(pose2d: &Pose2D, a: usize, b: usize) -> f64 {
    let (p, q) = (pose2d.0[a], pose2d.0[b]);
    (q[0] - p[0]).hypot(q[1] - p[1])
}

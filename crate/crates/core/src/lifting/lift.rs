use serde::{Deserialize, Serialize};

use crate::skeleton::{
    BoneLengthPrior, FbiMatrix, FbiStatus, Pose2D, Pose3D, SkeletonTopology, NUM_JOINTS, NUM_TREE_EDGES,
};

use super::camera::{estimate_scale, image_length};
use super::LiftError;

pub const DEFAULT_MAX_UNCERTAIN: usize = 12;

/// How to place the child of an Uncertain bone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UncertainPolicy {
    DefaultForward,
    DefaultBackward,
    /// Treat the bone as parallel to the image plane (ΔZ = 0).
    #[default]
    ZeroClamp,
}

/// Depth direction of the unlabeled spine edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpineSign {
    /// Thorax farther from the camera than the pelvis (+1).
    #[default]
    Behind,
    /// Thorax closer to the camera (−1).
    InFront,
}

impl SpineSign {
    pub fn value(self) -> f64 {
        match self {
            Self::Behind => 1.0,
            Self::InFront => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LiftOptions {
    /// Camera scale; estimated from the priors when absent.
    pub scale: Option<f64>,
    /// Principal point (cx, cy) in pixels.
    pub principal: [f64; 2],
    /// Spine direction; defaults to [`SpineSign::Behind`] and is then
    /// reported as ambiguous.
    pub spine_sign: Option<SpineSign>,
    pub uncertain_policy: UncertainPolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftResult {
    /// Pelvis at Z = 0, in the units of the bone-length prior.
    pub pose: Pose3D,
    pub scale_used: f64,
    /// Tree-edge indices whose depth sign was not fixed by the input, ascending.
    pub ambiguous_edges: Vec<usize>,
    /// Edges whose radicand `L² − ‖Δu‖²/s²` was negative and clamped to 0.
    pub radicand_clamps: usize,
}

/// Per-edge |ΔZ| and X/Y placement, shared by `lift` and `enumerate_lifts`.
struct Foreshortening {
    scale: f64,
    xy: [[f64; 2]; NUM_JOINTS],
    abs_dz: [f64; NUM_TREE_EDGES],
    clamps: usize,
}

fn foreshortening(
    pose2d: &Pose2D,
    priors: &BoneLengthPrior,
    topology: &SkeletonTopology,
    options: &LiftOptions,
) -> Result<Foreshortening, LiftError> {
    let scale = match options.scale {
        Some(s) => s,
        None => estimate_scale(pose2d, priors, topology)?,
    };
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(LiftError::ZeroScale);
    }
    let [cx, cy] = options.principal;
    let mut xy = [[0.0; 2]; NUM_JOINTS];
    for (out, uv) in xy.iter_mut().zip(pose2d.0.iter()) {
        *out = [(uv[0] - cx) / scale, (uv[1] - cy) / scale];
    }
    let mut abs_dz = [0.0; NUM_TREE_EDGES];
    let mut clamps = 0;
    for (i, e) in topology.tree_edges().iter().enumerate() {
        let planar = image_length(pose2d, e.parent, e.child) / scale;
        let len = priors.edge(i);
        let radicand = len * len - planar * planar;
        if radicand < 0.0 {
            clamps += 1;
        }
        abs_dz[i] = radicand.max(0.0).sqrt();
    }
    Ok(Foreshortening { scale, xy, abs_dz, clamps })
}

/// Accumulate depths root-to-leaf. `signs[e]` is the sign of
/// `Z(child) − Z(parent)` for tree edge `e`.
fn place(f: &Foreshortening, topology: &SkeletonTopology, signs: &[f64; NUM_TREE_EDGES]) -> Pose3D {
    let mut z = [0.0; NUM_JOINTS];
    for (i, e) in topology.tree_edges().iter().enumerate() {
        z[e.child] = z[e.parent] + signs[i] * f.abs_dz[i];
    }
    let mut joints = [[0.0; 3]; NUM_JOINTS];
    for j in 0..NUM_JOINTS {
        joints[j] = [f.xy[j][0], f.xy[j][1], z[j]];
    }
    Pose3D(joints)
}

/// Signs implied by the labels, plus the edges left ambiguous.
fn label_signs(
    fbi: &FbiMatrix,
    topology: &SkeletonTopology,
    options: &LiftOptions,
) -> ([f64; NUM_TREE_EDGES], Vec<usize>) {
    let mut signs = [0.0; NUM_TREE_EDGES];
    let mut ambiguous = Vec::new();
    for (i, sign) in signs.iter_mut().enumerate() {
        *sign = match topology.edge_fbi_bone(i) {
            // Forward: child closer to the camera, i.e. smaller Z.
            Some(bone) => match fbi.0[bone] {
                FbiStatus::Forward => -1.0,
                FbiStatus::Backward => 1.0,
                FbiStatus::Uncertain => {
                    ambiguous.push(i);
                    match options.uncertain_policy {
                        UncertainPolicy::DefaultForward => -1.0,
                        UncertainPolicy::DefaultBackward => 1.0,
                        UncertainPolicy::ZeroClamp => 0.0,
                    }
                }
            },
            None => match options.spine_sign {
                Some(s) => s.value(),
                None => {
                    ambiguous.push(i);
                    SpineSign::default().value()
                }
            },
        };
    }
    (signs, ambiguous)
}

/// Recover a 3D pose from 2D joints, per-bone labels and bone lengths.
pub fn lift(
    pose2d: &Pose2D,
    fbi: &FbiMatrix,
    priors: &BoneLengthPrior,
    topology: &SkeletonTopology,
    options: &LiftOptions,
) -> Result<LiftResult, LiftError> {
    let f = foreshortening(pose2d, priors, topology, options)?;
    let (signs, ambiguous_edges) = label_signs(fbi, topology, options);
    Ok(LiftResult {
        pose: place(&f, topology, &signs),
        scale_used: f.scale,
        ambiguous_edges,
        radicand_clamps: f.clamps,
    })
}

/// Every sign assignment of the ambiguous edges. Candidate `m` sets edge
/// `ambiguous_edges[i]` to "child closer" when bit `i` of `m` is 0 and to
/// "child farther" when it is 1.
pub fn enumerate_lifts(
    pose2d: &Pose2D,
    fbi: &FbiMatrix,
    priors: &BoneLengthPrior,
    topology: &SkeletonTopology,
    options: &LiftOptions,
    max_uncertain: usize,
) -> Result<Vec<LiftResult>, LiftError> {
    let f = foreshortening(pose2d, priors, topology, options)?;
    let (mut signs, ambiguous_edges) = label_signs(fbi, topology, options);
    let k = ambiguous_edges.len();
    if k > max_uncertain {
        return Err(LiftError::TooManyAmbiguous { found: k, max: max_uncertain });
    }
    if k == 0 {
        return Ok(vec![LiftResult {
            pose: place(&f, topology, &signs),
            scale_used: f.scale,
            ambiguous_edges,
            radicand_clamps: f.clamps,
        }]);
    }
    let mut out = Vec::with_capacity(1 << k);
    for mask in 0u32..(1u32 << k) {
        for (bit, &edge) in ambiguous_edges.iter().enumerate() {
            signs[edge] = if mask >> bit & 1 == 0 { -1.0 } else { 1.0 };
        }
        out.push(LiftResult {
            pose: place(&f, topology, &signs),
            scale_used: f.scale,
            ambiguous_edges: ambiguous_edges.clone(),
            radicand_clamps: f.clamps,
        });
    }
    Ok(out)
}

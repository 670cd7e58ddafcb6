//! Skeleton data model: the fixed 16-joint MPII layout, its kinematic tree,
//! the 14 directed bones that carry forward/backward labels, and the
//! conversion from a camera-frame 3D pose into those labels.
//!
//! Sign convention used throughout the crate: the camera looks down +Z, so
//! a smaller Z is closer to the camera. A bone `B0 -> B1` is **Forward**
//! when its child end `B1` is closer to the camera than its parent end
//! `B0`, which is the same as a positive out-of-plane angle.

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const NUM_JOINTS: usize = 16;
pub const NUM_TREE_EDGES: usize = 15;
pub const NUM_FBI_BONES: usize = 14;
pub const NUM_STATUS: usize = 3;

/// Pelvis index in MPII order.
pub const PELVIS: usize = 6;

const MPII_TOPOLOGY_JSON: &str = include_str!("../config/topology.json");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SkeletonError {
    #[error("bone {bone} has zero length")]
    DegenerateBone { bone: usize },
    #[error("bone index {0} out of range (expected < {NUM_FBI_BONES})")]
    BoneIndexOutOfRange(usize),
    #[error("threshold angle {0} outside [0, 90] degrees")]
    AlphaOutOfRange(f64),
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
}

/// One directed edge of the kinematic tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub name: String,
    pub parent: usize,
    pub child: usize,
}

/// Serialized form of the topology, shared with the annotation UI and
/// referenced by every file format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyDocument {
    pub version: String,
    pub root: String,
    pub joints: Vec<String>,
    pub tree_edges: Vec<EdgeDocument>,
    pub fbi_bones: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeDocument {
    pub name: String,
    pub parent: String,
    pub child: String,
}

/// The validated skeleton topology. Tree edges are stored in root-to-leaf
/// order: every edge's parent joint is either the root or the child of an
/// earlier edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonTopology {
    version: String,
    joint_names: Vec<String>,
    root: usize,
    tree_edges: Vec<Edge>,
    /// Tree-edge index of each FBI bone.
    fbi_bones: Vec<usize>,
    /// Inverse of `fbi_bones`.
    edge_to_bone: Vec<Option<usize>>,
}

impl SkeletonTopology {
    /// The built-in MPII 16-joint topology.
    pub fn mpii() -> &'static SkeletonTopology {
        static TOPOLOGY: OnceLock<SkeletonTopology> = OnceLock::new();
        TOPOLOGY.get_or_init(|| {
            let doc: TopologyDocument =
                serde_json::from_str(MPII_TOPOLOGY_JSON).expect("bundled topology.json is valid JSON");
            SkeletonTopology::from_document(&doc).expect("bundled topology.json is a valid topology")
        })
    }

    pub fn from_document(doc: &TopologyDocument) -> Result<Self, SkeletonError> {
        let bad = |msg: String| SkeletonError::InvalidTopology(msg);
        if doc.joints.len() != NUM_JOINTS {
            return Err(bad(format!("expected {NUM_JOINTS} joints, found {}", doc.joints.len())));
        }
        let joint = |name: &str| {
            doc.joints
                .iter()
                .position(|j| j == name)
                .ok_or_else(|| bad(format!("unknown joint `{name}`")))
        };
        for (i, name) in doc.joints.iter().enumerate() {
            if doc.joints[..i].contains(name) {
                return Err(bad(format!("duplicate joint `{name}`")));
            }
        }
        let root = joint(&doc.root)?;
        if doc.tree_edges.len() != NUM_TREE_EDGES {
            return Err(bad(format!(
                "expected {NUM_TREE_EDGES} tree edges, found {}",
                doc.tree_edges.len()
            )));
        }

        let mut reached = vec![false; NUM_JOINTS];
        reached[root] = true;
        let mut tree_edges = Vec::with_capacity(NUM_TREE_EDGES);
        for e in &doc.tree_edges {
            let parent = joint(&e.parent)?;
            let child = joint(&e.child)?;
            if !reached[parent] {
                return Err(bad(format!(
                    "edge `{}` visits parent `{}` before it is reached from the root",
                    e.name, e.parent
                )));
            }
            if reached[child] {
                return Err(bad(format!("edge `{}` closes a cycle at `{}`", e.name, e.child)));
            }
            reached[child] = true;
            if tree_edges.iter().any(|t: &Edge| t.name == e.name) {
                return Err(bad(format!("duplicate edge name `{}`", e.name)));
            }
            tree_edges.push(Edge { name: e.name.clone(), parent, child });
        }

        if doc.fbi_bones.len() != NUM_FBI_BONES {
            return Err(bad(format!(
                "expected {NUM_FBI_BONES} FBI bones, found {}",
                doc.fbi_bones.len()
            )));
        }
        let mut fbi_bones = Vec::with_capacity(NUM_FBI_BONES);
        let mut edge_to_bone = vec![None; NUM_TREE_EDGES];
        for (bone, name) in doc.fbi_bones.iter().enumerate() {
            let edge = tree_edges
                .iter()
                .position(|e| &e.name == name)
                .ok_or_else(|| bad(format!("FBI bone `{name}` is not a tree edge")))?;
            if edge_to_bone[edge].is_some() {
                return Err(bad(format!("FBI bone `{name}` listed twice")));
            }
            edge_to_bone[edge] = Some(bone);
            fbi_bones.push(edge);
        }

        Ok(Self {
            version: doc.version.clone(),
            joint_names: doc.joints.clone(),
            root,
            tree_edges,
            fbi_bones,
            edge_to_bone,
        })
    }

    pub fn to_document(&self) -> TopologyDocument {
        TopologyDocument {
            version: self.version.clone(),
            root: self.joint_names[self.root].clone(),
            joints: self.joint_names.clone(),
            tree_edges: self
                .tree_edges
                .iter()
                .map(|e| EdgeDocument {
                    name: e.name.clone(),
                    parent: self.joint_names[e.parent].clone(),
                    child: self.joint_names[e.child].clone(),
                })
                .collect(),
            fbi_bones: self.fbi_bones.iter().map(|&e| self.tree_edges[e].name.clone()).collect(),
        }
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn joint_names(&self) -> &[String] {
        &self.joint_names
    }

    pub fn joint_name(&self, joint: usize) -> &str {
        &self.joint_names[joint]
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joint_names.iter().position(|j| j == name)
    }

    pub fn tree_edges(&self) -> &[Edge] {
        &self.tree_edges
    }

    /// The FBI bone with the given index, as a tree edge.
    pub fn fbi_bone(&self, bone: usize) -> &Edge {
        &self.tree_edges[self.fbi_bones[bone]]
    }

    pub fn fbi_bone_edges(&self) -> &[usize] {
        &self.fbi_bones
    }

    /// FBI bone index carried by a tree edge, `None` for edges without a label
    /// (the spine in the MPII layout).
    pub fn edge_fbi_bone(&self, edge: usize) -> Option<usize> {
        self.edge_to_bone[edge]
    }
}

/// Per-joint pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pose2D(pub [[f64; 2]; NUM_JOINTS]);

/// Per-joint camera-frame coordinates in millimeters (+Z away from the camera).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pose3D(pub [[f64; 3]; NUM_JOINTS]);

impl Pose2D {
    pub fn validate(&self) -> Result<(), Vec<PoseViolation>> {
        validate_joints(&self.0)
    }
}

impl Pose3D {
    pub fn validate(&self) -> Result<(), Vec<PoseViolation>> {
        validate_joints(&self.0)
    }

    /// Translate so that the pelvis sits at the origin.
    pub fn root_relative(&self) -> Pose3D {
        let root = self.0[PELVIS];
        let mut out = *self;
        for p in out.0.iter_mut() {
            for k in 0..3 {
                p[k] -= root[k];
            }
        }
        out
    }

    /// Negate every joint's depth offset from the pelvis. The result projects
    /// to the same 2D pose under any scaled-orthographic camera and flips
    /// every Forward/Backward label.
    pub fn depth_mirrored(&self) -> Pose3D {
        let root_z = self.0[PELVIS][2];
        let mut out = *self;
        for p in out.0.iter_mut() {
            p[2] = 2.0 * root_z - p[2];
        }
        out
    }

    pub fn flatten(&self) -> [f64; 3 * NUM_JOINTS] {
        let mut out = [0.0; 3 * NUM_JOINTS];
        for (j, p) in self.0.iter().enumerate() {
            out[3 * j..3 * j + 3].copy_from_slice(p);
        }
        out
    }

    pub fn from_flat(flat: &[f64]) -> Pose3D {
        assert_eq!(flat.len(), 3 * NUM_JOINTS, "flat pose must have {} entries", 3 * NUM_JOINTS);
        let mut joints = [[0.0; 3]; NUM_JOINTS];
        for (j, p) in joints.iter_mut().enumerate() {
            p.copy_from_slice(&flat[3 * j..3 * j + 3]);
        }
        Pose3D(joints)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PoseViolation {
    JointCount { expected: usize, found: usize },
    NonFinite { joint: usize, name: String, axis: usize, value: f64 },
}

impl fmt::Display for PoseViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::JointCount { expected, found } => {
                write!(f, "expected {expected} joints, found {found}")
            }
            Self::NonFinite { joint, name, axis, value } => {
                let axis = ["x", "y", "z"].get(*axis).copied().unwrap_or("?");
                write!(f, "joint {joint} ({name}) has non-finite {axis} = {value}")
            }
        }
    }
}

/// Check joint count and finiteness of raw joint coordinates (2D or 3D).
pub fn validate_joints<const D: usize>(joints: &[[f64; D]]) -> Result<(), Vec<PoseViolation>> {
    let topology = SkeletonTopology::mpii();
    let mut violations = Vec::new();
    if joints.len() != NUM_JOINTS {
        violations.push(PoseViolation::JointCount { expected: NUM_JOINTS, found: joints.len() });
    }
    for (j, p) in joints.iter().enumerate() {
        for (axis, &value) in p.iter().enumerate() {
            if !value.is_finite() {
                let name = topology
                    .joint_names()
                    .get(j)
                    .cloned()
                    .unwrap_or_else(|| format!("joint-{j}"));
                violations.push(PoseViolation::NonFinite { joint: j, name, axis, value });
            }
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Ternary per-bone label. The discriminants are the one-hot column indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
#[repr(u8)]
pub enum FbiStatus {
    Forward = 0,
    Backward = 1,
    Uncertain = 2,
}

impl FbiStatus {
    pub const ALL: [FbiStatus; NUM_STATUS] = [Self::Forward, Self::Backward, Self::Uncertain];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    /// Forward or Backward.
    pub fn is_clear(self) -> bool {
        self != Self::Uncertain
    }

    /// Swap Forward and Backward.
    pub fn flipped(self) -> Self {
        match self {
            Self::Forward => Self::Backward,
            Self::Backward => Self::Forward,
            Self::Uncertain => Self::Uncertain,
        }
    }
}

impl From<FbiStatus> for u8 {
    fn from(s: FbiStatus) -> u8 {
        s as u8
    }
}

impl TryFrom<u8> for FbiStatus {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        FbiStatus::from_index(v as usize).ok_or_else(|| format!("invalid FBI status {v}, expected 0, 1 or 2"))
    }
}

/// One label per FBI bone, in topology bone order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FbiMatrix(pub [FbiStatus; NUM_FBI_BONES]);

impl FbiMatrix {
    pub fn filled(status: FbiStatus) -> Self {
        Self([status; NUM_FBI_BONES])
    }

    pub fn count(&self, status: FbiStatus) -> usize {
        self.0.iter().filter(|&&s| s == status).count()
    }
}

/// 14x3 one-hot encoding; column order follows [`FbiStatus`] discriminants.
pub fn fbi_one_hot(matrix: &FbiMatrix) -> [[f64; NUM_STATUS]; NUM_FBI_BONES] {
    let mut out = [[0.0; NUM_STATUS]; NUM_FBI_BONES];
    for (row, status) in out.iter_mut().zip(matrix.0.iter()) {
        row[status.index()] = 1.0;
    }
    out
}

/// Bone lengths per tree edge (including the unlabeled spine).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; NUM_TREE_EDGES]", into = "[f64; NUM_TREE_EDGES]")]
pub struct BoneLengthPrior([f64; NUM_TREE_EDGES]);

impl BoneLengthPrior {
    pub fn new(lengths: [f64; NUM_TREE_EDGES]) -> Result<Self, String> {
        if let Some((i, l)) = lengths.iter().enumerate().find(|(_, l)| !(**l > 0.0 && l.is_finite())) {
            return Err(format!("bone length for edge {i} must be positive and finite, got {l}"));
        }
        Ok(Self(lengths))
    }

    /// Measure the tree-edge lengths of a pose.
    pub fn measure(pose: &Pose3D, topology: &SkeletonTopology) -> [f64; NUM_TREE_EDGES] {
        let mut out = [0.0; NUM_TREE_EDGES];
        for (len, e) in out.iter_mut().zip(topology.tree_edges()) {
            *len = dist3(&pose.0[e.parent], &pose.0[e.child]);
        }
        out
    }

    pub fn lengths(&self) -> &[f64; NUM_TREE_EDGES] {
        &self.0
    }

    pub fn edge(&self, edge: usize) -> f64 {
        self.0[edge]
    }
}

impl TryFrom<[f64; NUM_TREE_EDGES]> for BoneLengthPrior {
    type Error = String;

    fn try_from(v: [f64; NUM_TREE_EDGES]) -> Result<Self, String> {
        Self::new(v)
    }
}

impl From<BoneLengthPrior> for [f64; NUM_TREE_EDGES] {
    fn from(p: BoneLengthPrior) -> Self {
        p.0
    }
}

pub(crate) fn dist3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2) + (b[2] - a[2]).powi(2)).sqrt()
}

/// Signed angle in degrees between a bone and the image plane. Positive
/// when the child end is closer to the camera.
pub fn out_of_plane_angle(
    pose: &Pose3D,
    bone_index: usize,
    topology: &SkeletonTopology,
) -> Result<f64, SkeletonError> {
    if bone_index >= NUM_FBI_BONES {
        return Err(SkeletonError::BoneIndexOutOfRange(bone_index));
    }
    let edge = topology.fbi_bone(bone_index);
    let (b0, b1) = (&pose.0[edge.parent], &pose.0[edge.child]);
    let len = dist3(b0, b1);
    if !(len > 1e-12) || !len.is_finite() {
        return Err(SkeletonError::DegenerateBone { bone: bone_index });
    }
    let sin = ((b0[2] - b1[2]) / len).clamp(-1.0, 1.0);
    Ok(sin.asin().to_degrees())
}

/// Labels from a 3D pose; bones too short to define an angle are reported
/// in `degenerate_bones` and labeled Uncertain.
#[derive(Debug, Clone, PartialEq)]
pub struct FbiConversion {
    pub labels: FbiMatrix,
    pub degenerate_bones: Vec<usize>,
}

pub fn status_for_angle(theta: f64, alpha: f64) -> FbiStatus {
    if theta > alpha {
        FbiStatus::Forward
    } else if theta < -alpha {
        FbiStatus::Backward
    } else {
        FbiStatus::Uncertain
    }
}

pub fn convert_pose_to_fbi(
    pose: &Pose3D,
    alpha: f64,
    topology: &SkeletonTopology,
) -> Result<FbiConversion, SkeletonError> {
    if !(0.0..=90.0).contains(&alpha) {
        return Err(SkeletonError::AlphaOutOfRange(alpha));
    }
    let mut labels = FbiMatrix::filled(FbiStatus::Uncertain);
    let mut degenerate_bones = Vec::new();
    for bone in 0..NUM_FBI_BONES {
        match out_of_plane_angle(pose, bone, topology) {
            Ok(theta) => labels.0[bone] = status_for_angle(theta, alpha),
            Err(SkeletonError::DegenerateBone { .. }) => {
                log::warn!("bone {bone} is degenerate; labeling it uncertain");
                degenerate_bones.push(bone);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(FbiConversion { labels, degenerate_bones })
}

/// All 14 out-of-plane angles; degenerate bones report 0.
pub fn bone_angles(pose: &Pose3D, topology: &SkeletonTopology) -> [f64; NUM_FBI_BONES] {
    let mut out = [0.0; NUM_FBI_BONES];
    for (bone, theta) in out.iter_mut().enumerate() {
        *theta = out_of_plane_angle(pose, bone, topology).unwrap_or(0.0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pose_with_bone(bone: usize, b0: [f64; 3], b1: [f64; 3]) -> Pose3D {
        let topo = SkeletonTopology::mpii();
        // Spread joints out so no other bone is degenerate.
        let mut joints = [[0.0; 3]; NUM_JOINTS];
        for (j, p) in joints.iter_mut().enumerate() {
            *p = [j as f64 * 10.0, (j * j) as f64, 0.0];
        }
        let e = topo.fbi_bone(bone);
        joints[e.parent] = b0;
        joints[e.child] = b1;
        Pose3D(joints)
    }

    #[test]
    fn topology_invariants() {
        let topo = SkeletonTopology::mpii();
        assert_eq!(topo.joint_names().len(), 16);
        assert_eq!(topo.tree_edges().len(), 15);
        assert_eq!(topo.fbi_bone_edges().len(), 14);
        assert_eq!(topo.joint_name(topo.root()), "pelvis");
        assert_eq!(topo.root(), PELVIS);
        // Spine is the only unlabeled edge.
        let unlabeled: Vec<_> = (0..15).filter(|&e| topo.edge_fbi_bone(e).is_none()).collect();
        assert_eq!(unlabeled, vec![0]);
        assert_eq!(topo.tree_edges()[0].name, "spine");
        let doc = topo.to_document();
        assert_eq!(&SkeletonTopology::from_document(&doc).unwrap(), topo);
    }

    #[test]
    fn topology_rejects_cycles_and_unknown_bones() {
        let mut doc = SkeletonTopology::mpii().to_document();
        doc.tree_edges[1].child = "pelvis".into();
        assert!(SkeletonTopology::from_document(&doc).is_err());

        let mut doc = SkeletonTopology::mpii().to_document();
        doc.fbi_bones[0] = "tail".into();
        assert!(SkeletonTopology::from_document(&doc).is_err());

        let mut doc = SkeletonTopology::mpii().to_document();
        doc.fbi_bones.pop();
        assert!(SkeletonTopology::from_document(&doc).is_err());
    }

    #[test]
    fn angle_examples() {
        let topo = SkeletonTopology::mpii();
        let p = pose_with_bone(3, [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
        assert_eq!(out_of_plane_angle(&p, 3, topo).unwrap(), 0.0);

        let p = pose_with_bone(3, [0.0, 0.0, 0.0], [0.0, 0.0, -1.0]);
        assert!((out_of_plane_angle(&p, 3, topo).unwrap() - 90.0).abs() < 1e-12);

        let p = pose_with_bone(3, [0.0, 0.0, 0.0], [0.809, 0.0, -0.5878]);
        let theta = out_of_plane_angle(&p, 3, topo).unwrap();
        // asin(0.5878 / |(0.809, 0, -0.5878)|), evaluated independently.
        let expected = (0.5878f64 / (0.809f64.powi(2) + 0.5878f64.powi(2)).sqrt()).asin().to_degrees();
        assert!((theta - expected).abs() < 1e-12);
        assert!((theta - 36.0).abs() < 0.01);

        let conv = convert_pose_to_fbi(&p, 35.0, topo).unwrap();
        assert_eq!(conv.labels.0[3], FbiStatus::Forward);
    }

    #[test]
    fn angle_errors() {
        let topo = SkeletonTopology::mpii();
        let p = pose_with_bone(5, [1.0, 2.0, 3.0], [1.0, 2.0, 3.0]);
        assert_eq!(out_of_plane_angle(&p, 5, topo), Err(SkeletonError::DegenerateBone { bone: 5 }));
        assert_eq!(out_of_plane_angle(&p, 14, topo), Err(SkeletonError::BoneIndexOutOfRange(14)));

        let conv = convert_pose_to_fbi(&p, 35.0, topo).unwrap();
        assert_eq!(conv.degenerate_bones, vec![5]);
        assert_eq!(conv.labels.0[5], FbiStatus::Uncertain);
        assert!(convert_pose_to_fbi(&p, 91.0, topo).is_err());
        assert!(convert_pose_to_fbi(&p, -1.0, topo).is_err());
    }

    #[test]
    fn planar_bone_is_uncertain_and_alpha_zero_collapses() {
        let topo = SkeletonTopology::mpii();
        let p = pose_with_bone(0, [0.0, 0.0, 5.0], [3.0, 4.0, 5.0]);
        let conv = convert_pose_to_fbi(&p, 35.0, topo).unwrap();
        assert_eq!(conv.labels.0[0], FbiStatus::Uncertain);

        // Every joint at a distinct depth: no bone is planar.
        let mut joints = [[0.0; 3]; NUM_JOINTS];
        for (j, p) in joints.iter_mut().enumerate() {
            *p = [j as f64, 1.0, (j as f64 * 0.37).sin() * 100.0 + j as f64];
        }
        let conv = convert_pose_to_fbi(&Pose3D(joints), 0.0, topo).unwrap();
        assert_eq!(conv.labels.count(FbiStatus::Uncertain), 0);
    }

    #[test]
    fn one_hot_rows() {
        let all_f = fbi_one_hot(&FbiMatrix::filled(FbiStatus::Forward));
        assert!(all_f.iter().all(|r| *r == [1.0, 0.0, 0.0]));
        let all_u = fbi_one_hot(&FbiMatrix::filled(FbiStatus::Uncertain));
        assert!(all_u.iter().all(|r| *r == [0.0, 0.0, 1.0]));
        let mut m = FbiMatrix::filled(FbiStatus::Forward);
        m.0[4] = FbiStatus::Backward;
        m.0[9] = FbiStatus::Uncertain;
        let oh = fbi_one_hot(&m);
        for (i, row) in oh.iter().enumerate() {
            assert_eq!(row.iter().sum::<f64>(), 1.0);
            assert_eq!(row[m.0[i].index()], 1.0);
        }
    }

    #[test]
    fn validation_reports() {
        let good = [[1.0, 2.0]; NUM_JOINTS];
        assert!(validate_joints(&good).is_ok());

        let short = [[1.0, 2.0, 3.0]; 15];
        let v = validate_joints(&short).unwrap_err();
        assert_eq!(v, vec![PoseViolation::JointCount { expected: 16, found: 15 }]);

        let mut nan = [[0.0, 0.0, 0.0]; NUM_JOINTS];
        nan[11][2] = f64::NAN;
        let v = validate_joints(&nan).unwrap_err();
        assert_eq!(v.len(), 1);
        match &v[0] {
            PoseViolation::NonFinite { joint, name, axis, .. } => {
                assert_eq!((*joint, name.as_str(), *axis), (11, "r-elbow", 2));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(v[0].to_string().contains("r-elbow"));
    }

    #[test]
    fn status_serializes_as_index() {
        let m = FbiMatrix([FbiStatus::Forward, FbiStatus::Backward, FbiStatus::Uncertain, FbiStatus::Forward,
            FbiStatus::Forward, FbiStatus::Forward, FbiStatus::Forward, FbiStatus::Forward,
            FbiStatus::Forward, FbiStatus::Forward, FbiStatus::Forward, FbiStatus::Forward,
            FbiStatus::Forward, FbiStatus::Forward]);
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.starts_with("[0,1,2,0"));
        assert_eq!(serde_json::from_str::<FbiMatrix>(&s).unwrap(), m);
        assert!(serde_json::from_str::<FbiStatus>("3").is_err());
    }

    fn arb_pose() -> impl Strategy<Value = Pose3D> {
        proptest::collection::vec(-1000.0f64..1000.0, 48).prop_map(|v| Pose3D::from_flat(&v))
    }

    proptest! {
        #[test]
        fn conversion_invariant_to_scale_and_translation(
            pose in arb_pose(),
            scale in 0.01f64..100.0,
            shift in proptest::array::uniform3(-500.0f64..500.0),
            alpha in 0.0f64..90.0,
        ) {
            let topo = SkeletonTopology::mpii();
            let base = convert_pose_to_fbi(&pose, alpha, topo).unwrap();
            let mut moved = pose;
            for p in moved.0.iter_mut() {
                for k in 0..3 { p[k] = p[k] * scale + shift[k]; }
            }
            let angles_a = bone_angles(&pose, topo);
            let angles_b = bone_angles(&moved, topo);
            let other = convert_pose_to_fbi(&moved, alpha, topo).unwrap();
            for b in 0..NUM_FBI_BONES {
                // Labels can only differ when rounding moves θ across ±α.
                if (angles_a[b].abs() - alpha).abs() > 1e-6 {
                    prop_assert_eq!(base.labels.0[b], other.labels.0[b]);
                }
                prop_assert!((angles_a[b] - angles_b[b]).abs() < 1e-6);
            }
        }

        #[test]
        fn uncertain_set_grows_with_alpha(pose in arb_pose(), a in 0.0f64..90.0, b in 0.0f64..90.0) {
            let topo = SkeletonTopology::mpii();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let l = convert_pose_to_fbi(&pose, lo, topo).unwrap().labels;
            let h = convert_pose_to_fbi(&pose, hi, topo).unwrap().labels;
            for i in 0..NUM_FBI_BONES {
                if l.0[i] == FbiStatus::Uncertain {
                    prop_assert_eq!(h.0[i], FbiStatus::Uncertain);
                }
            }
        }

        #[test]
        fn reflecting_depth_swaps_labels(pose in arb_pose(), alpha in 0.0f64..90.0) {
            let topo = SkeletonTopology::mpii();
            let a = convert_pose_to_fbi(&pose, alpha, topo).unwrap().labels;
            let b = convert_pose_to_fbi(&pose.depth_mirrored(), alpha, topo).unwrap().labels;
            let angles = bone_angles(&pose, topo);
            for i in 0..NUM_FBI_BONES {
                if (angles[i].abs() - alpha).abs() > 1e-6 {
                    prop_assert_eq!(b.0[i], a.0[i].flipped());
                }
            }
        }

        #[test]
        fn one_hot_rows_sum_to_one(idx in proptest::collection::vec(0usize..3, 14)) {
            let mut m = FbiMatrix::filled(FbiStatus::Forward);
            for (i, &s) in idx.iter().enumerate() { m.0[i] = FbiStatus::from_index(s).unwrap(); }
            for row in fbi_one_hot(&m) {
                prop_assert_eq!(row.iter().sum::<f64>(), 1.0);
            }
        }
    }
}

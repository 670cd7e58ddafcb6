//! Seeded generator of anatomically plausible 3D poses with exact bone
//! lengths, standing in for motion-capture data.
//!
//! Poses are built in a body frame (x = subject's left, y = down, z = away
//! from a camera the subject faces), then rotated by a random global
//! orientation and placed at a fixed depth.

use nalgebra::{Rotation3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::skeleton::{BoneLengthPrior, Pose3D, SkeletonTopology, NUM_JOINTS, NUM_TREE_EDGES};

/// Inclusive angle range in degrees.
pub type Range = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    /// Tree-edge lengths in millimeters.
    pub bone_lengths: BoneLengthPrior,
    /// Pelvis depth in front of the camera, millimeters.
    pub root_depth: f64,

    // Global orientation relative to the camera.
    pub yaw: Range,
    pub pitch: Range,
    pub roll: Range,

    pub torso_bend: Range,
    pub torso_side_bend: Range,
    pub torso_twist: Range,
    /// Max tilt of the neck away from the spine direction.
    pub neck_tilt: f64,
    /// Max tilt of the head away from the neck direction.
    pub head_tilt: f64,
    pub clavicle_elevation: Range,

    /// Angle between the upper arm and the torso's down axis.
    pub arm_raise: Range,
    /// Flexion of the elbow hinge (0 = straight).
    pub elbow_flex: Range,
    /// Forward swing of the thigh (negative = extension).
    pub hip_flex: Range,
    /// Outward swing of the thigh.
    pub hip_abduct: Range,
    /// Backward bend of the knee hinge (0 = straight).
    pub knee_flex: Range,
}

/// Default adult bone lengths (mm) in topology edge order: spine, neck,
/// head, r-clavicle, r-upper-arm, r-forearm, l-clavicle, l-upper-arm,
/// l-forearm, r-pelvis, r-thigh, r-shin, l-pelvis, l-thigh, l-shin.
pub const DEFAULT_BONE_LENGTHS: [f64; NUM_TREE_EDGES] = [
    480.0, 120.0, 190.0, 160.0, 280.0, 250.0, 160.0, 280.0, 250.0, 130.0, 440.0, 440.0, 130.0, 440.0, 440.0,
];

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            bone_lengths: BoneLengthPrior::new(DEFAULT_BONE_LENGTHS).expect("positive defaults"),
            root_depth: 5000.0,
            yaw: [-180.0, 180.0],
            pitch: [-40.0, 40.0],
            roll: [-15.0, 15.0],
            torso_bend: [-15.0, 60.0],
            torso_side_bend: [-20.0, 20.0],
            torso_twist: [-30.0, 30.0],
            neck_tilt: 25.0,
            head_tilt: 30.0,
            clavicle_elevation: [-10.0, 25.0],
            arm_raise: [0.0, 170.0],
            elbow_flex: [0.0, 145.0],
            hip_flex: [-25.0, 110.0],
            hip_abduct: [-10.0, 45.0],
            knee_flex: [0.0, 140.0],
        }
    }
}

impl SynthConfig {
    /// A narrower, mostly upright distribution seen roughly from the front,
    /// comparable to a motion-capture studio.
    pub fn studio() -> Self {
        Self {
            yaw: [-70.0, 70.0],
            pitch: [-10.0, 10.0],
            roll: [-5.0, 5.0],
            torso_bend: [-5.0, 25.0],
            torso_side_bend: [-10.0, 10.0],
            torso_twist: [-15.0, 15.0],
            arm_raise: [0.0, 100.0],
            elbow_flex: [0.0, 120.0],
            hip_flex: [-15.0, 60.0],
            hip_abduct: [-5.0, 25.0],
            knee_flex: [0.0, 90.0],
            ..Self::default()
        }
    }
}

fn uniform(rng: &mut impl Rng, range: Range) -> f64 {
    let [lo, hi] = range;
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

fn rot(axis: Vector3<f64>, deg: f64) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Unit::new_normalize(axis), deg.to_radians())
}

/// Tilt `dir` by an angle drawn uniformly from [0, max] toward a uniformly
/// random perpendicular direction.
fn cone(rng: &mut impl Rng, dir: Vector3<f64>, max_deg: f64) -> Vector3<f64> {
    let helper = if dir.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let perp = dir.cross(&helper).normalize();
    let azimuth = rng.random_range(0.0..360.0);
    let axis = rot(dir, azimuth) * perp;
    rot(axis, uniform(rng, [0.0, max_deg])) * dir
}

/// Deterministic pose for `seed`. Bone lengths equal `config.bone_lengths`.
pub fn generate_synthetic_pose(seed: u64, config: &SynthConfig) -> Pose3D {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let topology = SkeletonTopology::mpii();
    let idx = |name: &str| topology.joint_index(name).expect("MPII joint");
    let len = |edge: usize| config.bone_lengths.edge(edge);

    let left = Vector3::x();
    let down = Vector3::y();
    let front = -Vector3::z();

    // Directions per tree edge, body frame.
    let mut dirs = [Vector3::zeros(); NUM_TREE_EDGES];

    let torso = rot(left, -uniform(&mut rng, config.torso_bend))
        * rot(front, uniform(&mut rng, config.torso_side_bend));
    let twist = rot(torso * -down, uniform(&mut rng, config.torso_twist));
    let torso = twist * torso;
    let t_up = torso * -down;
    let t_left = torso * left;
    let t_front = torso * front;
    dirs[0] = t_up;

    let neck = cone(&mut rng, t_up, config.neck_tilt);
    dirs[1] = neck;
    dirs[2] = cone(&mut rng, neck, config.head_tilt);

    // Arms: (clavicle, upper arm, forearm) edges and the outward direction.
    for (edges, outward) in [([3, 4, 5], -t_left), ([6, 7, 8], t_left)] {
        let lift_axis = outward.cross(&t_up);
        let clavicle = rot(lift_axis, uniform(&mut rng, config.clavicle_elevation)) * outward;
        dirs[edges[0]] = clavicle;

        let raise = uniform(&mut rng, config.arm_raise);
        let azimuth = rng.random_range(0.0..360.0);
        let swing_axis = rot(-t_up, azimuth) * t_front;
        let upper = rot(swing_axis, raise) * -t_up;
        dirs[edges[1]] = upper;

        let hinge_helper = if upper.cross(&t_front).norm() > 1e-6 { t_front } else { t_left };
        let hinge = rot(upper, rng.random_range(-90.0..90.0)) * upper.cross(&hinge_helper).normalize();
        dirs[edges[2]] = rot(hinge, uniform(&mut rng, config.elbow_flex)) * upper;
    }

    // Legs hang from the pelvis frame, which ignores torso bend.
    for (edges, outward, side) in [([9, 10, 11], -left, 1.0), ([12, 13, 14], left, -1.0)] {
        dirs[edges[0]] = cone(&mut rng, outward, 10.0);
        let flex = uniform(&mut rng, config.hip_flex);
        let abduct = uniform(&mut rng, config.hip_abduct);
        let knee = uniform(&mut rng, config.knee_flex);
        let hip = rot(front, side * abduct) * rot(left, -flex);
        dirs[edges[1]] = hip * down;
        dirs[edges[2]] = hip * rot(left, knee) * down;
    }

    let global = rot(-down, uniform(&mut rng, config.yaw))
        * rot(left, uniform(&mut rng, config.pitch))
        * rot(front, uniform(&mut rng, config.roll));

    let mut points = [Vector3::zeros(); NUM_JOINTS];
    for (i, e) in topology.tree_edges().iter().enumerate() {
        points[e.child] = points[e.parent] + global * dirs[i].normalize() * len(i);
    }
    let root = idx("pelvis");
    debug_assert_eq!(points[root], Vector3::zeros());

    let mut joints = [[0.0; 3]; NUM_JOINTS];
    for (j, p) in points.iter().enumerate() {
        joints[j] = [p.x, p.y, p.z + config.root_depth];
    }
    Pose3D(joints)
}

//! Stand-in for the image-based FBI predictor: per-bone probability rows
//! drawn around the thresholded label of a known 3D pose.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::skeleton::{
    bone_angles, fbi_one_hot, status_for_angle, FbiMatrix, Pose3D, SkeletonTopology, NUM_FBI_BONES, NUM_STATUS,
};

pub type ProbabilityRows = [[f64; NUM_STATUS]; NUM_FBI_BONES];

/// Output of the two differently supervised FBI classifiers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FbiProbabilities {
    /// Fixed-weight supervision: confident on steep bones.
    pub p_fws: ProbabilityRows,
    /// Adaptive (focal) supervision: confident on near-planar bones.
    pub p_aws: ProbabilityRows,
}

impl FbiProbabilities {
    /// Both matrices set to the one-hot encoding of `labels`.
    pub fn from_labels(labels: &FbiMatrix) -> Self {
        let oh = fbi_one_hot(labels);
        Self { p_fws: oh, p_aws: oh }
    }

    /// Uniform rows, carrying no information.
    pub fn uninformative() -> Self {
        let row = [1.0 / 3.0; NUM_STATUS];
        Self { p_fws: [row; NUM_FBI_BONES], p_aws: [row; NUM_FBI_BONES] }
    }

    /// `p_fws` rows then `p_aws` rows, row-major (84 values).
    pub fn flatten_into(&self, out: &mut [f64]) {
        assert_eq!(out.len(), 2 * NUM_FBI_BONES * NUM_STATUS);
        for (dst, src) in out.iter_mut().zip(self.p_fws.iter().chain(self.p_aws.iter()).flatten()) {
            *dst = *src;
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, rows) in [("p_fws", &self.p_fws), ("p_aws", &self.p_aws)] {
            for (i, row) in rows.iter().enumerate() {
                if row.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
                    return Err(format!("{name} row {i} has a negative or non-finite entry"));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(format!("{name} row {i} sums to {sum}"));
                }
            }
        }
        Ok(())
    }
}

/// Noise model of the simulated predictor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictorNoise {
    /// Dirichlet concentration on the predicted class; rows approach one-hot
    /// as it grows.
    pub concentration: f64,
    /// Standard deviation (degrees) of the angle the predictor perceives
    /// before thresholding. Zero reproduces the true labels exactly.
    pub angle_jitter: f64,
}

impl PredictorNoise {
    pub fn new(concentration: f64) -> Self {
        Self { concentration, angle_jitter: 0.0 }
    }
}

impl Default for PredictorNoise {
    fn default() -> Self {
        Self { concentration: 20.0, angle_jitter: 0.0 }
    }
}

fn fws_weight(theta_deg: f64) -> f64 {
    0.1 + 0.9 * theta_deg.to_radians().sin().abs()
}

fn aws_weight(theta_deg: f64) -> f64 {
    0.1 + 0.9 * theta_deg.to_radians().cos()
}

fn sample_row(
    rng: &mut ChaCha8Rng,
    theta: f64,
    alpha: f64,
    noise: &PredictorNoise,
    weight: f64,
) -> [f64; NUM_STATUS] {
    let perceived = if noise.angle_jitter > 0.0 {
        let n = Normal::new(0.0, noise.angle_jitter).expect("positive std");
        (theta + n.sample(rng)).clamp(-90.0, 90.0)
    } else {
        theta
    };
    let predicted = status_for_angle(perceived, alpha).index();
    let mut row = [0.0; NUM_STATUS];
    for (j, p) in row.iter_mut().enumerate() {
        let shape = 1.0 + if j == predicted { noise.concentration * weight } else { 0.0 };
        *p = Gamma::new(shape, 1.0).expect("positive shape").sample(rng);
    }
    let sum: f64 = row.iter().sum();
    for p in row.iter_mut() {
        *p /= sum;
    }
    row
}

/// Simulated `(P_fws, P_aws)` for a pose. Deterministic given `seed`.
pub fn simulate_fbi_probabilities(
    pose: &Pose3D,
    alpha: f64,
    noise: &PredictorNoise,
    seed: u64,
) -> FbiProbabilities {
    assert!(noise.concentration > 0.0, "concentration must be positive");
    let topology = SkeletonTopology::mpii();
    let angles = bone_angles(pose, topology);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = FbiProbabilities::uninformative();
    for (bone, &theta) in angles.iter().enumerate() {
        out.p_fws[bone] = sample_row(&mut rng, theta, alpha, noise, fws_weight(theta));
        out.p_aws[bone] = sample_row(&mut rng, theta, alpha, noise, aws_weight(theta));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifting::synth::{generate_synthetic_pose, SynthConfig};
    use crate::skeleton::convert_pose_to_fbi;

    #[test]
    fn rows_are_stochastic_and_deterministic() {
        let config = SynthConfig::default();
        for seed in 0..50 {
            let pose = generate_synthetic_pose(seed, &config);
            for c in [0.01, 1.0, 20.0, 1e4] {
                let p = simulate_fbi_probabilities(&pose, 35.0, &PredictorNoise::new(c), seed);
                p.validate().unwrap();
                assert_eq!(p, simulate_fbi_probabilities(&pose, 35.0, &PredictorNoise::new(c), seed));
            }
        }
    }

    #[test]
    fn huge_concentration_gives_one_hot() {
        let topo = SkeletonTopology::mpii();
        let config = SynthConfig::default();
        for seed in 0..100 {
            let pose = generate_synthetic_pose(seed, &config);
            let labels = convert_pose_to_fbi(&pose, 35.0, topo).unwrap().labels;
            let oh = fbi_one_hot(&labels);
            let p = simulate_fbi_probabilities(&pose, 35.0, &PredictorNoise::new(1e6), seed + 1);
            for b in 0..NUM_FBI_BONES {
                for j in 0..NUM_STATUS {
                    assert!((p.p_fws[b][j] - oh[b][j]).abs() < 1e-3);
                    assert!((p.p_aws[b][j] - oh[b][j]).abs() < 1e-3);
                }
            }
        }
    }

    #[test]
    fn fws_is_sharper_on_steep_bones() {
        let topo = SkeletonTopology::mpii();
        let config = SynthConfig::default();
        let (mut steep, mut flat) = ((0.0, 0usize), (0.0, 0usize));
        for seed in 0..2000 {
            let pose = generate_synthetic_pose(seed, &config);
            let angles = bone_angles(&pose, topo);
            let p = simulate_fbi_probabilities(&pose, 35.0, &PredictorNoise::new(10.0), seed);
            for (b, theta) in angles.iter().enumerate() {
                let max = p.p_fws[b].iter().cloned().fold(0.0, f64::max);
                if theta.abs() > 60.0 {
                    steep.0 += max;
                    steep.1 += 1;
                } else if theta.abs() < 10.0 {
                    flat.0 += max;
                    flat.1 += 1;
                }
            }
        }
        let (steep, flat) = (steep.0 / steep.1 as f64, flat.0 / flat.1 as f64);
        assert!(steep > flat + 0.05, "{steep} vs {flat}");
    }

    #[test]
    fn jitter_corrupts_labels_near_threshold() {
        let topo = SkeletonTopology::mpii();
        let config = SynthConfig::default();
        let noise = PredictorNoise { concentration: 1e6, angle_jitter: 10.0 };
        let mut wrong = 0;
        for seed in 0..200 {
            let pose = generate_synthetic_pose(seed, &config);
            let labels = convert_pose_to_fbi(&pose, 35.0, topo).unwrap().labels;
            let p = simulate_fbi_probabilities(&pose, 35.0, &noise, seed);
            for b in 0..NUM_FBI_BONES {
                if p.p_fws[b][labels.0[b].index()] < 0.5 {
                    wrong += 1;
                }
            }
        }
        assert!(wrong > 0);
    }
}

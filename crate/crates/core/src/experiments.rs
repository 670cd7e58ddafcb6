//! End-to-end studies on synthetic data: FBI versus 2D-only regression on
//! depth-ambiguous pairs, weak FBI-only finetuning under domain shift, and
//! the thresholding-angle sweep.

use serde::{Deserialize, Serialize};

use crate::data_io::{synthesize_dataset, SynthDatasetConfig, SyntheticSample};
use crate::derive_seed;
use crate::lifting::{project, FbiProbabilities, PredictorNoise, ScaledOrthoCamera, SynthConfig};
use crate::metrics::{fbi_correctness_ratio, mpjpe_p1, MetricsError};
use crate::regressor::{
    classify_poses, finetune_weak, pretrain_fbi_head, predict, train_supervised, validation_loss, HeadPretrainConfig,
    LossHistory, ModelConfig, RegressorError, RegressorParams, TrainConfig, TrainSample,
};
use crate::skeleton::{convert_pose_to_fbi, FbiMatrix, Pose3D, SkeletonTopology};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Regressor(#[from] RegressorError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("invalid experiment: {0}")]
    Invalid(String),
}

/// Which FBI probabilities a training or test sample carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbSource {
    /// The sample's simulated predictor output.
    Simulated,
    /// One-hot rows of the true labels.
    Oracle,
}

/// Converts samples to training records with ids `id_base + index`.
pub fn to_train_samples(
    samples: &[SyntheticSample],
    source: ProbSource,
    with_pose: bool,
    id_base: u64,
) -> Result<Vec<TrainSample>, ExperimentError> {
    samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let probs = match source {
                ProbSource::Oracle => FbiProbabilities::from_labels(&s.labels),
                ProbSource::Simulated => s
                    .probs
                    .ok_or_else(|| ExperimentError::Invalid(format!("sample {} has no simulated probabilities", s.id)))?,
            };
            let pose = with_pose.then_some(&s.pose3d);
            Ok(TrainSample::new(id_base + i as u64, &s.pose2d, probs, pose, Some(s.labels)))
        })
        .collect()
}

/// The sample with every depth offset from the pelvis negated. It projects
/// to the same 2D pose, and its clear labels are flipped.
pub fn mirrored_sample(s: &SyntheticSample) -> SyntheticSample {
    let pose3d = s.pose3d.depth_mirrored();
    let labels = convert_pose_to_fbi(&pose3d, s.alpha, SkeletonTopology::mpii()).expect("valid alpha").labels;
    let probs = s.probs.map(|p| FbiProbabilities { p_fws: flip_rows(&p.p_fws), p_aws: flip_rows(&p.p_aws) });
    SyntheticSample { pose3d, pose2d: project(&pose3d, &s.camera), labels, probs, ..s.clone() }
}

fn flip_rows(rows: &crate::lifting::ProbabilityRows) -> crate::lifting::ProbabilityRows {
    rows.map(|[f, b, u]| [b, f, u])
}

/// Mean P#1 error of `params` on `samples`.
pub fn mean_mpjpe(params: &RegressorParams, samples: &[TrainSample]) -> Result<f64, ExperimentError> {
    let preds = predict(params, samples)?;
    let mut sum = 0.0;
    for (p, s) in preds.iter().zip(samples) {
        let gt = s.pose3d.as_ref().ok_or_else(|| ExperimentError::Invalid("sample lacks 3D ground truth".into()))?;
        sum += mpjpe_p1(p, gt)?;
    }
    Ok(sum / samples.len().max(1) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AmbiguityConfig {
    /// Distinct training poses; each is also added depth-mirrored.
    pub train_poses: usize,
    /// Distinct test poses; each is evaluated together with its mirror.
    pub test_poses: usize,
    pub alpha: f64,
    pub pose: SynthConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub seed: u64,
}

impl Default for AmbiguityConfig {
    fn default() -> Self {
        Self {
            train_poses: 5000,
            test_poses: 500,
            alpha: 35.0,
            pose: SynthConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            seed: 0,
        }
    }
}

impl AmbiguityConfig {
    /// Reduced-width setup that finishes in minutes on one CPU core.
    pub fn desk() -> Self {
        Self {
            train_poses: 20_000,
            model: ModelConfig { hidden: 256, ..ModelConfig::default() },
            train: TrainConfig { batch_size: 64, dropout: 0.0, ..TrainConfig::default() },
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbiguityReport {
    pub mpjpe_with_fbi: f64,
    pub mpjpe_2d_only: f64,
    /// `mpjpe_with_fbi / mpjpe_2d_only`.
    pub ratio: f64,
    pub train_samples: usize,
    pub test_samples: usize,
    pub history_with_fbi: LossHistory,
    pub history_2d_only: LossHistory,
}

fn with_mirrors(samples: Vec<SyntheticSample>) -> Vec<SyntheticSample> {
    let mirrors: Vec<_> = samples.iter().map(mirrored_sample).collect();
    samples.into_iter().zip(mirrors).flat_map(|(a, b)| [a, b]).collect()
}

/// Trains two identically seeded regressors, one fed oracle FBI and one fed
/// only 2D joints, and compares them on depth-mirrored test pairs, where 2D
/// alone cannot tell the two members apart.
pub fn run_ambiguity_experiment(config: &AmbiguityConfig) -> Result<AmbiguityReport, ExperimentError> {
    let data = |count, seed| SynthDatasetConfig {
        count,
        seed,
        alpha: config.alpha,
        pose: config.pose.clone(),
        noise: None,
        ..SynthDatasetConfig::default()
    };
    let train = with_mirrors(synthesize_dataset(&data(config.train_poses, derive_seed(&[config.seed, 1]))));
    let test = with_mirrors(synthesize_dataset(&data(config.test_poses, derive_seed(&[config.seed, 2]))));
    let train = to_train_samples(&train, ProbSource::Oracle, true, 0)?;
    let test = to_train_samples(&test, ProbSource::Oracle, true, 1 << 32)?;

    let run = |use_fbi: bool| -> Result<(f64, LossHistory), ExperimentError> {
        let model = ModelConfig { use_fbi, ..config.model.clone() };
        let params = RegressorParams::init(model, derive_seed(&[config.seed, 3]));
        let (params, history) = train_supervised(params, &train, None, &config.train)?;
        Ok((mean_mpjpe(&params, &test)?, history))
    };
    let (mpjpe_with_fbi, history_with_fbi) = run(true)?;
    let (mpjpe_2d_only, history_2d_only) = run(false)?;
    Ok(AmbiguityReport {
        mpjpe_with_fbi,
        mpjpe_2d_only,
        ratio: mpjpe_with_fbi / mpjpe_2d_only,
        train_samples: train.len(),
        test_samples: test.len(),
        history_with_fbi,
        history_2d_only,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeakConfig {
    pub alpha: f64,
    pub noise: PredictorNoise,
    /// Distribution of the 3D-labeled training data.
    pub supervised_pose: SynthConfig,
    /// Distribution of the FBI-only data.
    pub weak_pose: SynthConfig,
    pub supervised_count: usize,
    pub weak_count: usize,
    /// Held-out supervised samples used to measure drift.
    pub validation_count: usize,
    /// Poses, drawn from both distributions, for head pretraining.
    pub head_poses: usize,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub head: HeadPretrainConfig,
    pub finetune: TrainConfig,
    pub seed: u64,
}

impl Default for WeakConfig {
    fn default() -> Self {
        Self {
            alpha: 35.0,
            noise: PredictorNoise::default(),
            supervised_pose: SynthConfig::studio(),
            weak_pose: SynthConfig::default(),
            supervised_count: 5000,
            weak_count: 2000,
            validation_count: 500,
            head_poses: 20_000,
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            head: HeadPretrainConfig::default(),
            finetune: TrainConfig { iterations: 5000, learning_rate: 2e-4, ..TrainConfig::default() },
            seed: 0,
        }
    }
}

impl WeakConfig {
    /// Reduced-width setup that finishes in about a minute on one CPU core.
    pub fn desk() -> Self {
        let train = TrainConfig { iterations: 5000, batch_size: 32, dropout: 0.0, ..TrainConfig::default() };
        Self {
            model: ModelConfig { hidden: 256, ..ModelConfig::default() },
            finetune: TrainConfig { iterations: 2000, learning_rate: 2e-4, ..train.clone() },
            train,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakReport {
    /// FBI correctness of predicted poses on the weak set.
    pub correctness_before: f64,
    pub correctness_after: f64,
    /// Head agreement with ground-truth labels on clear bones of true poses.
    pub head_accuracy: f64,
    /// Mean P#1 error on held-out supervised-distribution samples.
    pub supervised_mpjpe_before: f64,
    pub supervised_mpjpe_after: f64,
    pub weak_history: LossHistory,
}

fn head_accuracy(params: &RegressorParams, poses: &[Pose3D], labels: &[FbiMatrix]) -> f64 {
    let predicted = classify_poses(params, poses);
    let (mut hit, mut total) = (0usize, 0usize);
    for (p, l) in predicted.iter().zip(labels) {
        for (a, b) in p.0.iter().zip(l.0.iter()) {
            if b.is_clear() {
                total += 1;
                hit += usize::from(a == b);
            }
        }
    }
    hit as f64 / total.max(1) as f64
}

/// Supervised training on one pose distribution, FBI head pretraining, then
/// weak finetuning on FBI-only samples from a second distribution.
pub fn run_weak_experiment(config: &WeakConfig) -> Result<WeakReport, ExperimentError> {
    let data = |count, seed, pose: &SynthConfig| SynthDatasetConfig {
        count,
        seed,
        alpha: config.alpha,
        pose: pose.clone(),
        noise: Some(config.noise),
        camera: ScaledOrthoCamera { scale: 0.2, cx: 500.0, cy: 500.0 },
    };
    let seed = |k| derive_seed(&[config.seed, k]);
    let sup = synthesize_dataset(&data(config.supervised_count, seed(1), &config.supervised_pose));
    let val = synthesize_dataset(&data(config.validation_count, seed(2), &config.supervised_pose));
    let weak = synthesize_dataset(&data(config.weak_count, seed(3), &config.weak_pose));
    let head_a = synthesize_dataset(&data(config.head_poses / 2, seed(4), &config.supervised_pose));
    let head_b = synthesize_dataset(&data(config.head_poses - config.head_poses / 2, seed(5), &config.weak_pose));

    let sup = to_train_samples(&sup, ProbSource::Simulated, true, 0)?;
    let val = to_train_samples(&val, ProbSource::Simulated, true, 1 << 32)?;
    let weak_labels: Vec<FbiMatrix> = weak.iter().map(|s| s.labels).collect();
    let weak_truth: Vec<Pose3D> = weak.iter().map(|s| s.pose3d).collect();
    let weak = to_train_samples(&weak, ProbSource::Simulated, false, 2 << 32)?;

    let params = RegressorParams::init(config.model.clone(), seed(6));
    let (params, _) = train_supervised(params, &sup, None, &config.train)?;
    let head_poses: Vec<Pose3D> = head_a.iter().chain(&head_b).map(|s| s.pose3d).collect();
    let (params, _) = pretrain_fbi_head(params, &head_poses, &HeadPretrainConfig { alpha: config.alpha, ..config.head.clone() })?;
    let head_accuracy = head_accuracy(&params, &weak_truth, &weak_labels);

    let correctness = |p: &RegressorParams| -> Result<f64, ExperimentError> {
        Ok(fbi_correctness_ratio(&predict(p, &weak)?, &weak_labels, config.alpha)?)
    };
    let correctness_before = correctness(&params)?;
    let supervised_mpjpe_before = mean_mpjpe(&params, &val)?;
    let (tuned, weak_history) = finetune_weak(params, &weak, &sup, &config.finetune)?;
    Ok(WeakReport {
        correctness_before,
        correctness_after: correctness(&tuned)?,
        head_accuracy,
        supervised_mpjpe_before,
        supervised_mpjpe_after: mean_mpjpe(&tuned, &val)?,
        weak_history,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub alphas: Vec<f64>,
    pub train_count: usize,
    pub test_count: usize,
    pub noise: PredictorNoise,
    pub pose: SynthConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub seed: u64,
}

pub const SWEEP_ALPHAS: [f64; 7] = [5.0, 20.0, 25.0, 30.0, 35.0, 40.0, 60.0];

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            alphas: SWEEP_ALPHAS.to_vec(),
            train_count: 5000,
            test_count: 1000,
            noise: PredictorNoise { concentration: 20.0, angle_jitter: 10.0 },
            pose: SynthConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            seed: 0,
        }
    }
}

impl SweepConfig {
    /// Reduced-width setup, a few minutes for the whole sweep on one CPU core.
    pub fn desk() -> Self {
        Self {
            model: ModelConfig { hidden: 256, ..ModelConfig::default() },
            train: TrainConfig { iterations: 5000, batch_size: 32, dropout: 0.0, ..TrainConfig::default() },
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub mpjpe: f64,
    pub validation_loss: f64,
    pub uncertain_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    pub best_alpha: f64,
    /// The best angle is neither the smallest nor the largest swept.
    pub interior_optimum: bool,
}

/// For every threshold: label the same poses at that angle, simulate the
/// predictor at that angle, train a regressor with FBI inputs and measure
/// its error on a held-out set.
pub fn run_alpha_sweep(config: &SweepConfig) -> Result<SweepReport, ExperimentError> {
    if config.alphas.len() < 3 {
        return Err(ExperimentError::Invalid("a sweep needs at least three angles".into()));
    }
    let mut points = Vec::new();
    for &alpha in &config.alphas {
        if !(0.0..=90.0).contains(&alpha) {
            return Err(ExperimentError::Invalid(format!("alpha {alpha} outside [0, 90]")));
        }
        let data = |count, seed| SynthDatasetConfig {
            count,
            seed,
            alpha,
            pose: config.pose.clone(),
            noise: Some(config.noise),
            ..SynthDatasetConfig::default()
        };
        let train = synthesize_dataset(&data(config.train_count, derive_seed(&[config.seed, 1])));
        let test = synthesize_dataset(&data(config.test_count, derive_seed(&[config.seed, 2])));
        let uncertain_fraction =
            crate::data_io::uncertain_fraction(train.iter().map(|s| &s.labels)).map_err(|e| ExperimentError::Invalid(e.to_string()))?;
        let train = to_train_samples(&train, ProbSource::Simulated, true, 0)?;
        let test = to_train_samples(&test, ProbSource::Simulated, true, 1 << 32)?;
        let params = RegressorParams::init(config.model.clone(), derive_seed(&[config.seed, 3]));
        let (params, _) = train_supervised(params, &train, None, &config.train)?;
        let point = SweepPoint {
            alpha,
            mpjpe: mean_mpjpe(&params, &test)?,
            validation_loss: validation_loss(&params, &test)?,
            uncertain_fraction,
        };
        log::info!("alpha {alpha}: MPJPE {:.2} mm", point.mpjpe);
        points.push(point);
    }
    let best = points.iter().min_by(|a, b| a.mpjpe.total_cmp(&b.mpjpe)).expect("non-empty sweep");
    let best_alpha = best.alpha;
    let lo = config.alphas.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = config.alphas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(SweepReport { interior_optimum: best_alpha > lo && best_alpha < hi, best_alpha, points })
}

//! Finite-difference checks of the analytic gradients on a width-8 network.

use fbipose_core::lifting::{generate_synthetic_pose, project, simulate_fbi_probabilities, PredictorNoise, ScaledOrthoCamera, SynthConfig};
use fbipose_core::regressor::{
    backward, dropout_masks, gradient_check, Batch, FbiLossConfig, LossWeights, ModelConfig, RegressorParams, TrainSample,
};
use fbipose_core::skeleton::{convert_pose_to_fbi, SkeletonTopology};

const STEP: f64 = 1e-5;
const TOLERANCE: f64 = 1e-4;
/// Central differences carry round-off of order `1e-16 * loss / STEP`
/// (about 1e-10 here), so gradients smaller than this floor are compared
/// against it rather than against their own magnitude. Gradients of biases
/// feeding batch norm are exactly zero and land here.
const DENOM_FLOOR: f64 = 1e-4;

fn tiny_params(seed: u64) -> RegressorParams {
    let mut params = RegressorParams::init(ModelConfig { hidden: 8, fbi_hidden: 8, ..ModelConfig::default() }, seed);
    // Non-trivial normalization parameters so their gradients are exercised.
    for (i, t) in params.tensors_mut().into_iter().enumerate() {
        if t.name.ends_with("gamma") || t.name.ends_with("beta") || t.name.ends_with(".bias") {
            for (k, v) in t.data.iter_mut().enumerate() {
                *v += 0.1 * (((i * 31 + k * 17) % 13) as f64 - 6.0) / 6.0;
            }
        }
    }
    params
}

fn batch(params: &RegressorParams) -> Batch {
    let topo = SkeletonTopology::mpii();
    let samples: Vec<TrainSample> = (0..6u64)
        .map(|seed| {
            let pose = generate_synthetic_pose(seed, &SynthConfig::default());
            let uv = project(&pose, &ScaledOrthoCamera::identity());
            let probs = simulate_fbi_probabilities(&pose, 35.0, &PredictorNoise::new(2.0), seed);
            let labels = convert_pose_to_fbi(&pose, 35.0, topo).unwrap().labels;
            TrainSample::new(seed * 3 + 1, &uv, probs, Some(&pose), Some(labels))
        })
        .collect();
    Batch::from_samples(&samples.iter().collect::<Vec<_>>(), params).unwrap()
}

/// Worst relative error between analytic and central-difference gradients.
fn check(weights: LossWeights, dropout: f64) -> (f64, String) {
    let params = tiny_params(11);
    let batch = batch(&params);
    let masks = || dropout_masks(&batch.ids, 5, 0, dropout, params.config.hidden);
    let r = gradient_check(&params, &batch, &weights, &FbiLossConfig::default(), masks, STEP, DENOM_FLOOR).unwrap();
    assert_eq!(r.checked, params.num_trainable());
    (r.max_relative_error, r.worst)
}

#[test]
fn pose_l2_gradient() {
    let (err, at) = check(LossWeights { final_pose: 1.0, ..Default::default() }, 0.0);
    assert!(err <= TOLERANCE, "{err:e} at {at}");
}

#[test]
fn fixed_weight_gradient() {
    let (err, at) = check(LossWeights { fbi_fixed: 1.0, ..Default::default() }, 0.0);
    assert!(err <= TOLERANCE, "{err:e} at {at}");
}

#[test]
fn focal_gradient() {
    let (err, at) = check(LossWeights { fbi_focal: 1.0, ..Default::default() }, 0.0);
    assert!(err <= TOLERANCE, "{err:e} at {at}");
}

#[test]
fn composed_gradient_with_dropout() {
    let w = LossWeights { final_pose: 1.0, coarse_pose: 0.5, fbi_fixed: 0.3, fbi_focal: 0.7 };
    let (err, at) = check(w, 0.5);
    assert!(err <= TOLERANCE, "{err:e} at {at}");
}

#[test]
fn doubling_a_coefficient_doubles_its_contribution() {
    let params = tiny_params(2);
    let batch = batch(&params);
    let fbi = FbiLossConfig::default();
    let base = LossWeights { final_pose: 1.0, fbi_focal: 0.4, ..Default::default() };
    let doubled = LossWeights { fbi_focal: 0.8, ..base };
    let only = LossWeights { fbi_focal: 0.4, ..Default::default() };
    let g = |w: &LossWeights| backward(&params, &batch, w, &fbi, None).unwrap().1;
    let (gb, gd, go) = (g(&base), g(&doubled), g(&only));
    for ((b, d), o) in gb.tensors().iter().zip(gd.tensors()).zip(go.tensors()) {
        for k in 0..b.data.len() {
            let expected = b.data[k] + o.data[k];
            assert!((d.data[k] - expected).abs() <= 1e-12 * (1.0 + expected.abs()), "{}", b.name);
        }
    }
}

#[test]
fn zero_loss_gives_zero_gradient() {
    let params = tiny_params(4);
    let batch = batch(&params);
    let (losses, grad, _) = backward(&params, &batch, &LossWeights::default(), &FbiLossConfig::default(), None).unwrap();
    assert_eq!(losses.total, 0.0);
    assert!(grad.tensors().iter().all(|t| t.data.iter().all(|&v| v == 0.0)));
}

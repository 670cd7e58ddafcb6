//! The cascaded-block 3D pose regressor and its FBI-consistency head.
//!
//! ```text
//! x(116) ─ unit ─ h0 ─ block1 ─(+h0)─ h1 ─ linear ─ coarse(48)
//!                                      │              │ linear
//!                                      └──────(+)─────┘
//!                                              │
//!                                  g ─ block2 ─(+g)─ h2 ─ linear ─ final(48) ─ fbi head ─ 14×3
//! ```
//!
//! Every unit is linear → batch norm → ReLU → dropout. Pelvis coordinates of
//! the coarse and final poses are pinned to zero.

use ndarray::{s, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::lifting::{FbiProbabilities, ProbabilityRows};
use crate::skeleton::{Pose2D, SkeletonTopology, NUM_FBI_BONES, NUM_JOINTS, NUM_STATUS, PELVIS};

use super::layers::{BatchMoments, BatchNorm, DenseUnit, Linear, UnitCache};
use super::RegressorError;

pub const POSE2D_WIDTH: usize = 2 * NUM_JOINTS;
pub const PROB_WIDTH: usize = 2 * NUM_FBI_BONES * NUM_STATUS;
pub const INPUT_WIDTH: usize = POSE2D_WIDTH + PROB_WIDTH;
pub const POSE_WIDTH: usize = 3 * NUM_JOINTS;
pub const FBI_WIDTH: usize = NUM_FBI_BONES * NUM_STATUS;
pub const NUM_UNITS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub hidden: usize,
    pub fbi_hidden: usize,
    /// When false the 84 probability inputs are fed as zeros.
    pub use_fbi: bool,
    /// Millimeters per network output unit.
    pub output_scale: f64,
    pub bn_momentum: f64,
    pub bn_eps: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { hidden: 1024, fbi_hidden: 256, use_fbi: true, output_scale: 100.0, bn_momentum: 0.99, bn_eps: 1e-5 }
    }
}

/// Maps a predicted pose to per-bone FBI probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct FbiHead {
    pub hidden: Linear,
    pub out: Linear,
}

pub(crate) struct HeadCache {
    input: Array2<f64>,
    pre_relu: Array2<f64>,
    hidden: Array2<f64>,
    pub(crate) probs: Array2<f64>,
}

impl FbiHead {
    pub(crate) fn forward(&self, pose: &Array2<f64>) -> HeadCache {
        let pre_relu = self.hidden.forward(pose);
        let hidden = pre_relu.mapv(|v| v.max(0.0));
        let probs = grouped_softmax(&self.out.forward(&hidden));
        HeadCache { input: pose.clone(), pre_relu, hidden, probs }
    }

    /// Backpropagates `dL/dlogits`; returns `dL/dpose`.
    pub(crate) fn backward(&self, cache: &HeadCache, d_logits: &Array2<f64>, grad: &mut FbiHead) -> Array2<f64> {
        let mut d_hidden = self.out.backward(&cache.hidden, d_logits, &mut grad.out);
        ndarray::Zip::from(&mut d_hidden).and(&cache.pre_relu).for_each(|g, &p| {
            if p <= 0.0 {
                *g = 0.0;
            }
        });
        self.hidden.backward(&cache.input, &d_hidden, &mut grad.hidden)
    }
}

/// Softmax over each consecutive group of three logits.
pub(crate) fn grouped_softmax(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        for g in 0..NUM_FBI_BONES {
            let mut group = row.slice_mut(s![NUM_STATUS * g..NUM_STATUS * (g + 1)]);
            let max = group.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            group.mapv_inplace(|v| (v - max).exp());
            let sum = group.sum();
            group.mapv_inplace(|v| v / sum);
        }
    }
    out
}

/// Which parameters an optimizer step may touch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamGroup {
    Regressor,
    FbiHead,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorKind {
    Trainable(ParamGroup),
    RunningStat,
}

pub struct TensorRef<'a> {
    pub name: String,
    pub kind: TensorKind,
    pub shape: Vec<usize>,
    pub data: &'a [f64],
}

pub struct TensorMut<'a> {
    pub name: String,
    pub kind: TensorKind,
    pub shape: Vec<usize>,
    pub data: &'a mut [f64],
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressorParams {
    pub config: ModelConfig,
    pub topology_version: String,
    pub input: DenseUnit,
    pub block1: [DenseUnit; 2],
    pub coarse: Linear,
    pub reproject: Linear,
    pub block2: [DenseUnit; 2],
    pub head: Linear,
    pub fbi: FbiHead,
}

/// Network outputs for a batch, in network units (see `ModelConfig::output_scale`).
#[derive(Debug, Clone)]
pub struct BatchOutput {
    pub coarse: Array2<f64>,
    pub final_pose: Array2<f64>,
    pub fbi_probs: Array2<f64>,
}

pub(crate) struct ForwardCache {
    units: Vec<UnitCache>,
    h1: Array2<f64>,
    coarse: Array2<f64>,
    h2: Array2<f64>,
    pub(crate) head: HeadCache,
}

/// Gradients of the objective with respect to the network outputs.
pub(crate) struct OutputGrads {
    pub coarse: Option<Array2<f64>>,
    pub final_pose: Option<Array2<f64>>,
    pub logits: Option<Array2<f64>>,
}

fn pin_pelvis(mut pose: Array2<f64>) -> Array2<f64> {
    pose.slice_mut(s![.., 3 * PELVIS..3 * PELVIS + 3]).fill(0.0);
    pose
}

impl RegressorParams {
    pub fn init(config: ModelConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = config.hidden;
        let f = config.fbi_hidden;
        Self {
            topology_version: SkeletonTopology::mpii().version().to_string(),
            input: DenseUnit::he(INPUT_WIDTH, h, &mut rng),
            block1: [DenseUnit::he(h, h, &mut rng), DenseUnit::he(h, h, &mut rng)],
            coarse: Linear::he(h, POSE_WIDTH, &mut rng),
            reproject: Linear::he(POSE_WIDTH, h, &mut rng),
            block2: [DenseUnit::he(h, h, &mut rng), DenseUnit::he(h, h, &mut rng)],
            head: Linear::he(h, POSE_WIDTH, &mut rng),
            fbi: FbiHead { hidden: Linear::he(POSE_WIDTH, f, &mut rng), out: Linear::he(f, FBI_WIDTH, &mut rng) },
            config,
        }
    }

    /// All-zero weights with unit running variance.
    pub fn zeros(config: ModelConfig) -> Self {
        let h = config.hidden;
        let f = config.fbi_hidden;
        let mut out = Self {
            topology_version: SkeletonTopology::mpii().version().to_string(),
            input: DenseUnit::zeros(INPUT_WIDTH, h),
            block1: [DenseUnit::zeros(h, h), DenseUnit::zeros(h, h)],
            coarse: Linear::zeros(h, POSE_WIDTH),
            reproject: Linear::zeros(POSE_WIDTH, h),
            block2: [DenseUnit::zeros(h, h), DenseUnit::zeros(h, h)],
            head: Linear::zeros(h, POSE_WIDTH),
            fbi: FbiHead { hidden: Linear::zeros(POSE_WIDTH, f), out: Linear::zeros(f, FBI_WIDTH) },
            config,
        };
        for unit in out.units_mut() {
            unit.bn.running_var.fill(1.0);
        }
        out
    }

    /// Same shapes, every tensor zero. Used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        let mut out = self.clone();
        for t in out.tensors_mut() {
            t.data.fill(0.0);
        }
        out
    }

    fn units(&self) -> [&DenseUnit; NUM_UNITS] {
        [&self.input, &self.block1[0], &self.block1[1], &self.block2[0], &self.block2[1]]
    }

    fn units_mut(&mut self) -> [&mut DenseUnit; NUM_UNITS] {
        let [b1a, b1b] = &mut self.block1;
        let [b2a, b2b] = &mut self.block2;
        [&mut self.input, b1a, b1b, b2a, b2b]
    }

    pub fn tensors(&self) -> Vec<TensorRef<'_>> {
        use ParamGroup::*;
        let mut out = Vec::new();
        let names = ["input", "block1.0", "block1.1", "block2.0", "block2.1"];
        for (prefix, unit) in names.iter().zip(self.units()) {
            push_unit(&mut out, prefix, unit);
        }
        for (prefix, lin, group) in [
            ("coarse", &self.coarse, Regressor),
            ("reproject", &self.reproject, Regressor),
            ("head", &self.head, Regressor),
            ("fbi.hidden", &self.fbi.hidden, FbiHead),
            ("fbi.out", &self.fbi.out, FbiHead),
        ] {
            push_linear(&mut out, prefix, lin, group);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        use ParamGroup::*;
        let mut out = Vec::new();
        let Self { input, block1, coarse, reproject, block2, head, fbi, .. } = self;
        let [b1a, b1b] = block1;
        let [b2a, b2b] = block2;
        for (prefix, unit) in
            [("input", input), ("block1.0", b1a), ("block1.1", b1b), ("block2.0", b2a), ("block2.1", b2b)]
        {
            push_unit_mut(&mut out, prefix, unit);
        }
        for (prefix, lin, group) in [
            ("coarse", coarse, Regressor),
            ("reproject", reproject, Regressor),
            ("head", head, Regressor),
            ("fbi.hidden", &mut fbi.hidden, FbiHead),
            ("fbi.out", &mut fbi.out, FbiHead),
        ] {
            push_linear_mut(&mut out, prefix, lin, group);
        }
        out
    }

    pub fn check_finite(&self) -> Result<(), RegressorError> {
        match self.tensors().into_iter().find(|t| t.data.iter().any(|v| !v.is_finite())) {
            Some(t) => Err(RegressorError::NonFinite { tensor: t.name }),
            None => Ok(()),
        }
    }

    pub fn num_trainable(&self) -> usize {
        self.tensors()
            .iter()
            .filter(|t| matches!(t.kind, TensorKind::Trainable(_)))
            .map(|t| t.data.len())
            .sum()
    }

    pub(crate) fn update_running_stats(&mut self, moments: &[BatchMoments]) {
        let momentum = self.config.bn_momentum;
        for (unit, m) in self.units_mut().into_iter().zip(moments) {
            unit.bn.update_running(m, momentum);
        }
    }

    /// Training-mode forward pass. `masks` holds one inverted-dropout
    /// multiplier matrix per unit, or `None` for no dropout.
    pub(crate) fn forward_train(
        &self,
        x: &Array2<f64>,
        masks: Option<Vec<Array2<f64>>>,
    ) -> (BatchOutput, ForwardCache, Vec<BatchMoments>) {
        let eps = self.config.bn_eps;
        let mut masks = masks.map(|m| m.into_iter().map(Some).collect::<Vec<_>>());
        let mut take_mask = |i: usize| masks.as_mut().and_then(|m| m[i].take());
        let mut units = Vec::with_capacity(NUM_UNITS);
        let mut moments = Vec::with_capacity(NUM_UNITS);
        let mut run = |unit: &DenseUnit, input: &Array2<f64>, i: usize, units: &mut Vec<UnitCache>| {
            let (out, cache, m) = unit.forward_train(input, take_mask(i), eps);
            units.push(cache);
            moments.push(m);
            out
        };

        let h0 = run(&self.input, x, 0, &mut units);
        let a = run(&self.block1[0], &h0, 1, &mut units);
        let b = run(&self.block1[1], &a, 2, &mut units);
        let h1 = h0 + &b;
        let coarse = pin_pelvis(self.coarse.forward(&h1));
        let g = &h1 + &self.reproject.forward(&coarse);
        let c = run(&self.block2[0], &g, 3, &mut units);
        let d = run(&self.block2[1], &c, 4, &mut units);
        let h2 = g + &d;
        let final_pose = pin_pelvis(self.head.forward(&h2));
        let head = self.fbi.forward(&final_pose);

        let output = BatchOutput { coarse: coarse.clone(), final_pose, fbi_probs: head.probs.clone() };
        (output, ForwardCache { units, h1, coarse, h2, head }, moments)
    }

    pub fn forward_eval(&self, x: &Array2<f64>) -> BatchOutput {
        let eps = self.config.bn_eps;
        let h0 = self.input.forward_eval(x, eps);
        let h1 = &h0 + &self.block1[1].forward_eval(&self.block1[0].forward_eval(&h0, eps), eps);
        let coarse = pin_pelvis(self.coarse.forward(&h1));
        let g = &h1 + &self.reproject.forward(&coarse);
        let h2 = &g + &self.block2[1].forward_eval(&self.block2[0].forward_eval(&g, eps), eps);
        let final_pose = pin_pelvis(self.head.forward(&h2));
        let fbi_probs = self.fbi.forward(&final_pose).probs;
        BatchOutput { coarse, final_pose, fbi_probs }
    }

    /// Accumulates gradients of the objective into `grad`.
    pub(crate) fn backward(&self, cache: &ForwardCache, d_out: &OutputGrads, grad: &mut RegressorParams) {
        let batch = cache.h1.nrows();
        let zeros = || Array2::<f64>::zeros((batch, POSE_WIDTH));

        let mut d_final = d_out.final_pose.clone().unwrap_or_else(zeros);
        if let Some(d_logits) = &d_out.logits {
            d_final += &self.fbi.backward(&cache.head, d_logits, &mut grad.fbi);
        }
        let d_final = pin_pelvis(d_final);

        let mut d_g = self.head.backward(&cache.h2, &d_final, &mut grad.head);
        // h2 = g + block2(g)
        let d_c = self.block2[1].backward(&cache.units[4], &d_g, &mut grad.block2[1]);
        d_g += &self.block2[0].backward(&cache.units[3], &d_c, &mut grad.block2[0]);

        // g = h1 + reproject(coarse)
        let mut d_coarse = d_out.coarse.clone().unwrap_or_else(zeros);
        d_coarse += &self.reproject.backward(&cache.coarse, &d_g, &mut grad.reproject);
        let d_coarse = pin_pelvis(d_coarse);
        let mut d_h1 = d_g;
        d_h1 += &self.coarse.backward(&cache.h1, &d_coarse, &mut grad.coarse);

        // h1 = h0 + block1(h0)
        let d_a = self.block1[1].backward(&cache.units[2], &d_h1, &mut grad.block1[1]);
        let mut d_h0 = d_h1;
        d_h0 += &self.block1[0].backward(&cache.units[1], &d_a, &mut grad.block1[0]);
        self.input.backward(&cache.units[0], &d_h0, &mut grad.input);
    }
}

fn push_linear<'a>(out: &mut Vec<TensorRef<'a>>, prefix: &str, lin: &'a Linear, group: ParamGroup) {
    out.push(TensorRef {
        name: format!("{prefix}.weight"),
        kind: TensorKind::Trainable(group),
        shape: lin.weight.shape().to_vec(),
        data: lin.weight.as_slice().expect("standard layout"),
    });
    out.push(TensorRef {
        name: format!("{prefix}.bias"),
        kind: TensorKind::Trainable(group),
        shape: lin.bias.shape().to_vec(),
        data: lin.bias.as_slice().expect("standard layout"),
    });
}

fn push_unit<'a>(out: &mut Vec<TensorRef<'a>>, prefix: &str, unit: &'a DenseUnit) {
    push_linear(out, &format!("{prefix}.linear"), &unit.linear, ParamGroup::Regressor);
    let bn: &BatchNorm = &unit.bn;
    for (name, arr, kind) in [
        ("gamma", &bn.gamma, TensorKind::Trainable(ParamGroup::Regressor)),
        ("beta", &bn.beta, TensorKind::Trainable(ParamGroup::Regressor)),
        ("running_mean", &bn.running_mean, TensorKind::RunningStat),
        ("running_var", &bn.running_var, TensorKind::RunningStat),
    ] {
        out.push(TensorRef {
            name: format!("{prefix}.bn.{name}"),
            kind,
            shape: arr.shape().to_vec(),
            data: arr.as_slice().expect("standard layout"),
        });
    }
}

fn push_linear_mut<'a>(out: &mut Vec<TensorMut<'a>>, prefix: &str, lin: &'a mut Linear, group: ParamGroup) {
    let Linear { weight, bias } = lin;
    out.push(TensorMut {
        name: format!("{prefix}.weight"),
        kind: TensorKind::Trainable(group),
        shape: weight.shape().to_vec(),
        data: weight.as_slice_mut().expect("standard layout"),
    });
    out.push(TensorMut {
        name: format!("{prefix}.bias"),
        kind: TensorKind::Trainable(group),
        shape: bias.shape().to_vec(),
        data: bias.as_slice_mut().expect("standard layout"),
    });
}

fn push_unit_mut<'a>(out: &mut Vec<TensorMut<'a>>, prefix: &str, unit: &'a mut DenseUnit) {
    push_linear_mut(out, &format!("{prefix}.linear"), &mut unit.linear, ParamGroup::Regressor);
    let BatchNorm { gamma, beta, running_mean, running_var } = &mut unit.bn;
    for (name, arr, kind) in [
        ("gamma", gamma, TensorKind::Trainable(ParamGroup::Regressor)),
        ("beta", beta, TensorKind::Trainable(ParamGroup::Regressor)),
        ("running_mean", running_mean, TensorKind::RunningStat),
        ("running_var", running_var, TensorKind::RunningStat),
    ] {
        out.push(TensorMut {
            name: format!("{prefix}.bn.{name}"),
            kind,
            shape: arr.shape().to_vec(),
            data: arr.as_slice_mut().expect("standard layout"),
        });
    }
}

/// Center 2D joints on their mean and divide by their RMS radius.
pub fn normalize_pose2d(pose: &Pose2D) -> [f64; POSE2D_WIDTH] {
    let n = NUM_JOINTS as f64;
    let cx = pose.0.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = pose.0.iter().map(|p| p[1]).sum::<f64>() / n;
    let radius = (pose.0.iter().map(|p| (p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sum::<f64>() / n).sqrt();
    let inv = if radius > 0.0 { 1.0 / radius } else { 0.0 };
    let mut out = [0.0; POSE2D_WIDTH];
    for (j, p) in pose.0.iter().enumerate() {
        out[2 * j] = (p[0] - cx) * inv;
        out[2 * j + 1] = (p[1] - cy) * inv;
    }
    out
}

/// One network input row: normalized 2D joints then the flattened
/// probability matrices (zeros when the model ignores FBI).
pub fn encode_input(
    pose2d_normalized: &[f64; POSE2D_WIDTH],
    probs: &FbiProbabilities,
    use_fbi: bool,
    out: &mut [f64],
) {
    out[..POSE2D_WIDTH].copy_from_slice(pose2d_normalized);
    if use_fbi {
        probs.flatten_into(&mut out[POSE2D_WIDTH..INPUT_WIDTH]);
    } else {
        out[POSE2D_WIDTH..INPUT_WIDTH].fill(0.0);
    }
}

/// Per-row dropout masks for every unit, seeded by `(seed, step, sample id)`
/// so that a sample's mask does not depend on its position in the batch.
pub fn dropout_masks(ids: &[u64], seed: u64, step: u64, rate: f64, hidden: usize) -> Option<Vec<Array2<f64>>> {
    if rate <= 0.0 {
        return None;
    }
    let keep = 1.0 - rate;
    let mut masks = vec![Array2::zeros((ids.len(), hidden)); NUM_UNITS];
    for (row, &id) in ids.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(crate::derive_seed(&[seed, step, id]));
        for mask in masks.iter_mut() {
            for v in mask.row_mut(row).iter_mut() {
                *v = if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 };
            }
        }
    }
    Some(masks)
}

/// Single-sample network output in millimeters.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub coarse: [f64; POSE_WIDTH],
    pub final_pose: [f64; POSE_WIDTH],
    pub fbi_probs: ProbabilityRows,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics and dropout (masks drawn from `seed`).
    Train { seed: u64 },
    /// Running statistics, no dropout.
    Eval,
}

pub fn forward(
    params: &RegressorParams,
    pose2d_normalized: &[f64; POSE2D_WIDTH],
    probs: &FbiProbabilities,
    mode: Mode,
    dropout: f64,
) -> Result<Prediction, RegressorError> {
    params.check_finite()?;
    let mut x = Array2::zeros((1, INPUT_WIDTH));
    encode_input(pose2d_normalized, probs, params.config.use_fbi, x.row_mut(0).as_slice_mut().unwrap());
    if x.iter().any(|v| !v.is_finite()) {
        return Err(RegressorError::NonFiniteInput);
    }
    let out = match mode {
        Mode::Eval => params.forward_eval(&x),
        Mode::Train { seed } => {
            let masks = dropout_masks(&[0], seed, 0, dropout, params.config.hidden);
            params.forward_train(&x, masks).0
        }
    };
    let scale = params.config.output_scale;
    let mut pred = Prediction {
        coarse: [0.0; POSE_WIDTH],
        final_pose: [0.0; POSE_WIDTH],
        fbi_probs: [[0.0; NUM_STATUS]; NUM_FBI_BONES],
    };
    for k in 0..POSE_WIDTH {
        pred.coarse[k] = out.coarse[[0, k]] * scale;
        pred.final_pose[k] = out.final_pose[[0, k]] * scale;
    }
    for (b, row) in pred.fbi_probs.iter_mut().enumerate() {
        for (j, p) in row.iter_mut().enumerate() {
            *p = out.fbi_probs[[0, NUM_STATUS * b + j]];
        }
    }
    Ok(pred)
}

pub(crate) fn probs_row(probs: &Array2<f64>, row: usize) -> ProbabilityRows {
    let mut out = [[0.0; NUM_STATUS]; NUM_FBI_BONES];
    for (b, r) in out.iter_mut().enumerate() {
        for (j, p) in r.iter_mut().enumerate() {
            *p = probs[[row, NUM_STATUS * b + j]];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifting::{generate_synthetic_pose, project, ScaledOrthoCamera, SynthConfig};

    fn small() -> ModelConfig {
        ModelConfig { hidden: 16, fbi_hidden: 8, ..ModelConfig::default() }
    }

    fn sample_input(seed: u64) -> ([f64; POSE2D_WIDTH], FbiProbabilities) {
        let pose = generate_synthetic_pose(seed, &SynthConfig::default());
        let uv = project(&pose, &ScaledOrthoCamera::identity());
        let probs = crate::lifting::simulate_fbi_probabilities(&pose, 35.0, &Default::default(), seed);
        (normalize_pose2d(&uv), probs)
    }

    #[test]
    fn zero_params_give_zero_pose() {
        let params = RegressorParams::zeros(small());
        let (x, p) = sample_input(1);
        let out = forward(&params, &x, &p, Mode::Eval, 0.5).unwrap();
        assert!(out.final_pose.iter().all(|&v| v == 0.0));
        for row in out.fbi_probs {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn eval_is_deterministic_and_pelvis_pinned() {
        let params = RegressorParams::init(small(), 9);
        for seed in 0..20 {
            let (x, p) = sample_input(seed);
            let a = forward(&params, &x, &p, Mode::Eval, 0.5).unwrap();
            let b = forward(&params, &x, &p, Mode::Eval, 0.5).unwrap();
            assert_eq!(a, b);
            assert_eq!(&a.final_pose[3 * PELVIS..3 * PELVIS + 3], &[0.0; 3]);
            assert_eq!(&a.coarse[3 * PELVIS..3 * PELVIS + 3], &[0.0; 3]);
            assert!(a.final_pose.iter().any(|&v| v != 0.0));
            for row in a.fbi_probs {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            let t1 = forward(&params, &x, &p, Mode::Train { seed: 4 }, 0.5).unwrap();
            let t2 = forward(&params, &x, &p, Mode::Train { seed: 4 }, 0.5).unwrap();
            assert_eq!(t1, t2);
        }
    }

    #[test]
    fn non_finite_params_are_reported() {
        let mut params = RegressorParams::init(small(), 1);
        params.block2[1].linear.bias[3] = f64::NAN;
        let (x, p) = sample_input(0);
        match forward(&params, &x, &p, Mode::Eval, 0.0) {
            Err(RegressorError::NonFinite { tensor }) => assert_eq!(tensor, "block2.1.linear.bias"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tensor_inventory() {
        let params = RegressorParams::init(ModelConfig::default(), 0);
        let names: Vec<_> = params.tensors().iter().map(|t| t.name.clone()).collect();
        assert_eq!(names.len(), 5 * 6 + 5 * 2);
        let find = |n: &str| params.tensors().into_iter().find(|t| t.name == n).unwrap().shape;
        assert_eq!(find("input.linear.weight"), vec![116, 1024]);
        assert_eq!(find("block1.0.linear.weight"), vec![1024, 1024]);
        assert_eq!(find("coarse.weight"), vec![1024, 48]);
        assert_eq!(find("reproject.weight"), vec![48, 1024]);
        assert_eq!(find("head.weight"), vec![1024, 48]);
        assert_eq!(find("fbi.hidden.weight"), vec![48, 256]);
        assert_eq!(find("fbi.out.weight"), vec![256, 42]);
    }

    #[test]
    fn normalized_input_is_centered_with_unit_rms() {
        let (x, _) = sample_input(3);
        let mx: f64 = (0..16).map(|j| x[2 * j]).sum::<f64>() / 16.0;
        let r: f64 = (0..16).map(|j| x[2 * j].powi(2) + x[2 * j + 1].powi(2)).sum::<f64>() / 16.0;
        assert!(mx.abs() < 1e-12);
        assert!((r - 1.0).abs() < 1e-12);
    }
}

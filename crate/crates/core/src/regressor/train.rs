//! Objective evaluation, reverse-mode gradients, Adam and the three training
//! stages (supervised regression, FBI head pretraining, weak finetuning).

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::lifting::FbiProbabilities;
use crate::skeleton::{convert_pose_to_fbi, FbiMatrix, Pose2D, Pose3D, SkeletonTopology, NUM_FBI_BONES, NUM_STATUS};

use super::layers::BatchMoments;
use super::loss::{
    fbi_row_grad, fixed_weight_fbi_loss, focal_fbi_loss, softmax_backward, FbiLossConfig, LossBreakdown, LossWeights,
};
use super::network::{
    dropout_masks, encode_input, normalize_pose2d, probs_row, BatchOutput, OutputGrads,
    ParamGroup, RegressorParams, TensorKind, INPUT_WIDTH, POSE2D_WIDTH, POSE_WIDTH,
};
use super::RegressorError;
use crate::derive_seed;

/// One training record. 3D targets are stored root-relative in millimeters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSample {
    /// Stable identity; seeds the sample's dropout masks and fixes its row
    /// within a batch.
    pub id: u64,
    pub pose2d: [f64; POSE2D_WIDTH],
    pub probs: FbiProbabilities,
    pub pose3d: Option<Pose3D>,
    pub labels: Option<FbiMatrix>,
}

impl TrainSample {
    pub fn new(
        id: u64,
        pose2d: &Pose2D,
        probs: FbiProbabilities,
        pose3d: Option<&Pose3D>,
        labels: Option<FbiMatrix>,
    ) -> Self {
        Self { id, pose2d: normalize_pose2d(pose2d), probs, pose3d: pose3d.map(Pose3D::root_relative), labels }
    }
}

/// A batch in network units, rows sorted by sample id.
#[derive(Debug, Clone)]
pub struct Batch {
    pub ids: Vec<u64>,
    pub inputs: Array2<f64>,
    pub poses: Option<Array2<f64>>,
    pub labels: Option<Vec<FbiMatrix>>,
}

impl Batch {
    pub fn from_samples(samples: &[&TrainSample], params: &RegressorParams) -> Result<Self, RegressorError> {
        if samples.is_empty() {
            return Err(RegressorError::EmptyDataset);
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by_key(|s| s.id);
        let n = sorted.len();
        let mut inputs = Array2::zeros((n, INPUT_WIDTH));
        for (row, s) in sorted.iter().enumerate() {
            let mut r = inputs.row_mut(row);
            encode_input(&s.pose2d, &s.probs, params.config.use_fbi, r.as_slice_mut().expect("contiguous row"));
        }
        if inputs.iter().any(|v| !v.is_finite()) {
            return Err(RegressorError::NonFiniteInput);
        }
        let scale = params.config.output_scale;
        let poses = if sorted.iter().all(|s| s.pose3d.is_some()) {
            let mut p = Array2::zeros((n, POSE_WIDTH));
            for (row, s) in sorted.iter().enumerate() {
                let flat = s.pose3d.as_ref().unwrap().flatten();
                for k in 0..POSE_WIDTH {
                    p[[row, k]] = flat[k] / scale;
                }
            }
            Some(p)
        } else {
            None
        };
        let labels = sorted.iter().map(|s| s.labels).collect::<Option<Vec<_>>>();
        Ok(Self { ids: sorted.iter().map(|s| s.id).collect(), inputs, poses, labels })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

struct Evaluated {
    losses: LossBreakdown,
    grads: OutputGrads,
}

/// Losses of `out` against the batch targets and the gradients with respect
/// to the network outputs.
fn evaluate(
    out: &BatchOutput,
    batch: &Batch,
    weights: &LossWeights,
    fbi: &FbiLossConfig,
) -> Result<Evaluated, RegressorError> {
    let n = batch.len() as f64;
    let mut losses = LossBreakdown::default();
    let mut grads = OutputGrads { coarse: None, final_pose: None, logits: None };

    if weights.uses_pose() {
        let gt = batch.poses.as_ref().ok_or(RegressorError::MissingTargets("3D poses"))?;
        let k = POSE_WIDTH as f64;
        for (term, w, pred, slot) in [
            (&mut losses.final_pose, weights.final_pose, &out.final_pose, &mut grads.final_pose),
            (&mut losses.coarse_pose, weights.coarse_pose, &out.coarse, &mut grads.coarse),
        ] {
            let diff = pred - gt;
            *term = diff.mapv(|v| v * v).sum() / (k * n);
            if w != 0.0 {
                *slot = Some(diff * (2.0 * w / (k * n)));
            }
        }
    }

    if weights.uses_fbi() {
        let labels = batch.labels.as_ref().ok_or(RegressorError::MissingTargets("FBI labels"))?;
        let mut d_logits = Array2::zeros(out.fbi_probs.raw_dim());
        for (row, l) in labels.iter().enumerate() {
            let p = probs_row(&out.fbi_probs, row);
            losses.fbi_fixed += fixed_weight_fbi_loss(&p, l, fbi.w_clear, fbi.w_uncertain) / n;
            losses.fbi_focal += focal_fbi_loss(&p, l, fbi.gamma) / n;
            for (b, prow) in p.iter().enumerate() {
                let dp = fbi_row_grad(prow, l.0[b], weights.fbi_fixed / n, weights.fbi_focal / n, fbi);
                let mut dz = [0.0; NUM_STATUS];
                softmax_backward(prow, &dp, &mut dz);
                for j in 0..NUM_STATUS {
                    d_logits[[row, NUM_STATUS * b + j]] = dz[j];
                }
            }
        }
        grads.logits = Some(d_logits);
    }

    losses.total = weights.final_pose * losses.final_pose
        + weights.coarse_pose * losses.coarse_pose
        + weights.fbi_fixed * losses.fbi_fixed
        + weights.fbi_focal * losses.fbi_focal;
    Ok(Evaluated { losses, grads })
}

/// Training-mode objective value for fixed dropout masks.
pub fn objective(
    params: &RegressorParams,
    batch: &Batch,
    weights: &LossWeights,
    fbi: &FbiLossConfig,
    masks: Option<Vec<Array2<f64>>>,
) -> Result<LossBreakdown, RegressorError> {
    let (out, _, _) = params.forward_train(&batch.inputs, masks);
    Ok(evaluate(&out, batch, weights, fbi)?.losses)
}

/// Gradient of the objective with respect to every parameter tensor.
/// Running statistics receive zero gradient; the batch moments are
/// returned so the caller can update them.
pub fn backward(
    params: &RegressorParams,
    batch: &Batch,
    weights: &LossWeights,
    fbi: &FbiLossConfig,
    masks: Option<Vec<Array2<f64>>>,
) -> Result<(LossBreakdown, RegressorParams, Vec<BatchMoments>), RegressorError> {
    let (out, cache, moments) = params.forward_train(&batch.inputs, masks);
    let ev = evaluate(&out, batch, weights, fbi)?;
    let mut grad = params.zeros_like();
    params.backward(&cache, &ev.grads, &mut grad);
    if let Some(t) = grad.tensors().into_iter().find(|t| t.data.iter().any(|v| !v.is_finite())) {
        return Err(RegressorError::NonFinite { tensor: format!("gradient of {}", t.name) });
    }
    Ok((ev.losses, grad, moments))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Learning rate is multiplied by `decay_rate^(step / decay_steps)`.
    pub decay_rate: f64,
    pub decay_steps: f64,
    pub batch_size: usize,
    pub iterations: usize,
    pub dropout: f64,
    pub seed: u64,
    pub fbi_loss: FbiLossConfig,
    /// Objective of supervised training.
    pub weights: LossWeights,
    /// Coefficient of the fixed-weight FBI loss on weak batches.
    pub weak_weight: f64,
    /// Coefficient of the pose loss on supervised batches mixed into weak
    /// finetuning.
    pub pose_weight: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            decay_rate: 0.96,
            decay_steps: 10_000.0,
            batch_size: 8,
            iterations: 20_000,
            dropout: 0.5,
            seed: 0,
            fbi_loss: FbiLossConfig::default(),
            weights: LossWeights::supervised(),
            weak_weight: 0.1,
            pose_weight: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), RegressorError> {
        let bad = |msg: &str| Err(RegressorError::InvalidConfig(msg.to_string()));
        let w = &self.weights;
        if !(self.learning_rate > 0.0) || !(self.decay_rate > 0.0) || !(self.decay_steps > 0.0) {
            return bad("learning rate and decay must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if !(self.fbi_loss.gamma >= 0.0) {
            return bad("gamma must be non-negative");
        }
        let all = [
            self.fbi_loss.w_clear,
            self.fbi_loss.w_uncertain,
            w.final_pose,
            w.coarse_pose,
            w.fbi_fixed,
            w.fbi_focal,
            self.weak_weight,
            self.pose_weight,
        ];
        if all.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return bad("loss weights must be finite and non-negative");
        }
        Ok(())
    }

    pub fn learning_rate_at(&self, step: usize) -> f64 {
        self.learning_rate * self.decay_rate.powf(step as f64 / self.decay_steps)
    }
}

/// Mean losses over one pass through the training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    /// Iterations completed at the end of the epoch.
    pub iteration: usize,
    pub train: LossBreakdown,
    /// Eval-mode pose loss on the validation set, if one was given.
    pub validation: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossHistory {
    pub epochs: Vec<EpochLoss>,
}

impl LossHistory {
    pub fn train_totals(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.train.total).collect()
    }
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl Adam {
    fn new(params: &RegressorParams) -> Self {
        let m: Vec<Vec<f64>> = params.tensors().iter().map(|t| vec![0.0; t.data.len()]).collect();
        Self { v: m.clone(), m, t: 0 }
    }

    /// Updates every trainable tensor in `groups`.
    fn step(&mut self, params: &mut RegressorParams, grad: &RegressorParams, lr: f64, groups: &[ParamGroup]) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        let grads = grad.tensors();
        for (i, p) in params.tensors_mut().into_iter().enumerate() {
            match p.kind {
                TensorKind::Trainable(g) if groups.contains(&g) => {}
                _ => continue,
            }
            let (m, v, g) = (&mut self.m[i], &mut self.v[i], grads[i].data);
            for k in 0..p.data.len() {
                m[k] = BETA1 * m[k] + (1.0 - BETA1) * g[k];
                v[k] = BETA2 * v[k] + (1.0 - BETA2) * g[k] * g[k];
                p.data[k] -= lr * (m[k] / c1) / ((v[k] / c2).sqrt() + ADAM_EPS);
            }
        }
    }
}

/// Yields shuffled index batches, reshuffling every epoch.
struct Sampler {
    order: Vec<usize>,
    pos: usize,
    epoch: usize,
    seed: u64,
    batch: usize,
}

impl Sampler {
    fn new(n: usize, batch: usize, seed: u64) -> Self {
        let mut s = Self { order: (0..n).collect(), pos: 0, epoch: 0, seed, batch: batch.min(n) };
        s.shuffle();
        s
    }

    fn shuffle(&mut self) {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[self.seed, self.epoch as u64]));
        self.order.sort_unstable();
        self.order.shuffle(&mut rng);
    }

    /// Next batch and whether it closes an epoch.
    fn next(&mut self) -> (&[usize], bool) {
        if self.pos >= self.order.len() {
            self.epoch += 1;
            self.pos = 0;
            self.shuffle();
        }
        let start = self.pos;
        self.pos = (start + self.batch).min(self.order.len());
        (&self.order[start..self.pos], self.pos == self.order.len())
    }
}

fn pick<'a>(samples: &'a [TrainSample], idx: &[usize]) -> Vec<&'a TrainSample> {
    idx.iter().map(|&i| &samples[i]).collect()
}

fn add_breakdown(acc: &mut LossBreakdown, l: &LossBreakdown) {
    acc.total += l.total;
    acc.final_pose += l.final_pose;
    acc.coarse_pose += l.coarse_pose;
    acc.fbi_fixed += l.fbi_fixed;
    acc.fbi_focal += l.fbi_focal;
}

fn scale_breakdown(l: &mut LossBreakdown, s: f64) {
    l.total *= s;
    l.final_pose *= s;
    l.coarse_pose *= s;
    l.fbi_fixed *= s;
    l.fbi_focal *= s;
}

fn check_loss(l: &LossBreakdown, iteration: usize) -> Result<(), RegressorError> {
    if l.total.is_finite() {
        Ok(())
    } else {
        Err(RegressorError::Diverged { iteration })
    }
}

/// Eval-mode mean pose loss (network units) over samples with 3D targets.
pub fn validation_loss(params: &RegressorParams, samples: &[TrainSample]) -> Result<f64, RegressorError> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for chunk in samples.chunks(512) {
        let batch = Batch::from_samples(&chunk.iter().collect::<Vec<_>>(), params)?;
        let gt = batch.poses.as_ref().ok_or(RegressorError::MissingTargets("3D poses"))?;
        let out = params.forward_eval(&batch.inputs);
        sum += (&out.final_pose - gt).mapv(|v| v * v).sum() / POSE_WIDTH as f64;
        count += batch.len();
    }
    if count == 0 {
        return Err(RegressorError::EmptyDataset);
    }
    Ok(sum / count as f64)
}

/// Supervised regression on records carrying 3D ground truth. The FBI head
/// is trained too when the objective includes FBI terms.
pub fn train_supervised(
    params: RegressorParams,
    dataset: &[TrainSample],
    validation: Option<&[TrainSample]>,
    config: &TrainConfig,
) -> Result<(RegressorParams, LossHistory), RegressorError> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(RegressorError::EmptyDataset);
    }
    params.check_finite()?;
    let mut params = params;
    let mut adam = Adam::new(&params);
    let mut sampler = Sampler::new(dataset.len(), config.batch_size, config.seed);
    let mut history = LossHistory::default();
    let mut epoch_acc = LossBreakdown::default();
    let mut epoch_batches = 0usize;
    let groups = [ParamGroup::Regressor, ParamGroup::FbiHead];

    for step in 0..config.iterations {
        let (idx, epoch_end) = sampler.next();
        let batch = Batch::from_samples(&pick(dataset, idx), &params)?;
        let masks = dropout_masks(&batch.ids, config.seed, step as u64, config.dropout, params.config.hidden);
        let (losses, grad, moments) = backward(&params, &batch, &config.weights, &config.fbi_loss, masks)
            .map_err(|e| diverged_at(e, step))?;
        check_loss(&losses, step)?;
        adam.step(&mut params, &grad, config.learning_rate_at(step), &groups);
        params.update_running_stats(&moments);
        add_breakdown(&mut epoch_acc, &losses);
        epoch_batches += 1;
        if epoch_end || step + 1 == config.iterations {
            scale_breakdown(&mut epoch_acc, 1.0 / epoch_batches as f64);
            let validation = match validation {
                Some(v) if !v.is_empty() => Some(validation_loss(&params, v)?),
                _ => None,
            };
            history.epochs.push(EpochLoss { epoch: history.epochs.len(), iteration: step + 1, train: epoch_acc, validation });
            epoch_acc = LossBreakdown::default();
            epoch_batches = 0;
        }
    }
    params.check_finite()?;
    Ok((params, history))
}

fn diverged_at(e: RegressorError, iteration: usize) -> RegressorError {
    match e {
        RegressorError::NonFinite { .. } => RegressorError::Diverged { iteration },
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeadPretrainConfig {
    pub alpha: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub iterations: usize,
    /// Standard deviation (mm) of Gaussian noise added to input joints, so
    /// the head tolerates imperfect regressor outputs.
    pub input_noise_mm: f64,
    pub seed: u64,
}

impl Default for HeadPretrainConfig {
    fn default() -> Self {
        Self { alpha: 35.0, learning_rate: 1e-3, batch_size: 64, iterations: 5_000, input_noise_mm: 10.0, seed: 0 }
    }
}

/// Trains only the FBI head to classify ground-truth poses, using plain
/// cross-entropy against labels thresholded at `alpha`.
pub fn pretrain_fbi_head(
    params: RegressorParams,
    poses: &[Pose3D],
    config: &HeadPretrainConfig,
) -> Result<(RegressorParams, LossHistory), RegressorError> {
    if poses.is_empty() {
        return Err(RegressorError::EmptyDataset);
    }
    if config.batch_size == 0 || !(config.learning_rate > 0.0) || !(config.input_noise_mm >= 0.0) {
        return Err(RegressorError::InvalidConfig("head pretraining needs a positive batch size and rate".into()));
    }
    let topo = SkeletonTopology::mpii();
    let scale = params.config.output_scale;
    let targets: Vec<([f64; POSE_WIDTH], FbiMatrix)> = poses
        .iter()
        .map(|p| {
            let labels = convert_pose_to_fbi(p, config.alpha, topo).map_err(|e| RegressorError::InvalidConfig(e.to_string()))?;
            let mut flat = p.root_relative().flatten();
            flat.iter_mut().for_each(|v| *v /= scale);
            Ok((flat, labels.labels))
        })
        .collect::<Result<_, RegressorError>>()?;

    let mut params = params;
    let mut adam = Adam::new(&params);
    let mut sampler = Sampler::new(targets.len(), config.batch_size, config.seed);
    let noise = Normal::new(0.0, config.input_noise_mm / scale).expect("finite std");
    let fbi = FbiLossConfig { gamma: 0.0, w_clear: 1.0, w_uncertain: 1.0 };
    let mut history = LossHistory::default();
    let (mut acc, mut count) = (0.0, 0usize);

    for step in 0..config.iterations {
        let (idx, epoch_end) = sampler.next();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[config.seed, step as u64, 1]));
        let mut x = Array2::zeros((idx.len(), POSE_WIDTH));
        for (row, &i) in idx.iter().enumerate() {
            for k in 0..POSE_WIDTH {
                x[[row, k]] = targets[i].0[k] + if config.input_noise_mm > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            }
        }
        let cache = params.fbi.forward(&x);
        let n = idx.len() as f64;
        let mut d_logits = Array2::zeros(cache.probs.raw_dim());
        let mut loss = 0.0;
        for (row, &i) in idx.iter().enumerate() {
            let p = probs_row(&cache.probs, row);
            let labels = &targets[i].1;
            loss += focal_fbi_loss(&p, labels, 0.0) / n;
            for b in 0..NUM_FBI_BONES {
                let dp = fbi_row_grad(&p[b], labels.0[b], 0.0, 1.0 / n, &fbi);
                let mut dz = [0.0; NUM_STATUS];
                softmax_backward(&p[b], &dp, &mut dz);
                for j in 0..NUM_STATUS {
                    d_logits[[row, NUM_STATUS * b + j]] = dz[j];
                }
            }
        }
        if !loss.is_finite() {
            return Err(RegressorError::Diverged { iteration: step });
        }
        let mut grad = params.zeros_like();
        params.fbi.backward(&cache, &d_logits, &mut grad.fbi);
        adam.step(&mut params, &grad, config.learning_rate, &[ParamGroup::FbiHead]);
        acc += loss;
        count += 1;
        if epoch_end || step + 1 == config.iterations {
            let train = LossBreakdown { total: acc / count as f64, fbi_focal: acc / count as f64, ..Default::default() };
            history.epochs.push(EpochLoss { epoch: history.epochs.len(), iteration: step + 1, train, validation: None });
            acc = 0.0;
            count = 0;
        }
    }
    params.check_finite()?;
    Ok((params, history))
}

/// Weak finetuning: FBI-only records drive the regressor through the frozen
/// FBI head, while supervised batches (weighted by `pose_weight`) limit
/// drift. With `weak_weight == 0` the parameters are returned unchanged.
pub fn finetune_weak(
    params: RegressorParams,
    weak: &[TrainSample],
    supervised: &[TrainSample],
    config: &TrainConfig,
) -> Result<(RegressorParams, LossHistory), RegressorError> {
    config.validate()?;
    if weak.is_empty() {
        return Err(RegressorError::EmptyDataset);
    }
    if weak.iter().any(|s| s.labels.is_none()) {
        return Err(RegressorError::MissingTargets("FBI labels"));
    }
    params.check_finite()?;
    if config.weak_weight == 0.0 {
        return Ok((params, LossHistory::default()));
    }
    let mix_supervised = config.pose_weight > 0.0 && !supervised.is_empty();
    let weak_weights = LossWeights { fbi_fixed: config.weak_weight, ..LossWeights::default() };
    let pose_weights = LossWeights { final_pose: config.pose_weight, coarse_pose: config.pose_weight, ..LossWeights::default() };

    let mut params = params;
    let mut adam = Adam::new(&params);
    let mut weak_sampler = Sampler::new(weak.len(), config.batch_size, config.seed);
    let mut sup_sampler = Sampler::new(supervised.len().max(1), config.batch_size, derive_seed(&[config.seed, 7]));
    let mut history = LossHistory::default();
    let mut epoch_acc = LossBreakdown::default();
    let mut epoch_batches = 0usize;

    for step in 0..config.iterations {
        let (idx, epoch_end) = weak_sampler.next();
        let batch = Batch::from_samples(&pick(weak, idx), &params)?;
        let masks = dropout_masks(&batch.ids, config.seed, step as u64, config.dropout, params.config.hidden);
        let (mut losses, mut grad, mut moments) =
            backward(&params, &batch, &weak_weights, &config.fbi_loss, masks).map_err(|e| diverged_at(e, step))?;

        if mix_supervised {
            let (idx, _) = sup_sampler.next();
            let batch = Batch::from_samples(&pick(supervised, idx), &params)?;
            let masks = dropout_masks(&batch.ids, derive_seed(&[config.seed, 7]), step as u64, config.dropout, params.config.hidden);
            let (l, g, m) =
                backward(&params, &batch, &pose_weights, &config.fbi_loss, masks).map_err(|e| diverged_at(e, step))?;
            losses.total += l.total;
            losses.final_pose = l.final_pose;
            losses.coarse_pose = l.coarse_pose;
            for (a, b) in grad.tensors_mut().into_iter().zip(g.tensors()) {
                a.data.iter_mut().zip(b.data).for_each(|(x, y)| *x += y);
            }
            moments = m;
        }
        check_loss(&losses, step)?;
        adam.step(&mut params, &grad, config.learning_rate_at(step), &[ParamGroup::Regressor]);
        params.update_running_stats(&moments);
        add_breakdown(&mut epoch_acc, &losses);
        epoch_batches += 1;
        if epoch_end || step + 1 == config.iterations {
            scale_breakdown(&mut epoch_acc, 1.0 / epoch_batches as f64);
            history.epochs.push(EpochLoss { epoch: history.epochs.len(), iteration: step + 1, train: epoch_acc, validation: None });
            epoch_acc = LossBreakdown::default();
            epoch_batches = 0;
        }
    }
    params.check_finite()?;
    Ok((params, history))
}

/// Eval-mode predictions in millimeters, pelvis at the origin.
pub fn predict(params: &RegressorParams, samples: &[TrainSample]) -> Result<Vec<Pose3D>, RegressorError> {
    params.check_finite()?;
    let scale = params.config.output_scale;
    let mut out = Vec::with_capacity(samples.len());
    for chunk in samples.chunks(512) {
        let mut x = Array2::zeros((chunk.len(), INPUT_WIDTH));
        for (row, s) in chunk.iter().enumerate() {
            encode_input(&s.pose2d, &s.probs, params.config.use_fbi, x.row_mut(row).as_slice_mut().unwrap());
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(RegressorError::NonFiniteInput);
        }
        let y = params.forward_eval(&x).final_pose;
        for row in y.axis_iter(Axis(0)) {
            let flat: Vec<f64> = row.iter().map(|v| v * scale).collect();
            out.push(Pose3D::from_flat(&flat));
        }
    }
    Ok(out)
}

/// FBI head probabilities for poses given in millimeters.
pub fn classify_poses(params: &RegressorParams, poses: &[Pose3D]) -> Vec<FbiMatrix> {
    let scale = params.config.output_scale;
    let mut x = Array2::zeros((poses.len(), POSE_WIDTH));
    for (row, p) in poses.iter().enumerate() {
        let flat = p.root_relative().flatten();
        for k in 0..POSE_WIDTH {
            x[[row, k]] = flat[k] / scale;
        }
    }
    let probs = params.fbi.forward(&x).probs;
    (0..poses.len())
        .map(|row| {
            let p = probs_row(&probs, row);
            let mut m = FbiMatrix::filled(crate::skeleton::FbiStatus::Uncertain);
            for (b, r) in p.iter().enumerate() {
                let best = (0..NUM_STATUS).max_by(|&a, &c| r[a].total_cmp(&r[c])).unwrap();
                m.0[b] = crate::skeleton::FbiStatus::from_index(best).unwrap();
            }
            m
        })
        .collect()
}

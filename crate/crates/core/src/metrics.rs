//! Pose error metrics, similarity alignment and FBI statistics.

use std::collections::BTreeMap;

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::skeleton::{
    bone_angles, convert_pose_to_fbi, FbiMatrix, FbiStatus, Pose3D, SkeletonTopology, NUM_JOINTS, PELVIS,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("non-finite coordinate in {0} pose")]
    NonFinite(&'static str),
    #[error("{0} pose is degenerate: all joints coincide")]
    Degenerate(&'static str),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("no clear-status bones in the ground truth; ratio is undefined")]
    UndefinedRatio,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

fn check(pose: &Pose3D, which: &'static str) -> Result<(), MetricsError> {
    if pose.0.iter().flatten().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(MetricsError::NonFinite(which))
    }
}

fn points(pose: &Pose3D) -> [Vector3<f64>; NUM_JOINTS] {
    pose.0.map(|p| Vector3::new(p[0], p[1], p[2]))
}

fn mean_distance(a: &[Vector3<f64>; NUM_JOINTS], b: &[Vector3<f64>; NUM_JOINTS]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).sum::<f64>() / NUM_JOINTS as f64
}

/// Mean per-joint distance after translating `pred` so the pelvis joints coincide.
pub fn mpjpe_p1(pred: &Pose3D, gt: &Pose3D) -> Result<f64, MetricsError> {
    check(pred, "predicted")?;
    check(gt, "ground-truth")?;
    let (p, g) = (points(pred), points(gt));
    let shift = g[PELVIS] - p[PELVIS];
    Ok(mean_distance(&p.map(|x| x + shift), &g))
}

/// `x ↦ scale · rotation · x + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentTransform {
    pub rotation: Matrix3<f64>,
    pub scale: f64,
    pub translation: Vector3<f64>,
}

impl AlignmentTransform {
    pub fn identity() -> Self {
        Self { rotation: Matrix3::identity(), scale: 1.0, translation: Vector3::zeros() }
    }

    pub fn apply(&self, pose: &Pose3D) -> Pose3D {
        Pose3D(points(pose).map(|x| {
            let y = self.scale * self.rotation * x + self.translation;
            [y.x, y.y, y.z]
        }))
    }
}

/// Whether the alignment may rescale the prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlignMode {
    #[default]
    Similarity,
    Rigid,
}

/// Least-squares similarity transform taking `pred` onto `gt`.
pub fn procrustes_align(pred: &Pose3D, gt: &Pose3D) -> Result<AlignmentTransform, MetricsError> {
    procrustes_align_with(pred, gt, AlignMode::Similarity)
}

/// Least-squares alignment from the SVD of the cross-covariance, with the
/// sign of the last singular direction flipped when needed so the rotation
/// is proper.
///
/// When the cross-covariance has rank at most one (collinear joints) the
/// rotation is not unique; the minimal rotation taking the dominant `pred`
/// direction onto the dominant `gt` direction is returned, which leaves the
/// axis perpendicular to both fixed.
pub fn procrustes_align_with(pred: &Pose3D, gt: &Pose3D, mode: AlignMode) -> Result<AlignmentTransform, MetricsError> {
    check(pred, "predicted")?;
    check(gt, "ground-truth")?;
    let (x, y) = (points(pred), points(gt));
    let n = NUM_JOINTS as f64;
    let mx = x.iter().sum::<Vector3<f64>>() / n;
    let my = y.iter().sum::<Vector3<f64>>() / n;
    let var_x = x.iter().map(|p| (p - mx).norm_squared()).sum::<f64>() / n;
    let var_y = y.iter().map(|p| (p - my).norm_squared()).sum::<f64>() / n;
    let tiny = 1e-24 * (1.0 + mx.norm_squared().max(my.norm_squared()));
    if var_x <= tiny {
        return Err(MetricsError::Degenerate("predicted"));
    }
    if var_y <= tiny {
        return Err(MetricsError::Degenerate("ground-truth"));
    }

    let mut cov = Matrix3::zeros();
    for (p, q) in x.iter().zip(&y) {
        cov += (q - my) * (p - mx).transpose();
    }
    cov /= n;

    let svd = cov.svd(true, true);
    let (u, v_t) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let mut order: [usize; 3] = [0, 1, 2];
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let s = order.map(|i| svd.singular_values[i]);

    let (rotation, trace) = if s[1] <= 1e-12 * s[0] {
        let (a, b) = (v_t.row(order[0]).transpose(), u.column(order[0]).into_owned());
        (minimal_rotation(&a, &b), s[0])
    } else {
        let d = if (u.determinant() * v_t.determinant()) < 0.0 { -1.0 } else { 1.0 };
        let mut dm = Matrix3::identity();
        dm[(order[2], order[2])] = d;
        (u * dm * v_t, s[0] + s[1] + d * s[2])
    };
    let scale = match mode {
        AlignMode::Similarity => trace / var_x,
        AlignMode::Rigid => 1.0,
    };
    Ok(AlignmentTransform { rotation, scale, translation: my - scale * rotation * mx })
}

fn minimal_rotation(from: &Vector3<f64>, to: &Vector3<f64>) -> Matrix3<f64> {
    match Rotation3::rotation_between(from, to) {
        Some(r) => r.into_inner(),
        None => {
            // Antiparallel: half turn about any axis perpendicular to `from`.
            let helper = if from.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
            let axis = Unit::new_normalize(from.cross(&helper));
            Rotation3::from_axis_angle(&axis, std::f64::consts::PI).into_inner()
        }
    }
}

/// Mean per-joint distance after similarity alignment.
pub fn mpjpe_p2(pred: &Pose3D, gt: &Pose3D) -> Result<f64, MetricsError> {
    mpjpe_p2_with(pred, gt, AlignMode::Similarity)
}

pub fn mpjpe_p2_with(pred: &Pose3D, gt: &Pose3D, mode: AlignMode) -> Result<f64, MetricsError> {
    let t = procrustes_align_with(pred, gt, mode)?;
    Ok(mean_distance(&points(&t.apply(pred)), &points(gt)))
}

/// Matches over clear-status ground-truth bones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CorrectnessCounts {
    pub matched: usize,
    pub clear: usize,
}

impl CorrectnessCounts {
    pub fn ratio(&self) -> Result<f64, MetricsError> {
        if self.clear == 0 {
            Err(MetricsError::UndefinedRatio)
        } else {
            Ok(self.matched as f64 / self.clear as f64)
        }
    }
}

pub fn fbi_correctness_counts(
    pred_poses: &[Pose3D],
    gt_fbi: &[FbiMatrix],
    alpha: f64,
) -> Result<CorrectnessCounts, MetricsError> {
    if pred_poses.len() != gt_fbi.len() {
        return Err(MetricsError::LengthMismatch { left: pred_poses.len(), right: gt_fbi.len() });
    }
    let topo = SkeletonTopology::mpii();
    let mut counts = CorrectnessCounts::default();
    for (pose, gt) in pred_poses.iter().zip(gt_fbi) {
        check(pose, "predicted")?;
        let pred = convert_pose_to_fbi(pose, alpha, topo).map_err(|e| MetricsError::InvalidArgument(e.to_string()))?;
        for (p, g) in pred.labels.0.iter().zip(gt.0.iter()) {
            if g.is_clear() {
                counts.clear += 1;
                counts.matched += usize::from(p == g);
            }
        }
    }
    Ok(counts)
}

/// Fraction of clear-status ground-truth bones whose label, derived from the
/// predicted pose at `alpha`, matches exactly.
pub fn fbi_correctness_ratio(pred_poses: &[Pose3D], gt_fbi: &[FbiMatrix], alpha: f64) -> Result<f64, MetricsError> {
    fbi_correctness_counts(pred_poses, gt_fbi, alpha)?.ratio()
}

/// Histogram of `|θ|` over bones labeled Uncertain, on `[0°, 90°]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleHistogram {
    /// Bucket boundaries; `edges.len() == counts.len() + 1`.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Counts as percentages of the total; all zero when the total is zero.
    pub percentages: Vec<f64>,
}

impl AngleHistogram {
    pub fn empty(bucket_width: f64) -> Result<Self, MetricsError> {
        if !(bucket_width > 0.0) || !bucket_width.is_finite() {
            return Err(MetricsError::InvalidArgument(format!("bucket width {bucket_width}")));
        }
        let n = (90.0 / bucket_width).ceil() as usize;
        let edges = (0..=n).map(|i| (i as f64 * bucket_width).min(90.0)).collect();
        Ok(Self { edges, counts: vec![0; n], percentages: vec![0.0; n] })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    fn add(&mut self, abs_theta: f64) {
        let width = self.edges[1] - self.edges[0];
        let i = ((abs_theta / width).floor() as usize).min(self.counts.len() - 1);
        self.counts[i] += 1;
    }

    fn normalize(&mut self) {
        let total = self.total();
        if total > 0 {
            self.percentages = self.counts.iter().map(|&c| 100.0 * c as f64 / total as f64).collect();
        }
    }
}

pub fn uncertain_angle_histogram(
    poses: &[Pose3D],
    fbi_labels: &[FbiMatrix],
    bucket_width: f64,
) -> Result<AngleHistogram, MetricsError> {
    if poses.len() != fbi_labels.len() {
        return Err(MetricsError::LengthMismatch { left: poses.len(), right: fbi_labels.len() });
    }
    let topo = SkeletonTopology::mpii();
    let mut hist = AngleHistogram::empty(bucket_width)?;
    for (pose, labels) in poses.iter().zip(fbi_labels) {
        check(pose, "input")?;
        let angles = bone_angles(pose, topo);
        for (theta, l) in angles.iter().zip(labels.0.iter()) {
            if *l == FbiStatus::Uncertain {
                hist.add(theta.abs());
            }
        }
    }
    hist.normalize();
    Ok(hist)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MpjpeSummary {
    pub count: usize,
    pub mpjpe_p1: f64,
    pub mpjpe_p2: f64,
}

/// Aggregate and per-action errors plus FBI statistics for one evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub align_mode: AlignMode,
    pub aggregate: MpjpeSummary,
    pub per_action: BTreeMap<String, MpjpeSummary>,
    pub fbi_alpha: Option<f64>,
    pub fbi_correctness: Option<f64>,
    pub uncertain_histogram: Option<AngleHistogram>,
}

/// Errors for paired predictions and ground truth. `actions` groups samples
/// for the per-action table; `gt_fbi` enables the FBI correctness ratio.
pub fn evaluate(
    preds: &[Pose3D],
    gts: &[Pose3D],
    actions: Option<&[String]>,
    gt_fbi: Option<(&[FbiMatrix], f64)>,
    mode: AlignMode,
) -> Result<EvaluationReport, MetricsError> {
    if preds.len() != gts.len() {
        return Err(MetricsError::LengthMismatch { left: preds.len(), right: gts.len() });
    }
    if let Some(a) = actions {
        if a.len() != preds.len() {
            return Err(MetricsError::LengthMismatch { left: preds.len(), right: a.len() });
        }
    }
    let mut aggregate = MpjpeSummary::default();
    let mut per_action: BTreeMap<String, MpjpeSummary> = BTreeMap::new();
    for (i, (p, g)) in preds.iter().zip(gts).enumerate() {
        let e1 = mpjpe_p1(p, g)?;
        let e2 = mpjpe_p2_with(p, g, mode)?;
        for s in std::iter::once(&mut aggregate)
            .chain(actions.map(|a| per_action.entry(a[i].clone()).or_default()))
        {
            s.count += 1;
            s.mpjpe_p1 += e1;
            s.mpjpe_p2 += e2;
        }
    }
    for s in std::iter::once(&mut aggregate).chain(per_action.values_mut()) {
        if s.count > 0 {
            s.mpjpe_p1 /= s.count as f64;
            s.mpjpe_p2 /= s.count as f64;
        }
    }
    let (fbi_alpha, fbi_correctness, uncertain_histogram) = match gt_fbi {
        Some((labels, alpha)) => {
            let ratio = match fbi_correctness_ratio(preds, labels, alpha) {
                Ok(r) => Some(r),
                Err(MetricsError::UndefinedRatio) => None,
                Err(e) => return Err(e),
            };
            (Some(alpha), ratio, Some(uncertain_angle_histogram(gts, labels, 10.0)?))
        }
        None => (None, None, None),
    };
    Ok(EvaluationReport { align_mode: mode, aggregate, per_action, fbi_alpha, fbi_correctness, uncertain_histogram })
}

impl EvaluationReport {
    /// One row per action plus an `all` row.
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["action", "count", "mpjpe_p1", "mpjpe_p2"])?;
        let rows = self.per_action.iter().map(|(k, v)| (k.as_str(), v)).chain(std::iter::once(("all", &self.aggregate)));
        for (name, s) in rows {
            w.write_record([name.to_string(), s.count.to_string(), s.mpjpe_p1.to_string(), s.mpjpe_p2.to_string()])?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

impl AngleHistogram {
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["lower_deg", "upper_deg", "count", "percent"])?;
        for i in 0..self.counts.len() {
            w.write_record([
                self.edges[i].to_string(),
                self.edges[i + 1].to_string(),
                self.counts[i].to_string(),
                self.percentages[i].to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifting::{generate_synthetic_pose, SynthConfig};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn pose(seed: u64) -> Pose3D {
        generate_synthetic_pose(seed, &SynthConfig::default())
    }

    fn transform(p: &Pose3D, s: f64, r: &Rotation3<f64>, t: Vector3<f64>) -> Pose3D {
        AlignmentTransform { rotation: r.into_inner(), scale: s, translation: t }.apply(p)
    }

    #[test]
    fn p1_examples() {
        let gt = pose(1);
        assert_eq!(mpjpe_p1(&gt, &gt).unwrap(), 0.0);
        let shifted = transform(&gt, 1.0, &Rotation3::identity(), Vector3::new(10.0, -3.0, 7.5));
        assert!(mpjpe_p1(&shifted, &gt).unwrap() < 1e-9);
        let mut moved = gt;
        moved.0[3][1] += 16.0;
        assert_relative_eq!(mpjpe_p1(&moved, &gt).unwrap(), 1.0, epsilon = 1e-12);
        let mut bad = gt;
        bad.0[0][0] = f64::NAN;
        assert_eq!(mpjpe_p1(&bad, &gt), Err(MetricsError::NonFinite("predicted")));
    }

    #[test]
    fn recovers_known_similarity() {
        let pred = pose(2);
        let r0 = Rotation3::from_euler_angles(0.3, -1.1, 2.0);
        let t0 = Vector3::new(5.0, 100.0, -40.0);
        let gt = transform(&pred, 2.0, &r0, t0);
        let t = procrustes_align(&pred, &gt).unwrap();
        assert_relative_eq!(t.scale, 2.0, epsilon = 1e-9);
        assert_relative_eq!(t.rotation, r0.into_inner(), epsilon = 1e-9);
        assert_relative_eq!(t.translation, t0, epsilon = 1e-6);
        let id = procrustes_align(&gt, &gt).unwrap();
        assert_relative_eq!(id.rotation, Matrix3::identity(), epsilon = 1e-9);
        assert_relative_eq!(id.scale, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn reflection_gives_proper_rotation() {
        let pred = pose(3);
        let mut mirrored = pred;
        for p in mirrored.0.iter_mut() {
            p[0] = -p[0];
        }
        let t = procrustes_align(&pred, &mirrored).unwrap();
        assert_relative_eq!(t.rotation.determinant(), 1.0, epsilon = 1e-9);
        assert_relative_eq!(t.rotation.transpose() * t.rotation, Matrix3::identity(), epsilon = 1e-9);
        assert!(t.scale > 0.0);
    }

    #[test]
    fn collinear_and_degenerate_inputs() {
        let mut line = Pose3D([[0.0; 3]; NUM_JOINTS]);
        for (j, p) in line.0.iter_mut().enumerate() {
            *p = [j as f64, 0.0, 0.0];
        }
        let mut target = line;
        for p in target.0.iter_mut() {
            *p = [0.0, 2.0 * p[0], 0.0];
        }
        let t = procrustes_align(&line, &target).unwrap();
        assert_relative_eq!(t.scale, 2.0, epsilon = 1e-9);
        assert_relative_eq!(t.rotation.determinant(), 1.0, epsilon = 1e-9);
        // The z axis is perpendicular to both lines and stays fixed.
        assert_relative_eq!(t.rotation * Vector3::z(), Vector3::z(), epsilon = 1e-9);
        assert!(mpjpe_p2(&line, &target).unwrap() < 1e-9);

        let point = Pose3D([[1.0, 2.0, 3.0]; NUM_JOINTS]);
        assert_eq!(procrustes_align(&point, &target), Err(MetricsError::Degenerate("predicted")));
        assert_eq!(procrustes_align(&target, &point), Err(MetricsError::Degenerate("ground-truth")));
    }

    #[test]
    fn rigid_mode_keeps_unit_scale() {
        let pred = pose(4);
        let gt = transform(&pred, 1.5, &Rotation3::from_euler_angles(0.1, 0.2, 0.3), Vector3::zeros());
        let t = procrustes_align_with(&pred, &gt, AlignMode::Rigid).unwrap();
        assert_eq!(t.scale, 1.0);
        assert!(mpjpe_p2_with(&pred, &gt, AlignMode::Rigid).unwrap() > 1.0);
        assert!(mpjpe_p2(&pred, &gt).unwrap() < 1e-6);
    }

    #[test]
    fn correctness_counting() {
        let topo = SkeletonTopology::mpii();
        let poses: Vec<_> = (0..20).map(pose).collect();
        let labels: Vec<_> = poses.iter().map(|p| convert_pose_to_fbi(p, 35.0, topo).unwrap().labels).collect();
        assert_eq!(fbi_correctness_ratio(&poses, &labels, 35.0).unwrap(), 1.0);
        let mirrored: Vec<_> = poses.iter().map(Pose3D::depth_mirrored).collect();
        assert_eq!(fbi_correctness_ratio(&mirrored, &labels, 35.0).unwrap(), 0.0);
        let uncertain = vec![FbiMatrix::filled(FbiStatus::Uncertain); 20];
        assert_eq!(fbi_correctness_ratio(&poses, &uncertain, 35.0), Err(MetricsError::UndefinedRatio));

        // 10 clear bones, 7 of them matching.
        let p = pose(5);
        let pred = convert_pose_to_fbi(&p, 35.0, topo).unwrap().labels;
        let mut gt = FbiMatrix::filled(FbiStatus::Uncertain);
        let mut clear = 0;
        for b in 0..14 {
            if pred.0[b].is_clear() && clear < 10 {
                gt.0[b] = if clear < 7 { pred.0[b] } else { pred.0[b].flipped() };
                clear += 1;
            }
        }
        if clear == 10 {
            assert_relative_eq!(fbi_correctness_ratio(&[p], &[gt], 35.0).unwrap(), 0.7, epsilon = 1e-15);
        }
    }

    #[test]
    fn histogram_shapes() {
        let h = uncertain_angle_histogram(&[], &[], 10.0).unwrap();
        assert_eq!(h.counts, vec![0; 9]);
        assert_eq!(h.edges.len(), 10);
        assert_eq!(h.total(), 0);

        let mut flat = Pose3D([[0.0; 3]; NUM_JOINTS]);
        for (j, p) in flat.0.iter_mut().enumerate() {
            *p = [j as f64 * 10.0, (j * j) as f64, 0.0];
        }
        let h = uncertain_angle_histogram(&[flat], &[FbiMatrix::filled(FbiStatus::Uncertain)], 10.0).unwrap();
        assert_eq!(h.counts[0], 14);
        assert_eq!(h.percentages[0], 100.0);

        assert!(AngleHistogram::empty(0.0).is_err());
        assert_eq!(AngleHistogram::empty(25.0).unwrap().edges, vec![0.0, 25.0, 50.0, 75.0, 90.0]);
    }

    #[test]
    fn report_csv_has_all_row() {
        let gts: Vec<_> = (0..4).map(pose).collect();
        let actions: Vec<String> = ["walk", "sit", "walk", "sit"].iter().map(|s| s.to_string()).collect();
        let r = evaluate(&gts, &gts, Some(&actions), None, AlignMode::Similarity).unwrap();
        assert_eq!(r.per_action["walk"].count, 2);
        let csv = r.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().last().unwrap().starts_with("all,4,"));
    }

    proptest! {
        #[test]
        fn rigid_motion_of_both_inputs_is_invariant(
            seed in 0u64..1000,
            angles in prop::array::uniform3(-3.0f64..3.0),
            t in prop::array::uniform3(-500.0f64..500.0),
            noise_seed in 0u64..1000,
        ) {
            let gt = pose(seed);
            let pred = pose(noise_seed + 5000);
            let r = Rotation3::from_euler_angles(angles[0], angles[1], angles[2]);
            let tv = Vector3::from(t);
            let (gt2, pred2) = (transform(&gt, 1.0, &r, tv), transform(&pred, 1.0, &r, tv));
            prop_assert!((mpjpe_p1(&pred, &gt).unwrap() - mpjpe_p1(&pred2, &gt2).unwrap()).abs() < 1e-6);
            prop_assert!((mpjpe_p2(&pred, &gt).unwrap() - mpjpe_p2(&pred2, &gt2).unwrap()).abs() < 1e-6);
        }

        #[test]
        fn alignment_never_worse_than_identity(seed in 0u64..1000, other in 0u64..1000) {
            let (pred, gt) = (pose(seed), pose(other + 2000));
            let t = procrustes_align(&pred, &gt).unwrap();
            let sq = |a: &Pose3D| points(a).iter().zip(points(&gt).iter()).map(|(x, y)| (x - y).norm_squared()).sum::<f64>();
            prop_assert!(sq(&t.apply(&pred)) <= sq(&pred) + 1e-6);
            prop_assert!((t.rotation.determinant() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn correctness_ratio_is_scale_invariant(seed in 0u64..1000, s in 0.01f64..100.0) {
            let topo = SkeletonTopology::mpii();
            let gt = pose(seed);
            let pred = pose(seed + 1);
            let labels = [convert_pose_to_fbi(&gt, 35.0, topo).unwrap().labels];
            let scaled = transform(&pred, s, &Rotation3::identity(), Vector3::zeros());
            prop_assert_eq!(
                fbi_correctness_counts(&[pred], &labels, 35.0).unwrap(),
                fbi_correctness_counts(&[scaled], &labels, 35.0).unwrap()
            );
        }
    }
}

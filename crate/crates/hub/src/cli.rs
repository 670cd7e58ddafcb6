//! `fbipose` command line: every subcommand wires one library workflow to
//! JSONL files on disk.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fbipose_core::data_io::{
    mix_gold, read_dataset, synthesize_dataset, write_dataset, write_dataset_to, AnnotationRecord, Pose2dRecord,
    Pose3dRecord, Record, SyntheticSample, TaskDefinition,
};
use fbipose_core::experiments::{run_alpha_sweep, to_train_samples, ProbSource};
use fbipose_core::lifting::{
    enumerate_lifts, generate_synthetic_pose, lift, LiftOptions, SpineSign, SynthConfig, UncertainPolicy,
    DEFAULT_MAX_UNCERTAIN,
};
use fbipose_core::metrics::{evaluate, uncertain_angle_histogram, AlignMode};
use fbipose_core::regressor::{
    finetune_weak, load_checkpoint, predict, pretrain_fbi_head, save_checkpoint, train_supervised, RegressorParams,
    TrainSample,
};
use fbipose_core::skeleton::{convert_pose_to_fbi, FbiMatrix, Pose3D, SkeletonTopology};
use fbipose_core::derive_seed;

use crate::api::router;
use crate::config::HubConfig;
use crate::store::{export_sorted, AnnotationStore, ExportFilter};

#[derive(Debug, Parser)]
#[command(name = "fbipose", version, about = "Monocular 3D pose lifting with forward/backward bone labels")]
pub struct Cli {
    /// Seed for every random stream; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic poses with projections, labels and simulated predictor output.
    Synth(SynthArgs),
    /// Lift 2D poses to 3D using one label per bone.
    Lift(LiftArgs),
    /// List every 3D pose consistent with the labels of one 2D pose.
    Enumerate(EnumerateArgs),
    /// Train the regressor on synthetic samples.
    Train(TrainArgs),
    /// Finetune a trained regressor on label-only data.
    FinetuneWeak(FinetuneArgs),
    /// Evaluate a checkpoint on synthetic samples.
    Eval(EvalArgs),
    /// Convert 3D poses to per-bone labels.
    ConvertFbi(ConvertArgs),
    /// Retrain and evaluate across threshold angles.
    SweepAlpha(SweepArgs),
    /// Histogram of out-of-plane angles of Uncertain bones.
    Hist(HistArgs),
    /// Run the annotation service.
    Serve(ServeArgs),
    /// Export annotations from a service log.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Use the narrower studio pose distribution.
    #[arg(long)]
    pub studio: bool,
    /// Also write the 2D poses as a pose2d file.
    #[arg(long)]
    pub pose2d_out: Option<PathBuf>,
    /// Also write the 3D poses as a pose3d file.
    #[arg(long)]
    pub pose3d_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SpineArg {
    Behind,
    InFront,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PolicyArg {
    ZeroClamp,
    DefaultForward,
    DefaultBackward,
}

#[derive(Debug, Args)]
pub struct LiftInput {
    /// pose2d file.
    #[arg(long)]
    pub pose2d: PathBuf,
    /// fbi-annotation file; records are matched to poses by `task_id == id`.
    #[arg(long)]
    pub fbi: PathBuf,
    /// Camera scale in pixels per millimeter; estimated from bone lengths when absent.
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub cx: f64,
    #[arg(long, default_value_t = 0.0)]
    pub cy: f64,
    #[arg(long, value_enum)]
    pub spine: Option<SpineArg>,
    #[arg(long, value_enum, default_value = "zero-clamp")]
    pub uncertain: PolicyArg,
}

impl LiftInput {
    fn options(&self) -> LiftOptions {
        LiftOptions {
            scale: self.scale,
            principal: [self.cx, self.cy],
            spine_sign: self.spine.map(|s| match s {
                SpineArg::Behind => SpineSign::Behind,
                SpineArg::InFront => SpineSign::InFront,
            }),
            uncertain_policy: match self.uncertain {
                PolicyArg::ZeroClamp => UncertainPolicy::ZeroClamp,
                PolicyArg::DefaultForward => UncertainPolicy::DefaultForward,
                PolicyArg::DefaultBackward => UncertainPolicy::DefaultBackward,
            },
        }
    }

    fn load(&self) -> anyhow::Result<Vec<(Pose2dRecord, FbiMatrix)>> {
        let poses = read_clean::<Pose2dRecord>(&self.pose2d)?;
        let labels: HashMap<String, FbiMatrix> =
            read_clean::<AnnotationRecord>(&self.fbi)?.into_iter().map(|r| (r.task_id, r.labels)).collect();
        poses
            .into_iter()
            .map(|p| {
                let l = *labels.get(&p.id).ok_or_else(|| anyhow!("no labels for pose {}", p.id))?;
                Ok((p, l))
            })
            .collect()
    }
}

#[derive(Debug, Args)]
pub struct LiftArgs {
    #[command(flatten)]
    pub input: LiftInput,
    /// pose3d output, millimeters with the pelvis at depth 0.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    #[command(flatten)]
    pub input: LiftInput,
    /// Id of the pose to enumerate.
    #[arg(long)]
    pub id: String,
    #[arg(long, default_value_t = DEFAULT_MAX_UNCERTAIN)]
    pub max_uncertain: usize,
    /// pose3d output with ids `<id>/<candidate>`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// synthetic-sample training file.
    #[arg(long)]
    pub data: PathBuf,
    /// synthetic-sample validation file.
    #[arg(long)]
    pub val: Option<PathBuf>,
    /// Checkpoint output.
    #[arg(long)]
    pub out: PathBuf,
    /// Feed one-hot true labels instead of the simulated predictor output.
    #[arg(long)]
    pub oracle: bool,
    /// Train the 2D-only baseline.
    #[arg(long)]
    pub no_fbi: bool,
    /// Write the per-epoch loss history as JSON.
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FinetuneArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// synthetic-sample file; only its 2D poses, predictor output and labels are used.
    #[arg(long)]
    pub weak: PathBuf,
    /// synthetic-sample file with 3D ground truth, mixed in to limit drift.
    #[arg(long)]
    pub supervised: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Extra generated poses for FBI head pretraining, on top of the supervised poses.
    #[arg(long, default_value_t = 10_000)]
    pub head_poses: usize,
    /// Keep the FBI head from the checkpoint as is.
    #[arg(long)]
    pub skip_head: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// synthetic-sample test file.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub oracle: bool,
    /// Rotation and translation only, no scale, for the aligned error.
    #[arg(long)]
    pub rigid: bool,
    /// Per-action CSV output; the JSON report goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// pose3d file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 35.0)]
    pub alpha: f64,
    /// fbi-annotation output, one record per pose with `task_id` set to the pose id.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Reduced-width network and budget that finish in minutes on one core.
    #[arg(long)]
    pub desk: bool,
    /// CSV output of the curve; a JSON report goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HistArgs {
    /// pose3d file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 35.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 10.0)]
    pub bucket_width: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// pose2d file with the regular tasks.
    #[arg(long)]
    pub tasks: PathBuf,
    /// synthetic-sample file whose labels serve as gold answers.
    #[arg(long)]
    pub gold: Option<PathBuf>,
    #[arg(long)]
    pub gold_fraction: Option<f64>,
    /// Append-only annotation log; replayed on start.
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long)]
    pub addr: Option<String>,
    /// Directory with the built annotator UI.
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long)]
    pub annotator: Option<String>,
    #[arg(long)]
    pub gold: Option<bool>,
    /// Defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Reads a file and fails on the first malformed line.
fn read_clean<T: Record>(path: &Path) -> anyhow::Result<Vec<T>> {
    let report = read_dataset::<T>(path).with_context(|| format!("reading {}", path.display()))?;
    if let Some(e) = report.errors.first() {
        bail!("{}:{}: {}", path.display(), e.line, e.message);
    }
    Ok(report.records)
}

fn samples(path: &Path, oracle: bool, with_pose: bool, id_base: u64) -> anyhow::Result<(Vec<SyntheticSample>, Vec<TrainSample>)> {
    let raw = read_clean::<SyntheticSample>(path)?;
    let source = if oracle { ProbSource::Oracle } else { ProbSource::Simulated };
    let train = to_train_samples(&raw, source, with_pose, id_base)?;
    Ok((raw, train))
}

fn write_json(value: &impl serde::Serialize) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let config = match &cli.config {
        Some(p) => HubConfig::load(p)?,
        None => HubConfig::default(),
    }
    .with_seed(cli.seed);
    match cli.command {
        Command::Synth(a) => synth(&config, a),
        Command::Lift(a) => lift_cmd(a),
        Command::Enumerate(a) => enumerate_cmd(a),
        Command::Train(a) => train(&config, a),
        Command::FinetuneWeak(a) => finetune(&config, a),
        Command::Eval(a) => eval(a),
        Command::ConvertFbi(a) => convert(a),
        Command::SweepAlpha(a) => sweep(&config, a),
        Command::Hist(a) => hist(a),
        Command::Serve(a) => serve(&config, a),
        Command::Export(a) => export(a),
    }
}

fn synth(config: &HubConfig, a: SynthArgs) -> anyhow::Result<()> {
    let mut cfg = config.synth.clone();
    if let Some(c) = a.count {
        cfg.count = c;
    }
    if let Some(alpha) = a.alpha {
        cfg.alpha = alpha;
    }
    if a.studio {
        cfg.pose = SynthConfig::studio();
    }
    if !(0.0..=90.0).contains(&cfg.alpha) {
        bail!("alpha {} outside [0, 90]", cfg.alpha);
    }
    let data = synthesize_dataset(&cfg);
    write_dataset(&data, &a.out)?;
    if let Some(p) = a.pose2d_out {
        let recs: Vec<Pose2dRecord> =
            data.iter().map(|s| Pose2dRecord { id: s.id.to_string(), image_ref: None, joints: s.pose2d }).collect();
        write_dataset(&recs, &p)?;
    }
    if let Some(p) = a.pose3d_out {
        let recs: Vec<Pose3dRecord> =
            data.iter().map(|s| Pose3dRecord { id: s.id.to_string(), action: s.action.clone(), joints: s.pose3d }).collect();
        write_dataset(&recs, &p)?;
    }
    eprintln!("wrote {} samples to {}", data.len(), a.out.display());
    Ok(())
}

fn priors() -> fbipose_core::skeleton::BoneLengthPrior {
    SynthConfig::default().bone_lengths
}

fn lift_cmd(a: LiftArgs) -> anyhow::Result<()> {
    let topo = SkeletonTopology::mpii();
    let priors = priors();
    let opts = a.input.options();
    let mut out = Vec::new();
    for (p, labels) in a.input.load()? {
        let r = lift(&p.joints, &labels, &priors, topo, &opts).with_context(|| format!("lifting pose {}", p.id))?;
        out.push(Pose3dRecord { id: p.id, action: None, joints: r.pose });
    }
    write_dataset(&out, &a.out)?;
    eprintln!("lifted {} poses", out.len());
    Ok(())
}

fn enumerate_cmd(a: EnumerateArgs) -> anyhow::Result<()> {
    let topo = SkeletonTopology::mpii();
    let (p, labels) = a
        .input
        .load()?
        .into_iter()
        .find(|(p, _)| p.id == a.id)
        .ok_or_else(|| anyhow!("no pose with id {}", a.id))?;
    let candidates = enumerate_lifts(&p.joints, &labels, &priors(), topo, &a.input.options(), a.max_uncertain)?;
    let out: Vec<Pose3dRecord> = candidates
        .iter()
        .enumerate()
        .map(|(k, c)| Pose3dRecord { id: format!("{}/{k}", p.id), action: None, joints: c.pose })
        .collect();
    write_dataset(&out, &a.out)?;
    eprintln!("{} candidates", out.len());
    Ok(())
}

fn train(config: &HubConfig, a: TrainArgs) -> anyhow::Result<()> {
    let (_, data) = samples(&a.data, a.oracle, true, 0)?;
    let val = match &a.val {
        Some(p) => Some(samples(p, a.oracle, true, 1 << 32)?.1),
        None => None,
    };
    let model = fbipose_core::regressor::ModelConfig { use_fbi: !a.no_fbi, ..config.model.clone() };
    let params = RegressorParams::init(model, derive_seed(&[config.seed(), 6]));
    let (params, history) = train_supervised(params, &data, val.as_deref(), &config.train)?;
    save_checkpoint(&params, config.seed(), &a.out)?;
    if let Some(p) = a.history {
        std::fs::write(&p, serde_json::to_string_pretty(&history)?)?;
    }
    if let Some(last) = history.epochs.last() {
        eprintln!("final train loss {:.5} after {} iterations", last.train.total, last.iteration);
    }
    Ok(())
}

fn finetune(config: &HubConfig, a: FinetuneArgs) -> anyhow::Result<()> {
    let (params, seed) = load_checkpoint(&a.checkpoint)?;
    let (sup_raw, sup) = samples(&a.supervised, false, true, 0)?;
    let (_, weak) = samples(&a.weak, false, false, 2 << 32)?;
    let params = if a.skip_head {
        params
    } else {
        let mut poses: Vec<Pose3D> = sup_raw.iter().map(|s| s.pose3d).collect();
        let wild = SynthConfig::default();
        poses.extend((0..a.head_poses as u64).map(|i| generate_synthetic_pose(derive_seed(&[config.seed(), 5, i]), &wild)));
        pretrain_fbi_head(params, &poses, &config.head)?.0
    };
    let (tuned, history) = finetune_weak(params, &weak, &sup, &config.weak.finetune)?;
    save_checkpoint(&tuned, seed, &a.out)?;
    if let Some(last) = history.epochs.last() {
        eprintln!("final weak loss {:.5}", last.train.total);
    }
    Ok(())
}

fn eval(a: EvalArgs) -> anyhow::Result<()> {
    let (params, _) = load_checkpoint(&a.checkpoint)?;
    let (raw, data) = samples(&a.data, a.oracle, true, 0)?;
    let alpha = raw.first().map(|s| s.alpha).unwrap_or(35.0);
    let preds = predict(&params, &data)?;
    let gts: Vec<Pose3D> = raw.iter().map(|s| s.pose3d).collect();
    let labels: Vec<FbiMatrix> = raw.iter().map(|s| s.labels).collect();
    let actions: Option<Vec<String>> = raw.iter().map(|s| s.action.clone()).collect();
    let mode = if a.rigid { AlignMode::Rigid } else { AlignMode::Similarity };
    let report = evaluate(&preds, &gts, actions.as_deref(), Some((&labels, alpha)), mode)?;
    if let Some(p) = a.out {
        std::fs::write(&p, report.to_csv()?)?;
    }
    write_json(&report)
}

fn convert(a: ConvertArgs) -> anyhow::Result<()> {
    let topo = SkeletonTopology::mpii();
    let poses = read_clean::<Pose3dRecord>(&a.input)?;
    let mut out = Vec::with_capacity(poses.len());
    for p in poses {
        let c = convert_pose_to_fbi(&p.joints, a.alpha, topo).with_context(|| format!("pose {}", p.id))?;
        out.push(AnnotationRecord {
            image_ref: format!("pose3d:{}", p.id),
            task_id: p.id,
            annotator_id: "convert-fbi".into(),
            labels: c.labels,
            duration_ms: 0,
            is_gold: false,
            gold_conflicts: Vec::new(),
            created_at: 0,
        });
    }
    write_dataset(&out, &a.out)?;
    eprintln!("converted {} poses", out.len());
    Ok(())
}

fn sweep(config: &HubConfig, a: SweepArgs) -> anyhow::Result<()> {
    let cfg = if a.desk {
        fbipose_core::experiments::SweepConfig { seed: config.sweep.seed, ..fbipose_core::experiments::SweepConfig::desk() }
    } else {
        config.sweep.clone()
    };
    let report = run_alpha_sweep(&cfg)?;
    if let Some(p) = a.out {
        let mut w = csv::Writer::from_path(&p)?;
        for point in &report.points {
            w.serialize(point)?;
        }
        w.flush()?;
    }
    write_json(&report)
}

fn hist(a: HistArgs) -> anyhow::Result<()> {
    let topo = SkeletonTopology::mpii();
    let poses: Vec<Pose3D> = read_clean::<Pose3dRecord>(&a.input)?.into_iter().map(|p| p.joints).collect();
    let labels = poses
        .iter()
        .map(|p| convert_pose_to_fbi(p, a.alpha, topo).map(|c| c.labels))
        .collect::<Result<Vec<_>, _>>()?;
    let h = uncertain_angle_histogram(&poses, &labels, a.bucket_width)?;
    let uncertain = fbipose_core::data_io::uncertain_fraction(&labels)?;
    if let Some(p) = a.out {
        std::fs::write(&p, h.to_csv()?)?;
    }
    write_json(&serde_json::json!({ "alpha": a.alpha, "uncertain_fraction": uncertain, "histogram": h }))
}

/// Regular tasks from a pose2d file mixed with gold tasks from a synthetic file.
pub fn build_task_stream(
    tasks: &[Pose2dRecord],
    gold: &[SyntheticSample],
    gold_fraction: f64,
    seed: u64,
) -> anyhow::Result<Vec<TaskDefinition>> {
    let regular: Vec<TaskDefinition> =
        tasks.iter().map(|p| TaskDefinition::regular(&p.id, p.image_ref.as_deref(), p.joints)).collect();
    let gold: Vec<TaskDefinition> =
        gold.iter().map(|s| TaskDefinition::gold(&format!("gold:{}", s.id), None, s.pose2d, s.labels)).collect();
    Ok(mix_gold(&regular, &gold, if gold.is_empty() { 0.0 } else { gold_fraction }, seed)?)
}

fn serve(config: &HubConfig, a: ServeArgs) -> anyhow::Result<()> {
    let tasks = read_clean::<Pose2dRecord>(&a.tasks)?;
    let gold = match &a.gold {
        Some(p) => read_clean::<SyntheticSample>(p)?,
        None => Vec::new(),
    };
    let fraction = a.gold_fraction.unwrap_or(config.serve.gold_fraction);
    let stream = build_task_stream(&tasks, &gold, fraction, config.seed())?;
    let store = AnnotationStore::open_with_log(stream, &a.log)?;
    let n = store.task_count();
    let app = router(Arc::new(Mutex::new(store)), a.ui_dir.or(config.serve.ui_dir.clone()));
    let addr = a.addr.unwrap_or(config.serve.addr.clone());
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&addr).await.with_context(|| format!("binding {addr}"))?;
        eprintln!("serving {n} tasks on http://{addr}");
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}

fn export(a: ExportArgs) -> anyhow::Result<()> {
    let records = read_clean::<AnnotationRecord>(&a.log)?;
    let filter = ExportFilter { annotator: a.annotator, is_gold: a.gold };
    let out = export_sorted(&records, &filter);
    match a.out {
        Some(p) => write_dataset(&out, &p)?,
        None => write_dataset_to(&out, std::io::stdout().lock())?,
    }
    Ok(())
}

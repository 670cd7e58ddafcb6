//! JSONL datasets, annotation records, task definitions and gold mixing.
//!
//! Every file starts with a header line `{"schema":"<name>/v1"}` followed by
//! one JSON record per line. Readers skip blank lines and collect malformed
//! lines, with their 1-based line numbers, instead of failing.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::derive_seed;
use crate::lifting::{
    generate_synthetic_pose, project, simulate_fbi_probabilities, FbiProbabilities, PredictorNoise, ScaledOrthoCamera,
    SynthConfig,
};
use crate::skeleton::{
    convert_pose_to_fbi, FbiMatrix, FbiStatus, Pose2D, Pose3D, SkeletonTopology, NUM_FBI_BONES,
};

pub const SCHEMA_VERSION: &str = "v1";

#[derive(Debug, thiserror::Error)]
pub enum DataIoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("I/O error: {0}")]
    Stream(#[from] std::io::Error),
    #[error("first line is not a schema header: {0}")]
    MissingHeader(String),
    #[error("expected schema {expected:?}, found {found:?}")]
    SchemaMismatch { expected: String, found: String },
    #[error("unsupported schema version {0:?}")]
    UnsupportedVersion(String),
    #[error("record {index} is invalid: {message}")]
    InvalidRecord { index: usize, message: String },
    #[error("serialization failed: {0}")]
    Serialize(String),
    #[error("CSV import failed: {0}")]
    Csv(String),
    #[error("input is empty")]
    EmptyInput,
    #[error("gold fraction {0} is outside [0, 1]")]
    InvalidFraction(f64),
    #[error("gold pool has {available} tasks but {needed} are required")]
    GoldPoolTooSmall { needed: usize, available: usize },
}

/// The four record schemas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DatasetKind {
    Pose2d,
    Pose3d,
    Fbi,
    Synthetic,
}

impl DatasetKind {
    pub fn schema_name(self) -> &'static str {
        match self {
            Self::Pose2d => "pose2d",
            Self::Pose3d => "pose3d",
            Self::Fbi => "fbi-annotation",
            Self::Synthetic => "synthetic-sample",
        }
    }

    pub fn header(self) -> String {
        format!("{}/{}", self.schema_name(), SCHEMA_VERSION)
    }
}

/// A JSONL-serializable record type.
pub trait Record: Serialize + DeserializeOwned {
    const KIND: DatasetKind;
    fn validate(&self) -> Result<(), String>;
}

fn pose_problem<T: std::fmt::Display>(r: Result<(), Vec<T>>) -> Result<(), String> {
    r.map_err(|v| v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pose2dRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
    pub joints: Pose2D,
}

impl Record for Pose2dRecord {
    const KIND: DatasetKind = DatasetKind::Pose2d;
    fn validate(&self) -> Result<(), String> {
        pose_problem(self.joints.validate())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pose3dRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
    /// Camera-frame millimeters.
    pub joints: Pose3D,
}

impl Record for Pose3dRecord {
    const KIND: DatasetKind = DatasetKind::Pose3d;
    fn validate(&self) -> Result<(), String> {
        pose_problem(self.joints.validate())
    }
}

/// One annotator's labels for one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub task_id: String,
    pub image_ref: String,
    pub annotator_id: String,
    pub labels: FbiMatrix,
    pub duration_ms: u64,
    pub is_gold: bool,
    /// Clear-status gold bones the annotator labeled differently.
    pub gold_conflicts: Vec<usize>,
    /// UTC milliseconds since the Unix epoch.
    pub created_at: u64,
}

impl Record for AnnotationRecord {
    const KIND: DatasetKind = DatasetKind::Fbi;
    fn validate(&self) -> Result<(), String> {
        if !self.is_gold && !self.gold_conflicts.is_empty() {
            return Err("gold_conflicts on a non-gold record".into());
        }
        if self.gold_conflicts.iter().any(|&b| b >= NUM_FBI_BONES) {
            return Err("gold conflict bone index out of range".into());
        }
        if self.gold_conflicts.windows(2).any(|w| w[0] >= w[1]) {
            return Err("gold_conflicts must be strictly increasing".into());
        }
        Ok(())
    }
}

/// A generated pose with its projection, labels and simulated predictor output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSample {
    pub id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
    pub pose3d: Pose3D,
    pub pose2d: Pose2D,
    pub camera: ScaledOrthoCamera,
    pub alpha: f64,
    pub labels: FbiMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<FbiProbabilities>,
}

impl Record for SyntheticSample {
    const KIND: DatasetKind = DatasetKind::Synthetic;
    fn validate(&self) -> Result<(), String> {
        pose_problem(self.pose3d.validate())?;
        pose_problem(self.pose2d.validate())?;
        if !(0.0..=90.0).contains(&self.alpha) {
            return Err(format!("alpha {} outside [0, 90]", self.alpha));
        }
        if !(self.camera.scale > 0.0) {
            return Err("camera scale must be positive".into());
        }
        if let Some(p) = &self.probs {
            p.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineError {
    /// 1-based, counting the header.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadReport<T> {
    pub records: Vec<T>,
    pub errors: Vec<LineError>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    schema: String,
}

fn check_header(line: &str, kind: DatasetKind) -> Result<(), DataIoError> {
    let header: Header =
        serde_json::from_str(line).map_err(|_| DataIoError::MissingHeader(line.chars().take(80).collect()))?;
    let (name, version) = header.schema.split_once('/').unwrap_or((header.schema.as_str(), ""));
    if name != kind.schema_name() {
        return Err(DataIoError::SchemaMismatch { expected: kind.header(), found: header.schema });
    }
    if version != SCHEMA_VERSION {
        return Err(DataIoError::UnsupportedVersion(header.schema));
    }
    Ok(())
}

/// Parses a JSONL stream. An empty stream yields no records.
pub fn read_dataset_from<T: Record>(reader: impl Read) -> Result<ReadReport<T>, DataIoError> {
    let mut lines = BufReader::new(reader).lines().enumerate();
    let mut report = ReadReport { records: Vec::new(), errors: Vec::new() };
    let header = loop {
        match lines.next() {
            None => return Ok(report),
            Some((_, line)) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
        }
    };
    check_header(&header, T::KIND)?;
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<T>(&line)
            .map_err(|e| e.to_string())
            .and_then(|r| r.validate().map(|_| r));
        match parsed {
            Ok(r) => report.records.push(r),
            Err(message) => report.errors.push(LineError { line: i + 1, message }),
        }
    }
    Ok(report)
}

pub fn read_dataset<T: Record>(path: &Path) -> Result<ReadReport<T>, DataIoError> {
    let file = File::open(path).map_err(|source| DataIoError::Io { path: path.to_path_buf(), source })?;
    read_dataset_from(file)
}

/// Validates every record, then writes the header and one line per record.
pub fn write_dataset_to<T: Record>(records: &[T], writer: impl Write) -> Result<(), DataIoError> {
    for (index, r) in records.iter().enumerate() {
        r.validate().map_err(|message| DataIoError::InvalidRecord { index, message })?;
    }
    let mut w = BufWriter::new(writer);
    let header = Header { schema: T::KIND.header() };
    serde_json::to_writer(&mut w, &header).map_err(|e| DataIoError::Serialize(e.to_string()))?;
    w.write_all(b"\n")?;
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| DataIoError::Serialize(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dataset<T: Record>(records: &[T], path: &Path) -> Result<(), DataIoError> {
    let file = File::create(path).map_err(|source| DataIoError::Io { path: path.to_path_buf(), source })?;
    write_dataset_to(records, file)
}

/// Reads 2D poses from CSV with an `id` column, optional `image_ref`, and
/// `<joint>_x`, `<joint>_y` columns for every joint name in the topology.
/// Rows that fail to parse are reported with their line number.
pub fn import_pose2d_csv(reader: impl Read) -> Result<ReadReport<Pose2dRecord>, DataIoError> {
    let topo = SkeletonTopology::mpii();
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers().map_err(|e| DataIoError::Csv(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let id_col = col("id").ok_or_else(|| DataIoError::Csv("missing `id` column".into()))?;
    let image_col = col("image_ref");
    let mut joint_cols = Vec::new();
    for name in topo.joint_names() {
        let x = col(&format!("{name}_x")).ok_or_else(|| DataIoError::Csv(format!("missing `{name}_x` column")))?;
        let y = col(&format!("{name}_y")).ok_or_else(|| DataIoError::Csv(format!("missing `{name}_y` column")))?;
        joint_cols.push((x, y));
    }
    let mut report = ReadReport { records: Vec::new(), errors: Vec::new() };
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                report.errors.push(LineError { line, message: e.to_string() });
                continue;
            }
        };
        let field = |c: usize| row.get(c).unwrap_or("").trim();
        let parse = |c: usize| field(c).parse::<f64>().map_err(|e| format!("column {}: {e}", headers.get(c).unwrap_or("?")));
        let joints: Result<Vec<[f64; 2]>, String> =
            joint_cols.iter().map(|&(x, y)| Ok([parse(x)?, parse(y)?])).collect();
        let record = joints.and_then(|j| {
            let r = Pose2dRecord {
                id: field(id_col).to_string(),
                image_ref: image_col.map(field).filter(|s| !s.is_empty()).map(String::from),
                joints: Pose2D(j.try_into().expect("one entry per joint")),
            };
            r.validate().map(|_| r)
        });
        match record {
            Ok(r) => report.records.push(r),
            Err(message) => report.errors.push(LineError { line, message }),
        }
    }
    Ok(report)
}

/// Fraction of bone labels equal to Uncertain.
pub fn uncertain_fraction<'a>(labels: impl IntoIterator<Item = &'a FbiMatrix>) -> Result<f64, DataIoError> {
    let (mut uncertain, mut total) = (0usize, 0usize);
    for m in labels {
        uncertain += m.count(FbiStatus::Uncertain);
        total += NUM_FBI_BONES;
    }
    if total == 0 {
        Err(DataIoError::EmptyInput)
    } else {
        Ok(uncertain as f64 / total as f64)
    }
}

/// An annotation task. The gold answer stays server-side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskDefinition {
    pub task_id: String,
    pub image_ref: String,
    pub pose2d: Pose2D,
    pub is_gold: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_fbi: Option<FbiMatrix>,
}

/// The part of a task a client may see.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientTask {
    pub task_id: String,
    pub image_ref: String,
    pub pose2d: Pose2D,
}

/// Opaque identifier derived from the source record, so gold and regular
/// tasks look alike.
pub fn task_id_for(source: &str) -> String {
    let digest = Sha256::digest(source.as_bytes());
    digest.iter().take(12).map(|b| format!("{b:02x}")).collect()
}

impl TaskDefinition {
    pub fn regular(source_id: &str, image_ref: Option<&str>, pose2d: Pose2D) -> Self {
        let task_id = task_id_for(&format!("task:{source_id}"));
        let image_ref = image_ref.map(String::from).unwrap_or_else(|| format!("render:{task_id}"));
        Self { task_id, image_ref, pose2d, is_gold: false, gold_fbi: None }
    }

    pub fn gold(source_id: &str, image_ref: Option<&str>, pose2d: Pose2D, gold_fbi: FbiMatrix) -> Self {
        Self { is_gold: true, gold_fbi: Some(gold_fbi), ..Self::regular(source_id, image_ref, pose2d) }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.is_gold != self.gold_fbi.is_some() {
            return Err(format!("task {}: gold_fbi must be present exactly when is_gold", self.task_id));
        }
        pose_problem(self.pose2d.validate())
    }

    pub fn client_view(&self) -> ClientTask {
        ClientTask { task_id: self.task_id.clone(), image_ref: self.image_ref.clone(), pose2d: self.pose2d }
    }
}

/// Number of gold tasks mixed into `n_regular` regular ones so that gold
/// makes up `fraction` of the stream (rounded to the nearest task).
pub fn gold_count(n_regular: usize, fraction: f64) -> usize {
    if fraction <= 0.0 {
        0
    } else {
        (fraction * n_regular as f64 / (1.0 - fraction)).round() as usize
    }
}

/// Seeded shuffle of the regular tasks mixed with gold tasks drawn without
/// replacement. A fraction of 1 yields the whole gold pool and no regular
/// tasks.
pub fn mix_gold(
    tasks: &[TaskDefinition],
    gold_tasks: &[TaskDefinition],
    gold_fraction: f64,
    seed: u64,
) -> Result<Vec<TaskDefinition>, DataIoError> {
    if !(0.0..=1.0).contains(&gold_fraction) {
        return Err(DataIoError::InvalidFraction(gold_fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, 0x601d]));
    let (mut stream, n_gold) = if gold_fraction == 1.0 {
        (Vec::new(), gold_tasks.len())
    } else {
        (tasks.to_vec(), gold_count(tasks.len(), gold_fraction))
    };
    if gold_fraction > 0.0 && (gold_tasks.is_empty() || n_gold > gold_tasks.len()) {
        return Err(DataIoError::GoldPoolTooSmall { needed: n_gold.max(1), available: gold_tasks.len() });
    }
    let mut pool: Vec<&TaskDefinition> = gold_tasks.iter().collect();
    let (chosen, _) = pool.partial_shuffle(&mut rng, n_gold);
    stream.extend(chosen.iter().map(|t| (*t).clone()));
    stream.shuffle(&mut rng);
    Ok(stream)
}

/// Parameters of a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthDatasetConfig {
    pub count: usize,
    pub seed: u64,
    pub alpha: f64,
    pub camera: ScaledOrthoCamera,
    pub pose: SynthConfig,
    /// Simulated predictor noise; `None` leaves `probs` empty.
    pub noise: Option<PredictorNoise>,
}

impl Default for SynthDatasetConfig {
    fn default() -> Self {
        Self {
            count: 1000,
            seed: 0,
            alpha: 35.0,
            camera: ScaledOrthoCamera { scale: 0.2, cx: 500.0, cy: 500.0 },
            pose: SynthConfig::default(),
            noise: Some(PredictorNoise::default()),
        }
    }
}

/// Generates `config.count` samples; sample `i` depends only on
/// `(config.seed, i)`.
pub fn synthesize_dataset(config: &SynthDatasetConfig) -> Vec<SyntheticSample> {
    let topo = SkeletonTopology::mpii();
    (0..config.count as u64)
        .map(|i| {
            let seed = derive_seed(&[config.seed, i]);
            let pose3d = generate_synthetic_pose(seed, &config.pose);
            let labels = convert_pose_to_fbi(&pose3d, config.alpha, topo).expect("alpha validated by caller").labels;
            let probs = config.noise.map(|n| simulate_fbi_probabilities(&pose3d, config.alpha, &n, derive_seed(&[seed, 1])));
            SyntheticSample {
                id: i,
                action: None,
                pose2d: project(&pose3d, &config.camera),
                pose3d,
                camera: config.camera,
                alpha: config.alpha,
                labels,
                probs,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pose3d_records(n: usize) -> Vec<Pose3dRecord> {
        (0..n as u64)
            .map(|i| Pose3dRecord {
                id: format!("p{i}"),
                action: (i % 2 == 0).then(|| "walk".to_string()),
                joints: generate_synthetic_pose(i, &SynthConfig::default()),
            })
            .collect()
    }

    #[test]
    fn empty_stream_is_ok() {
        let r: ReadReport<Pose3dRecord> = read_dataset_from(&b""[..]).unwrap();
        assert!(r.records.is_empty() && r.errors.is_empty());
    }

    #[test]
    fn round_trip_and_deterministic_bytes() {
        let records = pose3d_records(20);
        let mut a = Vec::new();
        write_dataset_to(&records, &mut a).unwrap();
        let mut b = Vec::new();
        write_dataset_to(&records, &mut b).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with(b"{\"schema\":\"pose3d/v1\"}\n"));
        let back: ReadReport<Pose3dRecord> = read_dataset_from(&a[..]).unwrap();
        assert_eq!(back.records, records);
        assert!(back.errors.is_empty());
    }

    #[test]
    fn corrupt_line_is_reported() {
        let records = pose3d_records(100);
        let mut buf = Vec::new();
        write_dataset_to(&records, &mut buf).unwrap();
        let mut lines: Vec<String> = String::from_utf8(buf).unwrap().lines().map(String::from).collect();
        lines[42] = lines[42].replacen("[", "{", 1);
        let text = lines.join("\n");
        let back: ReadReport<Pose3dRecord> = read_dataset_from(text.as_bytes()).unwrap();
        assert_eq!(back.records.len(), 99);
        assert_eq!(back.errors.len(), 1);
        assert_eq!(back.errors[0].line, 43);
    }

    #[test]
    fn header_errors() {
        let wrong_kind = b"{\"schema\":\"pose2d/v1\"}\n";
        assert!(matches!(
            read_dataset_from::<Pose3dRecord>(&wrong_kind[..]),
            Err(DataIoError::SchemaMismatch { .. })
        ));
        let wrong_version = b"{\"schema\":\"pose3d/v2\"}\n";
        assert!(matches!(
            read_dataset_from::<Pose3dRecord>(&wrong_version[..]),
            Err(DataIoError::UnsupportedVersion(_))
        ));
        assert!(matches!(read_dataset_from::<Pose3dRecord>(&b"[1,2]\n"[..]), Err(DataIoError::MissingHeader(_))));
    }

    #[test]
    fn non_finite_records_are_rejected() {
        let mut records = pose3d_records(1);
        records[0].joints.0[4][2] = f64::INFINITY;
        assert!(matches!(write_dataset_to(&records, Vec::new()), Err(DataIoError::InvalidRecord { index: 0, .. })));
        let line = r#"{"id":"x","joints":[[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0]]}"#;
        let text = format!("{{\"schema\":\"pose3d/v1\"}}\n{line}\n");
        let r: ReadReport<Pose3dRecord> = read_dataset_from(text.as_bytes()).unwrap();
        assert_eq!(r.errors.len(), 1);
    }

    #[test]
    fn annotation_invariants() {
        let mut rec = AnnotationRecord {
            task_id: "t".into(),
            image_ref: "img".into(),
            annotator_id: "a".into(),
            labels: FbiMatrix::filled(FbiStatus::Forward),
            duration_ms: 1200,
            is_gold: false,
            gold_conflicts: vec![3],
            created_at: 0,
        };
        assert!(rec.validate().is_err());
        rec.is_gold = true;
        assert!(rec.validate().is_ok());
        rec.gold_conflicts = vec![3, 3];
        assert!(rec.validate().is_err());
        let json = serde_json::to_string(&rec).unwrap();
        assert!(json.contains("\"labels\":[0,0,0,0,0,0,0,0,0,0,0,0,0,0]"));
    }

    #[test]
    fn csv_import() {
        let topo = SkeletonTopology::mpii();
        let mut header = vec!["id".to_string(), "image_ref".to_string()];
        for n in topo.joint_names() {
            header.push(format!("{n}_x"));
            header.push(format!("{n}_y"));
        }
        let row = |id: &str, v: &str| {
            let mut r = vec![id.to_string(), String::new()];
            r.extend((0..32).map(|k| if k == 5 { v.to_string() } else { k.to_string() }));
            r.join(",")
        };
        let text = format!("{}\n{}\n{}\n", header.join(","), row("a", "1.5"), row("b", "oops"));
        let r = import_pose2d_csv(text.as_bytes()).unwrap();
        assert_eq!(r.records.len(), 1);
        assert_eq!(r.records[0].joints.0[2], [4.0, 1.5]);
        assert_eq!(r.records[0].image_ref, None);
        assert_eq!(r.errors[0].line, 3);
        assert!(import_pose2d_csv(&b"id,foo\n"[..]).is_err());
    }

    fn tasks(n: usize, gold: bool) -> Vec<TaskDefinition> {
        (0..n)
            .map(|i| {
                let pose = project(&generate_synthetic_pose(i as u64, &SynthConfig::default()), &ScaledOrthoCamera::identity());
                if gold {
                    TaskDefinition::gold(&format!("g{i}"), None, pose, FbiMatrix::filled(FbiStatus::Backward))
                } else {
                    TaskDefinition::regular(&format!("r{i}"), None, pose)
                }
            })
            .collect()
    }

    #[test]
    fn gold_mixing() {
        let (reg, gold) = (tasks(900, false), tasks(200, true));
        let mixed = mix_gold(&reg, &gold, 0.1, 3).unwrap();
        let n_gold = mixed.iter().filter(|t| t.is_gold).count();
        assert!((n_gold as i64 - 100).abs() <= 1);
        assert_eq!(mixed.len(), 900 + n_gold);
        assert_eq!(mixed, mix_gold(&reg, &gold, 0.1, 3).unwrap());
        assert_ne!(mixed, mix_gold(&reg, &gold, 0.1, 4).unwrap());
        let mut ids: Vec<_> = mixed.iter().map(|t| t.task_id.clone()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), mixed.len());

        assert!(mix_gold(&reg, &gold, 0.0, 1).unwrap().iter().all(|t| !t.is_gold));
        let all = mix_gold(&reg, &gold, 1.0, 1).unwrap();
        assert!(all.iter().all(|t| t.is_gold) && all.len() == 200);
        assert!(matches!(mix_gold(&reg, &[], 0.1, 1), Err(DataIoError::GoldPoolTooSmall { .. })));
        assert!(matches!(mix_gold(&reg, &gold, 1.5, 1), Err(DataIoError::InvalidFraction(_))));
    }

    #[test]
    fn client_view_has_no_gold() {
        let t = &tasks(1, true)[0];
        let json = serde_json::to_string(&t.client_view()).unwrap();
        assert!(!json.contains("gold"));
        assert!(t.validate().is_ok());
        let broken = TaskDefinition { gold_fbi: None, ..t.clone() };
        assert!(broken.validate().is_err());
    }

    #[test]
    fn uncertain_fraction_counts() {
        use FbiStatus::*;
        assert!(uncertain_fraction(&[]).is_err());
        assert_eq!(uncertain_fraction(&[FbiMatrix::filled(Uncertain)]).unwrap(), 1.0);
        assert_eq!(uncertain_fraction(&[FbiMatrix::filled(Forward)]).unwrap(), 0.0);
        let mut m = FbiMatrix::filled(Backward);
        m.0[0] = Uncertain;
        m.0[9] = Uncertain;
        let v = uncertain_fraction(&[m, FbiMatrix::filled(Uncertain)]).unwrap();
        assert_eq!(v, 16.0 / 28.0);
    }

    #[test]
    fn synthesized_samples_are_consistent() {
        let config = SynthDatasetConfig { count: 50, ..Default::default() };
        let samples = synthesize_dataset(&config);
        assert_eq!(samples, synthesize_dataset(&config));
        for s in &samples {
            s.validate().unwrap();
            assert_eq!(s.pose2d, project(&s.pose3d, &s.camera));
        }
        let bigger = synthesize_dataset(&SynthDatasetConfig { count: 60, ..config });
        assert_eq!(&bigger[..50], &samples[..]);
    }
}

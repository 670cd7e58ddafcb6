//! Annotation state: task dispensing, label intake, gold feedback and
//! per-annotator statistics, persisted as an append-only JSONL log.
//!
//! Every state change goes through [`AnnotationStore::submit`], which
//! appends exactly one [`AnnotationRecord`]. Replaying the log through
//! [`AnnotationStore::replay`] rebuilds submissions and statistics.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use fbipose_core::data_io::{read_dataset, AnnotationRecord, ClientTask, DataIoError, DatasetKind, TaskDefinition};
use fbipose_core::skeleton::{FbiMatrix, FbiStatus, SkeletonTopology, NUM_FBI_BONES};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HubError {
    #[error("unknown task {0}")]
    UnknownTask(String),
    #[error("unknown annotator {0}")]
    UnknownAnnotator(String),
    #[error("task {task_id} was not served to annotator {annotator}")]
    NotServed { annotator: String, task_id: String },
    #[error("task {task_id} already submitted by annotator {annotator}")]
    Duplicate { annotator: String, task_id: String },
    #[error("expected {NUM_FBI_BONES} labels, got {0}")]
    WrongLabelCount(usize),
    #[error("invalid label {0}, expected 0, 1 or 2")]
    InvalidLabel(u8),
    #[error("annotator id must be non-empty")]
    EmptyAnnotator,
    #[error("invalid task pool: {0}")]
    InvalidPool(String),
    #[error("annotation log {path}: {message}")]
    Log { path: PathBuf, message: String },
    #[error(transparent)]
    DataIo(#[from] DataIoError),
}

/// Gold-monitoring statistics for one annotator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorStats {
    pub annotator_id: String,
    pub tasks_completed: u64,
    pub gold_seen: u64,
    pub gold_correct_bones: u64,
    pub gold_total_clear_bones: u64,
    /// `gold_correct_bones / gold_total_clear_bones`; null before any clear gold bone.
    pub accuracy: Option<f64>,
    /// Null before the first submission.
    pub mean_duration_ms: Option<f64>,
    #[serde(skip)]
    total_duration_ms: u128,
}

impl AnnotatorStats {
    pub fn new(annotator_id: &str) -> Self {
        Self {
            annotator_id: annotator_id.to_string(),
            tasks_completed: 0,
            gold_seen: 0,
            gold_correct_bones: 0,
            gold_total_clear_bones: 0,
            accuracy: None,
            mean_duration_ms: None,
            total_duration_ms: 0,
        }
    }

    /// Folds one submission in. `gold` is the gold answer when the task is gold.
    pub fn apply(&mut self, record: &AnnotationRecord, gold: Option<&FbiMatrix>) {
        self.tasks_completed += 1;
        self.total_duration_ms += u128::from(record.duration_ms);
        self.mean_duration_ms = Some(self.total_duration_ms as f64 / self.tasks_completed as f64);
        if let Some(gold) = gold {
            self.gold_seen += 1;
            let clear = gold.0.iter().filter(|s| s.is_clear()).count() as u64;
            self.gold_total_clear_bones += clear;
            self.gold_correct_bones += clear - record.gold_conflicts.len() as u64;
        }
        if self.gold_total_clear_bones > 0 {
            self.accuracy = Some(self.gold_correct_bones as f64 / self.gold_total_clear_bones as f64);
        }
    }

    /// Recomputes statistics from scratch, the replay oracle for [`Self::apply`].
    pub fn from_records<'a>(
        annotator_id: &str,
        records: impl IntoIterator<Item = &'a AnnotationRecord>,
        gold_of: impl Fn(&str) -> Option<FbiMatrix>,
    ) -> Self {
        let mut stats = Self::new(annotator_id);
        for r in records.into_iter().filter(|r| r.annotator_id == annotator_id) {
            let gold = if r.is_gold { gold_of(&r.task_id) } else { None };
            stats.apply(r, gold.as_ref());
        }
        stats
    }
}

/// Gold bones the annotator got wrong, with the correct label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoneFeedback {
    pub bone: usize,
    pub correct: FbiStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmitResponse {
    pub accepted: bool,
    /// Present only for gold tasks; empty when the labels agree.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feedback: Option<Vec<BoneFeedback>>,
}

/// A task as sent to an annotator, with the bone order to label in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServedTask {
    #[serde(flatten)]
    pub task: ClientTask,
    pub topology_version: String,
    /// FBI bone names in label order.
    pub bones: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum NextTask {
    Task(ServedTask),
    /// Every task in the pool has been served to this annotator.
    Done,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportFilter {
    pub annotator: Option<String>,
    pub is_gold: Option<bool>,
}

impl ExportFilter {
    pub fn matches(&self, r: &AnnotationRecord) -> bool {
        self.annotator.as_ref().is_none_or(|a| *a == r.annotator_id) && self.is_gold.is_none_or(|g| g == r.is_gold)
    }
}

/// Stable export order: `(created_at, task_id)`, then annotator.
pub fn export_sorted<'a>(records: impl IntoIterator<Item = &'a AnnotationRecord>, filter: &ExportFilter) -> Vec<AnnotationRecord> {
    let mut out: Vec<AnnotationRecord> = records.into_iter().filter(|r| filter.matches(r)).cloned().collect();
    out.sort_by(|a, b| {
        (a.created_at, &a.task_id, &a.annotator_id).cmp(&(b.created_at, &b.task_id, &b.annotator_id))
    });
    out
}

#[derive(Debug, Default)]
struct Session {
    /// Position in the stream before which every task has been served.
    cursor: usize,
    served: HashSet<usize>,
    submitted: HashSet<usize>,
}

struct LogWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl LogWriter {
    fn open(path: &Path, fresh: bool) -> Result<Self, HubError> {
        let err = |e: std::io::Error| HubError::Log { path: path.to_path_buf(), message: e.to_string() };
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(err)?;
        let mut w = Self { path: path.to_path_buf(), out: BufWriter::new(file) };
        if fresh {
            let header = serde_json::json!({ "schema": DatasetKind::Fbi.header() });
            w.write_line(&header.to_string())?;
        }
        Ok(w)
    }

    fn write_line(&mut self, line: &str) -> Result<(), HubError> {
        let err = |e: std::io::Error| HubError::Log { path: self.path.clone(), message: e.to_string() };
        self.out.write_all(line.as_bytes()).map_err(err)?;
        self.out.write_all(b"\n").map_err(err)?;
        self.out.flush().map_err(err)
    }

    fn append(&mut self, record: &AnnotationRecord) -> Result<(), HubError> {
        let line = serde_json::to_string(record).map_err(|e| HubError::Log { path: self.path.clone(), message: e.to_string() })?;
        self.write_line(&line)
    }
}

pub struct AnnotationStore {
    stream: Vec<TaskDefinition>,
    index: HashMap<String, usize>,
    sessions: HashMap<String, Session>,
    stats: BTreeMap<String, AnnotatorStats>,
    records: Vec<AnnotationRecord>,
    bones: Vec<String>,
    topology_version: String,
    log: Option<LogWriter>,
}

impl AnnotationStore {
    /// In-memory store over an already mixed task stream.
    pub fn new(stream: Vec<TaskDefinition>) -> Result<Self, HubError> {
        let mut index = HashMap::with_capacity(stream.len());
        for (i, t) in stream.iter().enumerate() {
            t.validate().map_err(HubError::InvalidPool)?;
            if index.insert(t.task_id.clone(), i).is_some() {
                return Err(HubError::InvalidPool(format!("duplicate task id {}", t.task_id)));
            }
        }
        let topo = SkeletonTopology::mpii();
        let doc = topo.to_document();
        Ok(Self {
            stream,
            index,
            sessions: HashMap::new(),
            stats: BTreeMap::new(),
            records: Vec::new(),
            bones: doc.fbi_bones,
            topology_version: doc.version,
            log: None,
        })
    }

    /// Rebuilds state from `records`, then keeps appending to `log` if given.
    pub fn replay(stream: Vec<TaskDefinition>, records: Vec<AnnotationRecord>) -> Result<Self, HubError> {
        let mut store = Self::new(stream)?;
        for r in records {
            let &i = store.index.get(&r.task_id).ok_or_else(|| HubError::UnknownTask(r.task_id.clone()))?;
            let session = store.sessions.entry(r.annotator_id.clone()).or_default();
            if !session.submitted.insert(i) {
                return Err(HubError::Duplicate { annotator: r.annotator_id.clone(), task_id: r.task_id.clone() });
            }
            session.served.insert(i);
            let gold = store.stream[i].gold_fbi;
            store.stats.entry(r.annotator_id.clone()).or_insert_with(|| AnnotatorStats::new(&r.annotator_id)).apply(&r, gold.as_ref());
            store.records.push(r);
        }
        Ok(store)
    }

    /// Opens (or creates) the log at `path`, replays it, and appends new
    /// submissions to it.
    pub fn open_with_log(stream: Vec<TaskDefinition>, path: &Path) -> Result<Self, HubError> {
        let exists = path.exists() && std::fs::metadata(path).map(|m| m.len() > 0).unwrap_or(false);
        let records = if exists {
            let report = read_dataset::<AnnotationRecord>(path)?;
            if let Some(e) = report.errors.first() {
                return Err(HubError::Log { path: path.to_path_buf(), message: format!("line {}: {}", e.line, e.message) });
            }
            report.records
        } else {
            Vec::new()
        };
        let mut store = Self::replay(stream, records)?;
        store.log = Some(LogWriter::open(path, !exists)?);
        Ok(store)
    }

    pub fn task_count(&self) -> usize {
        self.stream.len()
    }

    pub fn next_task(&mut self, annotator: &str) -> Result<NextTask, HubError> {
        if annotator.is_empty() {
            return Err(HubError::EmptyAnnotator);
        }
        self.stats.entry(annotator.to_string()).or_insert_with(|| AnnotatorStats::new(annotator));
        let session = self.sessions.entry(annotator.to_string()).or_default();
        while session.cursor < self.stream.len() && session.served.contains(&session.cursor) {
            session.cursor += 1;
        }
        if session.cursor == self.stream.len() {
            return Ok(NextTask::Done);
        }
        let i = session.cursor;
        session.served.insert(i);
        session.cursor += 1;
        Ok(NextTask::Task(ServedTask {
            task: self.stream[i].client_view(),
            topology_version: self.topology_version.clone(),
            bones: self.bones.clone(),
        }))
    }

    pub fn submit(
        &mut self,
        annotator: &str,
        task_id: &str,
        labels: &[u8],
        duration_ms: u64,
        created_at: u64,
    ) -> Result<SubmitResponse, HubError> {
        let &i = self.index.get(task_id).ok_or_else(|| HubError::UnknownTask(task_id.to_string()))?;
        if labels.len() != NUM_FBI_BONES {
            return Err(HubError::WrongLabelCount(labels.len()));
        }
        let mut matrix = FbiMatrix::filled(FbiStatus::Uncertain);
        for (slot, &v) in matrix.0.iter_mut().zip(labels) {
            *slot = FbiStatus::from_index(v as usize).ok_or(HubError::InvalidLabel(v))?;
        }
        let session = self
            .sessions
            .get(annotator)
            .filter(|s| s.served.contains(&i))
            .ok_or_else(|| HubError::NotServed { annotator: annotator.to_string(), task_id: task_id.to_string() })?;
        if session.submitted.contains(&i) {
            return Err(HubError::Duplicate { annotator: annotator.to_string(), task_id: task_id.to_string() });
        }

        let task = &self.stream[i];
        let feedback: Option<Vec<BoneFeedback>> = task.gold_fbi.map(|gold| {
            gold.0
                .iter()
                .zip(matrix.0.iter())
                .enumerate()
                .filter(|(_, (g, a))| g.is_clear() && g != a)
                .map(|(bone, (g, _))| BoneFeedback { bone, correct: *g })
                .collect()
        });
        let record = AnnotationRecord {
            task_id: task.task_id.clone(),
            image_ref: task.image_ref.clone(),
            annotator_id: annotator.to_string(),
            labels: matrix,
            duration_ms,
            is_gold: task.is_gold,
            gold_conflicts: feedback.iter().flatten().map(|f| f.bone).collect(),
            created_at,
        };
        // Persist first so a failed write leaves memory untouched.
        if let Some(log) = self.log.as_mut() {
            log.append(&record)?;
        }
        let gold = task.gold_fbi;
        self.sessions.get_mut(annotator).expect("checked above").submitted.insert(i);
        self.stats.entry(annotator.to_string()).or_insert_with(|| AnnotatorStats::new(annotator)).apply(&record, gold.as_ref());
        self.records.push(record);
        Ok(SubmitResponse { accepted: true, feedback })
    }

    pub fn stats(&self, annotator: &str) -> Result<AnnotatorStats, HubError> {
        self.stats.get(annotator).cloned().ok_or_else(|| HubError::UnknownAnnotator(annotator.to_string()))
    }

    pub fn all_stats(&self) -> Vec<AnnotatorStats> {
        self.stats.values().cloned().collect()
    }

    pub fn records(&self) -> &[AnnotationRecord] {
        &self.records
    }

    pub fn export(&self, filter: &ExportFilter) -> Vec<AnnotationRecord> {
        export_sorted(&self.records, filter)
    }

    /// Gold answer for a task id, for the replay oracle.
    pub fn gold_of(&self, task_id: &str) -> Option<FbiMatrix> {
        self.index.get(task_id).and_then(|&i| self.stream[i].gold_fbi)
    }
}

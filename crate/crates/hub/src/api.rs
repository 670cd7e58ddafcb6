//! HTTP/JSON interface over [`AnnotationStore`].
//!
//! A single mutex serializes every request that touches the store, so
//! per-annotator counters stay linearizable and log appends stay ordered.

use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use fbipose_core::data_io::write_dataset_to;
use fbipose_core::skeleton::SkeletonTopology;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::store::{AnnotationStore, ExportFilter, HubError};

pub type SharedStore = Arc<Mutex<AnnotationStore>>;

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

impl IntoResponse for HubError {
    fn into_response(self) -> Response {
        let status = match &self {
            HubError::UnknownTask(_) | HubError::UnknownAnnotator(_) => StatusCode::NOT_FOUND,
            HubError::NotServed { .. } | HubError::Duplicate { .. } => StatusCode::CONFLICT,
            HubError::WrongLabelCount(_) | HubError::InvalidLabel(_) | HubError::EmptyAnnotator => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            HubError::InvalidPool(_) | HubError::Log { .. } | HubError::DataIo(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(ErrorBody { error: self.to_string() })).into_response()
    }
}

#[derive(Debug, Deserialize)]
pub struct NextQuery {
    pub annotator: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SubmitBody {
    pub annotator: String,
    pub labels: Vec<u8>,
    pub duration_ms: u64,
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

fn lock(store: &SharedStore) -> std::sync::MutexGuard<'_, AnnotationStore> {
    // A panic while holding the lock cannot leave a half-applied submission:
    // the log append happens before any in-memory mutation.
    store.lock().unwrap_or_else(|p| p.into_inner())
}

async fn next_task(State(store): State<SharedStore>, Query(q): Query<NextQuery>) -> Response {
    match lock(&store).next_task(&q.annotator) {
        Ok(t) => Json(t).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn submit_labels(State(store): State<SharedStore>, Path(task_id): Path<String>, Json(body): Json<SubmitBody>) -> Response {
    let result = lock(&store).submit(&body.annotator, &task_id, &body.labels, body.duration_ms, now_ms());
    match result {
        Ok(r) => Json(r).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn annotator_stats(State(store): State<SharedStore>, Path(id): Path<String>) -> Response {
    match lock(&store).stats(&id) {
        Ok(s) => Json(s).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn export(State(store): State<SharedStore>, Query(filter): Query<ExportFilter>) -> Response {
    let records = lock(&store).export(&filter);
    let mut body = Vec::new();
    match write_dataset_to(&records, &mut body) {
        Ok(()) => ([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response(),
        Err(e) => HubError::from(e).into_response(),
    }
}

async fn topology() -> Response {
    Json(SkeletonTopology::mpii().to_document()).into_response()
}

/// The API routes, plus static files from `ui_dir` when it exists.
pub fn router(store: SharedStore, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/tasks/next", get(next_task))
        .route("/api/tasks/{task_id}/labels", post(submit_labels))
        .route("/api/annotators/{id}/stats", get(annotator_stats))
        .route("/api/export", get(export))
        .route("/api/topology", get(topology))
        .with_state(store);
    match ui_dir.filter(|d| d.is_dir()) {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

//! HTTP service for the pairwise annotation sessions.
//!
//! Videos are exposed under opaque tokens so neither the URL nor the JSON
//! reveals which model produced which side.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use editboard_core::alignment::ComparisonTask;
use editboard_core::Metric;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::align::{analyze_store, MetricTable};
use crate::store::{StoreError, VoteStore, VoteSubmission};

pub struct AppState {
    pub store: VoteStore,
    pub media_root: PathBuf,
    pub metrics: MetricTable,
    pub deltas: BTreeMap<Metric, f64>,
    tokens: BTreeMap<String, String>,
}

/// Opaque media token for a relative media path.
pub fn media_token(media: &str) -> String {
    let digest: [u8; 32] = Sha256::digest(media.as_bytes()).into();
    digest[..12].iter().map(|b| format!("{b:02x}")).collect()
}

impl AppState {
    pub fn new(store: VoteStore, media_root: PathBuf, metrics: MetricTable, deltas: BTreeMap<Metric, f64>) -> Self {
        let tokens = store
            .snapshot()
            .tasks
            .iter()
            .flat_map(|t| [&t.video_a.media, &t.video_b.media])
            .map(|m| (media_token(m), m.clone()))
            .collect();
        Self {
            store,
            media_root,
            metrics,
            deltas,
            tokens,
        }
    }
}

type Shared = Arc<AppState>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairView {
    pub comparison_id: String,
    pub dimension: Metric,
    pub dimension_label: String,
    pub instruction: String,
    pub video_a_url: String,
    pub video_b_url: String,
    /// 1-based position within the annotator's session for this dimension.
    pub position_in_session: usize,
    pub total_in_session: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionProgress {
    pub dimension: Metric,
    pub label: String,
    pub answered: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub annotator_id: String,
    pub answered: usize,
    pub total: usize,
    pub dimensions: Vec<DimensionProgress>,
}

#[derive(Debug, Serialize)]
struct ApiError {
    error: String,
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(ApiError { error: message.into() })).into_response()
}

#[derive(Debug, Deserialize)]
pub struct NextQuery {
    annotator: Option<String>,
    dimension: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct ProgressQuery {
    annotator: Option<String>,
}

fn annotator(a: Option<String>) -> Result<String, Response> {
    a.filter(|s| !s.trim().is_empty())
        .ok_or_else(|| error(StatusCode::BAD_REQUEST, "missing annotator"))
}

fn view(task: &ComparisonTask, position: usize, total: usize) -> PairView {
    PairView {
        comparison_id: task.comparison_id.clone(),
        dimension: task.dimension,
        dimension_label: task.dimension.label().into(),
        instruction: task.instruction.clone(),
        video_a_url: format!("/media/{}", media_token(&task.video_a.media)),
        video_b_url: format!("/media/{}", media_token(&task.video_b.media)),
        position_in_session: position,
        total_in_session: total,
    }
}

async fn next_pair(State(s): State<Shared>, Query(q): Query<NextQuery>) -> Response {
    let who = match annotator(q.annotator) {
        Ok(a) => a,
        Err(r) => return r,
    };
    let dimension = match q.dimension.as_deref().map(str::parse::<Metric>) {
        None => None,
        Some(Ok(m)) => Some(m),
        Some(Err(e)) => return error(StatusCode::BAD_REQUEST, e.to_string()),
    };
    let snap = s.store.snapshot();
    let session: Vec<&ComparisonTask> = snap
        .tasks
        .iter()
        .filter(|t| dimension.is_none_or(|d| t.dimension == d))
        .collect();
    let answered = session.iter().filter(|t| s.store.has_voted(&who, &t.comparison_id)).count();
    match session.iter().find(|t| !s.store.has_voted(&who, &t.comparison_id)) {
        Some(t) => Json(view(t, answered + 1, session.len())).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    }
}

async fn submit_vote(State(s): State<Shared>, Json(v): Json<VoteSubmission>) -> Response {
    match s.store.record_vote(v) {
        Ok(vote) => (StatusCode::CREATED, Json(vote)).into_response(),
        Err(e @ StoreError::UnknownComparison(_)) => error(StatusCode::NOT_FOUND, e.to_string()),
        Err(e @ StoreError::Duplicate { .. }) => error(StatusCode::CONFLICT, e.to_string()),
        Err(e @ StoreError::EmptyAnnotator) => error(StatusCode::BAD_REQUEST, e.to_string()),
        Err(e) => {
            log::error!("vote not stored: {e}");
            error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
        }
    }
}

async fn progress(State(s): State<Shared>, Query(q): Query<ProgressQuery>) -> Response {
    let who = match annotator(q.annotator) {
        Ok(a) => a,
        Err(r) => return r,
    };
    let snap = s.store.snapshot();
    let mut per: BTreeMap<Metric, (usize, usize)> = BTreeMap::new();
    for t in snap.tasks.iter() {
        let e = per.entry(t.dimension).or_default();
        e.1 += 1;
        if s.store.has_voted(&who, &t.comparison_id) {
            e.0 += 1;
        }
    }
    let dimensions: Vec<DimensionProgress> = per
        .into_iter()
        .map(|(d, (answered, total))| DimensionProgress {
            dimension: d,
            label: d.label().into(),
            answered,
            total,
        })
        .collect();
    Json(Progress {
        annotator_id: who,
        answered: dimensions.iter().map(|d| d.answered).sum(),
        total: dimensions.iter().map(|d| d.total).sum(),
        dimensions,
    })
    .into_response()
}

async fn results(State(s): State<Shared>) -> Response {
    let snap = s.store.snapshot();
    Json(analyze_store(&snap, &s.metrics, &s.deltas)).into_response()
}

fn content_type(path: &Path) -> &'static str {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("mp4") => "video/mp4",
        Some("webm") => "video/webm",
        Some("ogv") => "video/ogg",
        Some("gif") => "image/gif",
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        _ => "application/octet-stream",
    }
}

async fn media(State(s): State<Shared>, UrlPath(token): UrlPath<String>) -> Response {
    let Some(rel) = s.tokens.get(&token) else {
        return error(StatusCode::NOT_FOUND, "unknown media");
    };
    let (Ok(root), Ok(path)) = (s.media_root.canonicalize(), s.media_root.join(rel).canonicalize()) else {
        return error(StatusCode::NOT_FOUND, "media file missing");
    };
    if !path.starts_with(&root) {
        return error(StatusCode::FORBIDDEN, "outside media root");
    }
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response(),
        Err(_) => error(StatusCode::NOT_FOUND, "media file missing"),
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/pairs/next", get(next_pair))
        .route("/api/votes", post(submit_vote))
        .route("/api/progress", get(progress))
        .route("/api/results", get(results))
        .route("/media/{token}", get(media))
        .layer(tower_http::cors::CorsLayer::permissive())
        .with_state(Arc::new(state))
}

/// Binds and serves until the process is stopped.
pub async fn serve(state: AppState, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    log::info!("alignment service listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

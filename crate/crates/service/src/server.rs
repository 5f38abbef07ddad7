//! Read-mostly HTTP API over a loaded map.
//!
//! Renames are the only mutation and go through a write lock, so readers
//! always see a whole map. Frame requests are the only live computation;
//! they run on the blocking pool, at most `frame_workers` at a time.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cartograph::corpus::Corpus;
use cartograph::dpo::{select_by_topics, DpoError};
use cartograph::embedding::EmbeddingError;
use cartograph::frames::{build_report, FrameError, FramePlot, FrameReport, DEFAULT_COEFFICIENT};
use cartograph::geometry::MapModel;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

use crate::compare::CompareReport;
use crate::frames::{FrameEngine, Poles};
use crate::UsageError;

/// Frame plots kept for reuse across coefficient changes.
const PLOT_CACHE_CAPACITY: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenameEntry {
    pub cluster_id: usize,
    pub old_name: String,
    pub new_name: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

#[derive(Debug)]
pub struct Session {
    pub map: MapModel,
    pub rename_log: Vec<RenameEntry>,
}

pub struct AppState {
    session: RwLock<Session>,
    texts: Option<HashMap<String, String>>,
    frames: Option<FrameEngine>,
    compare: Option<CompareReport>,
    plots: Mutex<HashMap<(Poles, Poles), Arc<FramePlot>>>,
    workers: Semaphore,
}

impl AppState {
    pub fn new(map: MapModel, frame_workers: usize) -> Self {
        Self {
            session: RwLock::new(Session {
                map,
                rename_log: Vec::new(),
            }),
            texts: None,
            frames: None,
            compare: None,
            plots: Mutex::new(HashMap::new()),
            workers: Semaphore::new(frame_workers.max(1)),
        }
    }

    /// Attaches document texts. The corpus must hold exactly the map's ids.
    pub fn with_corpus(mut self, corpus: &Corpus) -> anyhow::Result<Self> {
        {
            let session = self.session.read().expect("session lock");
            let points = &session.map.points;
            if points.len() != corpus.len() || !points.iter().map(|p| p.id.as_str()).eq(corpus.ids()) {
                return Err(UsageError(format!(
                    "corpus {} does not match the map's documents",
                    corpus.source_path()
                ))
                .into());
            }
        }
        self.texts = Some(
            corpus
                .documents()
                .iter()
                .map(|d| (d.id.clone(), d.text.clone()))
                .collect(),
        );
        Ok(self)
    }

    pub fn with_frames(mut self, engine: FrameEngine) -> Self {
        self.frames = Some(engine);
        self
    }

    pub fn with_compare(mut self, compare: Option<CompareReport>) -> Self {
        self.compare = compare;
        self
    }

    pub fn rename_log(&self) -> Vec<RenameEntry> {
        self.session.read().expect("session lock").rename_log.clone()
    }

    fn frame_report(&self, request: &FrameRequest) -> Result<FrameReport, ApiError> {
        let engine = self.frames.as_ref().ok_or_else(no_frames)?;
        let key = (request.axis_x.clone(), request.axis_y.clone());
        let cached = self.plots.lock().expect("plot cache lock").get(&key).cloned();
        let plot = match cached {
            Some(plot) => plot.with_coefficient(request.coefficient)?,
            None => {
                let plot = engine.plot(&request.axis_x, &request.axis_y, request.coefficient)?;
                let mut plots = self.plots.lock().expect("plot cache lock");
                if plots.len() >= PLOT_CACHE_CAPACITY {
                    plots.clear();
                }
                plots.insert(key, Arc::new(plot.clone()));
                plot
            }
        };
        Ok(build_report(&plot, None, &[], &[])?)
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

impl From<FrameError> for ApiError {
    fn from(e: FrameError) -> Self {
        let status = match &e {
            FrameError::Embedding(EmbeddingError::Http { .. } | EmbeddingError::Transport(_)) => {
                StatusCode::BAD_GATEWAY
            }
            FrameError::Embedding(_) | FrameError::DimensionMismatch { .. } | FrameError::ZeroVector { .. } => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
            _ => StatusCode::BAD_REQUEST,
        };
        Self::new(status, e.to_string())
    }
}

fn no_frames() -> ApiError {
    ApiError::new(
        StatusCode::CONFLICT,
        "frame analysis is not configured; start the server with --input and --embedder-url",
    )
}

fn unknown_cluster(id: usize) -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, format!("cluster {id} does not exist"))
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("malformed body: {e}")))
}

fn json_text(body: String) -> Response {
    ([(header::CONTENT_TYPE, HeaderValue::from_static("application/json"))], body).into_response()
}

async fn get_map(State(state): State<Arc<AppState>>) -> Response {
    let body = state.session.read().expect("session lock").map.to_json();
    json_text(body)
}

#[derive(Debug, Deserialize)]
struct DocsQuery {
    limit: Option<usize>,
}

#[derive(Debug, Serialize)]
struct DocEntry {
    id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    text: Option<String>,
}

#[derive(Debug, Serialize)]
struct DocsResponse {
    cluster: usize,
    name: String,
    size: usize,
    documents: Vec<DocEntry>,
}

async fn get_cluster_docs(
    State(state): State<Arc<AppState>>,
    Path(id): Path<usize>,
    Query(query): Query<DocsQuery>,
) -> Result<Json<DocsResponse>, ApiError> {
    let session = state.session.read().expect("session lock");
    let topic = session.map.topic(id).ok_or_else(|| unknown_cluster(id))?;
    let limit = query.limit.unwrap_or(topic.top_docs.len());
    let documents = topic
        .top_docs
        .iter()
        .take(limit)
        .map(|doc| DocEntry {
            id: doc.clone(),
            text: state.texts.as_ref().and_then(|t| t.get(doc).cloned()),
        })
        .collect();
    Ok(Json(DocsResponse {
        cluster: id,
        name: topic.name.clone(),
        size: topic.size,
        documents,
    }))
}

#[derive(Debug, Deserialize)]
struct RenameRequest {
    name: String,
}

async fn rename_topic(
    State(state): State<Arc<AppState>>,
    Path(id): Path<usize>,
    body: Bytes,
) -> Result<Json<RenameEntry>, ApiError> {
    let request: RenameRequest = parse_body(&body)?;
    let name = request.name.trim();
    if name.is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "name must not be empty"));
    }
    let mut session = state.session.write().expect("session lock");
    let topic = session.map.topic_mut(id).ok_or_else(|| unknown_cluster(id))?;
    let entry = RenameEntry {
        cluster_id: id,
        old_name: std::mem::replace(&mut topic.name, name.to_string()),
        new_name: name.to_string(),
        timestamp: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    session.rename_log.push(entry.clone());
    log::info!("topic {id} renamed from {:?} to {:?}", entry.old_name, entry.new_name);
    Ok(Json(entry))
}

async fn get_renames(State(state): State<Arc<AppState>>) -> Json<Vec<RenameEntry>> {
    Json(state.rename_log())
}

fn default_coefficient() -> f64 {
    DEFAULT_COEFFICIENT
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameRequest {
    pub axis_x: Poles,
    pub axis_y: Poles,
    #[serde(default = "default_coefficient")]
    pub coefficient: f64,
}

async fn post_frames(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let request: FrameRequest = parse_body(&body)?;
    if state.frames.is_none() {
        return Err(no_frames());
    }
    let _permit = state.workers.acquire().await.expect("worker pool is never closed");
    let worker = Arc::clone(&state);
    let report = tokio::task::spawn_blocking(move || worker.frame_report(&request))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(json_text(report.to_json()))
}

#[derive(Debug, Deserialize)]
struct SelectionRequest {
    keep_topic_ids: Vec<usize>,
}

#[derive(Debug, Serialize)]
struct SelectionResponse {
    count: usize,
    ids: Vec<String>,
}

async fn post_selection(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Json<SelectionResponse>, ApiError> {
    let request: SelectionRequest = parse_body(&body)?;
    let session = state.session.read().expect("session lock");
    let ids = select_by_topics(&session.map, &request.keep_topic_ids).map_err(|e| match e {
        DpoError::UnknownTopic(id) => unknown_cluster(id),
        other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, other.to_string()),
    })?;
    Ok(Json(SelectionResponse { count: ids.len(), ids }))
}

async fn get_compare(State(state): State<Arc<AppState>>) -> Result<Json<CompareReport>, ApiError> {
    state.compare.clone().map(Json).ok_or_else(|| {
        ApiError::new(
            StatusCode::CONFLICT,
            "no comparison loaded; start the server with --compare",
        )
    })
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/map", get(get_map))
        .route("/api/clusters/{id}/docs", get(get_cluster_docs))
        .route("/api/topics/{id}/rename", post(rename_topic))
        .route("/api/renames", get(get_renames))
        .route("/api/frames", post(post_frames))
        .route("/api/dpo/selection", post(post_selection))
        .route("/api/compare", get(get_compare))
        .with_state(state)
}

/// Any origin when `origin` is `None`.
pub fn cors_layer(origin: Option<&str>) -> anyhow::Result<CorsLayer> {
    let allow = match origin {
        Some(o) => AllowOrigin::exact(
            HeaderValue::from_str(o).map_err(|_| UsageError(format!("invalid CORS origin {o:?}")))?,
        ),
        None => AllowOrigin::any(),
    };
    Ok(CorsLayer::new()
        .allow_origin(allow)
        .allow_methods(Any)
        .allow_headers(Any))
}

pub async fn serve(state: Arc<AppState>, addr: SocketAddr, cors: CorsLayer) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    log::info!("serving on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state).layer(cors))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .context("server")
}

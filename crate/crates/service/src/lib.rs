//! HTTP front end for batch invariant jobs.
//!
//! | method | path | |
//! |--------|------|-|
//! | `POST` | `/api/v1/jobs` | multipart `graph` file + optional `config` JSON; `202` with the job |
//! | `GET`  | `/api/v1/jobs/{id}` | job record |
//! | `GET`  | `/api/v1/jobs/{id}/result` | tar of the result files once `done` |
//! | `POST` | `/api/v1/convert?from=&to=[&column=]` | synchronous format conversion |
//!
//! Result archives hold exactly the files the `compute` command writes for
//! the same input and configuration.

pub mod jobs;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use glocal::io::FormatKind;
use glocal::pipeline::{self, RunConfig};
use serde::Deserialize;
use tokio::sync::mpsc;

pub use jobs::{JobRecord, JobState, JobStore, StoreError};

/// Default upload limit: 256 MiB.
pub const DEFAULT_MAX_PAYLOAD: usize = 256 << 20;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub addr: SocketAddr,
    pub data_dir: PathBuf,
    pub workers: usize,
    pub max_payload: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            addr: SocketAddr::from(([127, 0, 0, 1], 8080)),
            data_dir: PathBuf::from("glocal-data"),
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            max_payload: DEFAULT_MAX_PAYLOAD,
        }
    }
}

impl ServiceConfig {
    /// Defaults overridden by `GLOCAL_ADDR`, `GLOCAL_DATA_DIR`,
    /// `GLOCAL_WORKERS` and `GLOCAL_MAX_PAYLOAD`.
    pub fn from_env() -> Result<Self, String> {
        let mut config = ServiceConfig::default();
        if let Ok(v) = std::env::var("GLOCAL_ADDR") {
            config.addr = v.parse().map_err(|e| format!("GLOCAL_ADDR: {e}"))?;
        }
        if let Ok(v) = std::env::var("GLOCAL_DATA_DIR") {
            config.data_dir = PathBuf::from(v);
        }
        if let Ok(v) = std::env::var("GLOCAL_WORKERS") {
            config.workers = v.parse().map_err(|e| format!("GLOCAL_WORKERS: {e}"))?;
        }
        if let Ok(v) = std::env::var("GLOCAL_MAX_PAYLOAD") {
            config.max_payload = v.parse().map_err(|e| format!("GLOCAL_MAX_PAYLOAD: {e}"))?;
        }
        Ok(config)
    }
}

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<JobStore>,
    queue: mpsc::UnboundedSender<String>,
    max_payload: usize,
}

impl AppState {
    /// Open the store and start the worker pool. Must run inside a Tokio
    /// runtime.
    pub fn start(config: &ServiceConfig) -> Result<Self, StoreError> {
        let store = Arc::new(JobStore::open(&config.data_dir)?);
        let queue = jobs::spawn_workers(Arc::clone(&store), config.workers);
        Ok(AppState {
            store,
            queue,
            max_payload: config.max_payload,
        })
    }
}

pub fn router(state: AppState) -> Router {
    // Room for multipart framing and the config part on top of the graph.
    let body_limit = state.max_payload.saturating_add(1 << 16);
    Router::new()
        .route("/api/v1/health", get(|| async { "ok" }))
        .route("/api/v1/jobs", post(submit))
        .route("/api/v1/jobs/{id}", get(status))
        .route("/api/v1/jobs/{id}/result", get(result))
        .route("/api/v1/convert", post(convert))
        .layer(DefaultBodyLimit::max(body_limit))
        .with_state(state)
}

/// Handle to a service listening in the background.
pub struct RunningService {
    pub addr: SocketAddr,
    pub state: AppState,
    pub handle: tokio::task::JoinHandle<std::io::Result<()>>,
}

/// Bind and serve in a background task. Port 0 picks a free port.
pub async fn spawn(config: ServiceConfig) -> std::io::Result<RunningService> {
    let state = AppState::start(&config).map_err(std::io::Error::other)?;
    let listener = tokio::net::TcpListener::bind(config.addr).await?;
    let addr = listener.local_addr()?;
    let app = router(state.clone());
    let handle = tokio::spawn(async move { axum::serve(listener, app).await });
    Ok(RunningService { addr, state, handle })
}

/// Bind and serve until the process is stopped.
pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let running = spawn(config).await?;
    log::info!("listening on http://{}", running.addr);
    running.handle.await.map_err(std::io::Error::other)?
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    state: Option<JobState>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
            state: None,
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        log::error!("{e}");
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": self.message, "state": self.state });
        (self.status, Json(body)).into_response()
    }
}

impl From<axum::extract::multipart::MultipartError> for ApiError {
    fn from(e: axum::extract::multipart::MultipartError) -> Self {
        ApiError::new(e.status(), e.body_text())
    }
}

async fn submit(State(state): State<AppState>, mut multipart: Multipart) -> Result<Response, ApiError> {
    let mut graph: Option<Bytes> = None;
    let mut config: Option<Bytes> = None;
    while let Some(field) = multipart.next_field().await? {
        match field.name() {
            Some("graph") => graph = Some(field.bytes().await?),
            Some("config") => config = Some(field.bytes().await?),
            other => {
                return Err(ApiError::bad_request(format!(
                    "unexpected multipart field {other:?}; expected 'graph' and 'config'"
                )))
            }
        }
    }
    let graph = graph.ok_or_else(|| ApiError::bad_request("missing 'graph' part"))?;
    if graph.len() > state.max_payload {
        return Err(ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            format!("graph is {} bytes; the limit is {}", graph.len(), state.max_payload),
        ));
    }
    let config: RunConfig = match config {
        Some(bytes) => serde_json::from_slice(&bytes)
            .map_err(|e| ApiError::bad_request(format!("invalid config: {e}")))?,
        None => RunConfig::default(),
    };
    config
        .validate()
        .map_err(|e| ApiError::bad_request(format!("invalid config: {e}")))?;
    pipeline::read_graph_bytes(&graph, config.input_format)
        .map_err(|e| ApiError::bad_request(format!("invalid graph: {e}")))?;

    let record = state.store.create(&graph, config).map_err(ApiError::internal)?;
    state.queue.send(record.id.clone()).map_err(ApiError::internal)?;
    let location = format!("/api/v1/jobs/{}", record.id);
    let mut response = (StatusCode::ACCEPTED, Json(record)).into_response();
    if let Ok(v) = HeaderValue::from_str(&location) {
        response.headers_mut().insert(header::LOCATION, v);
    }
    Ok(response)
}

fn lookup(state: &AppState, id: &str) -> Result<JobRecord, ApiError> {
    state
        .store
        .get(id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown job '{id}'")))
}

async fn status(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<JobRecord>, ApiError> {
    lookup(&state, &id).map(Json)
}

async fn result(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let record = lookup(&state, &id)?;
    if record.state != JobState::Done {
        let message = match (&record.state, &record.error) {
            (JobState::Failed, Some(e)) => format!("job failed: {e}"),
            (s, _) => format!("job is {s:?}, not done").to_lowercase(),
        };
        return Err(ApiError {
            status: StatusCode::CONFLICT,
            message,
            state: Some(record.state),
        });
    }
    let dir = state.store.result_dir(&id);
    let files = record.files.clone();
    let archive = tokio::task::spawn_blocking(move || build_archive(&dir, &files))
        .await
        .map_err(ApiError::internal)?
        .map_err(ApiError::internal)?;
    let disposition = format!("attachment; filename=\"{id}.tar\"");
    Ok((
        [
            (header::CONTENT_TYPE, "application/x-tar".to_string()),
            (header::CONTENT_DISPOSITION, disposition),
        ],
        archive,
    )
        .into_response())
}

/// Uncompressed tar with fixed metadata, so equal files give equal archives.
fn build_archive(dir: &std::path::Path, files: &[String]) -> std::io::Result<Vec<u8>> {
    let mut builder = tar::Builder::new(Vec::new());
    for name in files {
        let data = std::fs::read(dir.join(name))?;
        let mut header = tar::Header::new_gnu();
        header.set_size(data.len() as u64);
        header.set_mode(0o644);
        header.set_mtime(0);
        header.set_entry_type(tar::EntryType::Regular);
        builder.append_data(&mut header, name, data.as_slice())?;
    }
    builder.into_inner()
}

#[derive(Debug, Deserialize)]
struct ConvertQuery {
    from: String,
    to: String,
    column: Option<String>,
}

async fn convert(Query(q): Query<ConvertQuery>, body: Bytes) -> Result<Response, ApiError> {
    let parse = |s: &str| s.parse::<FormatKind>().map_err(|e| ApiError::bad_request(e.to_string()));
    let (from, to) = (parse(&q.from)?, parse(&q.to)?);
    let column = q.column.as_deref().unwrap_or("value");
    let out = glocal::io::convert(&body, from, to, column)
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
    let content_type = match to {
        FormatKind::GlcvBinary => "application/octet-stream",
        FormatKind::CsvInvariants => "text/csv",
        _ => "text/plain; charset=utf-8",
    };
    Ok(([(header::CONTENT_TYPE, content_type)], out).into_response())
}

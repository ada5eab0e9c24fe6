//! HTTP/JSON front end for hybrid editing sessions.
//!
//! Every session-scoped response carries the `revision` it reflects.
//! Errors have the shape `{"revision": n | null, "error": {"code", "message"}}`.

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{FromRequest, Path, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use hybrid_core::adapter::palette_json;
use hybrid_core::blocks::{to_markup, LayoutRow};
use hybrid_core::editor::{
    EditError, EditResult, LineRange, RunFailure, SessionId, SessionStore, Snapshot, TextRange,
};
use hybrid_core::interp::{ExecutionTrace, DEFAULT_STEP_LIMIT};
use hybrid_core::Diagnostic;

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_TTL_SECS: u64 = 30 * 60;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pub port: u16,
    pub session_ttl: Duration,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            port: DEFAULT_PORT,
            session_ttl: Duration::from_secs(DEFAULT_TTL_SECS),
        }
    }
}

impl Config {
    /// Reads `HYBRID_PORT` and `HYBRID_SESSION_TTL` (seconds). Unset
    /// variables keep their defaults; unparsable ones are an error.
    pub fn from_env() -> Result<Self, String> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, String> {
        let mut cfg = Config::default();
        if let Some(p) = get("HYBRID_PORT") {
            cfg.port = p
                .trim()
                .parse()
                .map_err(|_| format!("HYBRID_PORT: `{p}` is not a port number"))?;
        }
        if let Some(t) = get("HYBRID_SESSION_TTL") {
            let secs: u64 = t
                .trim()
                .parse()
                .map_err(|_| format!("HYBRID_SESSION_TTL: `{t}` is not a number of seconds"))?;
            cfg.session_ttl = Duration::from_secs(secs);
        }
        Ok(cfg)
    }
}

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<SessionStore>,
}

impl AppState {
    pub fn new(ttl: Duration) -> Self {
        Self {
            store: Arc::new(SessionStore::new(ttl)),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    #[serde(default)]
    pub text: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DropRequest {
    pub palette_id: String,
    pub line: usize,
    #[serde(default)]
    pub expected_revision: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EditRequest {
    pub range: TextRange,
    pub replacement: String,
    #[serde(default)]
    pub expected_revision: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRequest {
    #[serde(default)]
    pub step_limit: Option<u64>,
    #[serde(default)]
    pub expected_revision: Option<u64>,
}

/// Session state as sent to clients. `blocks` is the `.blx` markup.
#[derive(Debug, Serialize)]
pub struct StateView {
    pub id: SessionId,
    pub revision: u64,
    pub text: String,
    pub blocks: String,
    pub layout: Vec<LayoutRow>,
    pub diagnostics: Vec<Diagnostic>,
    pub stale: bool,
}

impl From<Snapshot> for StateView {
    fn from(s: Snapshot) -> Self {
        StateView {
            id: s.id,
            revision: s.revision,
            blocks: to_markup(&s.blocks),
            text: s.text,
            layout: s.layout,
            diagnostics: s.diagnostics,
            stale: s.stale,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CreatedView {
    pub id: SessionId,
    pub revision: u64,
    pub state: StateView,
}

#[derive(Debug, Serialize)]
pub struct EditView {
    pub id: SessionId,
    pub revision: u64,
    pub changed_lines: LineRange,
    pub state: StateView,
}

impl EditView {
    fn new(id: SessionId, r: EditResult) -> Self {
        EditView {
            id,
            revision: r.revision,
            changed_lines: r.changed_lines,
            state: StateView {
                id,
                revision: r.revision,
                blocks: to_markup(&r.blocks),
                text: r.text,
                layout: r.layout,
                diagnostics: r.diagnostics,
                stale: r.stale,
            },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunView {
    pub id: SessionId,
    pub revision: u64,
    pub trace: Option<ExecutionTrace>,
    pub error: Option<RunFailure>,
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub revision: Option<u64>,
    pub code: String,
    pub message: String,
}

impl ApiError {
    fn invalid(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            revision: None,
            code: "INVALID_REQUEST".into(),
            message: message.into(),
        }
    }

    fn from_edit(err: EditError, store: &SessionStore, id: SessionId) -> Self {
        let status = match err {
            EditError::UnknownSession(_) => StatusCode::NOT_FOUND,
            EditError::RevisionConflict { .. } => StatusCode::CONFLICT,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        let revision = match err {
            EditError::RevisionConflict { current, .. } => Some(current),
            EditError::UnknownSession(_) => None,
            _ => store.snapshot(id).ok().map(|s| s.revision),
        };
        ApiError {
            status,
            revision,
            code: err.code().into(),
            message: err.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        #[derive(Serialize)]
        struct Body {
            revision: Option<u64>,
            error: ErrorBody,
        }
        let body = Body {
            revision: self.revision,
            error: ErrorBody {
                code: self.code,
                message: self.message,
            },
        };
        (self.status, Json(body)).into_response()
    }
}

/// JSON body extractor that reports every malformed body as a 422 in the
/// API error shape. An empty body deserializes from `{}`.
pub struct ApiJson<T>(pub T);

impl<S, T> FromRequest<S> for ApiJson<T>
where
    S: Send + Sync,
    T: DeserializeOwned,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        let bytes = Bytes::from_request(req, state)
            .await
            .map_err(|e| ApiError::invalid(e.body_text()))?;
        let slice: &[u8] = if bytes.iter().all(u8::is_ascii_whitespace) {
            b"{}"
        } else {
            &bytes
        };
        serde_json::from_slice(slice)
            .map(ApiJson)
            .map_err(|e| ApiError::invalid(e.to_string()))
    }
}

fn session_id(raw: &str) -> Result<SessionId, ApiError> {
    raw.parse().map_err(|_| ApiError {
        status: StatusCode::NOT_FOUND,
        revision: None,
        code: "UNKNOWN_SESSION".into(),
        message: format!("unknown session {raw}"),
    })
}

async fn create_session(
    State(state): State<AppState>,
    ApiJson(req): ApiJson<CreateRequest>,
) -> (StatusCode, Json<CreatedView>) {
    let snap = state.store.create(&req.text);
    tracing::debug!(id = %snap.id, "session created");
    (
        StatusCode::CREATED,
        Json(CreatedView {
            id: snap.id,
            revision: snap.revision,
            state: snap.into(),
        }),
    )
}

async fn get_session(
    State(state): State<AppState>,
    Path(raw): Path<String>,
) -> Result<Json<StateView>, ApiError> {
    let id = session_id(&raw)?;
    state
        .store
        .snapshot(id)
        .map(|s| Json(s.into()))
        .map_err(|e| ApiError::from_edit(e, &state.store, id))
}

async fn drop_block(
    State(state): State<AppState>,
    Path(raw): Path<String>,
    ApiJson(req): ApiJson<DropRequest>,
) -> Result<Json<EditView>, ApiError> {
    let id = session_id(&raw)?;
    state
        .store
        .drop_block(id, &req.palette_id, req.line, req.expected_revision)
        .map(|r| Json(EditView::new(id, r)))
        .map_err(|e| ApiError::from_edit(e, &state.store, id))
}

async fn edit_text(
    State(state): State<AppState>,
    Path(raw): Path<String>,
    ApiJson(req): ApiJson<EditRequest>,
) -> Result<Json<EditView>, ApiError> {
    let id = session_id(&raw)?;
    state
        .store
        .edit_text(id, req.range, &req.replacement, req.expected_revision)
        .map(|r| Json(EditView::new(id, r)))
        .map_err(|e| ApiError::from_edit(e, &state.store, id))
}

async fn run_session(
    State(state): State<AppState>,
    Path(raw): Path<String>,
    ApiJson(req): ApiJson<RunRequest>,
) -> Result<Json<RunView>, ApiError> {
    let id = session_id(&raw)?;
    let limit = match req.step_limit {
        Some(0) => return Err(ApiError::invalid("step_limit must be positive")),
        Some(n) => n,
        None => DEFAULT_STEP_LIMIT,
    };
    let store = state.store.clone();
    let result = tokio::task::spawn_blocking(move || store.run(id, limit, req.expected_revision))
        .await
        .map_err(|e| ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            revision: None,
            code: "INTERNAL".into(),
            message: e.to_string(),
        })?;
    let (revision, outcome) = result.map_err(|e| ApiError::from_edit(e, &state.store, id))?;
    let (trace, error) = match outcome {
        Ok(t) => (Some(t), None),
        Err(f) => (None, Some(f)),
    };
    Ok(Json(RunView {
        id,
        revision,
        trace,
        error,
    }))
}

async fn get_palette() -> impl IntoResponse {
    ([(header::CONTENT_TYPE, "application/json")], palette_json())
}

async fn not_found() -> ApiError {
    ApiError {
        status: StatusCode::NOT_FOUND,
        revision: None,
        code: "NOT_FOUND".into(),
        message: "no such endpoint".into(),
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/drop", post(drop_block))
        .route("/sessions/{id}/edit", post(edit_text))
        .route("/sessions/{id}/run", post(run_session))
        .route("/palette", get(get_palette))
        .fallback(not_found)
        .with_state(state)
}

/// Removes idle sessions every `period` until the process exits.
pub fn spawn_evictor(store: Arc<SessionStore>, period: Duration) -> tokio::task::JoinHandle<()> {
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            let n = store.evict_idle(Instant::now());
            if n > 0 {
                tracing::info!(evicted = n, "idle sessions removed");
            }
        }
    })
}

/// Binds `0.0.0.0:port` and serves until Ctrl-C.
pub async fn serve(cfg: Config) -> std::io::Result<()> {
    let state = AppState::new(cfg.session_ttl);
    let period = (cfg.session_ttl / 4).clamp(Duration::from_secs(1), Duration::from_secs(60));
    let evictor = spawn_evictor(state.store.clone(), period);
    let addr = SocketAddr::from(([0, 0, 0, 0], cfg.port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, ttl_secs = cfg.session_ttl.as_secs(), "listening");
    let result = axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await;
    evictor.abort();
    result
}

//! HTTP/JSON facade for interactive token-game sessions.
//!
//! Sessions live in memory and expire after an idle period. Every request
//! on one session holds that session's lock, so requests on the same
//! session are serialized while different sessions proceed independently.

pub mod session;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tokio::sync::Mutex;
use tower_http::services::ServeDir;
use uuid::Uuid;

use pnrd_core::corpus::load_corpus;
use pnrd_core::engine::PnrdNet;
use pnrd_core::lang::load_model;

pub use session::{Fired, ModeView, Session, SessionError, StateView};

pub const DEFAULT_TTL: Duration = Duration::from_secs(30 * 60);

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("model rejected")]
    Model(Vec<String>),
    #[error("{0}")]
    BadRequest(String),
    #[error("unknown session `{0}`")]
    NotFound(String),
    #[error(transparent)]
    Session(#[from] SessionError),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self {
            ApiError::Model(_) | ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Session(SessionError::BadIndex { .. }) => StatusCode::BAD_REQUEST,
            ApiError::Session(SessionError::Engine(_)) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Session(_) => StatusCode::CONFLICT,
        };
        let body = match &self {
            ApiError::Model(errors) => json!({ "error": self.to_string(), "errors": errors }),
            _ => json!({ "error": self.to_string() }),
        };
        (status, Json(body)).into_response()
    }
}

struct Entry {
    session: Arc<Mutex<Session>>,
    touched: Instant,
}

#[derive(Clone)]
pub struct AppState {
    sessions: Arc<std::sync::Mutex<HashMap<String, Entry>>>,
    ttl: Duration,
}

impl AppState {
    pub fn new(ttl: Duration) -> Self {
        Self { sessions: Arc::default(), ttl }
    }

    fn insert(&self, session: Session) -> String {
        let id = Uuid::new_v4().simple().to_string();
        let mut map = self.sessions.lock().expect("session table poisoned");
        self.evict(&mut map);
        map.insert(id.clone(), Entry { session: Arc::new(Mutex::new(session)), touched: Instant::now() });
        id
    }

    fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        let mut map = self.sessions.lock().expect("session table poisoned");
        self.evict(&mut map);
        let entry = map.get_mut(id).ok_or_else(|| ApiError::NotFound(id.to_owned()))?;
        entry.touched = Instant::now();
        Ok(entry.session.clone())
    }

    fn evict(&self, map: &mut HashMap<String, Entry>) {
        let ttl = self.ttl;
        map.retain(|_, e| e.touched.elapsed() < ttl);
    }

    pub fn len(&self) -> usize {
        self.sessions.lock().expect("session table poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for AppState {
    fn default() -> Self {
        Self::new(DEFAULT_TTL)
    }
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct CreateRequest {
    source: Option<String>,
    corpus_id: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct FireRequest {
    mode_index: usize,
    state_version: u64,
}

#[derive(Debug, Default, Deserialize)]
struct RandomRequest {
    seed: Option<u64>,
}

fn open(req: CreateRequest) -> Result<Session, ApiError> {
    let (net, initial) = match (req.source, req.corpus_id) {
        (Some(src), None) => {
            let model = load_model(&src).map_err(|e| ApiError::Model(e.messages()))?;
            let net = PnrdNet::new(model);
            let initial = net.initial_state();
            (net, initial)
        }
        (None, Some(id)) => {
            let entry = load_corpus(&id).map_err(|e| ApiError::BadRequest(e.to_string()))?;
            (entry.net(), entry.initial)
        }
        _ => return Err(ApiError::BadRequest("give exactly one of `source` and `corpusId`".into())),
    };
    Ok(Session::new(net, initial)?)
}

async fn create(State(app): State<AppState>, Json(req): Json<CreateRequest>) -> Result<impl IntoResponse, ApiError> {
    let session = open(req)?;
    let state = session.view();
    let id = app.insert(session);
    Ok((StatusCode::CREATED, Json(json!({ "sessionId": id, "state": state }))))
}

async fn state(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<StateView>, ApiError> {
    let s = app.get(&id)?;
    let s = s.lock().await;
    Ok(Json(s.view()))
}

async fn enabled(State(app): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let s = app.get(&id)?;
    let s = s.lock().await;
    Ok(Json(json!({ "version": s.version(), "modes": s.mode_views() })))
}

async fn fire(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<FireRequest>,
) -> Result<Json<Fired>, ApiError> {
    let s = app.get(&id)?;
    let mut s = s.lock().await;
    Ok(Json(s.fire(req.mode_index, req.state_version)?))
}

async fn undo(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<StateView>, ApiError> {
    let s = app.get(&id)?;
    let mut s = s.lock().await;
    Ok(Json(s.undo()?))
}

async fn reset(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<StateView>, ApiError> {
    let s = app.get(&id)?;
    let mut s = s.lock().await;
    Ok(Json(s.reset()?))
}

async fn random_step(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Option<Json<RandomRequest>>,
) -> Result<Json<Fired>, ApiError> {
    let seed = body.and_then(|Json(r)| r.seed).unwrap_or_else(rand::random);
    let s = app.get(&id)?;
    let mut s = s.lock().await;
    Ok(Json(s.random_step(seed)?))
}

/// The session API, without static files.
pub fn router(app: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}/state", get(state))
        .route("/sessions/{id}/enabled", get(enabled))
        .route("/sessions/{id}/fire", post(fire))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/reset", post(reset))
        .route("/sessions/{id}/random-step", post(random_step))
        .with_state(app)
}

/// The session API, falling back to files under `static_dir` when given.
pub fn app(state: AppState, static_dir: Option<PathBuf>) -> Router {
    let api = router(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

pub async fn serve(addr: SocketAddr, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, app(AppState::default(), static_dir)).await
}

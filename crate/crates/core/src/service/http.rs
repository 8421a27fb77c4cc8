use super::session::{Session, SessionError};
use crate::config::RunConfig;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as AxPath, State as AxState};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

/// In-memory sessions, each behind its own lock, with an optional snapshot
/// directory written after every mutation.
#[derive(Default)]
pub struct SessionStore {
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    snapshot_dir: Option<PathBuf>,
}

impl SessionStore {
    pub fn new(snapshot_dir: Option<PathBuf>) -> std::io::Result<Self> {
        if let Some(dir) = &snapshot_dir {
            std::fs::create_dir_all(dir)?;
        }
        Ok(SessionStore { sessions: RwLock::default(), snapshot_dir })
    }

    /// Reloads every `*.json` snapshot in the snapshot directory.
    pub fn restore(&self) -> std::io::Result<usize> {
        let Some(dir) = &self.snapshot_dir else { return Ok(0) };
        let mut n = 0;
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "json") {
                let text = std::fs::read_to_string(&path)?;
                let s: Session = serde_json::from_str(&text).map_err(std::io::Error::other)?;
                self.sessions.write().expect("store lock").insert(s.id.clone(), Arc::new(Mutex::new(s)));
                n += 1;
            }
        }
        Ok(n)
    }

    fn snapshot(&self, s: &Session) -> std::io::Result<()> {
        let Some(dir) = &self.snapshot_dir else { return Ok(()) };
        let tmp = dir.join(format!("{}.json.tmp", s.id));
        std::fs::write(&tmp, serde_json::to_vec(s).map_err(std::io::Error::other)?)?;
        std::fs::rename(tmp, dir.join(format!("{}.json", s.id)))
    }

    fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>, SessionError> {
        self.sessions.read().expect("store lock").get(id).cloned().ok_or_else(|| SessionError::NotFound(id.to_string()))
    }

    pub fn create(&self, config: RunConfig) -> Result<Value, ApiError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let s = Session::create(id.clone(), config)?;
        self.snapshot(&s)?;
        let view = s.view();
        self.sessions.write().expect("store lock").insert(id.clone(), Arc::new(Mutex::new(s)));
        Ok(json!({"id": id, "state": view}))
    }

    /// Runs `f` on the session under its lock and snapshots the result.
    pub fn with<T>(&self, id: &str, f: impl FnOnce(&mut Session) -> Result<T, SessionError>) -> Result<T, ApiError> {
        let cell = self.get(id)?;
        let mut s = cell.lock().map_err(|_| ApiError::internal("session lock poisoned"))?;
        let out = f(&mut s)?;
        self.snapshot(&s)?;
        Ok(out)
    }

    pub fn view(&self, id: &str) -> Result<Value, ApiError> {
        let cell = self.get(id)?;
        let s = cell.lock().map_err(|_| ApiError::internal("session lock poisoned"))?;
        Ok(s.view())
    }
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn internal(m: &str) -> Self {
        ApiError { status: StatusCode::INTERNAL_SERVER_ERROR, message: m.into() }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match &e {
            SessionError::NotFound(_) => StatusCode::NOT_FOUND,
            SessionError::Stale | SessionError::Done => StatusCode::CONFLICT,
            SessionError::InvalidChoice(_) | SessionError::Config(_) => StatusCode::BAD_REQUEST,
            SessionError::Engine(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError { status, message: e.to_string() }
    }
}

impl From<std::io::Error> for ApiError {
    fn from(e: std::io::Error) -> Self {
        ApiError { status: StatusCode::INTERNAL_SERVER_ERROR, message: format!("snapshot failed: {e}") }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError { status: StatusCode::BAD_REQUEST, message: e.body_text() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.message}))).into_response()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChoiceRequest {
    pub token: String,
    #[serde(default)]
    pub chosen: Vec<usize>,
}

type Store = Arc<SessionStore>;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|_| ApiError::internal("worker panicked"))?
}

async fn create(
    AxState(store): AxState<Store>,
    body: Result<Json<RunConfig>, JsonRejection>,
) -> Result<(StatusCode, Json<Value>), ApiError> {
    let Json(cfg) = body?;
    let v = blocking(move || store.create(cfg)).await?;
    Ok((StatusCode::CREATED, Json(v)))
}

async fn view(AxState(store): AxState<Store>, AxPath(id): AxPath<String>) -> Result<Json<Value>, ApiError> {
    Ok(Json(store.view(&id)?))
}

async fn choice(
    AxState(store): AxState<Store>,
    AxPath(id): AxPath<String>,
    body: Result<Json<ChoiceRequest>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let Json(req) = body?;
    let v = blocking(move || {
        store.with(&id, |s| {
            s.choose(&req.token, &req.chosen)?;
            Ok(s.view())
        })
    })
    .await?;
    Ok(Json(v))
}

async fn trajectory(AxState(store): AxState<Store>, AxPath(id): AxPath<String>) -> Result<Json<Value>, ApiError> {
    let v = store.with(&id, |s| Ok(serde_json::to_value(s.trajectory()).unwrap_or_default()))?;
    Ok(Json(v))
}

async fn finish(AxState(store): AxState<Store>, AxPath(id): AxPath<String>) -> Result<Json<Value>, ApiError> {
    let v = blocking(move || {
        store.with(&id, |s| {
            s.finish()?;
            Ok(s.view())
        })
    })
    .await?;
    Ok(Json(v))
}

/// The steering API:
/// `POST /sessions`, `GET /sessions/{id}`, `POST /sessions/{id}/choice`,
/// `GET /sessions/{id}/trajectory`, `POST /sessions/{id}/finish`.
pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(view))
        .route("/sessions/{id}/choice", post(choice))
        .route("/sessions/{id}/trajectory", get(trajectory))
        .route("/sessions/{id}/finish", post(finish))
        .with_state(store)
}

//! HTTP front end: annotation, reader events and learner state.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};

use crate::annotate::{AnnotateRequest, Annotator};
use crate::error::{AnnotateError, StoreError, TranslationError};
use crate::store::{validate_learner_id, ExposureEvent, Store};
use crate::tutor::{recall_after, Timestamp};

#[derive(Clone)]
pub struct AppState {
    pub annotator: Arc<Annotator>,
    pub store: Arc<Store>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, message: message.into() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": self.message }).to_string();
        (self.status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match &e {
            StoreError::UnknownLearner(_) => StatusCode::NOT_FOUND,
            StoreError::BadLearnerId(_) | StoreError::Malformed(_) => StatusCode::BAD_REQUEST,
            StoreError::TimestampRegression { .. } | StoreError::Tutor(_) => StatusCode::CONFLICT,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

impl From<AnnotateError> for ApiError {
    fn from(e: AnnotateError) -> Self {
        let status = match &e {
            AnnotateError::BadDensity(_) | AnnotateError::UnknownProfile(_) => StatusCode::BAD_REQUEST,
            AnnotateError::EmptyText => StatusCode::UNPROCESSABLE_ENTITY,
            AnnotateError::Translation(TranslationError::ProviderUnavailable(_)) => StatusCode::SERVICE_UNAVAILABLE,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

fn json_response(body: String) -> Response {
    (StatusCode::OK, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/v1/annotate", post(annotate))
        .route("/v1/events", post(events))
        .route("/v1/learner/{id}/state", get(learner_state))
        .with_state(state)
}

async fn health() -> Response {
    json_response(r#"{"status":"ok"}"#.to_string())
}

async fn annotate(State(app): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: AnnotateRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("malformed request: {e}")))?;
    validate_learner_id(&req.learner_id)?;
    let body = blocking(move || {
        let handle = app.store.get_or_create(&req.learner_id)?;
        let learner = handle.lock().unwrap_or_else(|e| e.into_inner()).state().clone();
        let now = req.now.unwrap_or_else(Timestamp::now);
        let doc = app.annotator.annotate(&learner, &req.text, req.density, &req.target_profile, now)?;
        Ok(serde_json::to_string(&doc).expect("documents serialize"))
    })
    .await?;
    Ok(json_response(body))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum EventBatch {
    Wrapped { events: Vec<ExposureEvent> },
    Bare(Vec<ExposureEvent>),
}

#[derive(Serialize)]
struct Accepted {
    accepted: usize,
}

async fn events(State(app): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let batch: EventBatch = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("malformed events: {e}")))?;
    let events = match batch {
        EventBatch::Wrapped { events } | EventBatch::Bare(events) => events,
    };
    for ev in &events {
        if !ev.timestamp.0.is_finite() {
            return Err(ApiError::new(StatusCode::BAD_REQUEST, "timestamp must be finite"));
        }
    }
    let accepted = blocking(move || Ok(app.store.append_batch(&events)?)).await?;
    Ok(json_response(serde_json::to_string(&Accepted { accepted }).expect("serializes")))
}

#[derive(Deserialize)]
struct StateQuery {
    now: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemorySummary {
    pub lemma: String,
    pub half_life: f64,
    pub last_exposure: Timestamp,
    pub exposure_count: u64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSummary {
    pub learner_id: String,
    pub now: Timestamp,
    pub applied_events: u64,
    pub memories: Vec<MemorySummary>,
}

async fn learner_state(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<StateQuery>,
) -> Result<Response, ApiError> {
    let now = q.now.map(Timestamp).unwrap_or_else(Timestamp::now);
    let summary = blocking(move || {
        let handle = app.store.get(&id)?;
        let store = handle.lock().unwrap_or_else(|e| e.into_inner());
        let rec = store.record();
        Ok(LearnerSummary {
            learner_id: rec.state.learner_id.clone(),
            now,
            applied_events: rec.applied_events,
            memories: rec
                .state
                .memories
                .values()
                .map(|m| MemorySummary {
                    lemma: m.lemma.to_string(),
                    half_life: m.half_life,
                    last_exposure: m.last_exposure,
                    exposure_count: m.exposure_count,
                    recall: recall_after(now.days_since(m.last_exposure).max(0.0), m.half_life),
                })
                .collect(),
        })
    })
    .await?;
    Ok(json_response(serde_json::to_string(&summary).expect("serializes")))
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
    log::info!("shutting down");
}

/// Serves on an already bound listener until SIGINT or SIGTERM, then
/// snapshots every loaded learner.
pub async fn serve(listener: tokio::net::TcpListener, app: AppState) -> std::io::Result<()> {
    let store = app.store.clone();
    if let Ok(addr) = listener.local_addr() {
        log::info!("listening on {addr}");
    }
    axum::serve(listener, router(app)).with_graceful_shutdown(shutdown_signal()).await?;
    store.flush().map_err(std::io::Error::other)?;
    Ok(())
}

pub async fn bind(addr: &str) -> std::io::Result<tokio::net::TcpListener> {
    let addr: SocketAddr =
        addr.parse().map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, format!("{addr}: {e}")))?;
    tokio::net::TcpListener::bind(addr).await
}

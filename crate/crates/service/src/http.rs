//! HTTP/JSON routes over an [`Engine`].

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use mnemex_core::{DecayConfig, EntryId};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;

use crate::engine::{Engine, InsertRequest};
use crate::error::ServiceError;

type AppState = Arc<Engine>;

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Invalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::DecayInProgress => StatusCode::CONFLICT,
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::Summarizer(_)
            | ServiceError::Log(_)
            | ServiceError::Io { .. }
            | ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status.is_server_error() {
            tracing::error!(error = %self, "request failed");
        }
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

type ApiResult<T> = Result<T, ServiceError>;

/// Malformed JSON is a 400; well-formed JSON of the wrong shape is a 422.
fn parse_body<T: DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => ServiceError::Invalid(e.to_string()),
        _ => ServiceError::BadRequest(format!("malformed JSON: {e}")),
    })
}

/// Accepts `7` or `e7`.
fn parse_id(raw: &str) -> ApiResult<EntryId> {
    raw.strip_prefix('e')
        .unwrap_or(raw)
        .parse()
        .map(EntryId)
        .map_err(|_| ServiceError::BadRequest(format!("invalid entry id {raw:?}")))
}

async fn blocking<T, F>(engine: AppState, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&Engine) -> Result<T, ServiceError> + Send + 'static,
{
    tokio::task::spawn_blocking(move || f(&engine))
        .await
        .map_err(|e| ServiceError::Internal(format!("worker failed: {e}")))?
}

async fn timeline(State(engine): State<AppState>) -> ApiResult<Response> {
    let nodes = blocking(engine, |e| e.timeline()).await?;
    Ok(Json(nodes).into_response())
}

async fn get_entry(State(engine): State<AppState>, Path(raw): Path<String>) -> ApiResult<Response> {
    let id = parse_id(&raw)?;
    let entry = blocking(engine, move |e| e.entry(id)).await?;
    Ok(Json(entry).into_response())
}

async fn delete_entry(State(engine): State<AppState>, Path(raw): Path<String>) -> ApiResult<Response> {
    let id = parse_id(&raw)?;
    let entry = blocking(engine, move |e| e.delete(id)).await?;
    Ok(Json(entry).into_response())
}

async fn insert_entry(State(engine): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let req: InsertRequest = parse_body(&body)?;
    let entry = blocking(engine, move |e| e.insert(req)).await?;
    Ok((StatusCode::CREATED, Json(entry)).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UtilityBody {
    value: u32,
}

async fn set_utility(State(engine): State<AppState>, Path(raw): Path<String>, body: Bytes) -> ApiResult<Response> {
    let id = parse_id(&raw)?;
    // unknown ids are 404 even when the body is out of range
    let engine_ref = engine.clone();
    blocking(engine_ref, move |e| e.entry(id).map(|_| ())).await?;
    let UtilityBody { value } = parse_body(&body)?;
    let node = blocking(engine, move |e| e.set_utility(id, value)).await?;
    Ok(Json(node).into_response())
}

async fn consolidate(State(engine): State<AppState>, Path(raw): Path<String>) -> ApiResult<Response> {
    let id = parse_id(&raw)?;
    let resp = blocking(engine, move |e| e.consolidate(id)).await?;
    Ok(Json(resp).into_response())
}

async fn advance_turn(State(engine): State<AppState>) -> ApiResult<Response> {
    let resp = blocking(engine, |e| e.advance_turn()).await?;
    Ok(Json(resp).into_response())
}

async fn run_decay(State(engine): State<AppState>) -> ApiResult<Response> {
    // fail fast without occupying a worker thread
    if engine.is_decay_running() {
        return Err(ServiceError::DecayInProgress);
    }
    let report = blocking(engine, |e| e.run_decay()).await?;
    Ok(Json(report).into_response())
}

async fn semantic(State(engine): State<AppState>) -> ApiResult<Response> {
    let facts = blocking(engine, |e| Ok(e.facts())).await?;
    Ok(Json(facts).into_response())
}

async fn metrics(State(engine): State<AppState>) -> ApiResult<Response> {
    let m = blocking(engine, |e| Ok(e.metrics())).await?;
    Ok(Json(m).into_response())
}

async fn get_config(State(engine): State<AppState>) -> ApiResult<Response> {
    let c = blocking(engine, |e| Ok(e.config())).await?;
    Ok(Json(c).into_response())
}

async fn put_config(State(engine): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let config: DecayConfig = parse_body(&body)?;
    let c = blocking(engine, move |e| e.set_config(config)).await?;
    Ok(Json(c).into_response())
}

pub fn router(engine: Arc<Engine>) -> Router {
    Router::new()
        .route("/timeline", get(timeline))
        .route("/entries", post(insert_entry))
        .route("/entries/{id}", get(get_entry).delete(delete_entry))
        .route("/entries/{id}/utility", post(set_utility))
        .route("/entries/{id}/consolidate", post(consolidate))
        .route("/turn", post(advance_turn))
        .route("/decay/run", post(run_decay))
        .route("/semantic", get(semantic))
        .route("/metrics", get(metrics))
        .route("/config", get(get_config).put(put_config))
        .with_state(engine)
}

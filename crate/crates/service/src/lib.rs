//! HTTP review service.
//!
//! All routes live under `/v1/`. Writes go through one lock, so decisions
//! are appended to the log one at a time and each is on disk before its
//! acknowledgment leaves the server.
//!
//! | route | |
//! |---|---|
//! | `GET /v1/queue?institution=ID` | pending candidates assigned to the caller |
//! | `GET /v1/matches/{id}` | one candidate with both sides rendered |
//! | `POST /v1/decisions` | submit a decision; honours `Idempotency-Key` |
//! | `GET /v1/stats` | counts by status, inconsistency rate, titles |
//! | `GET /v1/facets` | the facet tree |
//!
//! Queue and decision requests authenticate with an `X-Institution-Token`
//! header.

mod desk;

use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

pub use desk::{
    system_clock, Clock, DeskData, DeskError, EntityTitle, MatchView, QueueView, Registry,
    ReviewDesk, SideView, Stats,
};

use artrecon_core::model::AuthorityId;
use artrecon_core::review::DecisionRequest;

pub const TOKEN_HEADER: &str = "x-institution-token";
pub const IDEMPOTENCY_HEADER: &str = "idempotency-key";

pub type SharedDesk = Arc<RwLock<ReviewDesk>>;

impl IntoResponse for DeskError {
    fn into_response(self) -> Response {
        let status = match self {
            DeskError::Unauthorized(_) => StatusCode::UNAUTHORIZED,
            DeskError::Forbidden(_) => StatusCode::FORBIDDEN,
            DeskError::NotFound(_) => StatusCode::NOT_FOUND,
            DeskError::Invalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            DeskError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = json!({ "error": { "kind": self.kind(), "message": self.message() } });
        (status, Json(body)).into_response()
    }
}

fn poisoned<T>(_: T) -> DeskError {
    DeskError::Internal("desk lock poisoned".into())
}

fn caller(desk: &ReviewDesk, headers: &HeaderMap) -> Result<AuthorityId, DeskError> {
    let token = headers
        .get(TOKEN_HEADER)
        .and_then(|v| v.to_str().ok())
        .ok_or_else(|| DeskError::Unauthorized(format!("missing {TOKEN_HEADER} header")))?;
    desk.registry()
        .authenticate(token)
        .cloned()
        .ok_or_else(|| DeskError::Unauthorized("unknown institution token".into()))
}

#[derive(Debug, Deserialize)]
struct QueueParams {
    institution: Option<String>,
}

async fn queue(
    State(desk): State<SharedDesk>,
    headers: HeaderMap,
    Query(params): Query<QueueParams>,
) -> Result<Json<QueueView>, DeskError> {
    let desk = desk.read().map_err(poisoned)?;
    let me = caller(&desk, &headers)?;
    let wanted = match params.institution {
        Some(raw) => AuthorityId::new(&raw).map_err(DeskError::from)?,
        None => me.clone(),
    };
    if wanted != me {
        return Err(DeskError::Forbidden(format!(
            "token belongs to {me}, not {wanted}"
        )));
    }
    Ok(Json(desk.queue(&me)?))
}

async fn match_view(
    State(desk): State<SharedDesk>,
    Path(id): Path<String>,
) -> Result<Json<MatchView>, DeskError> {
    Ok(Json(desk.read().map_err(poisoned)?.match_view(&id)?))
}

async fn decide(
    State(desk): State<SharedDesk>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, DeskError> {
    let request: DecisionRequest = serde_json::from_slice(&body)
        .map_err(|e| DeskError::Invalid(format!("malformed decision: {e}")))?;
    let key = headers
        .get(IDEMPOTENCY_HEADER)
        .map(|v| v.to_str().map(str::to_string))
        .transpose()
        .map_err(|_| DeskError::Invalid("idempotency key must be visible ASCII".into()))?;
    let mut desk = desk.write().map_err(poisoned)?;
    let me = caller(&desk, &headers)?;
    if request.institution != me {
        return Err(DeskError::Forbidden(format!(
            "token belongs to {me}, decision names {}",
            request.institution
        )));
    }
    let ack = desk.submit(request, key)?;
    let status = if ack.replayed {
        StatusCode::OK
    } else {
        StatusCode::CREATED
    };
    Ok((status, Json(ack)).into_response())
}

async fn stats(State(desk): State<SharedDesk>) -> Result<Json<Stats>, DeskError> {
    Ok(Json(desk.read().map_err(poisoned)?.stats()))
}

async fn facets(State(desk): State<SharedDesk>) -> Result<Response, DeskError> {
    let desk = desk.read().map_err(poisoned)?;
    Ok(Json(desk.facets()).into_response())
}

pub fn router(desk: SharedDesk) -> Router {
    Router::new()
        .route("/v1/queue", get(queue))
        .route("/v1/matches/{id}", get(match_view))
        .route("/v1/decisions", post(decide))
        .route("/v1/stats", get(stats))
        .route("/v1/facets", get(facets))
        .with_state(desk)
}

pub fn shared(desk: ReviewDesk) -> SharedDesk {
    Arc::new(RwLock::new(desk))
}

/// Serves until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, desk: SharedDesk) -> std::io::Result<()> {
    tracing::info!(addr = ?listener.local_addr().ok(), "review service listening");
    axum::serve(listener, router(desk)).await
}

//! HTTP routing. Handlers are thin wrappers over [`Service`].

use std::sync::Arc;

use avabond_core::engagement::Period;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;

use crate::dto::*;
use crate::service::{ApiError, Service};

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self {
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Conflict(_) => StatusCode::CONFLICT,
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::InsufficientPoints { .. } => StatusCode::PAYMENT_REQUIRED,
            ApiError::Forbidden => StatusCode::FORBIDDEN,
            ApiError::Internal(msg) => {
                tracing::error!(error = %msg, "request failed");
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        (status, Json(self.body())).into_response()
    }
}

type Shared = State<Arc<Service>>;
type ApiResult<T> = Result<Json<T>, ApiError>;

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/players", post(create_player))
        .route("/players/{id}/session", get(session))
        .route("/players/{id}/challenges/{cid}/answer", post(answer))
        .route("/players/{id}/challenges/{cid}/hint", post(hint))
        .route("/players/{id}/report", get(report))
        .route("/players/{id}/notifications", get(notifications))
        .route("/auth/{id}/reset", post(start_reset))
        .route("/auth/{id}/reset/{token}", post(finish_reset))
        .route("/admin/clock", get(clock).post(set_clock))
        .with_state(service)
}

async fn create_player(State(s): Shared, body: Option<Json<CreatePlayer>>) -> Result<(StatusCode, Json<PlayerCreated>), ApiError> {
    let created = s.create_player(body.map(|Json(b)| b).unwrap_or_default())?;
    Ok((StatusCode::CREATED, Json(created)))
}

async fn session(State(s): Shared, Path(id): Path<String>) -> ApiResult<SessionView> {
    s.session(&id).map(Json)
}

async fn answer(State(s): Shared, Path((id, cid)): Path<(String, String)>, Json(body): Json<AnswerRequest>) -> ApiResult<AnswerResponse> {
    s.answer(&id, &cid, body).map(Json)
}

async fn hint(State(s): Shared, Path((id, cid)): Path<(String, String)>, body: Option<Json<HintRequest>>) -> ApiResult<HintResponse> {
    s.hint(&id, &cid, body.map(|Json(b)| b).unwrap_or_default()).map(Json)
}

#[derive(Deserialize)]
struct ReportQuery {
    period: Option<String>,
}

async fn report(State(s): Shared, Path(id): Path<String>, Query(q): Query<ReportQuery>) -> Result<Response, ApiError> {
    let period: Period = q.period.as_deref().unwrap_or("day").parse().map_err(ApiError::BadRequest)?;
    Ok(Json(s.report(&id, period)?).into_response())
}

async fn notifications(State(s): Shared, Path(id): Path<String>) -> ApiResult<Vec<Delivered>> {
    s.notifications(&id).map(Json)
}

async fn start_reset(State(s): Shared, Path(id): Path<String>) -> ApiResult<ResetIssued> {
    s.start_reset(&id).map(Json)
}

async fn finish_reset(
    State(s): Shared,
    Path((id, token)): Path<(String, String)>,
    Json(body): Json<ResetAnswers>,
) -> ApiResult<ResetDecision> {
    s.finish_reset(&id, &token, body).map(Json)
}

fn operator_token(headers: &HeaderMap) -> Option<&str> {
    headers.get(OPERATOR_HEADER).and_then(|v| v.to_str().ok())
}

async fn clock(State(s): Shared, headers: HeaderMap) -> ApiResult<ClockView> {
    s.check_operator(operator_token(&headers))?;
    Ok(Json(ClockView { now: s.now() }))
}

async fn set_clock(State(s): Shared, headers: HeaderMap, Json(body): Json<ClockUpdate>) -> ApiResult<ClockView> {
    s.check_operator(operator_token(&headers))?;
    s.update_clock(body).map(Json)
}

/// Serve until the listener fails or the task is cancelled.
pub async fn serve(listener: tokio::net::TcpListener, service: Arc<Service>) -> std::io::Result<()> {
    axum::serve(listener, router(service)).await
}

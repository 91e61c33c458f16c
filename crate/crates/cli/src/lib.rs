//! HTTP front end for the tutor service.
//!
//! See `docs/api.md` for the request and response bodies.

use std::net::{IpAddr, SocketAddr};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use gatutor_core::session::{ServiceConfig, ServiceError, SessionStore};
use gatutor_core::Transaction;
use serde::Deserialize;
use serde_json::json;

/// Largest accepted request body.
pub const MAX_BODY_BYTES: usize = 64 * 1024 * 1024;

/// Error body: `{"error": <code>, "message": <text>}`, plus `line` for parse errors.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: serde_json::Value,
}

impl ApiError {
    fn bad_request(code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            body: json!({ "error": code, "message": message.into() }),
        }
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let status = match &e {
            ServiceError::UnknownGraph(_)
            | ServiceError::UnknownSession(_)
            | ServiceError::UnknownResult(_) => StatusCode::NOT_FOUND,
            ServiceError::SessionDone
            | ServiceError::AlreadyDone
            | ServiceError::DuplicateName(_)
            | ServiceError::NoFiles => StatusCode::CONFLICT,
            ServiceError::Parse { .. } | ServiceError::Pipeline(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            ServiceError::InvalidName(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            tracing::error!(error = %e, "request failed");
        }
        let mut body = json!({ "error": e.code(), "message": e.to_string() });
        if let Some(line) = e.line() {
            body["line"] = json!(line);
        }
        ApiError { status, body }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::bad_request("BadRequest", r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;
type Store = Arc<SessionStore>;

/// Runs a store operation off the async workers; the store does blocking I/O.
async fn blocking<T, F>(store: &Store, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&SessionStore) -> Result<T, ServiceError> + Send + 'static,
{
    let store = Arc::clone(store);
    match tokio::task::spawn_blocking(move || f(&store)).await {
        Ok(r) => r.map_err(ApiError::from),
        Err(e) => Err(ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            body: json!({ "error": "Internal", "message": e.to_string() }),
        }),
    }
}

#[derive(Deserialize)]
struct CreateSession {
    graph_id: String,
}

#[derive(Deserialize)]
struct StepBody {
    selection: String,
    action: String,
    #[serde(default)]
    input: String,
}

#[derive(Deserialize)]
struct UploadQuery {
    name: Option<String>,
}

#[derive(Deserialize, Default)]
struct ProcessBody {
    gap_threshold: Option<u64>,
}

#[derive(Deserialize)]
struct SkillsQuery {
    format: Option<String>,
}

async fn list_problems(State(store): State<Store>) -> Json<serde_json::Value> {
    Json(json!({ "problems": store.problems() }))
}

async fn create_session(
    State(store): State<Store>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<Response> {
    let Json(body) = body?;
    let view = blocking(&store, move |s| s.create_session(&body.graph_id)).await?;
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn get_session(State(store): State<Store>, Path(id): Path<String>) -> ApiResult<Response> {
    let view = blocking(&store, move |s| s.get_session(&id)).await?;
    Ok(Json(view).into_response())
}

async fn post_transaction(
    State(store): State<Store>,
    Path(id): Path<String>,
    body: Result<Json<StepBody>, JsonRejection>,
) -> ApiResult<Response> {
    let Json(b) = body?;
    let txn = Transaction::new(b.selection, b.action, b.input);
    let outcome = blocking(&store, move |s| s.post_transaction(&id, txn)).await?;
    Ok(Json(outcome).into_response())
}

async fn post_hint(State(store): State<Store>, Path(id): Path<String>) -> ApiResult<Response> {
    let hint = blocking(&store, move |s| s.get_hint(&id)).await?;
    Ok(Json(hint).into_response())
}

async fn upload_file(
    State(store): State<Store>,
    Path(id): Path<String>,
    Query(q): Query<UploadQuery>,
    bytes: Bytes,
) -> ApiResult<Response> {
    let name = q
        .name
        .ok_or_else(|| ApiError::bad_request("BadRequest", "missing `name` query parameter"))?;
    let stored = blocking(&store, move |s| s.upload_file(&id, &name, &bytes)).await?;
    Ok((StatusCode::CREATED, Json(json!({ "name": stored.name, "size": std::fs::metadata(&stored.path).map(|m| m.len()).unwrap_or(0) }))).into_response())
}

async fn process_files(
    State(store): State<Store>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Response> {
    let body: ProcessBody = if body.iter().all(u8::is_ascii_whitespace) {
        ProcessBody::default()
    } else {
        serde_json::from_slice(&body)
            .map_err(|e| ApiError::bad_request("BadRequest", e.to_string()))?
    };
    let result_id = blocking(&store, move |s| s.process_files(&id, body.gap_threshold)).await?;
    Ok((StatusCode::CREATED, Json(json!({ "result_id": result_id }))).into_response())
}

async fn get_result(State(store): State<Store>, Path(id): Path<String>) -> ApiResult<Response> {
    let bytes = blocking(&store, move |s| s.get_result(&id)).await?;
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], bytes).into_response())
}

async fn get_skills(
    State(store): State<Store>,
    Path(id): Path<String>,
    Query(q): Query<SkillsQuery>,
) -> ApiResult<Response> {
    if q.format.as_deref() == Some("tsv") {
        let tsv = blocking(&store, move |s| s.get_skills_tsv(&id)).await?;
        return Ok((
            [(
                header::CONTENT_TYPE,
                "text/tab-separated-values; charset=utf-8",
            )],
            tsv,
        )
            .into_response());
    }
    let skills = blocking(&store, move |s| s.get_skills(&id)).await?;
    Ok(Json(json!({ "skills": skills })).into_response())
}

async fn not_found() -> ApiError {
    ApiError {
        status: StatusCode::NOT_FOUND,
        body: json!({ "error": "NotFound", "message": "no such endpoint" }),
    }
}

pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/problems", get(list_problems))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/transactions", post(post_transaction))
        .route("/sessions/{id}/hint", post(post_hint))
        .route("/sessions/{id}/files", post(upload_file))
        .route("/sessions/{id}/process", post(process_files))
        .route("/sessions/{id}/skills", get(get_skills))
        .route("/results/{id}", get(get_result))
        .fallback(not_found)
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(store)
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        if let Ok(mut s) = tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate())
        {
            s.recv().await;
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}

/// Opens the store and serves until interrupted.
pub async fn serve(config: ServiceConfig, host: IpAddr) -> anyhow::Result<()> {
    let addr = SocketAddr::new(host, config.port);
    let store = tokio::task::spawn_blocking(move || SessionStore::open(config)).await??;
    tracing::info!(problems = store.library().len(), "problem library loaded");
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(store)))
        .with_graceful_shutdown(shutdown_signal())
        .await?;
    Ok(())
}

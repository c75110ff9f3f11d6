//! JSON API and static UI hosting.
//!
//! | route | success | failure |
//! |---|---|---|
//! | `GET /api/queue/next?reviewer=` | 200 assignment, 204 no work | 400 |
//! | `POST /api/decision` | 200 `{"ok":true}` | 400, 404, 409 |
//! | `GET /api/stats` | 200 | |
//! | `GET /api/export?limit=&order=` | 200 JSONL | 400, 404 empty gold set |
//! | `GET /` | review UI | |

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tower_http::services::ServeDir;

use crate::decision::DecisionRequest;
use crate::error::CurationError;
use crate::export::ExportOrder;
use crate::service::CurationService;

const PLACEHOLDER_UI: &str = "<!doctype html>\n<html><head><meta charset=\"utf-8\"><title>bitext review</title></head>\n<body><p>No review UI bundle configured. Start the service with <code>--ui-dir</code>, or use the JSON API under <code>/api</code>.</p></body></html>\n";

type Svc = Arc<CurationService>;

fn error_response(e: CurationError) -> Response {
    let status = match &e {
        CurationError::Invalid(_) => StatusCode::BAD_REQUEST,
        CurationError::Core(c) if c.is_user_error() => StatusCode::BAD_REQUEST,
        CurationError::UnknownPair(_) | CurationError::EmptyGoldSet => StatusCode::NOT_FOUND,
        CurationError::Conflict(_) => StatusCode::CONFLICT,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    };
    if status.is_server_error() {
        log::error!("{e}");
    }
    (status, Json(json!({ "error": e.to_string() }))).into_response()
}

#[derive(Deserialize)]
struct NextQuery {
    reviewer: Option<String>,
}

async fn next(State(svc): State<Svc>, Query(q): Query<NextQuery>) -> Response {
    let reviewer = q.reviewer.unwrap_or_default();
    match svc.next_pending(&reviewer) {
        Ok(Some(a)) => Json(a).into_response(),
        Ok(None) => StatusCode::NO_CONTENT.into_response(),
        Err(e) => error_response(e),
    }
}

async fn decision(State(svc): State<Svc>, body: Bytes) -> Response {
    let req: DecisionRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error_response(CurationError::Invalid(e.to_string())),
    };
    match svc.record_decision(req) {
        Ok(_) => Json(json!({ "ok": true })).into_response(),
        Err(e) => error_response(e),
    }
}

async fn stats(State(svc): State<Svc>) -> Response {
    Json(svc.stats()).into_response()
}

#[derive(Deserialize)]
struct ExportQuery {
    limit: Option<usize>,
    order: Option<String>,
}

async fn export(State(svc): State<Svc>, Query(q): Query<ExportQuery>) -> Response {
    let order = match q.order.as_deref().map(str::parse).transpose() {
        Ok(o) => o.unwrap_or(ExportOrder::Decision),
        Err(e) => return error_response(e),
    };
    match svc.export(order, q.limit) {
        Ok(body) => ([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response(),
        Err(e) => error_response(e),
    }
}

/// API routes plus the UI: files from `ui_dir` when given, else a stub page.
pub fn router(svc: Arc<CurationService>, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/queue/next", get(next))
        .route("/api/decision", post(decision))
        .route("/api/stats", get(stats))
        .route("/api/export", get(export))
        .with_state(svc);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(PLACEHOLDER_UI) })),
    }
}

/// Serves until the process receives Ctrl-C. `on_bound` receives the actual
/// address (useful with port 0).
pub async fn serve(
    svc: Arc<CurationService>,
    addr: SocketAddr,
    ui_dir: Option<PathBuf>,
    on_bound: impl FnOnce(SocketAddr),
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    on_bound(listener.local_addr()?);
    axum::serve(listener, router(svc, ui_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

//! HTTP front of the search engine.

use std::net::SocketAddr;
use std::sync::{Arc, PoisonError, RwLock};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

use xlsearch_core::service::{SearchEngine, ServiceError};

pub type SharedEngine = Arc<RwLock<SearchEngine>>;

/// Largest accepted request body (harvest batches can be large).
pub const MAX_BODY_BYTES: usize = 512 * 1024 * 1024;

fn json_response(status: StatusCode, value: &serde_json::Value) -> Response {
    let body = serde_json::to_string(value).expect("serializable");
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn ok_json<T: serde::Serialize>(value: &T) -> Response {
    json_response(StatusCode::OK, &serde_json::to_value(value).expect("serializable"))
}

fn error_response(e: &ServiceError) -> Response {
    let status = StatusCode::from_u16(e.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    json_response(status, &e.body())
}

async fn query(State(engine): State<SharedEngine>, body: Bytes) -> Response {
    let engine = engine.read().unwrap_or_else(PoisonError::into_inner);
    match engine.handle_query_json(&body) {
        Ok(answer) => ok_json(&answer),
        Err(e) => error_response(&e),
    }
}

async fn ingest(State(engine): State<SharedEngine>, body: Bytes) -> Response {
    let mut engine = engine.write().unwrap_or_else(PoisonError::into_inner);
    match engine.ingest_json(&body) {
        Ok(counts) => ok_json(&counts),
        Err(e) => error_response(&e),
    }
}

async fn harvest(State(engine): State<SharedEngine>, Path(id): Path<String>) -> Response {
    let engine = engine.read().unwrap_or_else(PoisonError::into_inner);
    match engine.harvest(&id) {
        Some(record) => ok_json(record),
        None => error_response(&ServiceError::NotFound(format!("no harvest `{id}`"))),
    }
}

async fn stats(State(engine): State<SharedEngine>) -> Response {
    let engine = engine.read().unwrap_or_else(PoisonError::into_inner);
    ok_json(&engine.stats())
}

async fn health() -> &'static str {
    "ok"
}

/// CORS policy: any origin when `allow` is empty, else exactly the listed
/// origins.
pub fn cors_layer(allow: &[String]) -> CorsLayer {
    let layer = CorsLayer::new().allow_methods(Any).allow_headers(Any);
    if allow.is_empty() {
        layer.allow_origin(Any)
    } else {
        let origins: Vec<HeaderValue> = allow.iter().filter_map(|o| HeaderValue::from_str(o).ok()).collect();
        layer.allow_origin(AllowOrigin::list(origins))
    }
}

pub fn router(engine: SharedEngine, cors_allow: &[String]) -> Router {
    Router::new()
        .route("/query", post(query))
        .route("/harvests", post(ingest))
        .route("/harvest/{*id}", get(harvest))
        .route("/stats", get(stats))
        .route("/health", get(health))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .layer(cors_layer(cors_allow))
        .with_state(engine)
}

/// Binds `addr` and serves until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    engine: SharedEngine,
    cors_allow: &[String],
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(engine, cors_allow))
        .with_graceful_shutdown(shutdown)
        .await
}

pub async fn bind(port: u16) -> std::io::Result<tokio::net::TcpListener> {
    tokio::net::TcpListener::bind(SocketAddr::from(([0, 0, 0, 0], port))).await
}

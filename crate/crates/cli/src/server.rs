//! HTTP API over a [`Store`].
//!
//! ```text
//! GET  /docs                  {"documents": [summary, ...]}
//! GET  /docs/{id}             {"id", "revision", "updated_at", "document"}
//! POST /docs/{id}/edits       Edit -> {"id", "revision", "updated_at", "document"}
//! GET  /docs/{id}/validation  {"id", "revision", "report"}
//! GET  /labels                {"labels": [{"code", "description", "one_sided"}, ...]}
//! ```
//!
//! Document responses also carry the revision in an `x-revision` header.
//! Errors are `{"error": CODE, "message", "revision"?, "report"?}` with
//! status 404 NOT_FOUND, 400 INVALID_EDIT, 409 CONFLICT or 422 REJECTED.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::{json, Value};

use spanalign_core::format::to_value;
use spanalign_core::{validate_document, Edit, SpanLabel, Store, StoreError, StoredDocument};

type Shared = Arc<Store>;

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/docs", get(list_docs))
        .route("/docs/{id}", get(get_doc))
        .route("/docs/{id}/edits", post(post_edit))
        .route("/docs/{id}/validation", get(get_validation))
        .route("/labels", get(labels))
        .with_state(store)
}

pub async fn serve(store: Arc<Store>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn with_revision(status: StatusCode, revision: Option<u64>, body: Value) -> Response {
    let mut response = (status, Json(body)).into_response();
    if let Some(r) = revision {
        response.headers_mut().insert("x-revision", HeaderValue::from(r));
    }
    response
}

fn document_body(id: &str, stored: &StoredDocument) -> Response {
    with_revision(
        StatusCode::OK,
        Some(stored.revision),
        json!({
            "id": id,
            "revision": stored.revision,
            "updated_at": stored.updated_at,
            "document": to_value(&stored.doc),
        }),
    )
}

fn error_response(store: &Store, id: &str, err: StoreError) -> Response {
    let status = match &err {
        StoreError::NotFound(_) => StatusCode::NOT_FOUND,
        StoreError::Conflict { .. } => StatusCode::CONFLICT,
        StoreError::Rejected(_) => StatusCode::UNPROCESSABLE_ENTITY,
        StoreError::InvalidEdit(_) | StoreError::InvalidId(_) | StoreError::Format(_) => StatusCode::BAD_REQUEST,
        StoreError::Exists(_) => StatusCode::CONFLICT,
        StoreError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
    };
    let revision = store.get(id).ok().map(|s| s.revision);
    let mut body = json!({ "error": err.code(), "message": err.to_string() });
    if let Some(r) = revision {
        body["revision"] = json!(r);
    }
    if let StoreError::Rejected(report) = &err {
        body["report"] = json!(report);
    }
    with_revision(status, revision, body)
}

async fn list_docs(State(store): State<Shared>) -> Json<Value> {
    Json(json!({ "documents": store.list() }))
}

async fn get_doc(State(store): State<Shared>, Path(id): Path<String>) -> Response {
    match store.get(&id) {
        Ok(stored) => document_body(&id, &stored),
        Err(e) => error_response(&store, &id, e),
    }
}

async fn post_edit(State(store): State<Shared>, Path(id): Path<String>, body: Bytes) -> Response {
    let edit: Edit = match serde_json::from_slice(&body) {
        Ok(e) => e,
        Err(e) => return error_response(&store, &id, StoreError::InvalidEdit(e.to_string())),
    };
    let worker = store.clone();
    let target = id.clone();
    // edits fsync before returning
    let result = tokio::task::spawn_blocking(move || worker.apply(&target, &edit)).await;
    match result {
        Ok(Ok(stored)) => document_body(&id, &stored),
        Ok(Err(e)) => error_response(&store, &id, e),
        Err(e) => error_response(&store, &id, StoreError::Io(format!("edit task failed: {e}"))),
    }
}

async fn get_validation(State(store): State<Shared>, Path(id): Path<String>) -> Response {
    match store.get(&id) {
        Ok(stored) => with_revision(
            StatusCode::OK,
            Some(stored.revision),
            json!({ "id": id, "revision": stored.revision, "report": validate_document(&stored.doc) }),
        ),
        Err(e) => error_response(&store, &id, e),
    }
}

async fn labels() -> Json<Value> {
    let labels: Vec<Value> = SpanLabel::ALL
        .iter()
        .map(|l| json!({ "code": l.code(), "description": l.description(), "one_sided": l.is_one_sided() }))
        .collect();
    Json(json!({ "labels": labels }))
}

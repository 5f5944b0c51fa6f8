//! HTTP API over a registry store.
//!
//! | method | path                             | body / query                |
//! |--------|----------------------------------|-----------------------------|
//! | POST   | `/api/v1/records`                | record envelope             |
//! | GET    | `/api/v1/records/{kind}/{id}`    |                             |
//! | POST   | `/api/v1/query`                  | `{mql, offset?, limit?}`    |
//! | GET    | `/api/v1/compare`                | `?ids=a,b,...`              |
//! | POST   | `/api/v1/crawl/{zoo}`            | `{fixture_dir}`             |
//! | POST   | `/api/v1/compose`                | composition request         |
//! | POST   | `/api/v1/compose/pareto`         | composition request         |
//! | GET    | `/api/v1/health`                 |                             |
//!
//! Errors are `{"code", "message", "detail"?}` with a machine-readable code.

use std::collections::BTreeMap;
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, RwLock, RwLockReadGuard, RwLockWriteGuard};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use mz_core::compare::{self, CompareError};
use mz_core::composer::{self, CompositionRequest, GraphError};
use mz_core::ingest::{self, IngestError};
use mz_core::metamodel::{Record, RecordKind};
use mz_core::mql::{self, EvalContext};
use mz_core::store::StoreError;
use mz_core::{RecordKey, StoreLog};

pub const DEFAULT_PAGE: usize = 100;

/// Shared service state. Reads share the lock, writes take it exclusively,
/// so every request sees one consistent snapshot.
#[derive(Clone)]
pub struct AppState {
    store: Arc<RwLock<StoreLog>>,
    fixtures_root: Arc<PathBuf>,
}

impl AppState {
    pub fn new(store: StoreLog, fixtures_root: impl Into<PathBuf>) -> Self {
        Self {
            store: Arc::new(RwLock::new(store)),
            fixtures_root: Arc::new(fixtures_root.into()),
        }
    }

    pub fn read(&self) -> RwLockReadGuard<'_, StoreLog> {
        self.store.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> RwLockWriteGuard<'_, StoreLog> {
        self.store.write().unwrap_or_else(|e| e.into_inner())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            detail: None,
        }
    }

    fn with_detail(mut self, detail: Value) -> Self {
        self.detail = Some(detail);
        self
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BAD_REQUEST", message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NOT_FOUND", message)
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let msg = e.to_string();
        match e {
            StoreError::Validation(report) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "VALIDATION_FAILED", msg)
                .with_detail(json!({ "violations": report })),
            StoreError::VersionConflict { existing, .. } => {
                Self::new(StatusCode::CONFLICT, "VERSION_CONFLICT", msg).with_detail(json!({ "existing": existing }))
            }
            StoreError::IdConflict(key) => {
                Self::new(StatusCode::CONFLICT, "ID_CONFLICT", msg).with_detail(json!({ "key": key }))
            }
            StoreError::UnknownKind(_) => Self::not_found(msg),
            StoreError::UnsupportedFilter { .. } | StoreError::Codec(_) => Self::bad_request(msg),
            StoreError::Io { .. } | StoreError::Corrupt { .. } => Self::internal(msg),
        }
    }
}

impl From<IngestError> for ApiError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Store(s) => s.into(),
            IngestError::UnknownZoo(_) | IngestError::Unresolved { .. } => Self::not_found(e.to_string()),
            IngestError::Fixtures { .. } => Self::new(StatusCode::BAD_REQUEST, "FIXTURES_UNREADABLE", e.to_string()),
            IngestError::Manifest(_) => Self::bad_request(e.to_string()),
            IngestError::Executor { .. } => Self::new(StatusCode::BAD_GATEWAY, "EXECUTOR_FAILED", e.to_string()),
        }
    }
}

impl From<mql::MqlError> for ApiError {
    fn from(e: mql::MqlError) -> Self {
        Self::new(StatusCode::BAD_REQUEST, e.code(), e.to_string()).with_detail(e.detail())
    }
}

impl From<GraphError> for ApiError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::Filter { ref node, ref error } => {
                let node = node.clone();
                let mut err = ApiError::from(error.clone());
                err.message = e.to_string();
                err.detail = Some(json!({ "node": node, "error": err.detail.take() }));
                err
            }
            GraphError::UnknownHardware(_) => Self::not_found(e.to_string()),
            _ => Self::new(StatusCode::BAD_REQUEST, "INVALID_REQUEST", e.to_string()),
        }
    }
}

fn parse_json<T: serde::de::DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/v1/health", get(health))
        .route("/api/v1/records", post(put_record))
        .route("/api/v1/records/{kind}/{id}", get(get_record))
        .route("/api/v1/query", post(query))
        .route("/api/v1/compare", get(compare_models))
        .route("/api/v1/crawl/{zoo}", post(crawl))
        .route("/api/v1/compose", post(compose))
        .route("/api/v1/compose/pareto", post(compose_pareto))
        .with_state(state)
}

#[derive(Debug, Serialize)]
pub struct Health {
    pub status: &'static str,
    pub record_counts: BTreeMap<RecordKind, usize>,
}

async fn health(State(state): State<AppState>) -> Json<Health> {
    let store = state.read();
    Json(Health {
        status: "ok",
        record_counts: RecordKind::ALL.iter().map(|&k| (k, store.count(k))).collect(),
    })
}

#[derive(Debug, Serialize)]
pub struct Created {
    pub key: RecordKey,
    pub created: bool,
}

async fn put_record(State(state): State<AppState>, body: Bytes) -> Result<(StatusCode, Json<Created>), ApiError> {
    let record: Record = parse_json(&body)?;
    let outcome = ingest::ingest_manual_with_status(&mut state.write(), record)?;
    let status = if outcome.created {
        StatusCode::CREATED
    } else {
        StatusCode::OK
    };
    Ok((
        status,
        Json(Created {
            key: outcome.key,
            created: outcome.created,
        }),
    ))
}

async fn get_record(
    State(state): State<AppState>,
    UrlPath((kind, id)): UrlPath<(String, String)>,
) -> Result<Json<Record>, ApiError> {
    let kind: RecordKind = kind
        .parse()
        .map_err(|e: mz_core::metamodel::UnknownKind| ApiError::not_found(e.to_string()))?;
    let store = state.read();
    store
        .get(&RecordKey::new(kind, &id))
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("no {kind} with id {id:?}")))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRequest {
    pub mql: String,
    #[serde(default)]
    pub offset: usize,
    #[serde(default)]
    pub limit: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct QueryPage {
    /// Total matches before paging.
    pub count: usize,
    pub offset: usize,
    pub limit: usize,
    pub elapsed_ms: f64,
    pub plan: mql::Plan,
    pub results: Vec<Record>,
}

async fn query(State(state): State<AppState>, body: Bytes) -> Result<Json<QueryPage>, ApiError> {
    let req: QueryRequest = parse_json(&body)?;
    let limit = req.limit.unwrap_or(DEFAULT_PAGE);
    let store = state.read();
    let out = mql::run(&req.mql, EvalContext::new(&store))?;
    Ok(Json(QueryPage {
        count: out.count,
        offset: req.offset,
        limit,
        elapsed_ms: out.elapsed_ms,
        plan: out.plan,
        results: out.results.into_iter().skip(req.offset).take(limit).cloned().collect(),
    }))
}

#[derive(Debug, Deserialize)]
pub struct CompareParams {
    #[serde(default)]
    pub ids: String,
}

async fn compare_models(
    State(state): State<AppState>,
    Query(params): Query<CompareParams>,
) -> Result<Json<compare::Matrix>, ApiError> {
    let ids: Vec<&str> = params.ids.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    let store = state.read();
    compare::compare(&store, &ids).map(Json).map_err(|e| match e {
        CompareError::UnknownModel(_) => ApiError::not_found(e.to_string()),
        CompareError::Empty => ApiError::bad_request("ids must name at least one model"),
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrawlRequest {
    pub fixture_dir: PathBuf,
}

/// Resolves a fixture directory below the configured root.
fn fixture_path(root: &Path, dir: &Path) -> Result<PathBuf, ApiError> {
    if dir.is_absolute() || dir.components().any(|c| matches!(c, Component::ParentDir)) {
        return Err(ApiError::bad_request(
            "fixture_dir must be relative to the fixtures root",
        ));
    }
    Ok(root.join(dir))
}

async fn crawl(
    State(state): State<AppState>,
    UrlPath(zoo): UrlPath<String>,
    body: Bytes,
) -> Result<Json<ingest::CrawlSummary>, ApiError> {
    let req: CrawlRequest = parse_json(&body)?;
    let adapter = ingest::adapter(&zoo).ok_or(IngestError::UnknownZoo(zoo))?;
    let dir = fixture_path(&state.fixtures_root, &req.fixture_dir)?;
    let summary = ingest::crawl(&mut state.write(), adapter.as_ref(), &dir)?;
    Ok(Json(summary))
}

async fn compose(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: CompositionRequest = parse_json(&body)?;
    let store = state.read();
    let out = composer::compose(&store, &req)?;
    if let Some(inf) = &out.infeasible {
        let err = ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "INFEASIBLE", inf.to_string())
            .with_detail(serde_json::to_value(&out).unwrap_or_default());
        return Ok(err.into_response());
    }
    Ok(Json(out).into_response())
}

async fn compose_pareto(
    State(state): State<AppState>,
    body: Bytes,
) -> Result<Json<Vec<composer::Plan<f64>>>, ApiError> {
    let req: CompositionRequest = parse_json(&body)?;
    let store = state.read();
    Ok(Json(composer::compose_pareto(&store, &req)?))
}

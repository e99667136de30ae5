use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use axum::extract::multipart::Multipart;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use forge_core::mesh::{parse_mesh, MeshFormat};
use forge_core::{Mesh, RegionLabels};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::ServiceConfig;
use crate::error::{ApiError, ApiResult};
use crate::session::{EditSummary, PrecomputeReport, Session, SessionConfig};
use crate::store::SnapshotStore;
use crate::wire;

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    config: ServiceConfig,
    sessions: RwLock<HashMap<String, Arc<Session>>>,
    store: Option<SnapshotStore>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> ApiResult<Self> {
        let store = config.snapshot_dir.as_ref().map(SnapshotStore::new).transpose()?;
        Ok(AppState {
            inner: Arc::new(Inner {
                config,
                sessions: RwLock::new(HashMap::new()),
                store,
            }),
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.inner.config
    }

    /// In-memory session, or one restored from the snapshot directory.
    pub async fn session(&self, id: &str) -> ApiResult<Arc<Session>> {
        if let Some(s) = self.inner.sessions.read().unwrap().get(id) {
            return Ok(Arc::clone(s));
        }
        let missing = || ApiError::not_found("session", id);
        let store = self.inner.store.clone().ok_or_else(missing)?;
        // Ids are uuids; anything else never touches the filesystem.
        if uuid::Uuid::parse_str(id).is_err() || !store.list()?.iter().any(|s| s == id) {
            return Err(missing());
        }
        let owned = id.to_string();
        let session = tokio::task::spawn_blocking(move || store.load(&owned))
            .await
            .map_err(|e| ApiError::internal(e.to_string()))??;
        tracing::info!(session = id, "restored from snapshot");
        Ok(self.insert(session))
    }

    pub fn insert(&self, session: Session) -> Arc<Session> {
        let mut sessions = self.inner.sessions.write().unwrap();
        Arc::clone(sessions.entry(session.id.clone()).or_insert_with(|| Arc::new(session)))
    }

    async fn snapshot(&self, session: &Arc<Session>) -> ApiResult<()> {
        let Some(store) = self.inner.store.clone() else {
            return Ok(());
        };
        let s = Arc::clone(session);
        tokio::task::spawn_blocking(move || store.save(&s))
            .await
            .map_err(|e| ApiError::internal(e.to_string()))?
    }
}

pub fn router(state: AppState) -> Router {
    let limit = state.config().max_upload_bytes;
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/meta", get(meta))
        .route("/sessions/{id}/blend", get(blend))
        .route("/sessions/{id}/edits", post(create_edit).get(list_edits))
        .route("/sessions/{id}/edits/{edit_id}", get(get_edit))
        .route("/sessions/{id}/error-curve", get(error_curve))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route") })
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

/// Binds, serves until Ctrl-C, then drains in-flight requests.
pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let addr = config.addr()?;
    let state = AppState::new(config).map_err(|e| std::io::Error::other(e.message))?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
            tracing::info!("shutting down");
        })
        .await
}

fn query_error(e: QueryRejection) -> ApiError {
    ApiError::bad_request(e.body_text())
}

fn json_error(e: JsonRejection) -> ApiError {
    ApiError::new(StatusCode::BAD_REQUEST, "invalid_json", e.body_text())
}

fn mesh_response(envelope: serde_json::Value, mesh: &Mesh, extra: &[(&'static str, String)]) -> Response {
    let mut res = wire::encode_mesh(&envelope, mesh).into_response();
    let headers = res.headers_mut();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static(wire::CONTENT_TYPE));
    for (k, v) in extra {
        if let Ok(v) = HeaderValue::from_str(v) {
            headers.insert(*k, v);
        }
    }
    res
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({"status": "ok"}))
}

#[derive(Serialize)]
struct Created {
    id: String,
    report: PrecomputeReport,
}

#[derive(Default)]
struct Upload {
    mesh: Option<(Vec<u8>, Option<MeshFormat>)>,
    labels: Option<RegionLabels>,
    config: Option<SessionConfig>,
}

async fn read_upload(mut multipart: Multipart) -> ApiResult<Upload> {
    let mut up = Upload::default();
    let bad = |e: axum::extract::multipart::MultipartError| ApiError::bad_request(e.body_text());
    while let Some(field) = multipart.next_field().await.map_err(bad)? {
        let name = field.name().unwrap_or_default().to_string();
        match name.as_str() {
            "mesh" => {
                let format = field
                    .file_name()
                    .and_then(|f| MeshFormat::from_path(std::path::Path::new(f)));
                up.mesh = Some((field.bytes().await.map_err(bad)?.to_vec(), format));
            }
            "labels" => {
                let bytes = field.bytes().await.map_err(bad)?;
                let mut labels: RegionLabels = serde_json::from_slice(&bytes)
                    .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_json", format!("labels: {e}")))?;
                for idx in labels.labels.values_mut() {
                    idx.sort_unstable();
                    idx.dedup();
                }
                up.labels = Some(labels);
            }
            "config" => {
                let bytes = field.bytes().await.map_err(bad)?;
                up.config = Some(
                    serde_json::from_slice(&bytes)
                        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_json", format!("config: {e}")))?,
                );
            }
            other => return Err(ApiError::bad_request(format!("unexpected multipart field `{other}`"))),
        }
    }
    Ok(up)
}

async fn create_session(State(state): State<AppState>, multipart: Multipart) -> ApiResult<(StatusCode, Json<Created>)> {
    let up = read_upload(multipart).await?;
    let (bytes, format) = up.mesh.ok_or_else(|| ApiError::bad_request("missing multipart field `mesh`"))?;
    let config = up.config.unwrap_or_default();
    config.validate()?;
    let max_vertices = state.config().max_vertices;
    let id = uuid::Uuid::new_v4().to_string();
    let sid = id.clone();
    let session = tokio::task::spawn_blocking(move || -> ApiResult<Session> {
        let format = format.unwrap_or_else(|| MeshFormat::sniff(&bytes));
        let mut mesh = parse_mesh(&bytes, format)?;
        if mesh.vertex_count() > max_vertices {
            return Err(ApiError::new(
                StatusCode::PAYLOAD_TOO_LARGE,
                "mesh_too_large",
                format!("{} vertices exceeds the cap of {max_vertices}", mesh.vertex_count()),
            ));
        }
        if let Some(labels) = up.labels {
            mesh = mesh.with_labels(labels)?;
        }
        Session::precompute(sid, mesh, config)
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;
    let report = session.report.clone();
    tracing::info!(session = %id, vertices = report.vertex_count, ms = report.precompute_ms, "session created");
    let session = state.insert(session);
    state.snapshot(&session).await?;
    Ok((StatusCode::CREATED, Json(Created { id, report })))
}

#[derive(Serialize)]
struct Meta {
    id: String,
    config: SessionConfig,
    report: PrecomputeReport,
    labels: Vec<String>,
    edits: Vec<EditSummary>,
    solve_count: u64,
}

async fn meta(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Meta>> {
    let s = state.session(&id).await?;
    Ok(Json(Meta {
        id: s.id.clone(),
        config: s.config.clone(),
        report: s.report.clone(),
        labels: s.base().labels.names().map(str::to_string).collect(),
        edits: s.edit_summaries(),
        solve_count: s.solve_count(),
    }))
}

#[derive(Deserialize)]
struct BlendQuery {
    gamma: f64,
}

async fn blend(
    State(state): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<BlendQuery>, QueryRejection>,
) -> ApiResult<Response> {
    let Query(q) = query.map_err(query_error)?;
    let s = state.session(&id).await?;
    let mesh = s.blend(q.gamma)?;
    let envelope = json!({
        "session": s.id,
        "gamma": q.gamma,
        "gamma_f": s.config.gamma_f,
        "alpha": q.gamma / s.config.gamma_f,
    });
    Ok(mesh_response(envelope, &mesh, &[]))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RegionNames {
    One(String),
    Many(Vec<String>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EditRequest {
    #[serde(default)]
    region: Option<RegionNames>,
    /// Painted vertex indices, merged with the named regions.
    #[serde(default)]
    vertices: Vec<usize>,
    gamma: f64,
}

fn edit_envelope(session: &Session, edit: &crate::session::Edit) -> serde_json::Value {
    json!({
        "session": session.id,
        "edit_id": edit.id,
        "regions": edit.regions,
        "region_vertices": edit.region.len(),
        "gamma": edit.gamma,
        "residual_norm": edit.residual_norm,
    })
}

async fn create_edit(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<EditRequest>, JsonRejection>,
) -> ApiResult<Response> {
    let Json(req) = body.map_err(json_error)?;
    let s = state.session(&id).await?;
    let names = match req.region {
        None => Vec::new(),
        Some(RegionNames::One(n)) => vec![n],
        Some(RegionNames::Many(v)) => v,
    };
    let region = s.resolve_region(&names, &req.vertices)?;
    let (edit, created) = s.local_edit(region, req.gamma).await?;
    if created {
        state.snapshot(&s).await?;
    }
    let cached = if created { "false" } else { "true" };
    Ok(mesh_response(
        edit_envelope(&s, &edit),
        &edit.mesh,
        &[("x-forge-edit-id", edit.id.clone()), ("x-forge-cached", cached.into())],
    ))
}

async fn list_edits(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Vec<EditSummary>>> {
    Ok(Json(state.session(&id).await?.edit_summaries()))
}

async fn get_edit(State(state): State<AppState>, Path((id, edit_id)): Path<(String, String)>) -> ApiResult<Response> {
    let s = state.session(&id).await?;
    let edit = s.edit(&edit_id).ok_or_else(|| ApiError::not_found("edit", &edit_id))?;
    Ok(mesh_response(edit_envelope(&s, &edit), &edit.mesh, &[("x-forge-edit-id", edit.id.clone())]))
}

#[derive(Deserialize)]
struct CurveQuery {
    #[serde(default = "default_samples")]
    samples: usize,
    #[serde(default)]
    calibrate: bool,
}

fn default_samples() -> usize {
    11
}

async fn error_curve(
    State(state): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<CurveQuery>, QueryRejection>,
) -> ApiResult<Response> {
    let Query(q) = query.map_err(query_error)?;
    let s = state.session(&id).await?;
    let report = s.error_curve(q.samples, q.calibrate).await?;
    Ok(Json(&*report).into_response())
}

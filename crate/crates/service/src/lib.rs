//! JSON-over-HTTP API over caliper evaluation sessions.
//!
//! Every response body is the `serde_json` serialization of a payload built
//! by `caliper_core::report`, so a handler and a direct library call produce
//! the same bytes.

mod error;
mod store;

use std::collections::HashMap;
use std::net::{Ipv4Addr, SocketAddr};
use std::path::{Path as FsPath, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use caliper_core::binning::{BinSpec, Strategy};
use caliper_core::dataset::{ingest_features, ingest_predictions, ColumnKind, ModelRecord, Predictions, ViewMode};
use caliper_core::lrd::LrdParams;
use caliper_core::report::{
    diagram_payload, features_payload, lrd_payload, region_payload, DEFAULT_PAGE_LIMIT,
};
use caliper_core::selection::SubgroupPredicate;
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tower_http::services::ServeDir;

pub use error::ApiError;
pub use store::{SessionEntry, SessionStore, CACHE_CAPACITY};

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_BINS: usize = 10;
/// Upload size cap for CSV bodies.
pub const MAX_BODY_BYTES: usize = 512 * 1024 * 1024;

#[derive(Debug, Clone, Default)]
pub struct AppState {
    pub store: Arc<SessionStore>,
}

/// Loopback address on `port`.
pub fn bind_address(port: u16) -> SocketAddr {
    SocketAddr::from((Ipv4Addr::LOCALHOST, port))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session_summary))
        .route("/sessions/{id}/models", post(add_model))
        .route("/sessions/{id}/features", get(features))
        .route("/sessions/{id}/diagram", get(diagram))
        .route("/sessions/{id}/lrd", get(lrd))
        .route("/sessions/{id}/region", get(region))
        .route("/sessions/{id}/subgroups", post(create_subgroup).get(list_subgroups))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(state)
}

/// [`router`] plus static files from `assets` for every other path.
pub fn router_with_assets(state: AppState, assets: Option<&FsPath>) -> Router {
    let api = router(state);
    match assets {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serves until Ctrl-C.
pub async fn serve(listener: TcpListener, state: AppState, assets: Option<PathBuf>) -> std::io::Result<()> {
    let app = router_with_assets(state, assets.as_deref());
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

type ApiResult = Result<Response, ApiError>;

fn json_body(status: StatusCode, body: impl Into<String>) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body.into()).into_response()
}

fn to_json<T: Serialize>(value: &T) -> Result<String, ApiError> {
    serde_json::to_string(value).map_err(|e| ApiError::internal(e.to_string()))
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> Result<T, ApiError> {
    q.map(|Query(v)| v)
        .map_err(|e| ApiError::bad_request("bad_query", e.body_text()))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
}

/// `mode=confidence` (default) or `mode=classwise&class=i`.
pub fn parse_mode(mode: Option<&str>, class: Option<usize>) -> Result<ViewMode, ApiError> {
    match (mode.unwrap_or("confidence"), class) {
        ("confidence", _) => Ok(ViewMode::Confidence),
        ("classwise", Some(c)) => Ok(ViewMode::ClassWise(c)),
        ("classwise", None) => Err(ApiError::bad_request("bad_query", "mode=classwise needs a class")),
        (other, _) => Err(ApiError::bad_request(
            "bad_query",
            format!("unknown mode {other:?}; expected confidence or classwise"),
        )),
    }
}

fn lookup_subgroup(entry: &SessionEntry, name: Option<&str>) -> Result<Option<SubgroupPredicate>, ApiError> {
    name.map(|n| entry.subgroup(n)).transpose()
}

#[derive(Debug, Default, Deserialize)]
struct SessionRequest {
    path: Option<PathBuf>,
    csv: Option<String>,
    #[serde(default)]
    kinds: HashMap<String, ColumnKind>,
}

#[derive(Serialize)]
struct Created<'a> {
    session_id: &'a str,
    n: usize,
    columns: &'a [String],
}

fn read_path(path: &FsPath) -> Result<Vec<u8>, ApiError> {
    std::fs::read(path).map_err(|e| ApiError::bad_request("io", format!("{}: {e}", path.display())))
}

/// Body is either a features CSV or JSON `{"csv": ...}` / `{"path": ...}`
/// with optional `"kinds"` overrides.
async fn create_session(State(state): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult {
    let is_json = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("application/json"));
    let table = blocking(move || {
        let (bytes, kinds) = if is_json {
            let req: SessionRequest =
                serde_json::from_slice(&body).map_err(|e| ApiError::bad_request("bad_json", e.to_string()))?;
            let bytes = match (req.csv, req.path) {
                (Some(csv), None) => csv.into_bytes(),
                (None, Some(path)) => read_path(&path)?,
                _ => return Err(ApiError::bad_request("bad_json", "give exactly one of \"csv\" or \"path\"")),
            };
            (bytes, req.kinds)
        } else {
            (body.to_vec(), HashMap::new())
        };
        Ok(ingest_features(bytes.as_slice(), &kinds)?)
    })
    .await?;
    let id = state.store.create(table);
    let session = state.store.get(&id)?.snapshot();
    let body = to_json(&Created {
        session_id: &id,
        n: session.n(),
        columns: session.features().column_names(),
    })?;
    Ok(json_body(StatusCode::CREATED, body))
}

#[derive(Serialize)]
struct ModelInfo<'a> {
    name: &'a str,
    classes: usize,
}

#[derive(Serialize)]
struct Summary<'a> {
    session_id: &'a str,
    n: usize,
    columns: &'a [String],
    kinds: Vec<ColumnKind>,
    models: Vec<ModelInfo<'a>>,
    subgroups: Vec<String>,
}

async fn session_summary(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let entry = state.store.get(&id)?;
    let s = entry.snapshot();
    let body = to_json(&Summary {
        session_id: s.id(),
        n: s.n(),
        columns: s.features().column_names(),
        kinds: s.features().column_kinds(),
        models: s
            .models()
            .map(|m| ModelInfo {
                name: m.name(),
                classes: m.classes(),
            })
            .collect(),
        subgroups: entry.subgroups().into_iter().map(|p| p.label).collect(),
    })?;
    Ok(json_body(StatusCode::OK, body))
}

/// Predictions inline as rows, as CSV text, or as file paths.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ModelSource {
    Inline { probs: Vec<Vec<f64>>, labels: Vec<usize> },
    Csv { probs_csv: String, labels_csv: String },
    Paths { probs_path: PathBuf, labels_path: PathBuf },
}

#[derive(Debug, Deserialize)]
struct ModelUpload {
    name: String,
    #[serde(flatten)]
    source: ModelSource,
}

#[derive(Serialize)]
struct ModelAdded<'a> {
    session_id: &'a str,
    model: &'a str,
    n: usize,
    classes: usize,
}

fn predictions(source: ModelSource) -> Result<Predictions, ApiError> {
    match source {
        ModelSource::Inline { probs, labels } => {
            let classes = probs.first().map(Vec::len).unwrap_or(0);
            if let Some(row) = probs.iter().position(|r| r.len() != classes) {
                return Err(ApiError::bad_request(
                    "invalid_input",
                    format!("probability row {row} has {} entries, expected {classes}", probs[row].len()),
                ));
            }
            Ok(Predictions {
                probs: probs.into_iter().flatten().collect(),
                labels,
                classes,
            })
        }
        ModelSource::Csv { probs_csv, labels_csv } => {
            Ok(ingest_predictions(probs_csv.as_bytes(), labels_csv.as_bytes())?)
        }
        ModelSource::Paths { probs_path, labels_path } => {
            let (p, l) = (read_path(&probs_path)?, read_path(&labels_path)?);
            Ok(ingest_predictions(p.as_slice(), l.as_slice())?)
        }
    }
}

async fn add_model(
    State(state): State<AppState>,
    Path(id): Path<String>,
    upload: Result<Json<ModelUpload>, JsonRejection>,
) -> ApiResult {
    let Json(upload) = upload.map_err(|e| ApiError::bad_request("bad_json", e.body_text()))?;
    let entry = state.store.get(&id)?;
    let name = upload.name.clone();
    let record = blocking(move || Ok(ModelRecord::new(upload.name, predictions(upload.source)?)?)).await?;
    let (n, classes) = (record.n(), record.classes());
    entry.add_model(record)?;
    let body = to_json(&ModelAdded {
        session_id: &id,
        model: &name,
        n,
        classes,
    })?;
    Ok(json_body(StatusCode::CREATED, body))
}

#[derive(Debug, Deserialize)]
struct FeaturesQuery {
    subgroup: Option<String>,
}

async fn features(
    State(state): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<FeaturesQuery>, QueryRejection>,
) -> ApiResult {
    let q = query(q)?;
    let entry = state.store.get(&id)?;
    let subgroup = lookup_subgroup(&entry, q.subgroup.as_deref())?;
    let session = entry.snapshot();
    let body = blocking(move || to_json(&features_payload(&session, subgroup.as_ref())?)).await?;
    Ok(json_body(StatusCode::OK, body))
}

#[derive(Debug, Deserialize)]
struct DiagramQuery {
    model: String,
    mode: Option<String>,
    class: Option<usize>,
    bins: Option<usize>,
    strategy: Option<String>,
    subgroup: Option<String>,
}

async fn diagram(
    State(state): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<DiagramQuery>, QueryRejection>,
) -> ApiResult {
    let q = query(q)?;
    let mode = parse_mode(q.mode.as_deref(), q.class)?;
    let strategy: Strategy = q
        .strategy
        .as_deref()
        .unwrap_or("uniform")
        .parse()
        .map_err(|e: caliper_core::Error| ApiError::bad_request("bad_query", e.to_string()))?;
    let spec = BinSpec::new(strategy, q.bins.unwrap_or(DEFAULT_BINS))?;
    let entry = state.store.get(&id)?;
    let subgroup = lookup_subgroup(&entry, q.subgroup.as_deref())?;
    let key = to_json(&("diagram", &q.model, mode, spec, &q.subgroup))?;
    if let Some(body) = entry.cached(&key) {
        return Ok(json_body(StatusCode::OK, body.to_string()));
    }
    let session = entry.snapshot();
    let body: Arc<str> = blocking(move || {
        to_json(&diagram_payload(&session, &q.model, mode, spec, subgroup.as_ref())?)
    })
    .await?
    .into();
    entry.cache(key, body.clone());
    Ok(json_body(StatusCode::OK, body.to_string()))
}

#[derive(Debug, Deserialize)]
struct LrdQuery {
    model: String,
    mode: Option<String>,
    class: Option<usize>,
    subgroup: Option<String>,
    max_bins: Option<usize>,
    /// Bootstrap bags for a confidence band; absent means no band.
    band: Option<usize>,
    seed: Option<u64>,
}

/// Learned-diagram parameters used by the service for a request.
pub fn service_lrd_params(max_bins: Option<usize>, seed: Option<u64>) -> LrdParams {
    let defaults = LrdParams::default();
    LrdParams {
        max_bins: max_bins.unwrap_or(defaults.max_bins),
        seed: seed.unwrap_or(defaults.seed),
        ..defaults
    }
}

async fn lrd(
    State(state): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<LrdQuery>, QueryRejection>,
) -> ApiResult {
    let q = query(q)?;
    let mode = parse_mode(q.mode.as_deref(), q.class)?;
    let params = service_lrd_params(q.max_bins, q.seed);
    params.validate()?;
    let entry = state.store.get(&id)?;
    let subgroup = lookup_subgroup(&entry, q.subgroup.as_deref())?;
    let key = to_json(&("lrd", &q.model, mode, &params, q.band, &q.subgroup))?;
    if let Some(body) = entry.cached(&key) {
        return Ok(json_body(StatusCode::OK, body.to_string()));
    }
    let session = entry.snapshot();
    let body: Arc<str> = blocking(move || {
        to_json(&lrd_payload(&session, &q.model, mode, &params, q.band, subgroup.as_ref())?)
    })
    .await?
    .into();
    entry.cache(key, body.clone());
    Ok(json_body(StatusCode::OK, body.to_string()))
}

#[derive(Debug, Deserialize)]
struct RegionQuery {
    model: String,
    mode: Option<String>,
    class: Option<usize>,
    lo: Option<f64>,
    hi: Option<f64>,
    subgroup: Option<String>,
    limit: Option<usize>,
    offset: Option<usize>,
}

async fn region(
    State(state): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<RegionQuery>, QueryRejection>,
) -> ApiResult {
    let q = query(q)?;
    let mode = parse_mode(q.mode.as_deref(), q.class)?;
    let entry = state.store.get(&id)?;
    let subgroup = lookup_subgroup(&entry, q.subgroup.as_deref())?;
    let session = entry.snapshot();
    let body = blocking(move || {
        to_json(&region_payload(
            &session,
            &q.model,
            mode,
            q.lo.unwrap_or(0.0),
            q.hi.unwrap_or(1.0),
            subgroup.as_ref(),
            q.limit.unwrap_or(DEFAULT_PAGE_LIMIT),
            q.offset.unwrap_or(0),
        )?)
    })
    .await?;
    Ok(json_body(StatusCode::OK, body))
}

async fn create_subgroup(
    State(state): State<AppState>,
    Path(id): Path<String>,
    predicate: Result<Json<SubgroupPredicate>, JsonRejection>,
) -> ApiResult {
    let Json(predicate) = predicate.map_err(|e| ApiError::bad_request("bad_json", e.body_text()))?;
    let entry = state.store.get(&id)?;
    if predicate.label.is_empty() {
        return Err(ApiError::bad_request("invalid_input", "subgroup label must not be empty"));
    }
    let body = to_json(&predicate)?;
    entry.add_subgroup(predicate)?;
    Ok(json_body(StatusCode::CREATED, body))
}

#[derive(Serialize)]
struct SubgroupList {
    subgroups: Vec<SubgroupPredicate>,
}

async fn list_subgroups(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let entry = state.store.get(&id)?;
    let body = to_json(&SubgroupList {
        subgroups: entry.subgroups(),
    })?;
    Ok(json_body(StatusCode::OK, body))
}

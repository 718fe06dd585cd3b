//! JSON REST interface over a [`Catalog`].
//!
//! | method | path | body |
//! |---|---|---|
//! | GET | `/api/networks?country=&city=&environment=&seasonality=&from=&to=` | list of networks |
//! | GET | `/api/networks/{id}` | network with sites and their sensors |
//! | GET | `/api/networks/{id}/sites` | sites ordered by name |
//! | GET | `/api/sites/{id}/sensors` | sensors ordered by id |
//! | GET | `/api/stats?group_by=country\|environment\|seasonality` | `{group_by, total, counts}` |
//! | GET | `/api/networks/{id}/fair` | FAIR checklist |
//! | POST | `/api/networks`, `/api/sites`, `/api/sensors` | `{id}` with 201; bearer token required |
//!
//! Errors carry `{"error": {"code", "message"}}` with status 400 (bad query or
//! body), 401 (missing or wrong token), 404 (unknown id or route) or 409
//! (record rejected by vocabulary, coordinate or integrity checks).

use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use crate::model::{LocalEnvironment, NetworkRecord, Record, SearchQuery, Seasonality, SensorRecord, SiteRecord};
use crate::store::{Catalog, GroupBy};
use crate::CatalogError;

pub const TOKEN_ENV: &str = "FAIRMET_ADMIN_TOKEN";

#[derive(Clone)]
pub struct ApiState {
    pub catalog: Arc<Catalog>,
    /// Writes are refused when no token is configured.
    pub admin_token: Option<String>,
}

pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }
}

impl From<CatalogError> for ApiError {
    fn from(e: CatalogError) -> Self {
        let status = match &e {
            CatalogError::NotFound { .. } => StatusCode::NOT_FOUND,
            CatalogError::InvalidDateRange { .. }
            | CatalogError::InvalidQuery(_)
            | CatalogError::MalformedHeader(_) => StatusCode::BAD_REQUEST,
            CatalogError::UnknownParent { .. }
            | CatalogError::VocabularyViolation(_)
            | CatalogError::CoordinateOutOfRange(_)
            | CatalogError::InvalidRecord(_) => StatusCode::CONFLICT,
            CatalogError::Io(_) | CatalogError::CorruptLog { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.code(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "code": self.code, "message": self.message } });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn bad_query(message: impl Into<String>) -> ApiError {
    ApiError::new(StatusCode::BAD_REQUEST, "invalid_query", message)
}

fn date_param(params: &HashMap<String, String>, key: &str) -> ApiResult<Option<NaiveDate>> {
    match params.get(key).map(|s| s.trim()).filter(|s| !s.is_empty()) {
        None => Ok(None),
        Some(s) => NaiveDate::parse_from_str(s, "%Y-%m-%d")
            .map(Some)
            .map_err(|_| bad_query(format!("{key}: expected YYYY-MM-DD, got {s:?}"))),
    }
}

/// Query-string facets to a [`SearchQuery`]. Unknown keys and values outside
/// the vocabularies are rejected.
pub fn parse_search(params: &HashMap<String, String>) -> ApiResult<SearchQuery> {
    const KEYS: [&str; 6] = ["country", "city", "environment", "seasonality", "from", "to"];
    if let Some(k) = params.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(bad_query(format!("unknown parameter {k:?}")));
    }
    let text = |k: &str| params.get(k).map(|s| s.trim().to_string()).filter(|s| !s.is_empty());
    let local_environment = text("environment")
        .map(|s| s.parse::<LocalEnvironment>())
        .transpose()
        .map_err(|e| bad_query(e.to_string()))?;
    let seasonality = text("seasonality")
        .map(|s| s.parse::<Seasonality>())
        .transpose()
        .map_err(|e| bad_query(e.to_string()))?;
    let q = SearchQuery {
        country: text("country"),
        city: text("city"),
        local_environment,
        seasonality,
        from: date_param(params, "from")?,
        to: date_param(params, "to")?,
    };
    q.validate()?;
    Ok(q)
}

async fn list_networks(
    State(st): State<ApiState>,
    Query(params): Query<HashMap<String, String>>,
) -> ApiResult<Json<Vec<NetworkRecord>>> {
    let q = parse_search(&params)?;
    Ok(Json(st.catalog.search_networks(&q)?))
}

async fn network_detail(State(st): State<ApiState>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(Json(st.catalog.network_detail(&id)?).into_response())
}

async fn network_sites(State(st): State<ApiState>, Path(id): Path<String>) -> ApiResult<Json<Vec<SiteRecord>>> {
    Ok(Json(st.catalog.sites_of(&id)?))
}

async fn site_sensors(State(st): State<ApiState>, Path(id): Path<String>) -> ApiResult<Json<Vec<SensorRecord>>> {
    Ok(Json(st.catalog.sensors_of(&id)?))
}

async fn network_fair(State(st): State<ApiState>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(Json(st.catalog.fair_checklist(&id)?).into_response())
}

async fn stats(State(st): State<ApiState>, Query(params): Query<HashMap<String, String>>) -> ApiResult<Json<Value>> {
    if let Some(k) = params.keys().find(|k| k.as_str() != "group_by") {
        return Err(bad_query(format!("unknown parameter {k:?}")));
    }
    let group_by: GroupBy = params
        .get("group_by")
        .ok_or_else(|| bad_query("group_by is required"))?
        .parse()?;
    let counts = st.catalog.stats(group_by);
    let total: usize = counts.values().sum();
    Ok(Json(
        json!({ "group_by": group_by.name(), "total": total, "counts": counts }),
    ))
}

fn authorize(st: &ApiState, headers: &HeaderMap) -> ApiResult<()> {
    let presented = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .map(str::trim);
    match (&st.admin_token, presented) {
        (Some(want), Some(got)) if !want.is_empty() && want == got => Ok(()),
        _ => Err(ApiError::new(
            StatusCode::UNAUTHORIZED,
            "unauthorized",
            "a valid bearer token is required",
        )),
    }
}

/// Vocabulary fields are checked before typed decoding so that a value
/// outside a closed list reports as a conflict, not as a malformed body.
fn check_vocabulary(v: &Value) -> Result<(), CatalogError> {
    let s = |k: &str| v.get(k).and_then(Value::as_str);
    if let Some(e) = s("local_environment") {
        e.parse::<LocalEnvironment>()?;
    }
    if let Some(e) = s("seasonality") {
        e.parse::<Seasonality>()?;
    }
    let mut vars: Vec<&str> = s("variable").into_iter().collect();
    if let Some(list) = v.get("measured_variables").and_then(Value::as_array) {
        vars.extend(list.iter().filter_map(Value::as_str));
    }
    for var in vars {
        var.parse::<fairmet_core::obs::VariableKind>()
            .map_err(|_| CatalogError::VocabularyViolation(format!("variable {var:?}")))?;
    }
    Ok(())
}

fn decode<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    let v: Value = serde_json::from_slice(body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_body", format!("malformed JSON: {e}")))?;
    check_vocabulary(&v)?;
    serde_json::from_value(v).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_body", e.to_string()))
}

fn created(id: String) -> Response {
    (StatusCode::CREATED, Json(json!({ "id": id }))).into_response()
}

async fn post_network(State(st): State<ApiState>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    authorize(&st, &headers)?;
    let r: NetworkRecord = decode(&body)?;
    Ok(created(st.catalog.upsert(Record::Network(r))?))
}

async fn post_site(State(st): State<ApiState>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    authorize(&st, &headers)?;
    let r: SiteRecord = decode(&body)?;
    Ok(created(st.catalog.upsert(Record::Site(r))?))
}

async fn post_sensor(State(st): State<ApiState>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    authorize(&st, &headers)?;
    let r: SensorRecord = decode(&body)?;
    Ok(created(st.catalog.upsert(Record::Sensor(r))?))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

pub fn router(state: ApiState) -> Router {
    Router::new()
        .route("/api/networks", get(list_networks).post(post_network))
        .route("/api/networks/{id}", get(network_detail))
        .route("/api/networks/{id}/sites", get(network_sites))
        .route("/api/networks/{id}/fair", get(network_fair))
        .route("/api/sites", axum::routing::post(post_site))
        .route("/api/sites/{id}/sensors", get(site_sensors))
        .route("/api/sensors", axum::routing::post(post_sensor))
        .route("/api/stats", get(stats))
        .fallback(not_found)
        .with_state(state)
}

/// Serve until `shutdown` resolves, then flush the store.
pub async fn serve(
    catalog: Arc<Catalog>,
    admin_token: Option<String>,
    listener: tokio::net::TcpListener,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let app = router(ApiState {
        catalog: catalog.clone(),
        admin_token,
    });
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await?;
    catalog.flush().map_err(std::io::Error::other)
}

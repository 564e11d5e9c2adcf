//! JSON-over-HTTP API.

use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use vobe_core::dsl::print_class;
use vobe_core::mapss::SpecDocument;
use vobe_core::model::OrganizationRecord;
use vobe_core::social::SocialNetwork;

use crate::service::{InceptRequest, PlanRequest, Problem, RegistryError, SearchRequest, Service};

const DEFAULT_POLL: Duration = Duration::from_secs(25);
const MAX_POLL: Duration = Duration::from_secs(60);

type Shared = State<Arc<Service>>;

pub struct ApiError(RegistryError);

impl From<RegistryError> for ApiError {
    fn from(e: RegistryError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, kind) = match &self.0 {
            RegistryError::Invalid { .. } => (StatusCode::BAD_REQUEST, "validation"),
            RegistryError::NotFound { .. } => (StatusCode::NOT_FOUND, "notFound"),
            RegistryError::Conflict { .. } => (StatusCode::CONFLICT, "conflict"),
            RegistryError::CapExceeded { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "capExceeded"),
            RegistryError::Storage(_) => (StatusCode::INTERNAL_SERVER_ERROR, "storage"),
        };
        if status.is_server_error() {
            tracing::error!(error = %self.0, "request failed");
        }
        let mut body = json!({ "error": kind, "message": self.0.to_string() });
        match &self.0 {
            RegistryError::Invalid { problems, .. } => body["violations"] = json!(problems),
            RegistryError::Conflict { expected, actual, .. } => {
                body["expectedVersion"] = json!(expected);
                body["currentVersion"] = json!(actual);
            }
            RegistryError::CapExceeded { count, cap } => {
                body["count"] = json!(count.to_string());
                body["cap"] = json!(cap);
            }
            _ => {}
        }
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Runs a service call off the async workers.
async fn blocking<T, F>(service: Arc<Service>, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&Service) -> Result<T, RegistryError> + Send + 'static,
{
    match tokio::task::spawn_blocking(move || f(&service)).await {
        Ok(result) => result.map(Json).map_err(ApiError),
        Err(join) => Err(ApiError(RegistryError::invalid(format!("request aborted: {join}")))),
    }
}

fn decode<T: DeserializeOwned + Default>(body: &Bytes) -> Result<T, RegistryError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    decode_required(body)
}

fn decode_required<T: DeserializeOwned>(body: &Bytes) -> Result<T, RegistryError> {
    let mut de = serde_json::Deserializer::from_slice(body);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let message = e.into_inner().to_string();
        RegistryError::Invalid {
            message: format!("invalid request body: {message}"),
            problems: vec![Problem {
                rule: None,
                path: Some(path),
                message,
            }],
        }
    })
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/organizations/{id}", get(get_organization).put(put_organization))
        .route("/organizations/{id}/versions/{version}", get(get_organization_version))
        .route("/classes/{name}", get(get_class).put(put_class))
        .route("/search", post(search))
        .route("/specs/{id}", get(get_spec).put(put_spec))
        .route("/specs/{id}/candidates", post(candidates))
        .route("/specs/{id}/variants", post(variants))
        .route("/specs/{id}/incept", post(incept))
        .route("/vos/{id}", get(get_vo))
        .route("/network", get(get_network).put(put_network))
        .route("/verify/{org_id}", post(verify))
        .route("/events", get(events))
        .route("/export", get(export))
        .with_state(service)
}

/// Serves until Ctrl-C.
pub async fn serve(service: Arc<Service>, listener: tokio::net::TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn get_organization(State(s): Shared, Path(id): Path<String>) -> ApiResult<OrganizationRecord> {
    blocking(s, move |s| s.organization(&id, None)).await
}

async fn get_organization_version(
    State(s): Shared,
    Path((id, version)): Path<(String, u32)>,
) -> ApiResult<OrganizationRecord> {
    blocking(s, move |s| s.organization(&id, Some(version))).await
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct PutQuery {
    expected_version: Option<u32>,
}

async fn put_organization(
    State(s): Shared,
    Path(id): Path<String>,
    Query(q): Query<PutQuery>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let text = String::from_utf8(body.to_vec()).map_err(|_| RegistryError::invalid("body is not UTF-8"))?;
    let record = OrganizationRecord::from_json_str(&text).map_err(|e| RegistryError::Invalid {
        message: format!("cannot decode record: {e}"),
        problems: vec![Problem {
            rule: None,
            path: Some(e.path.clone()),
            message: e.message.clone(),
        }],
    })?;
    if record.org_id().as_str() != id {
        return Err(RegistryError::invalid(format!("record id `{}` does not match `{id}`", record.org_id())).into());
    }
    let stored = blocking(s, move |s| s.put_record(record, q.expected_version)).await?;
    let status = if stored.changed && stored.version == Some(1) {
        StatusCode::CREATED
    } else {
        StatusCode::OK
    };
    Ok((status, stored).into_response())
}

#[derive(Serialize)]
struct ClassBody {
    name: String,
    text: String,
}

async fn get_class(State(s): Shared, Path(name): Path<String>) -> ApiResult<ClassBody> {
    blocking(s, move |s| {
        let class = s.class(&name)?;
        Ok(ClassBody {
            text: print_class(&class),
            name,
        })
    })
    .await
}

#[derive(Deserialize)]
struct ClassText {
    text: String,
}

/// Accepts `{"text": "..."}` or the class text itself.
async fn put_class(State(s): Shared, Path(name): Path<String>, body: Bytes) -> ApiResult<serde_json::Value> {
    let text = match serde_json::from_slice::<ClassText>(&body) {
        Ok(t) => t.text,
        Err(_) => String::from_utf8(body.to_vec()).map_err(|_| RegistryError::invalid("body is not UTF-8"))?,
    };
    blocking(s, move |s| {
        let mut stored = s.put_classes(&text, Some(&name))?;
        Ok(json!(stored.remove(0)))
    })
    .await
}

async fn search(State(s): Shared, body: Bytes) -> ApiResult<serde_json::Value> {
    let request: SearchRequest = decode_required(&body)?;
    blocking(s, move |s| Ok(json!({ "ranking": s.search(&request)? }))).await
}

async fn get_spec(State(s): Shared, Path(id): Path<String>) -> ApiResult<SpecDocument> {
    blocking(s, move |s| s.spec_document(&id)).await
}

async fn put_spec(State(s): Shared, Path(id): Path<String>, body: Bytes) -> ApiResult<serde_json::Value> {
    let document: SpecDocument = decode_required(&body)?;
    if document.id != id {
        return Err(RegistryError::invalid(format!("specification id `{}` does not match `{id}`", document.id)).into());
    }
    blocking(s, move |s| Ok(json!(s.put_spec(document)?))).await
}

async fn candidates(State(s): Shared, Path(id): Path<String>, body: Bytes) -> ApiResult<serde_json::Value> {
    let request: PlanRequest = decode(&body)?;
    blocking(s, move |s| Ok(json!({ "specId": id, "candidates": s.candidates(&id, &request)? }))).await
}

async fn variants(State(s): Shared, Path(id): Path<String>, body: Bytes) -> ApiResult<serde_json::Value> {
    let request: PlanRequest = decode(&body)?;
    blocking(s, move |s| Ok(json!(s.plan(&id, &request)?))).await
}

async fn incept(State(s): Shared, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let request: InceptRequest = decode_required(&body)?;
    let vo = blocking(s, move |s| s.incept(&id, &request)).await?;
    Ok((StatusCode::CREATED, vo).into_response())
}

async fn get_vo(State(s): Shared, Path(id): Path<String>) -> ApiResult<vobe_core::mapss::VoRecord> {
    blocking(s, move |s| s.vo(&id)).await
}

async fn get_network(State(s): Shared) -> ApiResult<SocialNetwork> {
    blocking(s, |s| Ok(s.network())).await
}

async fn put_network(State(s): Shared, body: Bytes) -> ApiResult<serde_json::Value> {
    let network: SocialNetwork = decode_required(&body)?;
    blocking(s, move |s| Ok(json!(s.put_network(network)?))).await
}

async fn verify(State(s): Shared, Path(org_id): Path<String>) -> ApiResult<vobe_core::social::VerificationReport> {
    blocking(s, move |s| s.verify(&org_id)).await
}

#[derive(Deserialize)]
struct EventsQuery {
    topic: Option<String>,
    #[serde(default)]
    since: u64,
    /// Milliseconds to wait for a new event; 0 returns at once.
    timeout: Option<u64>,
}

async fn events(State(s): Shared, Query(q): Query<EventsQuery>) -> ApiResult<serde_json::Value> {
    let topic = q
        .topic
        .filter(|t| !t.is_empty())
        .ok_or_else(|| RegistryError::invalid("query parameter `topic` is required"))?;
    let timeout = q.timeout.map_or(DEFAULT_POLL, Duration::from_millis).min(MAX_POLL);
    blocking(s, move |s| {
        let events = s.events().wait(&topic, q.since, timeout);
        let last = events.last().map_or(q.since, |e| e.sequence);
        Ok(json!({ "topic": topic, "events": events, "next": last }))
    })
    .await
}

async fn export(State(s): Shared) -> Response {
    let text = match tokio::task::spawn_blocking(move || s.export()).await {
        Ok(text) => text,
        Err(e) => return ApiError(RegistryError::invalid(format!("request aborted: {e}"))).into_response(),
    };
    ([(axum::http::header::CONTENT_TYPE, "application/json")], text).into_response()
}

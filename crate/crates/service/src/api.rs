//! `/v1` HTTP routes over a [`Service`].
//!
//! Bodies are read as text and parsed here so every validation failure maps
//! to 422 with the module's own message. Blocking work (ingest, costing)
//! runs on the blocking pool.

use std::convert::Infallible;
use std::time::Duration;

use axum::extract::{Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use mmschema_core::learner::{EpisodeSummary, SortKey};
use mmschema_core::AttrId;
use serde::Deserialize;
use serde_json::json;
use tokio::sync::broadcast::error::RecvError;

use crate::session::{ApiError, RunEvent, Service, Status};

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self {
            ApiError::Conflict(_) => StatusCode::CONFLICT,
            ApiError::Invalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce() -> ApiResult<T> + Send + 'static,
{
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::Internal(e.to_string()))?
}

pub fn router(service: Service) -> Router {
    Router::new()
        .route("/v1/status", get(status))
        .route("/v1/dataset", post(dataset))
        .route("/v1/constraints", post(constraints))
        .route("/v1/workload", post(workload))
        .route("/v1/params", post(params))
        .route("/v1/run/start", post(start))
        .route("/v1/run/stop", post(stop))
        .route("/v1/run/events", get(events))
        .route("/v1/schemas", get(schemas))
        .route("/v1/whatif", post(whatif))
        .route("/v1/export/ddl", get(export_ddl))
        .with_state(service)
}

async fn status(State(svc): State<Service>) -> Json<Status> {
    Json(svc.status())
}

async fn dataset(State(svc): State<Service>, body: String) -> ApiResult<Response> {
    let view = blocking(move || svc.load_dataset(&body)).await?;
    Ok(Json(view).into_response())
}

async fn constraints(State(svc): State<Service>, body: String) -> ApiResult<Response> {
    let classes = svc.set_constraints(&body)?;
    Ok(Json(json!({ "classes": classes })).into_response())
}

async fn workload(State(svc): State<Service>, body: String) -> ApiResult<Response> {
    let checks = svc.set_workload(&body)?;
    Ok(Json(json!({ "queries": checks })).into_response())
}

async fn params(State(svc): State<Service>, body: String) -> ApiResult<Response> {
    Ok(Json(svc.set_params(&body)?).into_response())
}

async fn start(State(svc): State<Service>) -> ApiResult<Response> {
    let started = blocking(move || svc.start()).await?;
    Ok((StatusCode::ACCEPTED, Json(started)).into_response())
}

async fn stop(State(svc): State<Service>) -> ApiResult<Response> {
    Ok((StatusCode::ACCEPTED, Json(svc.stop()?)).into_response())
}

fn episode_event(s: &EpisodeSummary) -> Event {
    Event::default().id(s.episode.to_string()).event("episode").json_data(s).expect("summaries serialize")
}

fn end_event(s: &Status) -> Event {
    Event::default().event("end").json_data(s).expect("status serializes")
}

/// Replays episodes after `Last-Event-ID`, then follows the live run. The
/// stream closes after a final `end` event.
async fn events(
    State(svc): State<Service>,
    headers: HeaderMap,
) -> ApiResult<Sse<impl Stream<Item = Result<Event, Infallible>>>> {
    let after =
        headers.get("last-event-id").and_then(|v| v.to_str().ok()).and_then(|v| v.trim().parse().ok()).unwrap_or(0);
    let sub = svc.subscribe(after)?;
    let backlog = stream::iter(sub.backlog.iter().map(episode_event).collect::<Vec<_>>());
    let tail = match sub.live {
        None => stream::iter(vec![end_event(&sub.status)]).boxed(),
        Some(rx) => stream::unfold(Some(rx), |rx| async move {
            let mut rx = rx?;
            loop {
                match rx.recv().await {
                    Ok(RunEvent::Episode(s)) => return Some((episode_event(&s), Some(rx))),
                    Ok(RunEvent::End(status)) => return Some((end_event(&status), None)),
                    Err(RecvError::Lagged(_)) => continue,
                    Err(RecvError::Closed) => return None,
                }
            }
        })
        .boxed(),
    };
    let stream = backlog.chain(tail).map(Ok);
    Ok(Sse::new(stream).keep_alive(KeepAlive::new().interval(Duration::from_secs(15))))
}

#[derive(Debug, Deserialize)]
struct SortQuery {
    sort: Option<String>,
}

async fn schemas(State(svc): State<Service>, Query(q): Query<SortQuery>) -> ApiResult<Response> {
    let key = match q.sort.as_deref() {
        None | Some("time") => SortKey::Time,
        Some("space") => SortKey::Space,
        Some(other) => return Err(ApiError::Invalid(format!("sort must be `time` or `space`, not `{other}`"))),
    };
    Ok(Json(svc.schemas(key)?).into_response())
}

async fn whatif(State(svc): State<Service>, body: String) -> ApiResult<Response> {
    let groups: Vec<Vec<AttrId>> = serde_json::from_str(&body).map_err(|e| ApiError::Invalid(e.to_string()))?;
    let outcome = blocking(move || svc.whatif(&groups)).await?;
    Ok(Json(outcome).into_response())
}

#[derive(Debug, Deserialize)]
struct DdlQuery {
    signature: Option<String>,
}

async fn export_ddl(State(svc): State<Service>, Query(q): Query<DdlQuery>) -> ApiResult<Response> {
    let sql = blocking(move || svc.export_ddl(q.signature.as_deref())).await?;
    Ok(([(header::CONTENT_TYPE, "application/sql; charset=utf-8")], sql).into_response())
}

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Query, State};
use axum::http::{HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use dengue_core::hitl::{CandidateDecision, HitlSession};
use dengue_core::reports::{self, AggregateParams, CityCorpParams, CorrelationParams, GapParams};
use dengue_core::Label;
use serde::{Deserialize, Serialize};
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;
use tower_http::trace::TraceLayer;

use crate::error::{ApiEnvelope, ApiError};
use crate::{ApiConfig, AppState, Replay};

/// Page size for the queue and aggregate endpoints when `limit` is absent.
pub const DEFAULT_PAGE_LIMIT: usize = 50;

type Shared = State<Arc<AppState>>;

pub fn router(state: Arc<AppState>, config: &ApiConfig) -> Router {
    let api = Router::new()
        .route("/health", get(health))
        .route("/stats", get(stats))
        .route("/aggregate", get(aggregate))
        .route("/correlation", get(correlation))
        .route("/gaps", get(gaps))
        .route("/citycorp", get(citycorp))
        .route("/lexicon", get(lexicon))
        .route("/lexicon/review", post(review))
        .route("/annotation/queue", get(queue))
        .route("/annotation/vote", post(vote))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "NOT_FOUND", "no such endpoint") });

    let mut app = Router::new().nest("/api", api).with_state(state);
    if let Some(dir) = &config.static_dir {
        app = app.fallback_service(ServeDir::new(dir));
    }
    if !config.cors.is_empty() {
        let origins: Vec<HeaderValue> = config.cors.iter().filter_map(|o| o.parse().ok()).collect();
        app = app.layer(
            CorsLayer::new()
                .allow_origin(origins)
                .allow_methods([Method::GET, Method::POST])
                .allow_headers([axum::http::header::CONTENT_TYPE]),
        );
    }
    app.layer(TraceLayer::new_for_http())
}

fn ok<T: Serialize>(value: &T) -> Response {
    match serde_json::to_value(value) {
        Ok(v) => Json(ApiEnvelope::ok(v)).into_response(),
        Err(e) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", e.to_string()).into_response(),
    }
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> Result<T, ApiError> {
    q.map(|Query(t)| t).map_err(|e| ApiError::bad_request(e.body_text()))
}

fn respond<T: Serialize>(r: Result<T, ApiError>) -> Response {
    match r {
        Ok(v) => ok(&v),
        Err(e) => e.into_response(),
    }
}

async fn health(State(st): Shared) -> Response {
    ok(&reports::health(&st.snapshot()))
}

#[derive(Debug, Deserialize)]
struct YearQuery {
    year: Option<i32>,
}

async fn stats(State(st): Shared, q: Result<Query<YearQuery>, QueryRejection>) -> Response {
    respond(query(q).map(|q| reports::stats_report(&st.snapshot(), q.year)))
}

async fn aggregate(State(st): Shared, q: Result<Query<AggregateParams>, QueryRejection>) -> Response {
    respond(query(q).and_then(|mut p| {
        p.limit.get_or_insert(DEFAULT_PAGE_LIMIT);
        Ok(reports::aggregate_report(&st.snapshot(), &p)?)
    }))
}

async fn correlation(State(st): Shared, q: Result<Query<CorrelationParams>, QueryRejection>) -> Response {
    respond(query(q).and_then(|p| Ok(reports::correlation_report(&st.snapshot(), &p)?)))
}

async fn gaps(State(st): Shared, q: Result<Query<GapParams>, QueryRejection>) -> Response {
    respond(query(q).and_then(|p| Ok(reports::gap_report(&st.snapshot(), &p)?)))
}

async fn citycorp(State(st): Shared, q: Result<Query<CityCorpParams>, QueryRejection>) -> Response {
    respond(query(q).and_then(|p| Ok(reports::citycorp_report(&st.snapshot(), &p)?)))
}

#[derive(Debug, Deserialize)]
struct VersionQuery {
    version: Option<u32>,
}

async fn lexicon(State(st): Shared, q: Result<Query<VersionQuery>, QueryRejection>) -> Response {
    respond(query(q).and_then(|q| Ok(reports::lexicon_report(&st.snapshot(), q.version)?)))
}

#[derive(Debug, Deserialize)]
struct PageQuery {
    limit: Option<usize>,
    offset: Option<usize>,
}

async fn queue(State(st): Shared, q: Result<Query<PageQuery>, QueryRejection>) -> Response {
    respond(query(q).map(|q| reports::queue_report(&st.snapshot(), Some(q.limit.unwrap_or(DEFAULT_PAGE_LIMIT)), q.offset)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteRequest {
    pub doc_id: String,
    /// Labels as `Disease`/`Intervention` (or `D`/`I`).
    pub votes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewRequest {
    pub decisions: BTreeMap<String, CandidateDecision>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request_id: Option<String>,
}

async fn vote(State(st): Shared, body: Result<Json<VoteRequest>, JsonRejection>) -> Response {
    let req = match body {
        Ok(Json(r)) => r,
        Err(e) => return ApiError::bad_request(e.body_text()).into_response(),
    };
    let id = req.request_id.clone();
    let fingerprint = format!("vote:{}:{}", req.doc_id, req.votes.join(","));
    mutate(&st, id, fingerprint, move |session| {
        let votes = req
            .votes
            .iter()
            .map(|v| v.parse::<Label>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ApiError::bad_request(e.to_string()))?;
        let doc = session.record_votes(&req.doc_id, &votes).map_err(dengue_core::Error::from)?;
        Ok(serde_json::to_value(doc).expect("labeled doc serializes"))
    })
    .await
}

async fn review(State(st): Shared, body: Result<Json<ReviewRequest>, JsonRejection>) -> Response {
    let req = match body {
        Ok(Json(r)) => r,
        Err(e) => return ApiError::bad_request(e.body_text()).into_response(),
    };
    let id = req.request_id.clone();
    let fingerprint = format!("review:{}", serde_json::to_string(&req.decisions).unwrap_or_default());
    mutate(&st, id, fingerprint, move |session| {
        let outcome = session.review_candidates(&req.decisions).map_err(dengue_core::Error::from)?;
        Ok(serde_json::to_value(outcome).expect("review outcome serializes"))
    })
    .await
}

/// Runs `apply` on a copy of the session under the writer lock. On success
/// the session is persisted before the new snapshot becomes visible. The
/// response is remembered under `request_id` so a retry replays it.
async fn mutate(
    st: &AppState,
    request_id: Option<String>,
    fingerprint: String,
    apply: impl FnOnce(&mut HitlSession) -> Result<serde_json::Value, ApiError>,
) -> Response {
    if st.read_only {
        return ApiError::read_only().into_response();
    }
    let mut writer = st.writer.lock().await;
    if let Some(replay) = request_id.as_ref().and_then(|id| writer.replays.get(id)) {
        if replay.fingerprint != fingerprint {
            return ApiError::new(StatusCode::CONFLICT, "REQUEST_ID_REUSED", "request id was already used for a different request")
                .into_response();
        }
        return (replay.status, Json(replay.envelope.clone())).into_response();
    }

    let current = st.snapshot();
    let mut session = current.session.clone();
    let (status, envelope) = match apply(&mut session) {
        Ok(data) => match st.workspace.save_session(&session) {
            Ok(()) => {
                st.publish((*current).clone().with_session(session));
                (StatusCode::OK, ApiEnvelope::ok(data))
            }
            Err(e) => {
                tracing::error!(error = %e, "persisting session failed");
                let e = ApiError::from(dengue_core::Error::from(e));
                // not remembered: a retry should try the write again
                return e.into_response();
            }
        },
        Err(e) => (e.status, e.envelope()),
    };
    if let Some(id) = request_id {
        writer.replays.insert(id, Replay { fingerprint, status, envelope: envelope.clone() });
    }
    (status, Json(envelope)).into_response()
}

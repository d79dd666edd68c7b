use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use dengue_core::analytics::AnalyticsError;
use dengue_core::hitl::HitlError;
use dengue_core::Error;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const API_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

/// Response wrapper. Exactly one of `data` and `error` is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiEnvelope {
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
    pub api_version: String,
}

impl ApiEnvelope {
    pub fn ok(data: Value) -> Self {
        ApiEnvelope { status: Status::Ok, data: Some(data), error: None, api_version: API_VERSION.into() }
    }

    pub fn error(code: &str, message: impl Into<String>) -> Self {
        ApiEnvelope {
            status: Status::Error,
            data: None,
            error: Some(ErrorBody { code: code.into(), message: message.into() }),
            api_version: API_VERSION.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into() }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BAD_REQUEST", message)
    }

    pub fn read_only() -> Self {
        Self::new(StatusCode::FORBIDDEN, "READ_ONLY", "the service is running in read-only mode")
    }

    pub fn envelope(&self) -> ApiEnvelope {
        ApiEnvelope::error(self.code, self.message.clone())
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        use StatusCode as S;
        let message = e.to_string();
        let (status, code) = match &e {
            Error::Hitl(h) => match h {
                HitlError::WrongVoteCount { .. } => (S::UNPROCESSABLE_ENTITY, "VOTE_COUNT"),
                HitlError::AlreadyLabeled(_) => (S::CONFLICT, "ALREADY_LABELED"),
                HitlError::NotPending(_) => (S::NOT_FOUND, "NOT_PENDING"),
                HitlError::Terminated => (S::CONFLICT, "TERMINATED"),
                HitlError::NoPendingCandidates => (S::CONFLICT, "NO_PENDING_CANDIDATES"),
                HitlError::UnknownCandidate(_) => (S::UNPROCESSABLE_ENTITY, "UNKNOWN_CANDIDATE"),
                HitlError::OppositeClass { .. } | HitlError::Lexicon(_) => (S::UNPROCESSABLE_ENTITY, "LEXICON_CONFLICT"),
                HitlError::EmptyLabelStore => (S::NOT_FOUND, "EMPTY_LABEL_STORE"),
                _ => (S::INTERNAL_SERVER_ERROR, "HITL"),
            },
            Error::Analytics(a) => match a {
                AnalyticsError::TooFewPoints(_) | AnalyticsError::AllZeroPeriod | AnalyticsError::TooFewDistricts(_) => {
                    (S::UNPROCESSABLE_ENTITY, "INSUFFICIENT_DATA")
                }
                AnalyticsError::UnsupportedGranularity(_) => (S::BAD_REQUEST, "UNSUPPORTED_GRANULARITY"),
                _ => (S::BAD_REQUEST, "BAD_REQUEST"),
            },
            Error::Invalid(_) => (S::BAD_REQUEST, "BAD_REQUEST"),
            Error::Workspace(_) => (S::INTERNAL_SERVER_ERROR, "STORE"),
            _ => (S::INTERNAL_SERVER_ERROR, "INTERNAL"),
        };
        ApiError::new(status, code, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.envelope())).into_response()
    }
}

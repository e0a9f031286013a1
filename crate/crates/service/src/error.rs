use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use cwb_core::ach::AchError;
use serde_json::json;

/// Error body: `{"error": {"code": ..., "message": ...}}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status: StatusCode::BAD_REQUEST, code, message: message.into() }
    }

    pub fn not_found(code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status: StatusCode::NOT_FOUND, code, message: message.into() }
    }

    pub fn conflict(code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status: StatusCode::CONFLICT, code, message: message.into() }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError { status: StatusCode::INTERNAL_SERVER_ERROR, code: "internal", message: message.into() }
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}: {}", self.status.as_u16(), self.code, self.message)
    }
}

impl std::error::Error for ApiError {}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "code": self.code, "message": self.message } });
        (self.status, Json(body)).into_response()
    }
}

impl From<AchError> for ApiError {
    fn from(e: AchError) -> Self {
        let message = e.to_string();
        match e {
            AchError::UnknownHypothesis(_) => ApiError::not_found("unknown_hypothesis", message),
            AchError::UnknownEvidence(_) => ApiError::not_found("unknown_evidence", message),
            AchError::DanglingReference(_) => ApiError::not_found("dangling_reference", message),
            AchError::Duplicate { .. } => ApiError::conflict("duplicate", message),
            AchError::StaleRevision { .. } => ApiError::conflict("stale_revision", message),
            AchError::EmptyText(_)
            | AchError::EmptyMatrix
            | AchError::InvalidScoreTable(_)
            | AchError::ConfidenceOutOfRange(_) => ApiError::bad_request("invalid", message),
            AchError::Io(_) | AchError::Json(_) => ApiError::internal(message),
        }
    }
}

impl From<std::io::Error> for ApiError {
    fn from(e: std::io::Error) -> Self {
        ApiError::internal(e.to_string())
    }
}

impl From<serde_json::Error> for ApiError {
    fn from(e: serde_json::Error) -> Self {
        ApiError::internal(e.to_string())
    }
}

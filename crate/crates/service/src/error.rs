use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use fstlab_core::ProtocolError;
use serde_json::{json, Value};

use crate::manifest::ManifestError;
use crate::reports::ReportError;

/// JSON error body: `{"error": {"code": ..., "message": ..., "details": ...}}`.
/// Codes are stable; messages are for humans.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub details: Option<Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            details: None,
        }
    }

    pub fn unauthorized() -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing or unknown bearer token")
    }

    pub fn forbidden(principal: &str) -> Self {
        Self::new(
            StatusCode::FORBIDDEN,
            "permission_denied",
            format!("{principal} lacks the role required for this action"),
        )
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut err = json!({ "code": self.code, "message": self.message });
        if let Some(d) = self.details {
            err["details"] = d;
        }
        (self.status, Json(json!({ "error": err }))).into_response()
    }
}

impl From<ProtocolError> for ApiError {
    fn from(e: ProtocolError) -> Self {
        let status = match &e {
            ProtocolError::UnknownImage(_) => StatusCode::NOT_FOUND,
            ProtocolError::DuplicateImage(_)
            | ProtocolError::DuplicateAnnotation { .. }
            | ProtocolError::ImageNotOpen { .. }
            | ProtocolError::NotReviewable { .. } => StatusCode::CONFLICT,
            ProtocolError::PermissionDenied { .. } => StatusCode::FORBIDDEN,
            ProtocolError::Log(_) | ProtocolError::Replay(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<ManifestError> for ApiError {
    fn from(e: ManifestError) -> Self {
        let mut err = ApiError::new(StatusCode::BAD_REQUEST, e.code(), e.to_string());
        err.details = match &e {
            ManifestError::Parse { line, .. } => Some(json!({ "line": line })),
            ManifestError::MissingImageFiles(files) => Some(json!({ "missing": files })),
            ManifestError::Io(_) => None,
        };
        err
    }
}

impl From<ReportError> for ApiError {
    fn from(e: ReportError) -> Self {
        let status = match e.code() {
            "unknown_method" => StatusCode::NOT_FOUND,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

/// JSON error body: `{"code": ..., "message": ...}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_parameter", message)
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("unknown {what} `{id}`"))
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<forge_core::Error> for ApiError {
    fn from(e: forge_core::Error) -> Self {
        use forge_core::Error as E;
        let (status, code) = match &e {
            E::Io { .. }
            | E::Parse { .. }
            | E::OutOfRangeIndex { .. }
            | E::NonTriangle { .. }
            | E::RepeatedVertex { .. }
            | E::NonManifoldEdge { .. }
            | E::EmptyMesh
            | E::DegenerateFaces { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_mesh"),
            E::UnknownRegion(_) => (StatusCode::BAD_REQUEST, "unknown_region"),
            E::EmptyRegion => (StatusCode::BAD_REQUEST, "empty_region"),
            E::SingularSystem(_) | E::NonConvergence { .. } => {
                (StatusCode::INTERNAL_SERVER_ERROR, "solver_failure")
            }
            E::Json(_) => (StatusCode::BAD_REQUEST, "invalid_json"),
            _ => (StatusCode::BAD_REQUEST, "invalid_parameter"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            code: self.code.to_string(),
            message: self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

pub type ApiResult<T> = Result<T, ApiError>;

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use canoe::contestation::{ContestationError, ErrorClass};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Session(#[from] ContestationError),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("not found: {0}")]
    NotFound(String),
}

/// The closed set of error codes an API response can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    NotFound,
    WrongPhase,
    Validation,
    NonConvergence,
    BackendFailure,
    Conflict,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::WrongPhase | ErrorCode::Conflict => StatusCode::CONFLICT,
            ErrorCode::Validation | ErrorCode::NonConvergence => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorCode::BackendFailure => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

/// Error body of every failed request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default)]
    pub detail: Value,
}

impl ServiceError {
    pub fn code(&self) -> ErrorCode {
        match self {
            ServiceError::Conflict(_) => ErrorCode::Conflict,
            ServiceError::NotFound(_) => ErrorCode::NotFound,
            ServiceError::Session(e) => match e.class() {
                ErrorClass::NotFound => ErrorCode::NotFound,
                ErrorClass::WrongPhase => ErrorCode::WrongPhase,
                ErrorClass::Validation => ErrorCode::Validation,
                ErrorClass::NonConvergence => ErrorCode::NonConvergence,
                ErrorClass::BackendFailure | ErrorClass::Internal => ErrorCode::BackendFailure,
                // The stored session disagrees with its own log.
                ErrorClass::BrokenChain => ErrorCode::Conflict,
            },
        }
    }

    pub fn to_api(&self) -> ApiError {
        let detail = match self {
            ServiceError::Session(ContestationError::NonConvergence {
                iterations,
                residual,
            }) => {
                json!({"iterations": iterations, "residual": residual})
            }
            ServiceError::Session(ContestationError::WrongPhase { expected, actual }) => {
                json!({"expected": expected, "actual": actual})
            }
            ServiceError::Session(ContestationError::PendingArguments(ids)) => {
                json!({"pending": ids})
            }
            ServiceError::Session(ContestationError::BrokenChain { seq, .. }) => {
                json!({"seq": seq})
            }
            _ => Value::Null,
        };
        ApiError {
            code: self.code(),
            message: self.to_string(),
            detail,
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let body = self.to_api();
        (body.code.status(), Json(body)).into_response()
    }
}

use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use caliper_core::Error;
use serde::Serialize;

/// Error response: `{"error": {"code": ..., "message": ...}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

#[derive(Serialize)]
struct Body<'a> {
    error: Inner<'a>,
}

#[derive(Serialize)]
struct Inner<'a> {
    code: &'a str,
    message: &'a str,
}

impl ApiError {
    pub fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            code,
            message: message.into(),
        }
    }

    pub fn not_found(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::NOT_FOUND,
            code,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            code: "internal",
            message: message.into(),
        }
    }

    pub fn body(&self) -> String {
        serde_json::to_string(&Body {
            error: Inner {
                code: self.code,
                message: &self.message,
            },
        })
        .expect("error body serializes")
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::UnknownModel(_) => return Self::not_found("unknown_model", e.to_string()),
            Error::UnknownColumn(_) => "unknown_column",
            Error::UnknownCategory { .. } => "unknown_category",
            Error::DuplicateModel(_) => "duplicate_model",
            Error::EmptySelection => "empty_selection",
            Error::TooFewObservations { .. } => "too_few_observations",
            Error::ClassOutOfRange { .. } => "class_out_of_range",
            Error::RowCountMismatch { .. } => "row_count_mismatch",
            Error::InvalidParameter(_) => "invalid_parameter",
            _ => "invalid_input",
        };
        Self::bad_request(code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, [(header::CONTENT_TYPE, "application/json")], self.body()).into_response()
    }
}

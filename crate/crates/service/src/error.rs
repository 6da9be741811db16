use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use qualnet_core::metrics::MetricsError;
use qualnet_core::model::ModelError;
use qualnet_core::network::NetworkError;
use qualnet_core::pipeline::PipelineError;
use qualnet_core::provider::ProviderError;
use qualnet_core::store::StoreError;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    NotFound,
    InvalidInput,
    Conflict,
    ProviderUnavailable,
    Internal,
    Unauthorized,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::InvalidInput => StatusCode::BAD_REQUEST,
            ErrorCode::Conflict => StatusCode::CONFLICT,
            ErrorCode::ProviderUnavailable => StatusCode::SERVICE_UNAVAILABLE,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
            ErrorCode::Unauthorized => StatusCode::UNAUTHORIZED,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, thiserror::Error)]
#[error("{code:?}: {message}")]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            detail: None,
        }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = Some(detail);
        self
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::NotFound, message)
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::InvalidInput, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::Internal, message)
    }

    pub fn stale(expected: u64, current: u64) -> Self {
        Self::new(
            ErrorCode::Conflict,
            format!("expected revision {expected}, project is at {current}"),
        )
        .with_detail(serde_json::json!({ "expected_revision": expected, "revision": current }))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.code.status(), Json(self)).into_response()
    }
}

impl From<ModelError> for ApiError {
    fn from(e: ModelError) -> Self {
        let code = match e {
            ModelError::UnknownIndicator(_)
            | ModelError::UnknownConcept(_)
            | ModelError::UnknownSentence(_)
            | ModelError::UnknownEdge(_) => ErrorCode::NotFound,
            ModelError::DuplicateConceptName(_) => ErrorCode::Conflict,
            _ => ErrorCode::InvalidInput,
        };
        Self::new(code, e.to_string())
    }
}

impl From<ProviderError> for ApiError {
    fn from(e: ProviderError) -> Self {
        let code = match e {
            ProviderError::InvalidRequest(_) => ErrorCode::InvalidInput,
            _ => ErrorCode::ProviderUnavailable,
        };
        Self::new(code, e.to_string())
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Provider(p) => p.into(),
            PipelineError::Model(m) => m.into(),
            PipelineError::MalformedProviderOutput { .. } | PipelineError::InvalidLabel { .. } => {
                Self::new(ErrorCode::ProviderUnavailable, e.to_string())
            }
            other => Self::invalid(other.to_string()),
        }
    }
}

impl From<NetworkError> for ApiError {
    fn from(e: NetworkError) -> Self {
        match e {
            NetworkError::Provider(p) => p.into(),
            NetworkError::UnknownNode(_) | NetworkError::UnknownEdge(_) | NetworkError::UnknownConcept(_) => {
                Self::not_found(e.to_string())
            }
            other => Self::invalid(other.to_string()),
        }
    }
}

impl From<MetricsError> for ApiError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Provider(p) => p.into(),
            other => Self::invalid(other.to_string()),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::ValidationFailed(ref v) => {
                Self::invalid(e.to_string()).with_detail(serde_json::json!({ "violations": v }))
            }
            other => Self::internal(other.to_string()),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::invalid(e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        Self::invalid(e.body_text())
    }
}

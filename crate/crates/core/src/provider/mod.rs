//! Text-generation and embedding backends.
//!
//! Two contracts, [`ChatProvider`] and [`EmbeddingProvider`], with three
//! implementations: an OpenAI-compatible HTTP client, a scripted mock and a
//! transcript replayer. [`Recording`] wraps any of them and appends every
//! exchange to a [`Transcript`].

mod http;
mod mock;
mod replay;
mod spec;
mod transcript;

use serde::{Deserialize, Serialize};

pub use http::{HttpConfig, HttpProvider, API_KEY_ENV};
pub use mock::{HashingEmbedder, MockProvider, MockRule, MockScript, MOCK_EMBEDDING_DIM};
pub use replay::ReplayProvider;
pub use spec::{Backend, ProviderSpec, ProviderSpecError};
pub use transcript::{Clock, Recording, Transcript, TranscriptEntry, TranscriptRequest, TranscriptResponse};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum ProviderError {
    #[error("provider unavailable after {attempts} attempt(s): {last}")]
    Unavailable { attempts: u32, last: String },
    #[error("provider rejected the request: {0}")]
    Rejected(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub prompt: String,
    pub temperature: f64,
    pub max_output_chars: usize,
}

impl ChatRequest {
    pub const DEFAULT_MAX_OUTPUT_CHARS: usize = 4096;

    /// A request at temperature 0.
    pub fn new(prompt: impl Into<String>) -> Self {
        Self {
            prompt: prompt.into(),
            temperature: 0.0,
            max_output_chars: Self::DEFAULT_MAX_OUTPUT_CHARS,
        }
    }

    pub fn check(&self) -> Result<(), ProviderError> {
        if self.prompt.trim().is_empty() {
            return Err(ProviderError::InvalidRequest("prompt is empty".into()));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(ProviderError::InvalidRequest("temperature must be >= 0".into()));
        }
        Ok(())
    }
}

/// A dense embedding; its dimension is constant per provider instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector<T> {
    pub values: Vec<T>,
}

impl<T: crate::num::Scalar> EmbeddingVector<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn cosine(&self, other: &Self) -> T {
        crate::num::cosine(&self.values, &other.values)
    }

    pub fn norm(&self) -> T {
        crate::num::l2_norm(&self.values)
    }
}

pub trait ChatProvider: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError>;
}

pub trait EmbeddingProvider: Send + Sync {
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector<f64>>, ProviderError>;
}

pub(crate) fn check_texts(texts: &[String]) -> Result<(), ProviderError> {
    if texts.is_empty() {
        return Err(ProviderError::InvalidRequest("no texts to embed".into()));
    }
    if texts.iter().any(|t| t.is_empty()) {
        return Err(ProviderError::InvalidRequest("cannot embed an empty string".into()));
    }
    Ok(())
}

impl<P: ChatProvider + ?Sized> ChatProvider for &P {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        (**self).complete(request)
    }
}

impl<P: ChatProvider + ?Sized> ChatProvider for std::sync::Arc<P> {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        (**self).complete(request)
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for &P {
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector<f64>>, ProviderError> {
        (**self).embed(texts)
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for std::sync::Arc<P> {
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector<f64>>, ProviderError> {
        (**self).embed(texts)
    }
}

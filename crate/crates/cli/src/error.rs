use qualnet_core::baseline::CueRuleError;
use qualnet_core::ingest::IngestError;
use qualnet_core::metrics::MetricsError;
use qualnet_core::model::ModelError;
use qualnet_core::pipeline::PipelineError;
use qualnet_core::provider::{ProviderError, ProviderSpecError};
use qualnet_core::store::StoreError;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Usage,
    Validation,
    Provider,
    Io,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Usage => 2,
            Kind::Validation => 3,
            Kind::Provider => 4,
            Kind::Io => 5,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: Kind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(Kind::Usage, message)
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(Kind::Validation, message)
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Self::new(Kind::Io, format!("{}: {e}", path.display()))
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        let kind = match e {
            StoreError::Io { .. } => Kind::Io,
            _ => Kind::Validation,
        };
        Self::new(kind, e.to_string())
    }
}

impl From<ProviderSpecError> for CliError {
    fn from(e: ProviderSpecError) -> Self {
        let kind = match e {
            ProviderSpecError::Unknown(_) => Kind::Usage,
            ProviderSpecError::Io { .. } => Kind::Io,
            ProviderSpecError::Invalid { .. } => Kind::Validation,
            ProviderSpecError::Provider(_) => Kind::Provider,
        };
        Self::new(kind, e.to_string())
    }
}

impl From<ProviderError> for CliError {
    fn from(e: ProviderError) -> Self {
        Self::new(Kind::Provider, e.to_string())
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        let kind = match e {
            PipelineError::Provider(_)
            | PipelineError::MalformedProviderOutput { .. }
            | PipelineError::InvalidLabel { .. } => Kind::Provider,
            _ => Kind::Validation,
        };
        Self::new(kind, e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        let kind = match e {
            MetricsError::Provider(_) => Kind::Provider,
            _ => Kind::Validation,
        };
        Self::new(kind, e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        Self::validation(e.to_string())
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        Self::validation(e.to_string())
    }
}

impl From<CueRuleError> for CliError {
    fn from(e: CueRuleError) -> Self {
        Self::validation(e.to_string())
    }
}

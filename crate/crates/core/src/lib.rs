//! Causal network construction from qualitative text.
//!
//! The crate covers the whole engine behind the workbench: corpus and
//! SemEval ingestion, the provider-backed extraction pipeline (indicators,
//! concept mapping, pairwise causal classification, indicator merging), the
//! deterministic baselines, indicator/concept graph construction, evaluation
//! metrics and project persistence.
//!
//! Numeric code (metrics, similarity, percentages) is generic over the
//! scalar type through [`num::Scalar`]; the aliases below fix it to `f64`,
//! which is what the service and CLI use.

pub mod baseline;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod network;
pub mod num;
pub mod pipeline;
pub mod provider;
pub mod store;

pub use model::{
    CausalEdge, Concept, ConceptEdge, ConceptId, EdgeId, EdgeOrigin, EdgeStatus, Indicator,
    IndicatorId, IndicatorStatus, MergeRecord, Project, ResearchOverview, Sentence, SentenceId,
    SourceUnit, UnitId,
};

pub type Embedding = provider::EmbeddingVector<f64>;
pub type EvalReport = metrics::EvalReport<f64>;
pub type AgreementReport = metrics::AgreementReport<f64>;
pub type MatchPolicy = metrics::MatchPolicy<f64>;
pub type ConceptEvalReport = metrics::ConceptEvalReport<f64>;
pub type ConceptGraph = network::ConceptGraph;
pub type Percentage = num::Percentage<f64>;
pub type SearchHit = network::SearchHit<f64>;

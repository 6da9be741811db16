//! The provider-backed construction pipeline.
//!
//! Stages run in a fixed order: extract indicators, map unmapped indicators
//! to concepts, classify every indicator pair of each sentence, merge
//! equivalent indicators. Each stage works on a copy of the project and is
//! committed (revision + 1, concept network rebuilt) only when it succeeds,
//! so a failing stage leaves earlier stages in place.

pub mod choice;
pub mod extract;
pub mod label;
pub mod merge;
pub mod prompts;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use choice::{classify_pair, generate_pairs, indicator_with_concept, map_concept, CausalVerdict};
pub use extract::{extract_indicators, parse_indicator_list, ExtractedIndicator};
pub use merge::{apply_merge_records, merge_indicators, merge_records_from_pairs, EdgeRewrite, MergeDecision};
pub use prompts::{PromptSet, PromptTemplate, TemplateError, TemplateId};

use crate::model::{Concept, EdgeOrigin, IndicatorId, ModelError, Project, SentenceId};
use crate::provider::{ChatProvider, EmbeddingProvider, ProviderError};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("{stage}: no JSON object with an `indicators` string array in response {response:?}")]
    MalformedProviderOutput { stage: &'static str, response: String },
    #[error("{stage}: no valid option letter in response {response:?}")]
    InvalidLabel { stage: &'static str, response: String },
    #[error("research overview is not set")]
    MissingOverview,
    #[error("sentence {0} is empty")]
    EmptySentence(SentenceId),
    #[error("no concepts to map to")]
    NoConcepts,
    #[error("{0} concepts exceed the 26 option letters")]
    TooManyConcepts(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    /// Upper bound on concurrent provider calls.
    pub parallelism: usize,
    pub temperature: f64,
    /// Neighbours considered per indicator when looking for merges.
    pub nearest_k: usize,
    pub prompts: PromptSet,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            parallelism: 4,
            temperature: 0.0,
            nearest_k: 10,
            prompts: PromptSet::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Extract,
    Map,
    Classify,
    Merge,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Extract, Stage::Map, Stage::Classify, Stage::Merge];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Extract => "extract",
            Stage::Map => "map",
            Stage::Classify => "classify",
            Stage::Merge => "merge",
        }
    }

    /// Parses `extract,map,...` into pipeline order, ignoring duplicates.
    /// An empty string selects no stage.
    pub fn parse_list(s: &str) -> Result<Vec<Stage>, String> {
        let set: BTreeSet<Stage> = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(Stage::from_str)
            .collect::<Result<_, _>>()?;
        Ok(set.into_iter().collect())
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "extract" => Ok(Stage::Extract),
            "map" => Ok(Stage::Map),
            "classify" => Ok(Stage::Classify),
            "merge" => Ok(Stage::Merge),
            "all" => Err("use extract,map,classify,merge".into()),
            other => Err(format!("unknown stage {other:?}")),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: Option<Stage>,
    pub skipped: bool,
    /// Units of work submitted (sentences, indicators, pairs, candidate pairs).
    pub items: usize,
    /// Entities produced (indicators, mappings, edges, merge records).
    pub produced: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_ms: Option<u64>,
    pub revision: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub stages: Vec<StageReport>,
    pub indicators: usize,
    pub mapped_indicators: usize,
    pub edges: usize,
    pub merge_records: usize,
    pub revision: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<String>,
}

impl RunReport {
    /// Drops wall-clock durations so the report is reproducible.
    pub fn without_durations(mut self) -> Self {
        for s in &mut self.stages {
            s.duration_ms = None;
        }
        self
    }

    fn totals(&mut self, project: &Project) {
        self.indicators = project.live_indicators().count();
        self.mapped_indicators = project
            .live_indicators()
            .filter(|i| i.concept_id.is_some())
            .count();
        self.edges = project.active_edges().count();
        self.merge_records = project.merge_records.len();
        self.revision = project.revision;
    }
}

/// The run stopped at `stage`; `report` covers the committed stages.
#[derive(Debug, thiserror::Error)]
#[error("stage {stage} failed: {error}")]
pub struct RunError {
    pub stage: Stage,
    pub error: PipelineError,
    pub report: RunReport,
}

/// Progress callbacks; may be called from worker threads.
pub trait RunObserver: Sync {
    fn stage_started(&self, _stage: Stage, _total: usize) {}
    fn item_done(&self, _stage: Stage, _done: usize, _total: usize) {}
    fn stage_committed(&self, _project: &Project, _report: &StageReport) {}
}

pub struct NoopObserver;

impl RunObserver for NoopObserver {}

#[derive(Clone, Copy)]
pub struct Providers<'a> {
    pub chat: &'a dyn ChatProvider,
    pub embed: &'a dyn EmbeddingProvider,
}

/// Maps `f` over `items` on at most `limit` threads. Results keep input
/// order; the first error in input order is returned and no new items are
/// started once any call has failed.
pub fn par_try_map<T, R, E, F>(items: &[T], limit: usize, f: F) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(&T) -> Result<R, E> + Sync,
{
    par_try_map_observed(items, limit, f, &|_| {})
}

fn par_try_map_observed<T, R, E, F>(
    items: &[T],
    limit: usize,
    f: F,
    on_done: &(dyn Fn(usize) + Sync),
) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(&T) -> Result<R, E> + Sync,
{
    let n = items.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let next = AtomicUsize::new(0);
    let done = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    let slots: Vec<Mutex<Option<Result<R, E>>>> = (0..n).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..limit.clamp(1, n) {
            scope.spawn(|| loop {
                if failed.load(Ordering::Relaxed) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let r = f(&items[i]);
                if r.is_err() {
                    failed.store(true, Ordering::Relaxed);
                }
                *slots[i].lock().expect("slot lock") = Some(r);
                on_done(done.fetch_add(1, Ordering::Relaxed) + 1);
            });
        }
    });
    let mut out = Vec::with_capacity(n);
    for slot in slots {
        match slot.into_inner().expect("slot lock") {
            Some(Ok(r)) => out.push(r),
            Some(Err(e)) => return Err(e),
            // skipped after an earlier failure
            None => continue,
        }
    }
    Ok(out)
}

/// Runs `stages` (in pipeline order) against `project`.
#[allow(clippy::result_large_err)]
pub fn run_pipeline(
    project: &mut Project,
    stages: &[Stage],
    config: &PipelineConfig,
    providers: Providers<'_>,
    observer: &dyn RunObserver,
) -> Result<RunReport, RunError> {
    let mut ordered: Vec<Stage> = stages.to_vec();
    ordered.sort();
    ordered.dedup();

    let mut report = RunReport::default();
    for stage in ordered {
        let started = Instant::now();
        let mut working = project.clone();
        let result = match stage {
            Stage::Extract => run_extract(&mut working, config, providers, observer),
            Stage::Map => run_map(&mut working, config, providers, observer),
            Stage::Classify => run_classify(&mut working, config, providers, observer),
            Stage::Merge => run_merge(&mut working, config, providers, observer),
        };
        match result {
            Ok(mut sr) => {
                sr.stage = Some(stage);
                sr.duration_ms = Some(started.elapsed().as_millis() as u64);
                crate::network::rebuild_concept_edges(&mut working);
                sr.revision = working.bump_revision();
                *project = working;
                observer.stage_committed(project, &sr);
                report.stages.push(sr);
            }
            Err(error) => {
                report.totals(project);
                return Err(RunError {
                    stage,
                    error,
                    report,
                });
            }
        }
    }
    report.totals(project);
    Ok(report)
}

fn observed<'a>(observer: &'a dyn RunObserver, stage: Stage, total: usize) -> impl Fn(usize) + Sync + 'a {
    observer.stage_started(stage, total);
    move |done| observer.item_done(stage, done, total)
}

fn run_extract(
    project: &mut Project,
    config: &PipelineConfig,
    providers: Providers<'_>,
    observer: &dyn RunObserver,
) -> Result<StageReport, PipelineError> {
    let overview = project.overview.clone().ok_or(PipelineError::MissingOverview)?;
    let covered: BTreeSet<SentenceId> = project.indicators.iter().map(|i| i.sentence_id).collect();
    let todo: Vec<_> = project
        .sentences
        .iter()
        .filter(|s| !covered.contains(&s.sentence_id))
        .cloned()
        .collect();
    let progress = observed(observer, Stage::Extract, todo.len());
    let results = par_try_map_observed(
        &todo,
        config.parallelism,
        |s| extract_indicators(&config.prompts.extraction, &overview, s, providers.chat, config.temperature),
        &progress,
    )?;
    let mut produced = 0;
    for (sentence, extracted) in todo.iter().zip(results) {
        for ind in extracted {
            project.add_indicator(sentence.sentence_id, &ind.text, ind.span)?;
            produced += 1;
        }
    }
    Ok(StageReport {
        items: todo.len(),
        produced,
        ..Default::default()
    })
}

fn run_map(
    project: &mut Project,
    config: &PipelineConfig,
    providers: Providers<'_>,
    observer: &dyn RunObserver,
) -> Result<StageReport, PipelineError> {
    if project.concepts.is_empty() {
        return Ok(StageReport {
            skipped: true,
            warnings: vec!["no concepts defined; mapping left undone".into()],
            ..Default::default()
        });
    }
    let mut concepts: Vec<&Concept> = project.concepts.iter().collect();
    concepts.sort_by_key(|c| c.concept_id);
    let todo: Vec<_> = project
        .live_indicators()
        .filter(|i| i.concept_id.is_none())
        .cloned()
        .collect();
    let progress = observed(observer, Stage::Map, todo.len());
    let results = par_try_map_observed(
        &todo,
        config.parallelism,
        |ind| {
            let sentence = project
                .sentence(ind.sentence_id)
                .ok_or(ModelError::UnknownSentence(ind.sentence_id))?;
            map_concept(&config.prompts.mapping, ind, sentence, &concepts, providers.chat, config.temperature)
        },
        &progress,
    )?;
    for (ind, concept) in todo.iter().zip(&results) {
        project.assign_concept(ind.indicator_id, Some(*concept), false)?;
    }
    Ok(StageReport {
        items: todo.len(),
        produced: results.len(),
        ..Default::default()
    })
}

fn run_classify(
    project: &mut Project,
    config: &PipelineConfig,
    providers: Providers<'_>,
    observer: &dyn RunObserver,
) -> Result<StageReport, PipelineError> {
    let judged: BTreeSet<(IndicatorId, IndicatorId)> = project
        .causal_edges
        .iter()
        .filter(|e| e.origin == EdgeOrigin::Pipeline)
        .flat_map(|e| {
            [
                (e.cause_indicator_id, e.effect_indicator_id),
                (e.effect_indicator_id, e.cause_indicator_id),
            ]
        })
        .collect();
    let mut todo = Vec::new();
    for sentence in &project.sentences {
        let ids: Vec<IndicatorId> = project
            .sentence_indicators(sentence.sentence_id)
            .iter()
            .map(|i| i.indicator_id)
            .collect();
        todo.extend(
            generate_pairs(&ids)
                .into_iter()
                .filter(|p| !judged.contains(p))
                .map(|(a, b)| (sentence.sentence_id, a, b)),
        );
    }
    let label = |id: IndicatorId| {
        let ind = project.indicator(id).expect("live indicator");
        indicator_with_concept(ind, ind.concept_id.and_then(|c| project.concept(c)))
    };
    let progress = observed(observer, Stage::Classify, todo.len());
    let verdicts = par_try_map_observed(
        &todo,
        config.parallelism,
        |&(sid, a, b)| {
            let sentence = project.sentence(sid).ok_or(ModelError::UnknownSentence(sid))?;
            classify_pair(&config.prompts.causal, sentence, &label(a), &label(b), providers.chat, config.temperature)
        },
        &progress,
    )?;
    let mut produced = 0;
    for (&(_, a, b), verdict) in todo.iter().zip(verdicts) {
        if let Some((cause, effect)) = verdict.edge(a, b) {
            project.add_edge(cause, effect, EdgeOrigin::Pipeline)?;
            produced += 1;
        }
    }
    Ok(StageReport {
        items: todo.len(),
        produced,
        ..Default::default()
    })
}

fn run_merge(
    project: &mut Project,
    config: &PipelineConfig,
    providers: Providers<'_>,
    observer: &dyn RunObserver,
) -> Result<StageReport, PipelineError> {
    let mut warnings = Vec::new();
    let unmapped = project.live_indicators().filter(|i| i.concept_id.is_none()).count();
    if unmapped > 0 {
        warnings.push(format!("{unmapped} unmapped indicator(s) excluded from merging"));
    }
    observer.stage_started(Stage::Merge, 0);
    let (records, decisions) = merge_indicators(project, providers.embed, providers.chat, config)?;
    let before = project.merge_records.len();
    let _ = apply_merge_records(project, records);
    Ok(StageReport {
        items: decisions.len(),
        produced: project.merge_records.len().saturating_sub(before),
        warnings,
        ..Default::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_list_parsing() {
        assert_eq!(
            Stage::parse_list("merge, extract,map").unwrap(),
            vec![Stage::Extract, Stage::Map, Stage::Merge]
        );
        assert!(Stage::parse_list("").unwrap().is_empty());
        assert!(Stage::parse_list("extract,bogus").is_err());
    }

    #[test]
    fn par_map_keeps_order() {
        let items: Vec<usize> = (0..100).collect();
        let out: Result<Vec<usize>, ()> = par_try_map(&items, 7, |&x| Ok(x * 2));
        assert_eq!(out.unwrap(), items.iter().map(|x| x * 2).collect::<Vec<_>>());
    }

    #[test]
    fn par_map_reports_first_error_in_input_order() {
        let items: Vec<usize> = (0..50).collect();
        let out: Result<Vec<usize>, usize> =
            par_try_map(&items, 1, |&x| if x == 10 || x == 20 { Err(x) } else { Ok(x) });
        assert_eq!(out, Err(10));
    }
}

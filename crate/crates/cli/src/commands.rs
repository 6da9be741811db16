use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use qualnet_core::baseline::{apply_baseline, causal_subset, evaluate_semeval, Baseline, CooccurrenceMode, CueRules, SemEvalReport};
use qualnet_core::ingest::{default_abbreviations, ingest_corpus, parse_semeval, semeval_project};
use qualnet_core::metrics::{evaluate_project, format_table, AdjudicationTable, GoldFile, MatchPolicy, ProjectEvalReport, TableRow};
use qualnet_core::network::{export_network, rebuild_concept_edges};
use qualnet_core::num::format_rate;
use qualnet_core::pipeline::{run_pipeline, NoopObserver, PipelineConfig, Providers, RunReport, Stage};
use qualnet_core::provider::{Backend, Clock, ProviderSpec, Recording, Transcript};
use qualnet_core::store::{self, canonical_json, indicators_csv, to_canonical_string, ProjectFile};
use qualnet_core::Project;
use serde::Deserialize;

use crate::error::CliError;
use crate::{Cli, Command, ExportFormat, Method};

type Result<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    canonical_json(value).expect("report serializes")
}

pub fn dispatch(cli: &Cli) -> Result<String> {
    let json = cli.json;
    match &cli.command {
        Command::Ingest {
            corpus,
            output,
            overview,
            overview_file,
            concepts,
            id,
        } => ingest(corpus, output, overview.as_deref(), overview_file.as_deref(), concepts.as_deref(), id.as_deref(), json),
        Command::Run {
            project,
            stages,
            provider,
            record,
            parallelism,
            output,
        } => run(project, stages, provider, record.as_deref(), *parallelism, output.as_deref(), json),
        Command::Baseline {
            input,
            method,
            mode,
            rules,
            output,
        } => baseline(input, build_baseline(*method, mode, rules.as_deref())?, output.as_deref(), json),
        Command::Eval {
            project,
            gold,
            match_policy,
            provider,
        } => eval(project, gold, match_policy, provider, json),
        Command::SemevalEval {
            file,
            method,
            mode,
            rules,
            all_records,
        } => semeval_eval(file, *method, build_baseline(*method, mode, rules.as_deref())?, *all_records, json),
        Command::Export { project, format, output } => export(project, *format, output.as_deref()),
        Command::Serve { config } => serve(config.as_deref()),
    }
}

#[derive(Deserialize)]
struct ConceptSpec {
    name: String,
    #[serde(default)]
    definition: String,
    #[serde(default = "default_color")]
    color: String,
    #[serde(default)]
    references: Vec<String>,
}

fn default_color() -> String {
    "#808080".into()
}

fn ingest(
    corpus: &Path,
    output: &Path,
    overview: Option<&str>,
    overview_file: Option<&Path>,
    concepts: Option<&Path>,
    id: Option<&str>,
    json: bool,
) -> Result<String> {
    let id = match id {
        Some(id) => id.to_string(),
        None => {
            let name = output.file_name().and_then(|n| n.to_str()).unwrap_or("project");
            name.strip_suffix(store::FILE_SUFFIX)
                .or_else(|| name.strip_suffix(".json"))
                .unwrap_or(name)
                .to_string()
        }
    };
    let mut project = Project::new(id);
    let overview = match (overview, overview_file) {
        (Some(text), _) => Some(text.to_string()),
        (None, Some(path)) => Some(read(path)?.trim().to_string()),
        (None, None) => None,
    };
    if let Some(text) = overview {
        project.set_overview(text)?;
    }
    ingest_corpus(&mut project, &read(corpus)?, &default_abbreviations())?;
    if let Some(path) = concepts {
        let specs: Vec<ConceptSpec> =
            serde_json::from_str(&read(path)?).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
        for c in specs {
            project.add_concept(&c.name, &c.definition, &c.color, c.references)?;
        }
    }
    project.bump_revision();
    store::save(&project, output)?;
    let summary = serde_json::json!({
        "project_id": project.project_id,
        "units": project.units.len(),
        "sentences": project.sentences.len(),
        "concepts": project.concepts.len(),
        "revision": project.revision,
    });
    Ok(if json {
        to_json(&summary)
    } else {
        format!(
            "{}: {} units, {} sentences, {} concepts\n",
            output.display(),
            project.units.len(),
            project.sentences.len(),
            project.concepts.len()
        )
    })
}

fn run_table(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<9}  {:>7}  {:>8}  {:>8}", "Stage", "Items", "Produced", "Revision");
    for s in &report.stages {
        let name = s.stage.map(Stage::name).unwrap_or("-");
        let produced = if s.skipped { "skipped".to_string() } else { s.produced.to_string() };
        let _ = writeln!(out, "{name:<9}  {:>7}  {produced:>8}  {:>8}", s.items, s.revision);
        for w in &s.warnings {
            let _ = writeln!(out, "  warning: {w}");
        }
    }
    let _ = writeln!(
        out,
        "indicators {}, mapped {}, edges {}, merge records {}, revision {}",
        report.indicators, report.mapped_indicators, report.edges, report.merge_records, report.revision
    );
    out
}

fn run(
    path: &Path,
    stages: &str,
    provider: &str,
    record: Option<&Path>,
    parallelism: usize,
    output: Option<&Path>,
    json: bool,
) -> Result<String> {
    let stages = Stage::parse_list(stages).map_err(CliError::usage)?;
    let spec: ProviderSpec = provider.parse()?;
    let mut file = store::load_file(path)?;
    let backend = spec.build()?;
    let transcript = record.map(|_| Arc::new(Transcript::new(Clock::Logical)));
    let backend: Arc<dyn Backend> = match &transcript {
        Some(t) => Arc::new(Recording::new(backend, t.clone())),
        None => backend,
    };
    let config = PipelineConfig {
        parallelism: parallelism.max(1),
        ..PipelineConfig::default()
    };
    let providers = Providers {
        chat: &*backend,
        embed: &*backend,
    };
    let result = run_pipeline(&mut file.project, &stages, &config, providers, &NoopObserver);
    if let (Some(path), Some(t)) = (record, &transcript) {
        t.write_jsonl(path).map_err(|e| CliError::io(path, e))?;
        file.provider_transcript_ref = Some(path.display().to_string());
    }
    store::save_file(&file, output.unwrap_or(path))?;
    let mut report = result.map_err(|e| CliError::from(e.error))?.without_durations();
    report.transcript = file.provider_transcript_ref.clone();
    Ok(if json { to_json(&report) } else { run_table(&report) })
}

fn build_baseline(method: Method, mode: &str, rules: Option<&Path>) -> Result<Baseline> {
    Ok(match method {
        Method::Cooccurrence => Baseline::Cooccurrence(mode.parse::<CooccurrenceMode>().map_err(CliError::usage)?),
        Method::Cue => Baseline::Cue(match rules {
            Some(path) => CueRules::from_json(&read(path)?)?,
            None => CueRules::default(),
        }),
    })
}

fn is_project_text(text: &str) -> bool {
    text.trim_start().starts_with('{')
}

fn baseline(input: &Path, baseline: Baseline, output: Option<&Path>, json: bool) -> Result<String> {
    let text = read(input)?;
    let (mut file, target) = if is_project_text(&text) {
        let file = store::parse_file(&text).map_err(|e| match e {
            store::StoreError::Parse { source, .. } => CliError::validation(format!("{}: {source}", input.display())),
            other => other.into(),
        })?;
        (file, output.unwrap_or(input).to_path_buf())
    } else {
        let records = parse_semeval(&text)?;
        let target = output
            .ok_or_else(|| CliError::usage("--output is required when the input is a SemEval file"))?
            .to_path_buf();
        (ProjectFile::new(semeval_project(&records).0), target)
    };
    let added = apply_baseline(&mut file.project, &baseline)?;
    store::save_file(&file, &target)?;
    let edges = file.project.active_edges().count();
    Ok(if json {
        to_json(&serde_json::json!({
            "added_edges": added,
            "edges": edges,
            "revision": file.project.revision,
            "output": target.display().to_string(),
        }))
    } else {
        format!("{}: {added} edges added, {edges} active\n", target.display())
    })
}

fn match_policy(spec: &str) -> Result<MatchPolicy<f64>> {
    match spec.split_once(':') {
        None if spec == "exact" => Ok(MatchPolicy::ExactNormalized),
        None if spec == "embed" => Ok(MatchPolicy::embedding_default()),
        Some(("embed", t)) => {
            let threshold: f64 = t
                .parse()
                .map_err(|_| CliError::usage(format!("bad embedding threshold {t:?}")))?;
            if !(-1.0..=1.0).contains(&threshold) {
                return Err(CliError::usage("embedding threshold must lie in [-1, 1]"));
            }
            Ok(MatchPolicy::EmbeddingThreshold { threshold })
        }
        Some(("adjudicated", path)) => {
            let path = PathBuf::from(path);
            let table: AdjudicationTable = serde_json::from_str(&read(&path)?)
                .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
            Ok(MatchPolicy::AdjudicationFile { table })
        }
        _ => Err(CliError::usage(format!(
            "unknown match policy {spec:?} (exact, embed[:t] or adjudicated:<file>)"
        ))),
    }
}

fn eval_text(report: &ProjectEvalReport<f64>) -> String {
    let mut out = format_table(&[
        TableRow {
            method: "Indicators",
            report: &report.indicators,
        },
        TableRow {
            method: "Edges",
            report: &report.edges,
        },
    ]);
    if let Some(c) = &report.concepts {
        let cell = |v: Option<f64>| v.map(format_rate).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "Concepts: Prec {} Rec {} Acc {} ({}/{})",
            cell(c.macro_precision),
            cell(c.macro_recall),
            cell(c.accuracy),
            c.correct,
            c.total
        );
    }
    if !report.unknown_sentences.is_empty() {
        let ids: Vec<String> = report.unknown_sentences.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "warning: gold sentences not in project: {}", ids.join(", "));
    }
    out
}

fn eval(project: &Path, gold: &Path, policy: &str, provider: &str, json: bool) -> Result<String> {
    let policy = match_policy(policy)?;
    let project = store::load(project)?;
    let gold_file = GoldFile::from_json(&read(gold)?).map_err(|e| CliError::validation(format!("{}: {e}", gold.display())))?;
    let backend = match policy {
        MatchPolicy::EmbeddingThreshold { .. } => Some(provider.parse::<ProviderSpec>()?.build()?),
        _ => None,
    };
    let embedder = backend.as_deref().map(|b| b as &dyn qualnet_core::provider::EmbeddingProvider);
    let report = evaluate_project(&project, &gold_file, &policy, embedder)?;
    Ok(if json { to_json(&report) } else { eval_text(&report) })
}

fn semeval_text(method: Method, r: &SemEvalReport<f64>) -> String {
    let name = match method {
        Method::Cooccurrence => "Co-occurrence networks",
        Method::Cue => "Causal-cue heuristics",
    };
    let cell = |v: Option<f64>| v.map(format_rate).unwrap_or_else(|| "-".into());
    let header = ["Method", "Prec", "Rec", "DirAcc"];
    let row = [name.to_string(), cell(r.precision), cell(r.recall), cell(r.direction_accuracy)];
    let w: Vec<usize> = header.iter().zip(&row).map(|(h, c)| h.len().max(c.len())).collect();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "records {}, gold edges {}, predicted edges {}, matched pairs {}, correct direction {}",
        r.records, r.gold_edges, r.predicted_edges, r.matched_pairs, r.direction_correct
    );
    let _ = writeln!(out, "{:<a$}  {:>b$}  {:>c$}  {:>d$}", header[0], header[1], header[2], header[3], a = w[0], b = w[1], c = w[2], d = w[3]);
    let _ = writeln!(out, "{:<a$}  {:>b$}  {:>c$}  {:>d$}", row[0], row[1], row[2], row[3], a = w[0], b = w[1], c = w[2], d = w[3]);
    out
}

fn semeval_eval(file: &Path, method: Method, baseline: Baseline, all: bool, json: bool) -> Result<String> {
    let records = parse_semeval(&read(file)?)?;
    let records = if all { records } else { causal_subset(&records) };
    let report: SemEvalReport<f64> = evaluate_semeval(&records, &baseline);
    Ok(if json { to_json(&report) } else { semeval_text(method, &report) })
}

fn export(project: &Path, format: ExportFormat, output: Option<&Path>) -> Result<String> {
    let mut project = store::load(project)?;
    let text = match format {
        ExportFormat::Json => to_json(&export_network(&project)),
        ExportFormat::Csv => indicators_csv(&project)?,
        ExportFormat::Project => {
            rebuild_concept_edges(&mut project);
            to_canonical_string(&ProjectFile::new(project))?
        }
    };
    match output {
        Some(path) => {
            write(path, &text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn serve(config: Option<&Path>) -> Result<String> {
    let config = match config {
        Some(path) => qualnet_service::ServiceConfig::load(path).map_err(|e| match e {
            qualnet_service::config::ConfigError::Io { .. } => CliError::new(crate::error::Kind::Io, e.to_string()),
            other => CliError::validation(other.to_string()),
        })?,
        None => qualnet_service::ServiceConfig::default().with_env(|k| std::env::var(k).ok()),
    };
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::new(crate::error::Kind::Io, e.to_string()))?;
    runtime
        .block_on(qualnet_service::serve(config))
        .map_err(|e| CliError::new(crate::error::Kind::Io, e.to_string()))?;
    Ok(String::new())
}

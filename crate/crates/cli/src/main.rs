//! `qualnet`: ingest corpora, run the extraction pipeline, apply baselines,
//! evaluate against gold annotations, export networks and serve the API.

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "qualnet", version, about = "Causal networks from qualitative text")]
pub struct Cli {
    /// Print results as JSON, and errors as JSON on stderr.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Cooccurrence,
    Cue,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    /// Network wire format.
    Json,
    /// Indicator table.
    Csv,
    /// Canonical project file.
    Project,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Split a corpus (one response per line) into a new project file.
    Ingest {
        corpus: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Research overview text.
        #[arg(long, conflicts_with = "overview_file")]
        overview: Option<String>,
        /// File holding the research overview.
        #[arg(long)]
        overview_file: Option<PathBuf>,
        /// JSON list of concepts: `[{"name", "definition", "color", "references"}]`.
        #[arg(long)]
        concepts: Option<PathBuf>,
        /// Project id (default: the output file stem).
        #[arg(long)]
        id: Option<String>,
    },
    /// Run pipeline stages on a project and save it.
    Run {
        project: PathBuf,
        /// Comma-separated subset of extract,map,classify,merge.
        #[arg(long, default_value = "extract,map,classify,merge")]
        stages: String,
        /// `http`, `mock[:<script.json>]` or `replay:<transcript.jsonl>`.
        #[arg(long, default_value = "http")]
        provider: String,
        /// Append every provider exchange to this JSONL transcript.
        #[arg(long)]
        record: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        parallelism: usize,
        /// Write here instead of updating the project in place.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Add baseline edges to a project, or to a project built from a
    /// SemEval file.
    Baseline {
        input: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        /// `consecutive` or `all_ordered` (co-occurrence only).
        #[arg(long, default_value = "consecutive")]
        mode: String,
        /// Cue rule table (JSON); the shipped table by default.
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Required for SemEval input; defaults to in place for projects.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Score a project against a gold file.
    Eval {
        project: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// `exact`, `embed[:<threshold>]` or `adjudicated:<table.json>`.
        #[arg(long = "match", default_value = "exact")]
        match_policy: String,
        /// Embedding backend for `--match embed`.
        #[arg(long, default_value = "mock")]
        provider: String,
    },
    /// Score a baseline on a SemEval-2010 Task 8 file, entities as indicators.
    SemevalEval {
        file: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long, default_value = "consecutive")]
        mode: String,
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Score every record instead of the Cause-Effect subset.
        #[arg(long)]
        all_records: bool,
    },
    /// Write a project as network JSON, indicator CSV or a project file.
    Export {
        project: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: ExportFormat,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn report(err: &CliError, json: bool) {
    if json {
        let body = serde_json::json!({ "error": err });
        eprintln!("{body}");
    } else {
        eprintln!("error: {}", err.message);
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let json = std::env::args().any(|a| a == "--json");
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) if json => {
            report(&CliError::usage(e.to_string().trim_end()), true);
            return ExitCode::from(2);
        }
        Err(e) => e.exit(),
    };
    match commands::dispatch(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            report(&err, cli.json);
            ExitCode::from(err.kind.exit_code() as u8)
        }
    }
}

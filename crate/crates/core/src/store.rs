//! Project files: canonical JSON, atomic writes, CSV export.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::model::{validate_project, Project};

pub const FORMAT_VERSION: u64 = 1;
pub const FILE_SUFFIX: &str = ".qualnet.json";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: not a project file: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("unsupported format_version {found} (expected {FORMAT_VERSION})")]
    SchemaMismatch { found: Value },
    #[error("project fails validation: {}", .0.join("; "))]
    ValidationFailed(Vec<String>),
    #[error("csv export: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectFile {
    pub format_version: u64,
    pub project: Project,
    #[serde(default)]
    pub provider_transcript_ref: Option<String>,
}

impl ProjectFile {
    pub fn new(project: Project) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            project,
            provider_transcript_ref: None,
        }
    }
}

/// Points in [`save_with_hook`] where a test may inject a failure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SavePhase {
    /// The temporary file is written and synced; the target is untouched.
    BeforeRename,
}

fn sort_keys(v: Value) -> Value {
    match v {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            let mut out = Map::new();
            for (k, v) in entries {
                out.insert(k, sort_keys(v));
            }
            Value::Object(out)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

/// Pretty JSON with every object's keys sorted, newline terminated.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    let mut s = serde_json::to_string_pretty(&sort_keys(serde_json::to_value(value)?))?;
    s.push('\n');
    Ok(s)
}

/// Canonical bytes of a project file: validated, collections sorted by id,
/// keys sorted.
pub fn to_canonical_string(file: &ProjectFile) -> Result<String, StoreError> {
    let mut file = file.clone();
    file.project.canonicalize();
    let violations = validate_project(&file.project);
    if !violations.is_empty() {
        return Err(StoreError::ValidationFailed(violations));
    }
    Ok(canonical_json(&file).expect("project serializes"))
}

pub fn save(project: &Project, path: &Path) -> Result<(), StoreError> {
    save_file(&ProjectFile::new(project.clone()), path)
}

pub fn save_file(file: &ProjectFile, path: &Path) -> Result<(), StoreError> {
    save_with_hook(file, path, &mut |_| Ok(()))
}

/// Writes to a sibling temp file, syncs, then renames over `path`.
/// An error from `hook` aborts before the rename and leaves `path` as it was.
pub fn save_with_hook(
    file: &ProjectFile,
    path: &Path,
    hook: &mut dyn FnMut(SavePhase) -> std::io::Result<()>,
) -> Result<(), StoreError> {
    let text = to_canonical_string(file)?;
    let io = |source| StoreError::Io {
        path: path.display().to_string(),
        source,
    };
    let tmp = temp_path(path);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(text.as_bytes())?;
        f.sync_all()?;
        drop(f);
        hook(SavePhase::BeforeRename)?;
        fs::rename(&tmp, path)?;
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            // directory fsync is best effort; not every platform supports it
            if let Ok(d) = fs::File::open(dir) {
                let _ = d.sync_all();
            }
        }
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io)
}

fn temp_path(path: &Path) -> PathBuf {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "project".into());
    path.with_file_name(format!(".{name}.tmp-{}", std::process::id()))
}

pub fn load(path: &Path) -> Result<Project, StoreError> {
    load_file(path).map(|f| f.project)
}

pub fn load_file(path: &Path) -> Result<ProjectFile, StoreError> {
    let text = fs::read_to_string(path).map_err(|source| StoreError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_file(&text).map_err(|e| match e {
        StoreError::Parse { source, .. } => StoreError::Parse {
            path: path.display().to_string(),
            source,
        },
        other => other,
    })
}

pub fn parse_file(text: &str) -> Result<ProjectFile, StoreError> {
    let parse = |source| StoreError::Parse {
        path: "<memory>".into(),
        source,
    };
    let value: Value = serde_json::from_str(text).map_err(parse)?;
    match value.get("format_version") {
        Some(Value::Number(n)) if n.as_u64() == Some(FORMAT_VERSION) => {}
        other => {
            return Err(StoreError::SchemaMismatch {
                found: other.cloned().unwrap_or(Value::Null),
            })
        }
    }
    let file: ProjectFile = serde_json::from_value(value).map_err(parse)?;
    let violations = validate_project(&file.project);
    if !violations.is_empty() {
        return Err(StoreError::ValidationFailed(violations));
    }
    Ok(file)
}

/// CSV of indicators: `indicator_id, sentence_id, text, concept_name, status`.
pub fn indicators_csv(project: &Project) -> Result<String, StoreError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["indicator_id", "sentence_id", "text", "concept_name", "status"])?;
    let mut inds: Vec<_> = project.indicators.iter().collect();
    inds.sort_by_key(|i| i.indicator_id);
    for i in inds {
        let concept = i
            .concept_id
            .and_then(|c| project.concept(c))
            .map(|c| c.name.as_str())
            .unwrap_or("");
        let status = serde_json::to_value(i.status).expect("status serializes");
        w.write_record([
            i.indicator_id.0.to_string().as_str(),
            i.sentence_id.0.to_string().as_str(),
            i.text.as_str(),
            concept,
            status.as_str().unwrap_or_default(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

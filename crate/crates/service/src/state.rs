use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use qualnet_core::network::EmbeddingCache;
use qualnet_core::pipeline::{
    run_pipeline, PipelineConfig, Providers, RunObserver, RunReport, Stage, StageReport,
};
use qualnet_core::provider::Backend;
use qualnet_core::store::{self, FILE_SUFFIX};
use qualnet_core::Project;
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;

use crate::config::ServiceConfig;
use crate::error::{ApiError, ErrorCode};

/// One project: the authoritative copy behind a mutation lock, and the
/// last committed snapshot that reads are served from.
pub struct Slot {
    write: Arc<tokio::sync::Mutex<Project>>,
    snapshot: RwLock<Arc<Project>>,
    pub(crate) search: Mutex<EmbeddingCache>,
    path: PathBuf,
}

impl Slot {
    fn new(project: Project, path: PathBuf) -> Self {
        Self {
            write: Arc::new(tokio::sync::Mutex::new(project.clone())),
            snapshot: RwLock::new(Arc::new(project)),
            search: Mutex::new(EmbeddingCache::default()),
            path,
        }
    }

    pub fn snapshot(&self) -> Arc<Project> {
        self.snapshot.read().expect("snapshot lock").clone()
    }

    fn publish(&self, project: Project) {
        *self.snapshot.write().expect("snapshot lock") = Arc::new(project);
    }

    fn persist(&self, project: &Project) -> Result<(), ApiError> {
        store::save(project, &self.path).map_err(ApiError::from)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum JobState {
    Pending,
    Running { stage: Stage, done: usize, total: usize },
    Done { report: RunReport },
    Failed {
        error: ApiError,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        report: Option<RunReport>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub job_id: String,
    pub project_id: String,
    pub stages: Vec<Stage>,
    #[serde(flatten)]
    pub state: JobState,
}

struct Inner {
    config: ServiceConfig,
    pipeline: PipelineConfig,
    backend: Arc<dyn Backend>,
    projects: RwLock<BTreeMap<String, Arc<Slot>>>,
    jobs: Mutex<BTreeMap<String, Job>>,
    next_job: AtomicU64,
    workers: Arc<Semaphore>,
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

pub fn valid_project_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 64
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl AppState {
    /// Opens `config.data_dir`, creating it if needed, and loads every
    /// project file in it.
    pub fn open(config: ServiceConfig, backend: Arc<dyn Backend>) -> Result<Self, ApiError> {
        let dir = &config.data_dir;
        std::fs::create_dir_all(dir)
            .map_err(|e| ApiError::internal(format!("{}: {e}", dir.display())))?;
        let mut projects = BTreeMap::new();
        let entries = std::fs::read_dir(dir)
            .map_err(|e| ApiError::internal(format!("{}: {e}", dir.display())))?;
        for entry in entries.flatten() {
            let path = entry.path();
            let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
                continue;
            };
            if name.starts_with('.') || !name.ends_with(FILE_SUFFIX) {
                continue;
            }
            let project = store::load(&path)?;
            log::info!("loaded project {} at revision {}", project.project_id, project.revision);
            projects.insert(project.project_id.clone(), Arc::new(Slot::new(project, path)));
        }
        let pipeline = config.pipeline.to_config();
        let workers = Arc::new(Semaphore::new(config.max_jobs.max(1)));
        Ok(Self {
            inner: Arc::new(Inner {
                config,
                pipeline,
                backend,
                projects: RwLock::new(projects),
                jobs: Mutex::new(BTreeMap::new()),
                next_job: AtomicU64::new(1),
                workers,
            }),
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.inner.config
    }

    pub fn backend(&self) -> Arc<dyn Backend> {
        self.inner.backend.clone()
    }

    fn path_for(&self, id: &str) -> PathBuf {
        self.inner.config.data_dir.join(format!("{id}{FILE_SUFFIX}"))
    }

    pub fn slot(&self, id: &str) -> Result<Arc<Slot>, ApiError> {
        self.inner
            .projects
            .read()
            .expect("projects lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("no project {id:?}")))
    }

    pub fn snapshot(&self, id: &str) -> Result<Arc<Project>, ApiError> {
        Ok(self.slot(id)?.snapshot())
    }

    pub fn list(&self) -> Vec<Arc<Project>> {
        self.inner
            .projects
            .read()
            .expect("projects lock")
            .values()
            .map(|s| s.snapshot())
            .collect()
    }

    pub fn create(&self, project: Project) -> Result<Arc<Project>, ApiError> {
        let id = project.project_id.clone();
        if !valid_project_id(&id) {
            return Err(ApiError::invalid(
                "project_id must be 1-64 characters of [A-Za-z0-9_-]",
            ));
        }
        let mut projects = self.inner.projects.write().expect("projects lock");
        if projects.contains_key(&id) {
            return Err(ApiError::new(ErrorCode::Conflict, format!("project {id:?} exists")));
        }
        let slot = Slot::new(project.clone(), self.path_for(&id));
        slot.persist(&project)?;
        projects.insert(id, Arc::new(slot));
        Ok(Arc::new(project))
    }

    /// A fresh id of the form `project-N`.
    pub fn fresh_id(&self) -> String {
        let projects = self.inner.projects.read().expect("projects lock");
        (1..)
            .map(|n| format!("project-{n}"))
            .find(|id| !projects.contains_key(id))
            .expect("unbounded")
    }

    pub fn delete(&self, id: &str) -> Result<(), ApiError> {
        let slot = self
            .inner
            .projects
            .write()
            .expect("projects lock")
            .remove(id)
            .ok_or_else(|| ApiError::not_found(format!("no project {id:?}")))?;
        match std::fs::remove_file(&slot.path) {
            Ok(()) => Ok(()),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(()),
            Err(e) => Err(ApiError::internal(format!("{}: {e}", slot.path.display()))),
        }
    }

    /// Applies `op` to a copy of the project, bumps the revision, saves and
    /// publishes. Nothing changes when `op` or the save fails.
    pub async fn mutate<R>(
        &self,
        id: &str,
        expected: Option<u64>,
        op: impl FnOnce(&mut Project) -> Result<R, ApiError>,
    ) -> Result<(u64, R), ApiError> {
        let slot = self.slot(id)?;
        let mut current = slot.write.lock().await;
        check_revision(&current, expected)?;
        let mut next = current.clone();
        let out = op(&mut next)?;
        let revision = next.bump_revision();
        slot.persist(&next)?;
        *current = next.clone();
        slot.publish(next);
        Ok((revision, out))
    }

    pub fn job(&self, id: &str) -> Result<Job, ApiError> {
        self.inner
            .jobs
            .lock()
            .expect("jobs lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("no job {id:?}")))
    }

    fn set_job(&self, id: &str, state: JobState) {
        if let Some(job) = self.inner.jobs.lock().expect("jobs lock").get_mut(id) {
            job.state = state;
        }
    }

    /// Queues a pipeline run and returns its job right away.
    pub fn start_run(&self, id: &str, stages: Vec<Stage>, expected: Option<u64>) -> Result<Job, ApiError> {
        let slot = self.slot(id)?;
        check_revision(&slot.snapshot(), expected)?;
        let job_id = format!("job-{}", self.inner.next_job.fetch_add(1, Ordering::Relaxed));
        let job = Job {
            job_id: job_id.clone(),
            project_id: id.to_string(),
            stages: stages.clone(),
            state: JobState::Pending,
        };
        self.inner
            .jobs
            .lock()
            .expect("jobs lock")
            .insert(job_id.clone(), job.clone());
        let state = self.clone();
        tokio::spawn(async move {
            let _permit = state.inner.workers.clone().acquire_owned().await;
            let mut guard = slot.write.clone().lock_owned().await;
            if let Err(e) = check_revision(&guard, expected) {
                state.set_job(&job_id, JobState::Failed { error: e, report: None });
                return;
            }
            let worker = state.clone();
            let jid = job_id.clone();
            let outcome = tokio::task::spawn_blocking(move || {
                let observer = JobObserver {
                    state: worker.clone(),
                    job_id: jid,
                    slot: slot.clone(),
                    save_error: Mutex::new(None),
                };
                let backend = worker.backend();
                let providers = Providers {
                    chat: &*backend,
                    embed: &*backend,
                };
                let result = run_pipeline(&mut guard, &stages, &worker.inner.pipeline, providers, &observer);
                let save_error = observer.save_error.into_inner().expect("observer lock");
                match (result, save_error) {
                    (Ok(report), None) => JobState::Done { report },
                    (Ok(report), Some(error)) => JobState::Failed {
                        error,
                        report: Some(report),
                    },
                    (Err(e), _) => JobState::Failed {
                        error: ApiError::from(e.error).with_detail(serde_json::json!({ "stage": e.stage })),
                        report: Some(e.report),
                    },
                }
            })
            .await
            .unwrap_or_else(|e| JobState::Failed {
                error: ApiError::internal(format!("job panicked: {e}")),
                report: None,
            });
            state.set_job(&job_id, outcome);
        });
        Ok(job)
    }
}

fn check_revision(project: &Project, expected: Option<u64>) -> Result<(), ApiError> {
    match expected {
        Some(e) if e != project.revision => Err(ApiError::stale(e, project.revision)),
        _ => Ok(()),
    }
}

/// Saves and publishes after every committed stage and tracks progress.
struct JobObserver {
    state: AppState,
    job_id: String,
    slot: Arc<Slot>,
    save_error: Mutex<Option<ApiError>>,
}

impl RunObserver for JobObserver {
    fn stage_started(&self, stage: Stage, total: usize) {
        self.state.set_job(&self.job_id, JobState::Running { stage, done: 0, total });
    }

    fn item_done(&self, stage: Stage, done: usize, total: usize) {
        self.state.set_job(&self.job_id, JobState::Running { stage, done, total });
    }

    fn stage_committed(&self, project: &Project, _report: &StageReport) {
        if let Err(e) = self.slot.persist(project) {
            log::error!("saving {} failed: {e}", self.slot.path.display());
            self.save_error.lock().expect("observer lock").get_or_insert(e);
        }
        self.slot.publish(project.clone());
    }
}

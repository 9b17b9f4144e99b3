//! Job records, their on-disk store and the worker pool.
//!
//! Layout under the data directory:
//!
//! ```text
//! jobs/<id>/job.json     the JobRecord
//! jobs/<id>/input        the uploaded graph, verbatim
//! jobs/<id>/result/      files written by the pipeline
//! ```

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use glocal::pipeline::{self, RunConfig, TIMINGS_FILE};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tokio::sync::mpsc;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("unknown job '{0}'")]
    NotFound(String),
    #[error("job {id} cannot move from {from:?} to {to:?}")]
    Transition { id: String, from: JobState, to: JobState },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Pipeline(#[from] glocal::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobState {
    /// Transitions only move forward: queued → running → done | failed.
    /// A queued job may also fail directly (for example on restart).
    pub fn can_advance_to(self, next: JobState) -> bool {
        use JobState::*;
        matches!(
            (self, next),
            (Queued, Running) | (Queued, Failed) | (Running, Done) | (Running, Failed)
        )
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, JobState::Done | JobState::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub id: String,
    pub state: JobState,
    /// Unix seconds.
    pub submitted_at: u64,
    pub started_at: Option<u64>,
    pub finished_at: Option<u64>,
    pub config: RunConfig,
    pub input_bytes: usize,
    pub error: Option<String>,
    /// Result file names, in the order the pipeline wrote them.
    pub files: Vec<String>,
    /// Parsed `timings.json`, once the job is done.
    pub timings: Option<serde_json::Value>,
    /// Every state the job has been in, oldest first.
    pub history: Vec<JobState>,
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub struct JobStore {
    root: PathBuf,
    jobs: Mutex<HashMap<String, JobRecord>>,
    counter: AtomicU64,
}

impl JobStore {
    /// Open (or create) a store. Jobs left queued or running by a previous
    /// process are marked failed.
    pub fn open(data_dir: &Path) -> Result<Self, StoreError> {
        let root = data_dir.join("jobs");
        fs::create_dir_all(&root)?;
        let mut jobs = HashMap::new();
        for entry in fs::read_dir(&root)? {
            let path = entry?.path().join("job.json");
            let Ok(bytes) = fs::read(&path) else { continue };
            match serde_json::from_slice::<JobRecord>(&bytes) {
                Ok(record) => {
                    jobs.insert(record.id.clone(), record);
                }
                Err(e) => log::warn!("skipping unreadable {}: {e}", path.display()),
            }
        }
        let store = JobStore {
            root,
            counter: AtomicU64::new(next_sequence(jobs.keys())),
            jobs: Mutex::new(jobs),
        };
        let stale: Vec<String> = store
            .jobs
            .lock()
            .unwrap()
            .values()
            .filter(|r| !r.state.is_terminal())
            .map(|r| r.id.clone())
            .collect();
        for id in stale {
            store.transition(&id, JobState::Failed, |r| {
                r.error = Some("interrupted by service restart".into());
            })?;
        }
        Ok(store)
    }

    pub fn job_dir(&self, id: &str) -> PathBuf {
        self.root.join(id)
    }

    pub fn input_path(&self, id: &str) -> PathBuf {
        self.job_dir(id).join("input")
    }

    pub fn result_dir(&self, id: &str) -> PathBuf {
        self.job_dir(id).join("result")
    }

    /// Persist a new queued job. The id is a hash prefix of the payload and
    /// config plus a counter, so identical submissions get distinct ids.
    pub fn create(&self, payload: &[u8], config: RunConfig) -> Result<JobRecord, StoreError> {
        let mut hasher = Sha256::new();
        hasher.update(payload);
        hasher.update(serde_json::to_vec(&config).expect("config serializes"));
        let digest = hex::encode(hasher.finalize());
        let seq = self.counter.fetch_add(1, Ordering::SeqCst);
        let id = format!("{}-{seq:06}", &digest[..12]);

        let dir = self.job_dir(&id);
        fs::create_dir_all(&dir)?;
        pipeline::write_atomic(&dir, "input", |w| Ok(w.write_all(payload)?))?;
        let record = JobRecord {
            id: id.clone(),
            state: JobState::Queued,
            submitted_at: now(),
            started_at: None,
            finished_at: None,
            config,
            input_bytes: payload.len(),
            error: None,
            files: Vec::new(),
            timings: None,
            history: vec![JobState::Queued],
        };
        self.persist(&record)?;
        self.jobs.lock().unwrap().insert(id, record.clone());
        Ok(record)
    }

    pub fn get(&self, id: &str) -> Option<JobRecord> {
        self.jobs.lock().unwrap().get(id).cloned()
    }

    /// Move a job to `next`, applying `update` under the same lock.
    pub fn transition<F>(&self, id: &str, next: JobState, update: F) -> Result<JobRecord, StoreError>
    where
        F: FnOnce(&mut JobRecord),
    {
        let mut jobs = self.jobs.lock().unwrap();
        let record = jobs.get_mut(id).ok_or_else(|| StoreError::NotFound(id.to_string()))?;
        if !record.state.can_advance_to(next) {
            return Err(StoreError::Transition {
                id: id.to_string(),
                from: record.state,
                to: next,
            });
        }
        let mut updated = record.clone();
        updated.state = next;
        updated.history.push(next);
        match next {
            JobState::Running => updated.started_at = Some(now()),
            JobState::Done | JobState::Failed => updated.finished_at = Some(now()),
            JobState::Queued => {}
        }
        update(&mut updated);
        self.persist(&updated)?;
        *record = updated.clone();
        Ok(updated)
    }

    fn persist(&self, record: &JobRecord) -> Result<(), StoreError> {
        pipeline::write_atomic(&self.job_dir(&record.id), "job.json", |w| {
            serde_json::to_writer_pretty(&mut *w, record)
                .map_err(|e| glocal::Error::Format(e.to_string()))?;
            Ok(())
        })?;
        Ok(())
    }
}

fn next_sequence<'a>(ids: impl Iterator<Item = &'a String>) -> u64 {
    ids.filter_map(|id| id.rsplit_once('-')?.1.parse::<u64>().ok())
        .max()
        .map_or(0, |s| s + 1)
}

/// Start `workers` tasks pulling job ids from one FIFO channel. Each job
/// runs on the blocking pool, so at most `workers` run at once.
pub fn spawn_workers(store: Arc<JobStore>, workers: usize) -> mpsc::UnboundedSender<String> {
    let (tx, rx) = mpsc::unbounded_channel::<String>();
    let rx = Arc::new(tokio::sync::Mutex::new(rx));
    for worker in 0..workers.max(1) {
        let rx = Arc::clone(&rx);
        let store = Arc::clone(&store);
        tokio::spawn(async move {
            loop {
                let next = rx.lock().await.recv().await;
                let Some(id) = next else { break };
                log::info!("worker {worker} picked up job {id}");
                process(&store, &id).await;
            }
        });
    }
    tx
}

async fn process(store: &Arc<JobStore>, id: &str) {
    if let Err(e) = store.transition(id, JobState::Running, |_| {}) {
        log::error!("{e}");
        return;
    }
    let task_store = Arc::clone(store);
    let task_id = id.to_string();
    let outcome = tokio::task::spawn_blocking(move || execute(&task_store, &task_id)).await;
    let result = match outcome {
        Ok(Ok((files, timings))) => store.transition(id, JobState::Done, |r| {
            r.files = files;
            r.timings = timings;
        }),
        Ok(Err(e)) => store.transition(id, JobState::Failed, |r| r.error = Some(e.to_string())),
        Err(join) => store.transition(id, JobState::Failed, |r| {
            r.error = Some(format!("job panicked: {join}"))
        }),
    };
    if let Err(e) = result {
        log::error!("{e}");
    }
}

fn execute(store: &JobStore, id: &str) -> Result<(Vec<String>, Option<serde_json::Value>), StoreError> {
    let record = store.get(id).ok_or_else(|| StoreError::NotFound(id.to_string()))?;
    let bytes = fs::read(store.input_path(id))?;
    let out = pipeline::run(&bytes, &record.config)?;
    let dir = store.result_dir(id);
    let files = pipeline::write_outputs(&out, &record.config, &dir)?;
    let timings = fs::read(dir.join(TIMINGS_FILE))
        .ok()
        .and_then(|b| serde_json::from_slice(&b).ok());
    Ok((files, timings))
}

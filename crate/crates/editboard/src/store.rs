//! Append-only vote store: one JSON record per line, tasks first, votes
//! appended as they arrive. The whole log is replayed into memory on open.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use editboard_core::alignment::{Choice, ComparisonTask, ComparisonVote};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("store {0} already exists")]
    Exists(PathBuf),
    #[error("unknown comparison '{0}'")]
    UnknownComparison(String),
    #[error("annotator '{annotator_id}' already voted on '{comparison_id}'")]
    Duplicate {
        annotator_id: String,
        comparison_id: String,
    },
    #[error("annotator id must not be empty")]
    EmptyAnnotator,
    #[error("duplicate comparison id '{0}'")]
    DuplicateTask(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum Record {
    Task(ComparisonTask),
    Vote(ComparisonVote),
}

/// Submitted vote; the store stamps the time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteSubmission {
    pub comparison_id: String,
    pub annotator_id: String,
    pub choice: Choice,
}

/// Immutable view of the store contents.
#[derive(Debug, Clone, Default)]
pub struct Snapshot {
    pub tasks: Arc<Vec<ComparisonTask>>,
    pub votes: Arc<Vec<ComparisonVote>>,
}

struct Inner {
    file: File,
    tasks: Arc<Vec<ComparisonTask>>,
    task_index: BTreeMap<String, usize>,
    votes: Arc<Vec<ComparisonVote>>,
    voted: BTreeSet<(String, String)>,
}

pub struct VoteStore {
    path: PathBuf,
    inner: RwLock<Inner>,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl VoteStore {
    /// Creates a new store holding `tasks`. Fails if the file exists.
    pub fn create(path: &Path, tasks: &[ComparisonTask]) -> Result<Self, StoreError> {
        let mut ids = BTreeSet::new();
        for t in tasks {
            if !ids.insert(t.comparison_id.as_str()) {
                return Err(StoreError::DuplicateTask(t.comparison_id.clone()));
            }
        }
        let mut file = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(path)
            .map_err(|e| {
                if e.kind() == std::io::ErrorKind::AlreadyExists {
                    StoreError::Exists(path.to_path_buf())
                } else {
                    StoreError::Io {
                        path: path.to_path_buf(),
                        source: e,
                    }
                }
            })?;
        let mut buf = Vec::new();
        for t in tasks {
            serde_json::to_writer(&mut buf, &Record::Task(t.clone())).expect("task serializes");
            buf.push(b'\n');
        }
        file.write_all(&buf).map_err(io(path))?;
        file.sync_all().map_err(io(path))?;
        drop(file);
        Self::open(path)
    }

    /// Opens an existing store and replays it.
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        let reader = BufReader::new(File::open(path).map_err(io(path))?);
        let mut tasks = Vec::new();
        let mut task_index = BTreeMap::new();
        let mut votes = Vec::new();
        let mut voted = BTreeSet::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(io(path))?;
            if line.trim().is_empty() {
                continue;
            }
            let corrupt = |message: String| StoreError::Corrupt {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            match serde_json::from_str::<Record>(&line).map_err(|e| corrupt(e.to_string()))? {
                Record::Task(t) => {
                    if task_index.insert(t.comparison_id.clone(), tasks.len()).is_some() {
                        return Err(corrupt(format!("duplicate comparison '{}'", t.comparison_id)));
                    }
                    tasks.push(t);
                }
                Record::Vote(v) => {
                    if !task_index.contains_key(&v.comparison_id) {
                        return Err(corrupt(format!("vote for unknown comparison '{}'", v.comparison_id)));
                    }
                    if !voted.insert((v.annotator_id.clone(), v.comparison_id.clone())) {
                        return Err(corrupt(format!("duplicate vote on '{}'", v.comparison_id)));
                    }
                    votes.push(v);
                }
            }
        }
        let file = OpenOptions::new().append(true).open(path).map_err(io(path))?;
        Ok(Self {
            path: path.to_path_buf(),
            inner: RwLock::new(Inner {
                file,
                tasks: Arc::new(tasks),
                task_index,
                votes: Arc::new(votes),
                voted,
            }),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn snapshot(&self) -> Snapshot {
        let g = self.inner.read().expect("store lock");
        Snapshot {
            tasks: g.tasks.clone(),
            votes: g.votes.clone(),
        }
    }

    pub fn task(&self, comparison_id: &str) -> Option<ComparisonTask> {
        let g = self.inner.read().expect("store lock");
        g.task_index.get(comparison_id).map(|&i| g.tasks[i].clone())
    }

    /// Validates, persists (with fsync) and indexes one vote.
    pub fn record_vote(&self, submission: VoteSubmission) -> Result<ComparisonVote, StoreError> {
        if submission.annotator_id.trim().is_empty() {
            return Err(StoreError::EmptyAnnotator);
        }
        let mut g = self.inner.write().expect("store lock");
        if !g.task_index.contains_key(&submission.comparison_id) {
            return Err(StoreError::UnknownComparison(submission.comparison_id));
        }
        let key = (submission.annotator_id.clone(), submission.comparison_id.clone());
        if g.voted.contains(&key) {
            return Err(StoreError::Duplicate {
                annotator_id: key.0,
                comparison_id: key.1,
            });
        }
        let vote = ComparisonVote {
            comparison_id: submission.comparison_id,
            annotator_id: submission.annotator_id,
            choice: submission.choice,
            timestamp_ms: now_ms(),
        };
        let mut line = serde_json::to_vec(&Record::Vote(vote.clone())).expect("vote serializes");
        line.push(b'\n');
        g.file.write_all(&line).map_err(io(&self.path))?;
        g.file.sync_data().map_err(io(&self.path))?;
        g.voted.insert(key);
        Arc::make_mut(&mut g.votes).push(vote.clone());
        Ok(vote)
    }

    pub fn has_voted(&self, annotator_id: &str, comparison_id: &str) -> bool {
        let g = self.inner.read().expect("store lock");
        g.voted.contains(&(annotator_id.to_string(), comparison_id.to_string()))
    }
}

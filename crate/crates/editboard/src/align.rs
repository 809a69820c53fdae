//! Files and lookups around the human-alignment experiment.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use editboard_core::alignment::{analyze, AlignmentReport, ComparisonGroup, VideoRef};
use editboard_core::{CaseResult, Metric};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::report::{load_case_results, ReportError};

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed groups file {path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error(transparent)]
    Results(#[from] ReportError),
    #[error("model '{model}' appears in more than one results directory")]
    DuplicateModel { model: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupsFile {
    pub groups: Vec<ComparisonGroup>,
}

pub fn read_groups(path: &Path) -> Result<GroupsFile, AlignError> {
    let text = fs::read_to_string(path).map_err(|source| AlignError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| AlignError::Malformed {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Metric values of every evaluated case, keyed by `(model, case_id)`.
#[derive(Debug, Clone, Default)]
pub struct MetricTable {
    values: BTreeMap<(String, String), CaseResult>,
}

impl MetricTable {
    pub fn from_results(results: Vec<CaseResult>) -> Self {
        Self {
            values: results
                .into_iter()
                .map(|r| ((r.model_name.clone(), r.case_id.clone()), r))
                .collect(),
        }
    }

    /// Reads `cases/*.json` from each evaluation output directory.
    pub fn load(dirs: &[PathBuf]) -> Result<Self, AlignError> {
        let mut table = Self::default();
        let mut seen_models: BTreeMap<String, PathBuf> = BTreeMap::new();
        for dir in dirs {
            for r in load_case_results(dir)? {
                if let Some(prev) = seen_models.get(&r.model_name) {
                    if prev != dir {
                        return Err(AlignError::DuplicateModel { model: r.model_name });
                    }
                }
                seen_models.insert(r.model_name.clone(), dir.clone());
                table.values.insert((r.model_name.clone(), r.case_id.clone()), r);
            }
        }
        Ok(table)
    }

    pub fn value(&self, video: &VideoRef, metric: Metric) -> Option<f64> {
        self.values
            .get(&(video.model_id.clone(), video.case_id.clone()))
            .and_then(|r| r.value(metric))
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Runs the per-dimension analysis on a store snapshot.
pub fn analyze_store(
    snapshot: &crate::store::Snapshot,
    metrics: &MetricTable,
    deltas: &BTreeMap<Metric, f64>,
) -> AlignmentReport {
    analyze(&snapshot.tasks, &snapshot.votes, |v, m| metrics.value(v, m), deltas)
}

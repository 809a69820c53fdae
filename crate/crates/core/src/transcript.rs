//! Per-case results and the per-task transcript table.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::embedding_metrics::ExecutionResult;
use crate::fidelity::{FidelityResult, MetricConfig, SemanticResult};
use crate::task::{Direction, Metric, TaskCategory};

/// Outcome of one metric on one case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum MetricOutcome {
    Ok { value: f64 },
    NotApplicable,
    Error { message: String },
}

impl MetricOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            Self::Ok { value } => Some(*value),
            _ => None,
        }
    }

    pub fn is_error(&self) -> bool {
        matches!(self, Self::Error { .. })
    }
}

/// Backend identities (`model_id@version`) used for a case.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BackendIds {
    pub optical_flow: Option<String>,
    pub joint_image_text: Option<String>,
    pub vision_features: Option<String>,
    pub aesthetic: Option<String>,
    pub imaging_quality: Option<String>,
}

/// Conventions the numbers depend on, carried with every result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conventions {
    pub out_of_bounds_warp: String,
    pub ff_alpha_empty_frames: String,
    pub ff_dispatch: String,
    pub consistency_negative_similarity: String,
    pub clip_similarity_scale: String,
}

impl Conventions {
    pub fn for_config(config: &MetricConfig) -> Self {
        Self {
            out_of_bounds_warp: "excluded from the FF-α valid area".into(),
            ff_alpha_empty_frames: "skipped, not scored".into(),
            ff_dispatch: "per video on the mean valid fraction across frame pairs".into(),
            consistency_negative_similarity: if config.clamp_negative_similarity {
                "clamped to 0".into()
            } else {
                "kept".into()
            },
            clip_similarity_scale: "raw cosine".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub case_id: String,
    pub model_name: String,
    pub task: TaskCategory,
    /// All nine metrics, keyed in table order.
    pub metrics: BTreeMap<Metric, MetricOutcome>,
    pub fidelity: Option<FidelityResult>,
    pub semantic: Option<SemanticResult>,
    pub execution: Option<ExecutionResult>,
    pub backend_ids: BackendIds,
    pub config: MetricConfig,
}

impl CaseResult {
    pub fn outcome(&self, metric: Metric) -> &MetricOutcome {
        self.metrics.get(&metric).unwrap_or(&MetricOutcome::NotApplicable)
    }

    pub fn value(&self, metric: Metric) -> Option<f64> {
        self.outcome(metric).value()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    /// Unweighted mean over cases where the metric succeeded.
    pub mean: Option<f64>,
    /// Number of cases that contributed.
    pub n: usize,
    /// Number of cases where the metric errored.
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRow {
    pub task: TaskCategory,
    pub case_count: usize,
    pub cells: BTreeMap<Metric, Cell>,
}

impl TranscriptRow {
    pub fn mean(&self, metric: Metric) -> Option<f64> {
        self.cells.get(&metric).and_then(|c| c.mean)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub model_name: String,
    /// One row per task category, in SOSA, SE, SOMA, MOA order.
    pub rows: Vec<TranscriptRow>,
    pub case_count: usize,
    pub backend_ids: Vec<BackendIds>,
    pub config: Option<MetricConfig>,
    pub conventions: Option<Conventions>,
    pub warnings: Vec<String>,
}

impl Transcript {
    pub fn row(&self, task: TaskCategory) -> Option<&TranscriptRow> {
        self.rows.iter().find(|r| r.task == task)
    }
}

/// Builds the transcript table from per-case results.
///
/// Cases are sorted by id inside each task before summation so the result
/// is independent of input order, bit for bit.
pub fn aggregate_transcript(results: &[CaseResult], model_name: &str) -> Transcript {
    let mut warnings = Vec::new();
    let mut rows = Vec::with_capacity(TaskCategory::ALL.len());
    for task in TaskCategory::ALL {
        let mut cases: Vec<&CaseResult> = results.iter().filter(|r| r.task == task).collect();
        cases.sort_by(|a, b| a.case_id.cmp(&b.case_id));
        let mut cells = BTreeMap::new();
        for metric in Metric::ALL {
            let values: Vec<f64> = cases.iter().filter_map(|c| c.value(metric)).collect();
            let errors = cases.iter().filter(|c| c.outcome(metric).is_error()).count();
            let mean = if values.is_empty() {
                None
            } else {
                Some(values.iter().sum::<f64>() / values.len() as f64)
            };
            if !cases.is_empty() && values.is_empty() && errors > 0 {
                warnings.push(alloc::format!(
                    "{task}: {} errored in all {} case(s)",
                    metric.label(),
                    errors
                ));
            }
            cells.insert(metric, Cell { mean, n: values.len(), errors });
        }
        if cases.is_empty() {
            warnings.push(alloc::format!("{task}: no cases"));
        }
        rows.push(TranscriptRow {
            task,
            case_count: cases.len(),
            cells,
        });
    }

    let mut backend_ids: Vec<BackendIds> = results.iter().map(|r| r.backend_ids.clone()).collect();
    backend_ids.sort();
    backend_ids.dedup();

    let mut configs = results.iter().map(|r| &r.config);
    let config = configs.next().cloned();
    if let Some(first) = &config {
        if results.iter().any(|r| &r.config != first) {
            warnings.push("cases were evaluated with different metric configs".into());
        }
    }
    let conventions = config.as_ref().map(Conventions::for_config);

    Transcript {
        model_name: model_name.into(),
        rows,
        case_count: results.len(),
        backend_ids,
        config,
        conventions,
        warnings,
    }
}

pub const RADAR_NORMALIZATION: &str =
    "lower-is-better axes mapped through 1/(1+x); every axis then min-max scaled across tasks; \
     an axis with equal values across tasks maps to 1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarProfile {
    pub task: TaskCategory,
    /// One entry per axis in `RadarData::axes` order; `None` means omitted.
    pub values: Vec<Option<f64>>,
    pub omitted_axes: Vec<Metric>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarData {
    pub model_name: String,
    pub normalization: String,
    pub axes: Vec<Metric>,
    pub profiles: Vec<RadarProfile>,
}

/// Direction-corrected value: larger is better on every axis.
pub fn radar_orient(metric: Metric, value: f64) -> f64 {
    match metric.direction() {
        Direction::LowerBetter => 1.0 / (1.0 + value),
        Direction::HigherBetter => value,
    }
}

/// Normalized nine-axis profile per task for radar plots.
pub fn radar_profile(t: &Transcript) -> RadarData {
    let axes: Vec<Metric> = Metric::ALL.to_vec();
    let oriented: Vec<Vec<Option<f64>>> = t
        .rows
        .iter()
        .map(|row| axes.iter().map(|&m| row.mean(m).map(|v| radar_orient(m, v))).collect())
        .collect();

    let mut profiles: Vec<RadarProfile> = t
        .rows
        .iter()
        .map(|row| RadarProfile {
            task: row.task,
            values: Vec::with_capacity(axes.len()),
            omitted_axes: Vec::new(),
        })
        .collect();

    for (a, &metric) in axes.iter().enumerate() {
        let present: Vec<f64> = oriented.iter().filter_map(|r| r[a]).collect();
        let lo = present.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = present.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (p, row) in profiles.iter_mut().zip(&oriented) {
            match row[a] {
                Some(v) => {
                    let scaled = if hi > lo { (v - lo) / (hi - lo) } else { 1.0 };
                    p.values.push(Some(scaled));
                }
                None => {
                    p.values.push(None);
                    p.omitted_axes.push(metric);
                }
            }
        }
    }

    RadarData {
        model_name: t.model_name.clone(),
        normalization: RADAR_NORMALIZATION.into(),
        axes,
        profiles,
    }
}

//! Human-alignment protocol: pairwise comparison tasks, matching rate and
//! Pearson correlation between human preferences and metric values.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::task::{Direction, Metric};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlignmentError {
    #[error("group '{0}' has fewer than two videos")]
    GroupTooSmall(String),
    #[error("group '{0}' lists the same video twice")]
    DuplicateVideo(String),
    #[error("duplicate group id '{0}'")]
    DuplicateGroup(String),
    #[error("no metric values for comparison '{0}'")]
    MissingMetricValues(String),
    #[error("no votes")]
    NoVotes,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("zero variance")]
    ZeroVariance,
}

/// One edited video shown to annotators.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VideoRef {
    pub model_id: String,
    /// Case id in the model's evaluation results.
    pub case_id: String,
    /// Path of the playable file relative to the media root.
    pub media: String,
}

/// Edits of the same source video and prompt by different models.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonGroup {
    pub group_id: String,
    pub videos: Vec<VideoRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonTask {
    pub comparison_id: String,
    pub group_id: String,
    pub dimension: Metric,
    pub video_a: VideoRef,
    pub video_b: VideoRef,
    pub instruction: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Choice {
    A,
    B,
    #[serde(rename = "INDISTINGUISHABLE")]
    Indistinguishable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonVote {
    pub comparison_id: String,
    pub annotator_id: String,
    pub choice: Choice,
    /// Unix time in milliseconds, stamped by the store.
    pub timestamp_ms: u64,
}

/// All unordered model pairs per group, per dimension. Dimensions are the
/// outer loop so a per-dimension session walks groups in order. A/B sides
/// are drawn from a ChaCha stream seeded with `seed`.
pub fn generate_pairs(
    groups: &[ComparisonGroup],
    dimensions: &[Metric],
    seed: u64,
) -> Result<Vec<ComparisonTask>, AlignmentError> {
    let mut seen = BTreeSet::new();
    for g in groups {
        if !seen.insert(g.group_id.as_str()) {
            return Err(AlignmentError::DuplicateGroup(g.group_id.clone()));
        }
        if g.videos.len() < 2 {
            return Err(AlignmentError::GroupTooSmall(g.group_id.clone()));
        }
        let distinct: BTreeSet<_> = g.videos.iter().collect();
        if distinct.len() != g.videos.len() {
            return Err(AlignmentError::DuplicateVideo(g.group_id.clone()));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tasks = Vec::new();
    for &dimension in dimensions {
        for g in groups {
            let mut k = 0;
            for i in 0..g.videos.len() {
                for j in i + 1..g.videos.len() {
                    let (a, b) = if rng.next_u32() & 1 == 0 { (i, j) } else { (j, i) };
                    tasks.push(ComparisonTask {
                        comparison_id: alloc::format!("{}/{}/{}", dimension.key(), g.group_id, k),
                        group_id: g.group_id.clone(),
                        dimension,
                        video_a: g.videos[a].clone(),
                        video_b: g.videos[b].clone(),
                        instruction: dimension.instruction().into(),
                    });
                    k += 1;
                }
            }
        }
    }
    Ok(tasks)
}

/// Side the metric prefers, or `None` on an exact tie.
pub fn preferred_side(value_a: f64, value_b: f64, direction: Direction) -> Option<Choice> {
    let a_better = match direction {
        Direction::LowerBetter => value_a < value_b,
        Direction::HigherBetter => value_a > value_b,
    };
    let b_better = match direction {
        Direction::LowerBetter => value_b < value_a,
        Direction::HigherBetter => value_b > value_a,
    };
    if a_better {
        Some(Choice::A)
    } else if b_better {
        Some(Choice::B)
    } else {
        None
    }
}

/// Whether one vote agrees with the metric.
pub fn vote_matches(choice: Choice, value_a: f64, value_b: f64, direction: Direction, delta: f64) -> bool {
    match choice {
        Choice::Indistinguishable => libm::fabs(value_a - value_b) < delta,
        side => preferred_side(value_a, value_b, direction) == Some(side),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchSummary {
    pub matches: usize,
    pub votes: usize,
    /// Percent, `100 × matches / votes`.
    pub rate: f64,
}

/// Percentage of votes agreeing with the metric.
pub fn matching_rate(
    votes: &[ComparisonVote],
    metric_values: &BTreeMap<String, (f64, f64)>,
    direction: Direction,
    delta: f64,
) -> Result<MatchSummary, AlignmentError> {
    if votes.is_empty() {
        return Err(AlignmentError::NoVotes);
    }
    let mut matches = 0;
    for v in votes {
        let &(a, b) = metric_values
            .get(&v.comparison_id)
            .ok_or_else(|| AlignmentError::MissingMetricValues(v.comparison_id.clone()))?;
        if vote_matches(v.choice, a, b, direction, delta) {
            matches += 1;
        }
    }
    Ok(MatchSummary {
        matches,
        votes: votes.len(),
        rate: 100.0 * matches as f64 / votes.len() as f64,
    })
}

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, AlignmentError> {
    if x.len() != y.len() {
        return Err(AlignmentError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(AlignmentError::TooFewSamples(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AlignmentError::ZeroVariance);
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// Indistinguishability threshold when none is configured: 5% of the
/// observed range. A degenerate range yields the smallest positive delta so
/// exact ties still count as indistinguishable.
pub fn default_delta(values: &[f64]) -> Option<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return None;
    }
    Some((0.05 * (hi - lo)).max(f64::MIN_POSITIVE))
}

pub const PEARSON_BASIS: &str =
    "per edited video: human win rate ((wins + 0.5 x indistinguishable) / appearances) against the \
     direction-corrected metric value (negated for lower-is-better metrics)";

pub const DELTA_RULE: &str = "configured per metric, else 5% of the observed value range";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricAlignment {
    pub metric: Metric,
    pub comparisons: usize,
    pub vote_count: usize,
    pub matches: usize,
    /// Percent in `[0, 100]`.
    pub matching_rate: Option<f64>,
    pub delta_used: Option<f64>,
    pub pearson_r: Option<f64>,
    pub pearson_samples: usize,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub metrics: Vec<MetricAlignment>,
    pub pearson_basis: String,
    pub delta_rule: String,
}

/// Per-dimension matching rate and Pearson correlation.
///
/// `value_of` returns the metric value of a video, or `None` when unknown;
/// dimensions without complete values report counts only.
pub fn analyze(
    tasks: &[ComparisonTask],
    votes: &[ComparisonVote],
    value_of: impl Fn(&VideoRef, Metric) -> Option<f64>,
    deltas: &BTreeMap<Metric, f64>,
) -> AlignmentReport {
    let by_id: BTreeMap<&str, &ComparisonTask> =
        tasks.iter().map(|t| (t.comparison_id.as_str(), t)).collect();
    let dims: BTreeSet<Metric> = tasks.iter().map(|t| t.dimension).collect();

    let mut metrics = Vec::new();
    for dim in dims {
        let dim_tasks: Vec<&ComparisonTask> = tasks.iter().filter(|t| t.dimension == dim).collect();
        let dim_votes: Vec<&ComparisonVote> = votes
            .iter()
            .filter(|v| by_id.get(v.comparison_id.as_str()).is_some_and(|t| t.dimension == dim))
            .collect();
        let mut entry = MetricAlignment {
            metric: dim,
            comparisons: dim_tasks.len(),
            vote_count: dim_votes.len(),
            matches: 0,
            matching_rate: None,
            delta_used: None,
            pearson_r: None,
            pearson_samples: 0,
            notes: Vec::new(),
        };

        let mut values: BTreeMap<&VideoRef, f64> = BTreeMap::new();
        let mut missing = 0;
        for t in &dim_tasks {
            for v in [&t.video_a, &t.video_b] {
                match value_of(v, dim) {
                    Some(x) => {
                        values.insert(v, x);
                    }
                    None => missing += 1,
                }
            }
        }
        if missing > 0 {
            entry.notes.push(alloc::format!("{missing} video reference(s) without a {} value", dim.key()));
        }

        let observed: Vec<f64> = values.values().copied().collect();
        let delta = deltas.get(&dim).copied().or_else(|| default_delta(&observed));
        entry.delta_used = delta;

        let pairs: BTreeMap<String, (f64, f64)> = dim_tasks
            .iter()
            .filter_map(|t| {
                Some((
                    t.comparison_id.clone(),
                    (*values.get(&t.video_a)?, *values.get(&t.video_b)?),
                ))
            })
            .collect();
        let scored: Vec<ComparisonVote> = dim_votes
            .iter()
            .filter(|v| pairs.contains_key(&v.comparison_id))
            .map(|v| (*v).clone())
            .collect();
        if scored.len() < dim_votes.len() {
            entry.notes.push(alloc::format!(
                "{} vote(s) skipped for missing metric values",
                dim_votes.len() - scored.len()
            ));
        }
        if let (Some(delta), false) = (delta, scored.is_empty()) {
            if let Ok(s) = matching_rate(&scored, &pairs, dim.direction(), delta) {
                entry.matches = s.matches;
                entry.matching_rate = Some(s.rate);
            }
        }

        // per-video win rates
        let mut tally: BTreeMap<&VideoRef, (f64, usize)> = BTreeMap::new();
        for v in &dim_votes {
            let t = by_id[v.comparison_id.as_str()];
            let (wa, wb) = match v.choice {
                Choice::A => (1.0, 0.0),
                Choice::B => (0.0, 1.0),
                Choice::Indistinguishable => (0.5, 0.5),
            };
            for (video, w) in [(&t.video_a, wa), (&t.video_b, wb)] {
                let e = tally.entry(video).or_insert((0.0, 0));
                e.0 += w;
                e.1 += 1;
            }
        }
        let sign = match dim.direction() {
            Direction::LowerBetter => -1.0,
            Direction::HigherBetter => 1.0,
        };
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for (video, (wins, n)) in &tally {
            if let Some(v) = values.get(video) {
                xs.push(wins / *n as f64);
                ys.push(sign * v);
            }
        }
        entry.pearson_samples = xs.len();
        match pearson(&xs, &ys) {
            Ok(r) => entry.pearson_r = Some(r),
            Err(e) if !dim_votes.is_empty() => entry.notes.push(alloc::format!("pearson unavailable: {e}")),
            Err(_) => {}
        }
        metrics.push(entry);
    }

    AlignmentReport {
        metrics,
        pearson_basis: PEARSON_BASIS.into(),
        delta_rule: DELTA_RULE.into(),
    }
}

//! Fidelity metrics: FF-α, FF-β, their σ dispatch, and Semantic Score.
//!
//! All three work on the 0–255 intensity scale and are lower-is-better.
//! Frame-level scores are reduced in frame-index order so results do not
//! depend on how callers schedule work.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::{FlowError, FlowEstimator, FlowField};
use crate::frame::{FrameError, FrameSequence, MaskSequence};
use crate::task::Metric;
use crate::warp::{backward_warp, max_channel_diff, valid_fraction, validity_mask, WarpError};

pub const DEFAULT_THETA: f64 = 15.0;
pub const DEFAULT_SIGMA: f64 = 0.4;
pub const DEFAULT_EPSILON_FLOW: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FidelityError {
    #[error(transparent)]
    Frames(#[from] FrameError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Warp(#[from] WarpError),
    #[error("FF-α inapplicable: all {0} frame pairs have an empty valid area; use FF-β")]
    AlphaInapplicable(usize),
    #[error("no unmasked region in frame {0}")]
    NoUnmaskedRegion(usize),
    #[error("invalid metric config: {0}")]
    InvalidConfig(&'static str),
}

/// Thresholds shared by the metrics and the alignment analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    /// Validity threshold on the max-channel warp error, 0–255 scale.
    pub theta: f64,
    /// Minimum mean valid-pixel fraction for FF-α to apply.
    pub sigma: f64,
    /// Flow magnitude (pixels) below which a vector counts as no motion.
    pub epsilon_flow: f64,
    /// Clamp negative cosine similarities to 0 in the consistency metrics.
    #[serde(default = "default_true")]
    pub clamp_negative_similarity: bool,
    /// Indistinguishability thresholds for matching-rate analysis. Metrics
    /// without an entry use 5% of the observed value range.
    #[serde(default)]
    pub match_deltas: BTreeMap<Metric, f64>,
}

fn default_true() -> bool {
    true
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            theta: DEFAULT_THETA,
            sigma: DEFAULT_SIGMA,
            epsilon_flow: DEFAULT_EPSILON_FLOW,
            clamp_negative_similarity: true,
            match_deltas: BTreeMap::new(),
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<(), FidelityError> {
        if !(self.theta > 0.0 && self.theta < 255.0) {
            return Err(FidelityError::InvalidConfig("theta must lie in (0, 255)"));
        }
        if !(0.0..=1.0).contains(&self.sigma) {
            return Err(FidelityError::InvalidConfig("sigma must lie in [0, 1]"));
        }
        if !(self.epsilon_flow > 0.0 && self.epsilon_flow.is_finite()) {
            return Err(FidelityError::InvalidConfig("epsilon_flow must be positive"));
        }
        if self.match_deltas.values().any(|d| !(*d >= 0.0)) {
            return Err(FidelityError::InvalidConfig("match deltas must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FidelityVariant {
    #[serde(rename = "FF_ALPHA")]
    FfAlpha,
    #[serde(rename = "FF_BETA")]
    FfBeta,
}

impl FidelityVariant {
    pub fn metric(self) -> Metric {
        match self {
            Self::FfAlpha => Metric::FfAlpha,
            Self::FfBeta => Metric::FfBeta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityResult {
    pub value: f64,
    pub variant_used: FidelityVariant,
    /// One entry per frame pair; `None` marks an FF-α frame skipped for an
    /// empty valid area.
    pub per_frame: Vec<Option<f64>>,
    /// Valid-pixel fraction per frame pair (empty when FF-β ran without a
    /// dispatch pass).
    pub valid_fractions: Vec<f64>,
    pub skipped_frames: usize,
}

impl FidelityResult {
    pub fn mean_valid_fraction(&self) -> Option<f64> {
        mean(&self.valid_fractions)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticResult {
    pub value: f64,
    pub per_frame: Vec<f64>,
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Flows between consecutive frames: entry `i` maps frame `i` to frame `i+1`.
pub fn consecutive_flows(
    estimator: &(impl FlowEstimator + ?Sized),
    video: &FrameSequence,
) -> Result<Vec<FlowField>, FlowError> {
    video
        .frames()
        .windows(2)
        .map(|pair| estimator.estimate_flow(&pair[0], &pair[1]))
        .collect()
}

fn check_flows(video: &FrameSequence, flows: &[FlowField]) -> Result<(), FidelityError> {
    if flows.len() + 1 != video.frame_count() {
        return Err(FrameError::FrameCountMismatch {
            original: video.frame_count(),
            edited: flows.len() + 1,
        }
        .into());
    }
    Ok(())
}

/// Per-pair FF-α pass: frame scores (None when the valid area is empty) and
/// valid fractions.
fn alpha_pass(
    original: &FrameSequence,
    edited: &FrameSequence,
    flows: &[FlowField],
    theta: f64,
) -> Result<(Vec<Option<f64>>, Vec<f64>), FidelityError> {
    original.check_paired(edited)?;
    check_flows(original, flows)?;
    let mut scores = Vec::with_capacity(flows.len());
    let mut fractions = Vec::with_capacity(flows.len());
    for (i, flow) in flows.iter().enumerate() {
        let recon = backward_warp(original.frame(i + 1), flow)?;
        let recon_edited = backward_warp(edited.frame(i + 1), flow)?;
        let mask = validity_mask(&recon.warped, original.frame(i), &recon.in_bounds, theta)?;
        fractions.push(valid_fraction(&mask)?);

        let target = edited.frame(i);
        let m = mask.map();
        let mut sum = 0.0;
        let mut count = 0usize;
        for y in 0..m.height() {
            for x in 0..m.width() {
                if m.get(x, y) {
                    sum += max_channel_diff(recon_edited.warped.pixel(x, y), target.pixel(x, y));
                    count += 1;
                }
            }
        }
        scores.push((count > 0).then(|| sum / count as f64));
    }
    Ok((scores, fractions))
}

fn alpha_result(scores: Vec<Option<f64>>, fractions: Vec<f64>) -> Result<FidelityResult, FidelityError> {
    let kept: Vec<f64> = scores.iter().flatten().copied().collect();
    let value = mean(&kept).ok_or(FidelityError::AlphaInapplicable(scores.len()))?;
    Ok(FidelityResult {
        value,
        variant_used: FidelityVariant::FfAlpha,
        skipped_frames: scores.len() - kept.len(),
        per_frame: scores,
        valid_fractions: fractions,
    })
}

/// FF-α with precomputed original-video flows (`flows[i]`: frame i → i+1).
pub fn ff_alpha_with_flows(
    original: &FrameSequence,
    edited: &FrameSequence,
    flows: &[FlowField],
    theta: f64,
) -> Result<FidelityResult, FidelityError> {
    let (scores, fractions) = alpha_pass(original, edited, flows, theta)?;
    alpha_result(scores, fractions)
}

/// Warp-reconstruction fidelity.
///
/// For each pair `i → i+1` of the original video the flow reconstructs frame
/// `i` from frame `i+1`, for both videos. Pixels where the original
/// reconstruction stays within `theta` form the valid area; the frame score
/// is the mean max-channel error of the edited reconstruction over that
/// area. Frames with an empty valid area are skipped.
pub fn ff_alpha(
    estimator: &(impl FlowEstimator + ?Sized),
    original: &FrameSequence,
    edited: &FrameSequence,
    theta: f64,
) -> Result<FidelityResult, FidelityError> {
    original.check_paired(edited)?;
    let flows = consecutive_flows(estimator, original)?;
    ff_alpha_with_flows(original, edited, &flows, theta)
}

/// `1 − cos` of the angle between two flow vectors.
///
/// Both magnitudes below `epsilon` score 0 (agreeing "no motion"). When only
/// one is below, the cosine is taken with magnitudes floored at `epsilon`.
#[inline]
pub fn flow_angle_score(a: (f32, f32), b: (f32, f32), epsilon: f64) -> f64 {
    let (ax, ay) = (a.0 as f64, a.1 as f64);
    let (bx, by) = (b.0 as f64, b.1 as f64);
    let ma = libm::sqrt(ax * ax + ay * ay);
    let mb = libm::sqrt(bx * bx + by * by);
    if ma < epsilon && mb < epsilon {
        return 0.0;
    }
    if a == b {
        return 0.0;
    }
    let cos = (ax * bx + ay * by) / (ma.max(epsilon) * mb.max(epsilon));
    1.0 - cos.clamp(-1.0, 1.0)
}

/// FF-β from precomputed flow lists of equal length.
pub fn ff_beta_with_flows(
    original_flows: &[FlowField],
    edited_flows: &[FlowField],
    epsilon: f64,
) -> Result<FidelityResult, FidelityError> {
    if original_flows.len() != edited_flows.len() || original_flows.is_empty() {
        return Err(FrameError::FrameCountMismatch {
            original: original_flows.len() + 1,
            edited: edited_flows.len() + 1,
        }
        .into());
    }
    let mut per_frame = Vec::with_capacity(original_flows.len());
    for (lo, le) in original_flows.iter().zip(edited_flows) {
        if lo.width() != le.width() || lo.height() != le.height() {
            return Err(FlowError::SizeMismatch(lo.width(), lo.height(), le.width(), le.height()).into());
        }
        let mut sum = 0.0;
        for i in 0..lo.u().len() {
            sum += flow_angle_score((lo.u()[i], lo.v()[i]), (le.u()[i], le.v()[i]), epsilon);
        }
        per_frame.push(sum / lo.u().len() as f64);
    }
    let value = per_frame.iter().sum::<f64>() / per_frame.len() as f64;
    Ok(FidelityResult {
        value,
        variant_used: FidelityVariant::FfBeta,
        per_frame: per_frame.into_iter().map(Some).collect(),
        valid_fractions: Vec::new(),
        skipped_frames: 0,
    })
}

/// Flow-direction fidelity: mean over frames and pixels of
/// [`flow_angle_score`] between original and edited consecutive flows.
/// Range `[0, 2]`.
pub fn ff_beta(
    estimator: &(impl FlowEstimator + ?Sized),
    original: &FrameSequence,
    edited: &FrameSequence,
    epsilon: f64,
) -> Result<FidelityResult, FidelityError> {
    original.check_paired(edited)?;
    let lo = consecutive_flows(estimator, original)?;
    let le = consecutive_flows(estimator, edited)?;
    ff_beta_with_flows(&lo, &le, epsilon)
}

/// Runs FF-α when the mean valid fraction over frame pairs reaches `sigma`,
/// FF-β otherwise. The valid fractions are kept in either case.
pub fn ff_dispatch(
    estimator: &(impl FlowEstimator + ?Sized),
    original: &FrameSequence,
    edited: &FrameSequence,
    config: &MetricConfig,
) -> Result<FidelityResult, FidelityError> {
    config.validate()?;
    original.check_paired(edited)?;
    let flows = consecutive_flows(estimator, original)?;
    let (scores, fractions) = alpha_pass(original, edited, &flows, config.theta)?;
    let mean_fraction = mean(&fractions).unwrap_or(0.0);
    if mean_fraction >= config.sigma {
        match alpha_result(scores, fractions.clone()) {
            Ok(r) => return Ok(r),
            Err(FidelityError::AlphaInapplicable(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let edited_flows = consecutive_flows(estimator, edited)?;
    let mut result = ff_beta_with_flows(&flows, &edited_flows, config.epsilon_flow)?;
    result.valid_fractions = fractions;
    Ok(result)
}

/// Mean max-channel deviation outside the object mask (`M = 0`), averaged
/// over all frames.
pub fn semantic_score(
    original: &FrameSequence,
    edited: &FrameSequence,
    masks: &MaskSequence,
) -> Result<SemanticResult, FidelityError> {
    original.check_paired(edited)?;
    masks.check_paired(original)?;
    let mut per_frame = Vec::with_capacity(original.frame_count());
    for (i, ((fo, fe), m)) in original
        .frames()
        .iter()
        .zip(edited.frames())
        .zip(masks.masks())
        .enumerate()
    {
        let mut sum = 0.0;
        let mut count = 0usize;
        for y in 0..fo.height() {
            for x in 0..fo.width() {
                if !m.get(x, y) {
                    sum += max_channel_diff(fo.pixel(x, y).map(f64::from), fe.pixel(x, y));
                    count += 1;
                }
            }
        }
        if count == 0 {
            return Err(FidelityError::NoUnmaskedRegion(i));
        }
        per_frame.push(sum / count as f64);
    }
    let value = per_frame.iter().sum::<f64>() / per_frame.len() as f64;
    Ok(SemanticResult { value, per_frame })
}

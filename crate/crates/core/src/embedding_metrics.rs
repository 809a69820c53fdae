//! Execution, consistency and style metrics on top of perception backends.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::backends::{
    aesthetic_score, embed_text, imaging_quality_score, AestheticPredictor, BackendError,
    EmbeddingVector, ImageTextEmbedder, ImagingQualityPredictor, VisionFeatureExtractor,
};
use crate::frame::FrameSequence;
use crate::task::PromptPair;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub success_rate: f64,
    pub clip_similarity: f64,
    pub per_frame_flags: Vec<bool>,
    /// `(similarity to source prompt, similarity to target prompt)` per frame.
    pub per_frame_similarities: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyStyleResult {
    pub subject_consistency: f64,
    pub background_consistency: f64,
    pub aesthetic_quality: f64,
    pub imaging_quality: f64,
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len();
    values.sum::<f64>() / n as f64
}

/// Per-frame cosine similarity to the source and target prompts.
pub fn prompt_similarities(
    edited: &FrameSequence,
    prompts: &PromptPair,
    embedder: &(impl ImageTextEmbedder + ?Sized),
) -> Result<Vec<(f64, f64)>, BackendError> {
    let source = embed_text(embedder, &prompts.source)?;
    let target = embed_text(embedder, &prompts.target)?;
    edited
        .frames()
        .iter()
        .map(|f| {
            let e = embedder.embed_image(f)?;
            Ok((e.cosine(&source)?, e.cosine(&target)?))
        })
        .collect()
}

/// Success Rate and CLIP Similarity from one embedding pass.
pub fn execution(
    edited: &FrameSequence,
    prompts: &PromptPair,
    embedder: &(impl ImageTextEmbedder + ?Sized),
) -> Result<ExecutionResult, BackendError> {
    let sims = prompt_similarities(edited, prompts, embedder)?;
    Ok(execution_from_similarities(sims))
}

pub fn execution_from_similarities(sims: Vec<(f64, f64)>) -> ExecutionResult {
    // a tie is a failure: the target must strictly beat the source
    let flags: Vec<bool> = sims.iter().map(|(s, t)| t > s).collect();
    let success_rate = flags.iter().filter(|&&f| f).count() as f64 / flags.len() as f64;
    let clip_similarity = mean(sims.iter().map(|(_, t)| *t));
    ExecutionResult {
        success_rate,
        clip_similarity,
        per_frame_flags: flags,
        per_frame_similarities: sims,
    }
}

/// Share of frames closer to the target prompt than to the source prompt.
pub fn success_rate(
    edited: &FrameSequence,
    prompts: &PromptPair,
    embedder: &(impl ImageTextEmbedder + ?Sized),
) -> Result<f64, BackendError> {
    Ok(execution(edited, prompts, embedder)?.success_rate)
}

/// Mean raw cosine between each frame and the target prompt.
pub fn clip_similarity(
    edited: &FrameSequence,
    target_prompt: &str,
    embedder: &(impl ImageTextEmbedder + ?Sized),
) -> Result<f64, BackendError> {
    let target = embed_text(embedder, target_prompt)?;
    let sims = edited
        .frames()
        .iter()
        .map(|f| embedder.embed_image(f)?.cosine(&target))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(mean(sims.into_iter()))
}

/// `(1/n) Σ_{i≥1} ½ (⟨e₀, eᵢ⟩ + ⟨eᵢ₋₁, eᵢ⟩)` with optional clamping of
/// negative similarities to 0.
pub fn temporal_consistency(features: &[EmbeddingVector], clamp_negative: bool) -> Result<f64, BackendError> {
    if features.len() < 2 {
        return Err(BackendError::Failed("consistency needs at least two frames".into()));
    }
    let c = |x: f64| if clamp_negative { x.max(0.0) } else { x };
    let first = &features[0];
    let mut sum = 0.0;
    for i in 1..features.len() {
        let to_first = c(first.cosine(&features[i])?);
        let to_prev = c(features[i - 1].cosine(&features[i])?);
        sum += 0.5 * (to_first + to_prev);
    }
    Ok(sum / (features.len() - 1) as f64)
}

/// Temporal consistency of self-supervised vision features.
pub fn subject_consistency(
    edited: &FrameSequence,
    extractor: &(impl VisionFeatureExtractor + ?Sized),
    clamp_negative: bool,
) -> Result<f64, BackendError> {
    let feats = edited
        .frames()
        .iter()
        .map(|f| extractor.vision_features(f))
        .collect::<Result<Vec<_>, _>>()?;
    temporal_consistency(&feats, clamp_negative)
}

/// Temporal consistency of joint image-text image embeddings.
pub fn background_consistency(
    edited: &FrameSequence,
    embedder: &(impl ImageTextEmbedder + ?Sized),
    clamp_negative: bool,
) -> Result<f64, BackendError> {
    let feats = edited
        .frames()
        .iter()
        .map(|f| embedder.embed_image(f))
        .collect::<Result<Vec<_>, _>>()?;
    temporal_consistency(&feats, clamp_negative)
}

pub fn aesthetic_quality(
    edited: &FrameSequence,
    predictor: &(impl AestheticPredictor + ?Sized),
) -> Result<f64, BackendError> {
    let scores = edited
        .frames()
        .iter()
        .map(|f| aesthetic_score(predictor, f))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(mean(scores.into_iter()))
}

pub fn imaging_quality(
    edited: &FrameSequence,
    predictor: &(impl ImagingQualityPredictor + ?Sized),
) -> Result<f64, BackendError> {
    let scores = edited
        .frames()
        .iter()
        .map(|f| imaging_quality_score(predictor, f))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(mean(scores.into_iter()))
}

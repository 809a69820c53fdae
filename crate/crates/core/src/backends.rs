//! Perception backend contracts.
//!
//! Each learned model the metrics depend on sits behind a small trait so the
//! pipeline can run against real networks, scripted test doubles or the
//! hash-seeded [`crate::mock::MockBackend`].

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::RgbImage;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("backend failed: {0}")]
    Failed(String),
    #[error("empty prompt")]
    EmptyPrompt,
    #[error("embedding has zero norm or non-finite entries")]
    Degenerate,
    #[error("embedding dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    JointImageText,
    VisionFeatures,
    Aesthetic,
    ImagingQuality,
    OpticalFlow,
}

impl BackendKind {
    pub const ALL: [BackendKind; 5] = [
        Self::JointImageText,
        Self::VisionFeatures,
        Self::Aesthetic,
        Self::ImagingQuality,
        Self::OpticalFlow,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Self::JointImageText => "joint_image_text",
            Self::VisionFeatures => "vision_features",
            Self::Aesthetic => "aesthetic",
            Self::ImagingQuality => "imaging_quality",
            Self::OpticalFlow => "optical_flow",
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub kind: BackendKind,
    pub model_id: String,
    pub version: String,
    pub deterministic: bool,
}

impl BackendDescriptor {
    /// `model_id@version`, the form recorded in transcripts.
    pub fn id(&self) -> String {
        alloc::format!("{}@{}", self.model_id, self.version)
    }
}

/// Unit-norm feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    /// Scales `values` to unit Euclidean norm.
    pub fn normalized(values: Vec<f64>) -> Result<Self, BackendError> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(BackendError::Degenerate);
        }
        let norm = libm::sqrt(values.iter().map(|v| v * v).sum::<f64>());
        if norm == 0.0 || !norm.is_finite() {
            return Err(BackendError::Degenerate);
        }
        Ok(Self {
            values: values.into_iter().map(|v| v / norm).collect(),
        })
    }

    pub fn from_f32(values: &[f32]) -> Result<Self, BackendError> {
        Self::normalized(values.iter().map(|&v| v as f64).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.values.iter().map(|v| v * v).sum::<f64>())
    }

    /// Cosine similarity; both vectors are unit norm so this is the dot
    /// product.
    pub fn cosine(&self, other: &EmbeddingVector) -> Result<f64, BackendError> {
        if self.dim() != other.dim() {
            return Err(BackendError::DimensionMismatch(self.dim(), other.dim()));
        }
        if self.values == other.values {
            return Ok(1.0);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            .clamp(-1.0, 1.0))
    }
}

/// Contrastive image–text model (CLIP-style).
pub trait ImageTextEmbedder {
    fn descriptor(&self) -> BackendDescriptor;
    fn embed_image(&self, frame: &RgbImage) -> Result<EmbeddingVector, BackendError>;
    fn embed_text(&self, prompt: &str) -> Result<EmbeddingVector, BackendError>;
}

/// Self-supervised image features (DINO-style).
pub trait VisionFeatureExtractor {
    fn descriptor(&self) -> BackendDescriptor;
    fn vision_features(&self, frame: &RgbImage) -> Result<EmbeddingVector, BackendError>;
}

/// Aesthetic predictor with raw output on a 0–10 scale.
pub trait AestheticPredictor {
    fn descriptor(&self) -> BackendDescriptor;
    fn predict_raw(&self, frame: &RgbImage) -> Result<f64, BackendError>;
}

/// Image-quality predictor with raw output on a 0–100 scale.
pub trait ImagingQualityPredictor {
    fn descriptor(&self) -> BackendDescriptor;
    fn predict_raw(&self, frame: &RgbImage) -> Result<f64, BackendError>;
}

/// Rejects empty prompts before they reach a backend.
pub fn embed_text(
    embedder: &(impl ImageTextEmbedder + ?Sized),
    prompt: &str,
) -> Result<EmbeddingVector, BackendError> {
    if prompt.trim().is_empty() {
        return Err(BackendError::EmptyPrompt);
    }
    embedder.embed_text(prompt)
}

fn unit_interval(raw: f64, scale: f64) -> Result<f64, BackendError> {
    if !raw.is_finite() {
        return Err(BackendError::Failed(String::from("predictor returned a non-finite score")));
    }
    Ok((raw / scale).clamp(0.0, 1.0))
}

/// Raw aesthetic output divided by 10 and clamped to `[0, 1]`.
pub fn aesthetic_score(
    predictor: &(impl AestheticPredictor + ?Sized),
    frame: &RgbImage,
) -> Result<f64, BackendError> {
    unit_interval(predictor.predict_raw(frame)?, 10.0)
}

/// Raw imaging-quality output divided by 100 and clamped to `[0, 1]`.
pub fn imaging_quality_score(
    predictor: &(impl ImagingQualityPredictor + ?Sized),
    frame: &RgbImage,
) -> Result<f64, BackendError> {
    unit_interval(predictor.predict_raw(frame)?, 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    struct Fixed(f64);

    impl AestheticPredictor for Fixed {
        fn descriptor(&self) -> BackendDescriptor {
            BackendDescriptor {
                kind: BackendKind::Aesthetic,
                model_id: "fixed".into(),
                version: "0".into(),
                deterministic: true,
            }
        }
        fn predict_raw(&self, _: &RgbImage) -> Result<f64, BackendError> {
            Ok(self.0)
        }
    }

    impl ImagingQualityPredictor for Fixed {
        fn descriptor(&self) -> BackendDescriptor {
            BackendDescriptor {
                kind: BackendKind::ImagingQuality,
                model_id: "fixed".into(),
                version: "0".into(),
                deterministic: true,
            }
        }
        fn predict_raw(&self, _: &RgbImage) -> Result<f64, BackendError> {
            Ok(self.0)
        }
    }

    #[test]
    fn aesthetic_scaling_and_clamp() {
        let f = RgbImage::filled(1, 1, [0, 0, 0]);
        assert_eq!(aesthetic_score(&Fixed(5.5), &f).unwrap(), 0.55);
        assert_eq!(aesthetic_score(&Fixed(12.0), &f).unwrap(), 1.0);
        assert_eq!(aesthetic_score(&Fixed(-1.0), &f).unwrap(), 0.0);
        assert!(aesthetic_score(&Fixed(f64::NAN), &f).is_err());
    }

    #[test]
    fn imaging_scaling_and_clamp() {
        let f = RgbImage::filled(1, 1, [0, 0, 0]);
        assert_eq!(imaging_quality_score(&Fixed(62.0), &f).unwrap(), 0.62);
        assert_eq!(imaging_quality_score(&Fixed(140.0), &f).unwrap(), 1.0);
    }

    #[test]
    fn normalization() {
        let e = EmbeddingVector::normalized(vec![3.0, 4.0]).unwrap();
        assert_eq!(e.values(), &[0.6, 0.8]);
        assert!((e.norm() - 1.0).abs() < 1e-12);
        assert_eq!(EmbeddingVector::normalized(vec![0.0, 0.0]), Err(BackendError::Degenerate));
        assert_eq!(EmbeddingVector::normalized(vec![]), Err(BackendError::Degenerate));
    }

    #[test]
    fn cosine_dimension_check() {
        let a = EmbeddingVector::normalized(vec![1.0, 0.0]).unwrap();
        let b = EmbeddingVector::normalized(vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(a.cosine(&b), Err(BackendError::DimensionMismatch(2, 3)));
    }
}

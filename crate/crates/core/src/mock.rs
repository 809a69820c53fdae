//! Deterministic stand-in for every perception backend.
//!
//! Embeddings are pseudo-random unit vectors seeded from a SHA-256 digest of
//! the input bytes (pixels plus geometry, or prompt text), with a per-branch
//! tag so image, text and vision features never collide. The two quality
//! predictors are closed-form luminance statistics:
//!
//! * aesthetic raw = 10 × mean luma / 255
//! * imaging raw = 100 × min(1, luma standard deviation / 64)

use alloc::string::String;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use sha2::{Digest, Sha256};

use crate::backends::{
    AestheticPredictor, BackendDescriptor, BackendError, BackendKind, EmbeddingVector,
    ImageTextEmbedder, ImagingQualityPredictor, VisionFeatureExtractor,
};
use crate::frame::RgbImage;
use crate::synth::unit_f64;

pub const MOCK_MODEL_ID: &str = "mock-hash";
pub const MOCK_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MockBackend {
    pub dim: usize,
}

impl Default for MockBackend {
    fn default() -> Self {
        Self { dim: 64 }
    }
}

fn image_seed(tag: &[u8], frame: &RgbImage) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(tag);
    h.update((frame.width() as u64).to_le_bytes());
    h.update((frame.height() as u64).to_le_bytes());
    h.update(frame.as_raw());
    h.finalize().into()
}

fn text_seed(tag: &[u8], text: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(tag);
    h.update(text.as_bytes());
    h.finalize().into()
}

impl MockBackend {
    fn descriptor_for(&self, kind: BackendKind) -> BackendDescriptor {
        BackendDescriptor {
            kind,
            model_id: String::from(MOCK_MODEL_ID),
            version: alloc::format!("{MOCK_VERSION};dim={}", self.dim),
            deterministic: true,
        }
    }

    fn vector(&self, seed: [u8; 32]) -> Result<EmbeddingVector, BackendError> {
        let mut rng = ChaCha8Rng::from_seed(seed);
        let values: Vec<f64> = (0..self.dim).map(|_| 2.0 * unit_f64(&mut rng) - 1.0).collect();
        EmbeddingVector::normalized(values)
    }
}

fn luma_stats(frame: &RgbImage) -> (f64, f64) {
    let luma = frame.luma();
    let n = luma.len() as f64;
    let mean = luma.iter().sum::<f64>() / n;
    let var = luma.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / n;
    (mean, libm::sqrt(var))
}

impl ImageTextEmbedder for MockBackend {
    fn descriptor(&self) -> BackendDescriptor {
        self.descriptor_for(BackendKind::JointImageText)
    }

    fn embed_image(&self, frame: &RgbImage) -> Result<EmbeddingVector, BackendError> {
        self.vector(image_seed(b"image", frame))
    }

    fn embed_text(&self, prompt: &str) -> Result<EmbeddingVector, BackendError> {
        if prompt.trim().is_empty() {
            return Err(BackendError::EmptyPrompt);
        }
        self.vector(text_seed(b"text", prompt))
    }
}

impl VisionFeatureExtractor for MockBackend {
    fn descriptor(&self) -> BackendDescriptor {
        self.descriptor_for(BackendKind::VisionFeatures)
    }

    fn vision_features(&self, frame: &RgbImage) -> Result<EmbeddingVector, BackendError> {
        self.vector(image_seed(b"vision", frame))
    }
}

impl AestheticPredictor for MockBackend {
    fn descriptor(&self) -> BackendDescriptor {
        self.descriptor_for(BackendKind::Aesthetic)
    }

    fn predict_raw(&self, frame: &RgbImage) -> Result<f64, BackendError> {
        Ok(10.0 * luma_stats(frame).0 / 255.0)
    }
}

impl ImagingQualityPredictor for MockBackend {
    fn descriptor(&self) -> BackendDescriptor {
        self.descriptor_for(BackendKind::ImagingQuality)
    }

    fn predict_raw(&self, frame: &RgbImage) -> Result<f64, BackendError> {
        Ok(100.0 * (luma_stats(frame).1 / 64.0).min(1.0))
    }
}

//! Backend registry: which model serves each backend kind.
//!
//! A backend directory holds `backends.json`:
//!
//! ```json
//! { "optical_flow": { "model_path": "builtin:classical", "model_id": "classical" },
//!   "joint_image_text": { "model_path": "clip/model.onnx", "model_id": "clip-vit-b-32" } }
//! ```
//!
//! Relative model paths resolve against the backend directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use editboard_core::mock::MockBackend;
use editboard_core::{
    AestheticPredictor, BackendKind, Backends, CoarseToFineFlow, FlowEstimator, ImageTextEmbedder,
    ImagingQualityPredictor, VisionFeatureExtractor,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow_cache::CachedFlow;

pub const BACKEND_DIR_ENV: &str = "EDITBOARD_BACKEND_DIR";
pub const REGISTRY_FILE: &str = "backends.json";
pub const BUILTIN_CLASSICAL_FLOW: &str = "builtin:classical";

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed backend registry {path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("{kind} backend '{model_id}' unavailable: {reason}")]
    Unavailable {
        kind: BackendKind,
        model_id: String,
        reason: String,
    },
    #[error("no backends configured: pass --mock-backends, --backend-dir or set {BACKEND_DIR_ENV}")]
    NotConfigured,
}

fn default_version() -> String {
    "1".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendSpec {
    pub model_path: PathBuf,
    pub model_id: String,
    #[serde(default = "default_version")]
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device_hint: Option<String>,
    /// Extra model-specific settings (tokenizer path, input size, ...).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub options: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegistryConfig(pub BTreeMap<BackendKind, BackendSpec>);

impl RegistryConfig {
    pub fn read(dir: &Path) -> Result<Self, RegistryError> {
        let path = dir.join(REGISTRY_FILE);
        let text = fs::read_to_string(&path).map_err(|source| RegistryError::Io {
            path: path.clone(),
            source,
        })?;
        let mut cfg: RegistryConfig = serde_json::from_str(&text).map_err(|e| RegistryError::Malformed {
            path: path.clone(),
            message: e.to_string(),
        })?;
        for spec in cfg.0.values_mut() {
            let is_builtin = spec.model_path.to_str().is_some_and(|s| s.starts_with("builtin:"));
            if !is_builtin && spec.model_path.is_relative() {
                spec.model_path = dir.join(&spec.model_path);
            }
        }
        Ok(cfg)
    }
}

/// Resolves the backend directory from the flag or the environment.
pub fn backend_dir(flag: Option<&Path>) -> Option<PathBuf> {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(BACKEND_DIR_ENV).map(PathBuf::from))
}

type Flow = Box<dyn FlowEstimator + Send + Sync>;

/// Owned backend set; [`LoadedBackends::as_backends`] lends it to the
/// evaluator.
#[derive(Default)]
pub struct LoadedBackends {
    pub flow: Option<Flow>,
    pub joint_image_text: Option<Box<dyn ImageTextEmbedder + Send + Sync>>,
    pub vision_features: Option<Box<dyn VisionFeatureExtractor + Send + Sync>>,
    pub aesthetic: Option<Box<dyn AestheticPredictor + Send + Sync>>,
    pub imaging_quality: Option<Box<dyn ImagingQualityPredictor + Send + Sync>>,
    pub warnings: Vec<String>,
}

impl LoadedBackends {
    /// Classical flow plus the hash-seeded mock for every perception kind.
    pub fn mock() -> Self {
        Self {
            flow: Some(Box::new(CoarseToFineFlow::default())),
            joint_image_text: Some(Box::new(MockBackend::default())),
            vision_features: Some(Box::new(MockBackend::default())),
            aesthetic: Some(Box::new(MockBackend::default())),
            imaging_quality: Some(Box::new(MockBackend::default())),
            warnings: Vec::new(),
        }
    }

    pub fn from_config(cfg: &RegistryConfig) -> Result<Self, RegistryError> {
        let mut out = LoadedBackends::default();
        for kind in BackendKind::ALL {
            let Some(spec) = cfg.0.get(&kind) else {
                out.warnings.push(format!("no {kind} backend configured; dependent metrics will be errors"));
                continue;
            };
            match kind {
                BackendKind::OpticalFlow if spec.model_path.as_os_str() == BUILTIN_CLASSICAL_FLOW => {
                    out.flow = Some(Box::new(CoarseToFineFlow::default()));
                }
                _ => load_model(kind, spec, &mut out)?,
            }
        }
        Ok(out)
    }

    /// Wraps the flow backend with an on-disk cache.
    pub fn with_flow_cache(mut self, dir: &Path) -> Self {
        if let Some(flow) = self.flow.take() {
            self.flow = Some(Box::new(CachedFlow::new(flow, dir)));
        }
        self
    }

    pub fn as_backends(&self) -> Backends<'_> {
        Backends {
            flow: self.flow.as_deref().map(|b| b as &(dyn FlowEstimator + Sync)),
            joint_image_text: self.joint_image_text.as_deref().map(|b| b as &(dyn ImageTextEmbedder + Sync)),
            vision_features: self.vision_features.as_deref().map(|b| b as &(dyn VisionFeatureExtractor + Sync)),
            aesthetic: self.aesthetic.as_deref().map(|b| b as &(dyn AestheticPredictor + Sync)),
            imaging_quality: self.imaging_quality.as_deref().map(|b| b as &(dyn ImagingQualityPredictor + Sync)),
        }
    }
}

fn load_model(kind: BackendKind, spec: &BackendSpec, _out: &mut LoadedBackends) -> Result<(), RegistryError> {
    Err(RegistryError::Unavailable {
        kind,
        model_id: spec.model_id.clone(),
        reason: format!(
            "no model runtime is linked into this build (model file {})",
            spec.model_path.display()
        ),
    })
}

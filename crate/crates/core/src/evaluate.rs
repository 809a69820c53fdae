//! Single-case evaluation with per-metric error isolation.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};

use thiserror::Error;

use crate::backends::{
    AestheticPredictor, BackendKind, ImageTextEmbedder, ImagingQualityPredictor,
    VisionFeatureExtractor,
};
use crate::embedding_metrics::{
    aesthetic_quality, background_consistency, execution, imaging_quality, subject_consistency,
};
use crate::fidelity::{ff_dispatch, semantic_score, FidelityError, MetricConfig};
use crate::flow::FlowEstimator;
use crate::frame::{FrameError, FrameSequence, MaskSequence};
use crate::task::{Metric, PromptError, PromptPair, TaskCategory};
use crate::transcript::{BackendIds, CaseResult, MetricOutcome};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Frames(#[from] FrameError),
    #[error(transparent)]
    Prompts(#[from] PromptError),
    #[error("masks only valid for SOSA cases, got {0}")]
    MasksNotAllowed(TaskCategory),
    #[error(transparent)]
    Config(FidelityError),
}

pub struct CaseInput<'a> {
    pub case_id: &'a str,
    pub model_name: &'a str,
    pub task: TaskCategory,
    pub original: &'a FrameSequence,
    pub edited: &'a FrameSequence,
    pub prompts: &'a PromptPair,
    pub masks: Option<&'a MaskSequence>,
}

/// Backends available to a run; any of them may be missing.
#[derive(Clone, Copy, Default)]
pub struct Backends<'a> {
    pub flow: Option<&'a (dyn FlowEstimator + Sync)>,
    pub joint_image_text: Option<&'a (dyn ImageTextEmbedder + Sync)>,
    pub vision_features: Option<&'a (dyn VisionFeatureExtractor + Sync)>,
    pub aesthetic: Option<&'a (dyn AestheticPredictor + Sync)>,
    pub imaging_quality: Option<&'a (dyn ImagingQualityPredictor + Sync)>,
}

impl Backends<'_> {
    pub fn ids(&self) -> BackendIds {
        BackendIds {
            optical_flow: self.flow.map(|b| b.descriptor().id()),
            joint_image_text: self.joint_image_text.map(|b| b.descriptor().id()),
            vision_features: self.vision_features.map(|b| b.descriptor().id()),
            aesthetic: self.aesthetic.map(|b| b.descriptor().id()),
            imaging_quality: self.imaging_quality.map(|b| b.descriptor().id()),
        }
    }
}

fn missing(kind: BackendKind) -> MetricOutcome {
    MetricOutcome::Error {
        message: alloc::format!("{kind} backend unavailable"),
    }
}

fn outcome<E: ToString>(r: Result<f64, E>) -> MetricOutcome {
    match r {
        Ok(value) => MetricOutcome::Ok { value },
        Err(e) => MetricOutcome::Error {
            message: e.to_string(),
        },
    }
}

/// Validates the pairing invariants of a case.
pub fn validate_case(input: &CaseInput<'_>) -> Result<(), EvalError> {
    input.original.check_paired(input.edited)?;
    input.prompts.validate()?;
    if let Some(m) = input.masks {
        if input.task != TaskCategory::Sosa {
            return Err(EvalError::MasksNotAllowed(input.task));
        }
        m.check_paired(input.original)?;
    }
    Ok(())
}

/// Computes every metric for one case. A failing metric becomes an
/// [`MetricOutcome::Error`] entry; only invalid input aborts the case.
pub fn evaluate_case(
    input: &CaseInput<'_>,
    config: &MetricConfig,
    backends: &Backends<'_>,
) -> Result<CaseResult, EvalError> {
    config.validate().map_err(EvalError::Config)?;
    validate_case(input)?;
    let mut metrics: BTreeMap<Metric, MetricOutcome> = BTreeMap::new();

    let mut fidelity = None;
    match backends.flow {
        None => {
            metrics.insert(Metric::FfAlpha, missing(BackendKind::OpticalFlow));
            metrics.insert(Metric::FfBeta, missing(BackendKind::OpticalFlow));
        }
        Some(flow) => match ff_dispatch(flow, input.original, input.edited, config) {
            Ok(r) => {
                let used = r.variant_used.metric();
                for m in [Metric::FfAlpha, Metric::FfBeta] {
                    let o = if m == used {
                        MetricOutcome::Ok { value: r.value }
                    } else {
                        MetricOutcome::NotApplicable
                    };
                    metrics.insert(m, o);
                }
                fidelity = Some(r);
            }
            Err(e) => {
                let message = e.to_string();
                metrics.insert(Metric::FfAlpha, MetricOutcome::Error { message: message.clone() });
                metrics.insert(Metric::FfBeta, MetricOutcome::Error { message });
            }
        },
    }

    let mut semantic = None;
    match input.masks {
        None => {
            metrics.insert(Metric::SemanticScore, MetricOutcome::NotApplicable);
        }
        Some(masks) => {
            let r = semantic_score(input.original, input.edited, masks);
            metrics.insert(Metric::SemanticScore, outcome(r.as_ref().map(|s| s.value).map_err(Clone::clone)));
            semantic = r.ok();
        }
    }

    let mut exec = None;
    match backends.joint_image_text {
        None => {
            for m in [Metric::SuccessRate, Metric::ClipSimilarity, Metric::BackgroundConsistency] {
                metrics.insert(m, missing(BackendKind::JointImageText));
            }
        }
        Some(embedder) => {
            match execution(input.edited, input.prompts, embedder) {
                Ok(r) => {
                    metrics.insert(Metric::SuccessRate, MetricOutcome::Ok { value: r.success_rate });
                    metrics.insert(Metric::ClipSimilarity, MetricOutcome::Ok { value: r.clip_similarity });
                    exec = Some(r);
                }
                Err(e) => {
                    let message = e.to_string();
                    metrics.insert(Metric::SuccessRate, MetricOutcome::Error { message: message.clone() });
                    metrics.insert(Metric::ClipSimilarity, MetricOutcome::Error { message });
                }
            }
            metrics.insert(
                Metric::BackgroundConsistency,
                outcome(background_consistency(input.edited, embedder, config.clamp_negative_similarity)),
            );
        }
    }

    metrics.insert(
        Metric::SubjectConsistency,
        match backends.vision_features {
            None => missing(BackendKind::VisionFeatures),
            Some(b) => outcome(subject_consistency(input.edited, b, config.clamp_negative_similarity)),
        },
    );
    metrics.insert(
        Metric::AestheticQuality,
        match backends.aesthetic {
            None => missing(BackendKind::Aesthetic),
            Some(b) => outcome(aesthetic_quality(input.edited, b)),
        },
    );
    metrics.insert(
        Metric::ImagingQuality,
        match backends.imaging_quality {
            None => missing(BackendKind::ImagingQuality),
            Some(b) => outcome(imaging_quality(input.edited, b)),
        },
    );

    Ok(CaseResult {
        case_id: String::from(input.case_id),
        model_name: String::from(input.model_name),
        task: input.task,
        metrics,
        fidelity,
        semantic,
        execution: exec,
        backend_ids: backends.ids(),
        config: config.clone(),
    })
}

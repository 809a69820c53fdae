//! Metric kernels for evaluating text-driven video edits.
//!
//! This crate holds everything that is pure computation: frame and mask
//! containers, dense optical flow, backward warping, the fidelity metrics
//! (FF-α, FF-β, Semantic Score), the embedding-based execution, consistency
//! and style metrics, per-task transcript aggregation and the human-alignment
//! statistics. It builds without `std` (an allocator is required); file
//! formats, model loading, the CLI and the annotation service live in the
//! `editboard` crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod alignment;
pub mod backends;
pub mod embedding_metrics;
pub mod evaluate;
pub mod fidelity;
pub mod flow;
pub mod frame;
pub mod mock;
pub mod synth;
pub mod task;
pub mod transcript;
pub mod warp;

pub use backends::{
    AestheticPredictor, BackendDescriptor, BackendError, BackendKind, EmbeddingVector,
    ImageTextEmbedder, ImagingQualityPredictor, VisionFeatureExtractor,
};
pub use evaluate::{evaluate_case, Backends, CaseInput};
pub use fidelity::{FidelityResult, FidelityVariant, MetricConfig};
pub use flow::{CoarseToFineFlow, FlowEstimator, FlowField};
pub use frame::{BinaryMap, FrameError, FrameSequence, MaskSequence, RgbImage};
pub use task::{Direction, Metric, PromptPair, TaskCategory};
pub use transcript::{aggregate_transcript, CaseResult, MetricOutcome, Transcript};

//! File formats, model registry, suite runner, reports and the annotation
//! service built on `editboard-core`.

pub mod align;
pub mod cli;
pub mod demo;
pub mod flow_cache;
pub mod registry;
pub mod report;
pub mod run;
pub mod server;
pub mod store;
pub mod suite;

pub use editboard_core as core;

//! Parallel suite evaluation and output layout.

use std::fs;
use std::path::Path;

use editboard_core::{aggregate_transcript, evaluate_case, CaseInput, CaseResult, FidelityVariant, MetricConfig, Transcript};
use rayon::prelude::*;
use serde::Serialize;

use crate::registry::LoadedBackends;
use crate::report::{self, ReportError, CASES_DIR, DETAIL_DIR, TRANSCRIPT_JSON};
use crate::suite::{EvaluationSuite, SuiteCase};

/// A case that could not be evaluated at all.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CaseFailure {
    pub case_id: String,
    pub message: String,
}

pub struct RunOutput {
    pub results: Vec<CaseResult>,
    pub failures: Vec<CaseFailure>,
    pub transcript: Transcript,
}

fn evaluate_one(
    case: &SuiteCase,
    model_name: &str,
    backends: &LoadedBackends,
    config: &MetricConfig,
) -> Result<CaseResult, CaseFailure> {
    let fail = |message: String| CaseFailure {
        case_id: case.case_id.clone(),
        message,
    };
    let loaded = case.load().map_err(|e| fail(e.to_string()))?;
    let input = CaseInput {
        case_id: &case.case_id,
        model_name,
        task: case.task,
        original: &loaded.original,
        edited: &loaded.edited,
        prompts: &case.prompts,
        masks: loaded.masks.as_ref(),
    };
    evaluate_case(&input, config, &backends.as_backends()).map_err(|e| fail(e.to_string()))
}

/// Evaluates every case on a pool of `workers` threads. Results keep
/// manifest order whatever the scheduling.
pub fn run_suite(
    suite: &EvaluationSuite,
    backends: &LoadedBackends,
    config: &MetricConfig,
    workers: usize,
) -> Result<RunOutput, rayon::ThreadPoolBuildError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
    let outcomes: Vec<Result<CaseResult, CaseFailure>> = pool.install(|| {
        suite
            .cases
            .par_iter()
            .map(|c| {
                log::info!("evaluating {}", c.case_id);
                evaluate_one(c, &suite.model_name, backends, config)
            })
            .collect()
    });

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => results.push(r),
            Err(f) => failures.push(f),
        }
    }
    let mut transcript = aggregate_transcript(&results, &suite.model_name);
    let mut warnings: Vec<String> = suite.warnings.clone();
    warnings.extend(backends.warnings.iter().cloned());
    warnings.extend(failures.iter().map(|f| format!("case '{}' failed: {}", f.case_id, f.message)));
    warnings.append(&mut transcript.warnings);
    transcript.warnings = warnings;
    Ok(RunOutput {
        results,
        failures,
        transcript,
    })
}

#[derive(Serialize)]
struct FidelityDetail<'a> {
    case_id: &'a str,
    flow_backend: Option<&'a str>,
    theta: f64,
    sigma: f64,
    epsilon_flow: f64,
    variant_used: Option<FidelityVariant>,
    per_frame: Option<&'a [Option<f64>]>,
    valid_fractions: Option<&'a [f64]>,
    skipped_frames: Option<usize>,
    semantic_per_frame: Option<&'a [f64]>,
    execution_per_frame: Option<&'a [(f64, f64)]>,
}

fn detail(r: &CaseResult) -> FidelityDetail<'_> {
    FidelityDetail {
        case_id: &r.case_id,
        flow_backend: r.backend_ids.optical_flow.as_deref(),
        theta: r.config.theta,
        sigma: r.config.sigma,
        epsilon_flow: r.config.epsilon_flow,
        variant_used: r.fidelity.as_ref().map(|f| f.variant_used),
        per_frame: r.fidelity.as_ref().map(|f| f.per_frame.as_slice()),
        valid_fractions: r.fidelity.as_ref().map(|f| f.valid_fractions.as_slice()),
        skipped_frames: r.fidelity.as_ref().map(|f| f.skipped_frames),
        semantic_per_frame: r.semantic.as_ref().map(|s| s.per_frame.as_slice()),
        execution_per_frame: r.execution.as_ref().map(|e| e.per_frame_similarities.as_slice()),
    }
}

fn clear_json(dir: &Path) -> Result<(), ReportError> {
    if let Ok(entries) = fs::read_dir(dir) {
        for e in entries.flatten() {
            let p = e.path();
            if p.extension().is_some_and(|x| x == "json") {
                fs::remove_file(&p).map_err(|source| ReportError::Io { path: p.clone(), source })?;
            }
        }
    }
    Ok(())
}

/// Writes `transcript.json`, `cases/<id>.json` and optionally
/// `detail/<id>.json`, replacing results of earlier runs.
pub fn write_outputs(out: &Path, run: &RunOutput, dump_detail: bool) -> Result<(), ReportError> {
    clear_json(&out.join(CASES_DIR))?;
    clear_json(&out.join(DETAIL_DIR))?;
    for r in &run.results {
        report::write_json(&report::case_path(out, &r.case_id), r)?;
        if dump_detail {
            let path = out.join(DETAIL_DIR).join(format!("{}.json", report::file_stem(&r.case_id)));
            report::write_json(&path, &detail(r))?;
        }
    }
    report::write_json(&out.join(TRANSCRIPT_JSON), &run.transcript)
}

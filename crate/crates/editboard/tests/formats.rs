use std::sync::atomic::{AtomicUsize, Ordering};

use editboard::flow_cache::{decode_flow, encode_flow, read_flow, write_flow, CachedFlow, FlowFileError, HEADER_LEN};
use editboard::report::{load_case_results, transcript_csv, write_json, CSV_HEADER};
use editboard_core::flow::FlowError;
use editboard_core::transcript::{BackendIds, MetricOutcome};
use editboard_core::{
    aggregate_transcript, synth, BackendDescriptor, BackendKind, CaseResult, CoarseToFineFlow, FlowEstimator,
    FlowField, Metric, MetricConfig, RgbImage, TaskCategory, Transcript,
};

#[test]
fn flow_file_layout() {
    let f = FlowField::new(3, 2, vec![0.5, -1.0, 2.0, 0.0, 1.5, -0.25], vec![1.0; 6]).unwrap();
    let bytes = encode_flow(&f);
    assert_eq!(&bytes[..8], b"EBFLOW01");
    assert_eq!(&bytes[8..12], &3u32.to_le_bytes());
    assert_eq!(&bytes[12..16], &2u32.to_le_bytes());
    assert_eq!(bytes.len(), HEADER_LEN + 2 * 6 * 4);
    assert_eq!(&bytes[16..20], &0.5f32.to_le_bytes());
    assert_eq!(&bytes[16 + 24..16 + 28], &1.0f32.to_le_bytes());
    assert_eq!(decode_flow(&bytes).unwrap(), f);
}

#[test]
fn flow_file_errors() {
    let f = FlowField::zeros(2, 2);
    let mut bytes = encode_flow(&f);
    bytes.pop();
    assert!(matches!(decode_flow(&bytes), Err(FlowFileError::Truncated { .. })));
    let mut bad = encode_flow(&f);
    bad[0] = b'X';
    assert!(matches!(decode_flow(&bad), Err(FlowFileError::BadMagic)));
    let mut nan = encode_flow(&f);
    nan[16..20].copy_from_slice(&f32::NAN.to_le_bytes());
    assert!(matches!(decode_flow(&nan), Err(FlowFileError::Flow(FlowError::NonFinite))));
}

#[test]
fn flow_file_on_disk() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("sub").join("pair.flow");
    let f = FlowField::uniform(4, 3, 1.25, -0.5);
    write_flow(&p, &f).unwrap();
    assert_eq!(read_flow(&p).unwrap(), f);
}

struct Counting {
    calls: AtomicUsize,
}

impl FlowEstimator for Counting {
    fn descriptor(&self) -> BackendDescriptor {
        BackendDescriptor {
            kind: BackendKind::OpticalFlow,
            model_id: "counting".into(),
            version: "1".into(),
            deterministic: true,
        }
    }

    fn estimate_flow(&self, a: &RgbImage, _b: &RgbImage) -> Result<FlowField, FlowError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(FlowField::uniform(a.width(), a.height(), 1.0, 2.0))
    }
}

#[test]
fn cached_flow_reuses_files() {
    let d = tempfile::tempdir().unwrap();
    let cached = CachedFlow::new(Counting { calls: AtomicUsize::new(0) }, d.path());
    let v = synth::pan(3, 16, 16, 3, 1.0, 0.0);
    let first = cached.estimate_flow(v.frame(0), v.frame(1)).unwrap();
    let again = cached.estimate_flow(v.frame(0), v.frame(1)).unwrap();
    assert_eq!(first, again);
    cached.estimate_flow(v.frame(1), v.frame(2)).unwrap();
    assert_eq!(std::fs::read_dir(d.path()).unwrap().count(), 2);
    assert!(cached.path_for(v.frame(0), v.frame(1)).exists());
}

#[test]
fn cached_classical_flow_is_bit_identical() {
    let d = tempfile::tempdir().unwrap();
    let v = synth::pan(4, 24, 24, 2, 1.5, 0.0);
    let direct = CoarseToFineFlow::default().estimate_flow(v.frame(0), v.frame(1)).unwrap();
    let cached = CachedFlow::new(CoarseToFineFlow::default(), d.path());
    cached.estimate_flow(v.frame(0), v.frame(1)).unwrap();
    assert_eq!(cached.estimate_flow(v.frame(0), v.frame(1)).unwrap(), direct);
}

fn result(id: &str, task: TaskCategory, values: &[(Metric, f64)]) -> CaseResult {
    let mut metrics: std::collections::BTreeMap<Metric, MetricOutcome> =
        Metric::ALL.iter().map(|&m| (m, MetricOutcome::NotApplicable)).collect();
    for &(m, value) in values {
        metrics.insert(m, MetricOutcome::Ok { value });
    }
    CaseResult {
        case_id: id.into(),
        model_name: "m".into(),
        task,
        metrics,
        fidelity: None,
        semantic: None,
        execution: None,
        backend_ids: BackendIds::default(),
        config: MetricConfig::default(),
    }
}

#[test]
fn csv_column_order_and_dashes() {
    let cases = vec![
        result("a", TaskCategory::Sosa, &[(Metric::FfAlpha, 6.0), (Metric::SemanticScore, 8.25)]),
        result("b", TaskCategory::Sosa, &[(Metric::FfAlpha, 10.0)]),
        result("c", TaskCategory::Se, &[(Metric::ClipSimilarity, 0.3)]),
    ];
    let t = aggregate_transcript(&cases, "m");
    let text = String::from_utf8(transcript_csv(&t).unwrap()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER.join(","));
    assert_eq!(
        lines[0],
        "Tasks,FF-α,FF-β,Semantic Score,Success Rate,CLIP Similarity,Subject Consistency,Background Consistency,Aesthetic Quality,Imaging Quality"
    );
    assert_eq!(lines[1], "SOSA,8,-,8.25,-,-,-,-,-,-");
    assert_eq!(lines[2], "SE,-,-,-,-,0.3,-,-,-,-");
    assert_eq!(lines[3], "SOMA,-,-,-,-,-,-,-,-,-");
    assert_eq!(lines.len(), 5);
}

#[test]
fn json_round_trip_through_files() {
    let d = tempfile::tempdir().unwrap();
    let cases = vec![
        result("x1", TaskCategory::Moa, &[(Metric::ImagingQuality, 0.123456789012345678)]),
        result("x0", TaskCategory::Moa, &[(Metric::ImagingQuality, 1.0 / 3.0)]),
    ];
    for c in &cases {
        write_json(&editboard::report::case_path(d.path(), &c.case_id), c).unwrap();
    }
    let back = load_case_results(d.path()).unwrap();
    assert_eq!(back[0], cases[1]);
    assert_eq!(back[1], cases[0]);
    let t = aggregate_transcript(&cases, "m");
    let p = d.path().join("transcript.json");
    write_json(&p, &t).unwrap();
    let t2: Transcript = editboard::report::read_json(&p).unwrap();
    assert_eq!(t2, t);
    let orig = t.row(TaskCategory::Moa).unwrap().mean(Metric::ImagingQuality).unwrap();
    let read = t2.row(TaskCategory::Moa).unwrap().mean(Metric::ImagingQuality).unwrap();
    assert!(((orig - read) / orig).abs() < 1e-12);
}

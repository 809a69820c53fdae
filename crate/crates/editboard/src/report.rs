//! Result files: per-case JSON, transcript JSON/CSV and radar data.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use editboard_core::transcript::{radar_profile, RadarData};
use editboard_core::{CaseResult, Metric, Transcript};
use serde::Serialize;
use thiserror::Error;

pub const TRANSCRIPT_JSON: &str = "transcript.json";
pub const TRANSCRIPT_CSV: &str = "transcript.csv";
pub const RADAR_JSON: &str = "radar.json";
pub const CASES_DIR: &str = "cases";
pub const DETAIL_DIR: &str = "detail";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed {path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes via a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io(dir))?;
    tmp.write_all(bytes).map_err(io(path))?;
    tmp.as_file().sync_all().map_err(io(path))?;
    tmp.persist(path).map_err(|e| ReportError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable");
    out.push(b'\n');
    out
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ReportError> {
    write_atomic(path, &to_json(value))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, ReportError> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    serde_json::from_str(&text).map_err(|e| ReportError::Malformed {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// File-name-safe form of a case id.
pub fn file_stem(case_id: &str) -> String {
    case_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect()
}

pub fn case_path(out: &Path, case_id: &str) -> PathBuf {
    out.join(CASES_DIR).join(format!("{}.json", file_stem(case_id)))
}

/// All `cases/*.json` of an output directory, sorted by case id.
pub fn load_case_results(out: &Path) -> Result<Vec<CaseResult>, ReportError> {
    let dir = out.join(CASES_DIR);
    let mut results = Vec::new();
    for entry in fs::read_dir(&dir).map_err(io(&dir))? {
        let path = entry.map_err(io(&dir))?.path();
        if path.extension().is_some_and(|e| e == "json") {
            results.push(read_json::<CaseResult>(&path)?);
        }
    }
    results.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    Ok(results)
}

pub fn load_transcript(out: &Path) -> Result<Transcript, ReportError> {
    read_json(&out.join(TRANSCRIPT_JSON))
}

pub const CSV_HEADER: [&str; 10] = [
    "Tasks",
    "FF-α",
    "FF-β",
    "Semantic Score",
    "Success Rate",
    "CLIP Similarity",
    "Subject Consistency",
    "Background Consistency",
    "Aesthetic Quality",
    "Imaging Quality",
];

/// One row per task in table order; missing values render as `-`.
pub fn transcript_csv(t: &Transcript) -> Result<Vec<u8>, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for row in &t.rows {
        let mut rec = vec![row.task.code().to_string()];
        for m in Metric::ALL {
            rec.push(row.mean(m).map_or_else(|| "-".to_string(), |v| v.to_string()));
        }
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| ReportError::Io {
        path: PathBuf::from("<csv>"),
        source: e.into_error(),
    })
}

pub fn radar(t: &Transcript) -> RadarData {
    radar_profile(t)
}

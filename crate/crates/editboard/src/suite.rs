//! Suite manifests, frame directories and mask directories.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use editboard_core::frame::BinaryMap;
use editboard_core::task::PromptError;
use editboard_core::{FrameError, FrameSequence, MaskSequence, PromptPair, RgbImage, TaskCategory};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Resolution frames are expected to be resized to.
pub const CANONICAL_SIZE: (u32, u32) = (512, 512);

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("duplicate case id '{0}'")]
    DuplicateCase(String),
    #[error("case '{case_id}': {source}")]
    Prompts {
        case_id: String,
        #[source]
        source: PromptError,
    },
    #[error("insufficient frames in {dir}: found {found}, need at least 2")]
    InsufficientFrames { dir: PathBuf, found: usize },
    #[error("case '{case_id}': frame-count mismatch (original {original}, edited {edited})")]
    FrameCountMismatch {
        case_id: String,
        original: usize,
        edited: usize,
    },
    #[error("case '{case_id}': masks only valid for SOSA cases (task {task})")]
    MasksNotAllowed { case_id: String, task: TaskCategory },
    #[error("mask count mismatch in {dir}: expected {expected}, found {found}")]
    MaskCount {
        dir: PathBuf,
        expected: usize,
        found: usize,
    },
    #[error("size mismatch at {path}: expected {expected:?}, found {found:?}")]
    SizeMismatch {
        path: PathBuf,
        expected: (u32, u32),
        found: (u32, u32),
    },
    #[error("cannot decode {path}: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("cannot encode {path}: {message}")]
    Encode { path: PathBuf, message: String },
    #[error(transparent)]
    Frames(#[from] FrameError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SuiteError + '_ {
    move |source| SuiteError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestCase {
    pub case_id: String,
    pub task: TaskCategory,
    pub original_dir: PathBuf,
    pub edited_dir: PathBuf,
    pub source_prompt: String,
    pub target_prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub model_name: String,
    pub cases: Vec<ManifestCase>,
}

/// A validated case whose frames have not been decoded yet.
#[derive(Debug, Clone)]
pub struct SuiteCase {
    pub case_id: String,
    pub task: TaskCategory,
    pub prompts: PromptPair,
    pub original_dir: PathBuf,
    pub edited_dir: PathBuf,
    pub mask_dir: Option<PathBuf>,
    pub frame_count: usize,
    pub width: u32,
    pub height: u32,
}

pub struct LoadedCase {
    pub original: FrameSequence,
    pub edited: FrameSequence,
    pub masks: Option<MaskSequence>,
}

impl SuiteCase {
    /// Decodes frames and masks.
    pub fn load(&self) -> Result<LoadedCase, SuiteError> {
        let original = load_frames(&self.original_dir)?;
        let edited = load_frames(&self.edited_dir)?;
        if original.frame_count() != edited.frame_count() {
            return Err(SuiteError::FrameCountMismatch {
                case_id: self.case_id.clone(),
                original: original.frame_count(),
                edited: edited.frame_count(),
            });
        }
        original.check_paired(&edited)?;
        let masks = match &self.mask_dir {
            Some(dir) => {
                let m = load_masks(dir, original.frame_count())?;
                m.check_paired(&original)?;
                Some(m)
            }
            None => None,
        };
        Ok(LoadedCase {
            original,
            edited,
            masks,
        })
    }
}

#[derive(Debug, Clone)]
pub struct EvaluationSuite {
    pub model_name: String,
    pub cases: Vec<SuiteCase>,
    pub warnings: Vec<String>,
}

/// Frame files of a directory (`NNNNN.png`), in numeric order.
pub fn list_frame_files(dir: &Path) -> Result<Vec<PathBuf>, SuiteError> {
    let mut found = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        let is_png = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        let index = path
            .file_stem()
            .and_then(|s| s.to_str())
            .filter(|s| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|s| s.parse::<u64>().ok());
        if let (true, Some(index)) = (is_png, index) {
            found.push((index, path));
        }
    }
    found.sort();
    Ok(found.into_iter().map(|(_, p)| p).collect())
}

fn dimensions(path: &Path) -> Result<(u32, u32), SuiteError> {
    image::image_dimensions(path).map_err(|e| SuiteError::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Checks a frame directory without decoding pixel data. Returns the frame
/// count and the common size.
pub fn probe_frames(dir: &Path) -> Result<(usize, (u32, u32)), SuiteError> {
    let files = list_frame_files(dir)?;
    if files.len() < 2 {
        return Err(SuiteError::InsufficientFrames {
            dir: dir.to_path_buf(),
            found: files.len(),
        });
    }
    let size = dimensions(&files[0])?;
    for f in &files[1..] {
        let found = dimensions(f)?;
        if found != size {
            return Err(SuiteError::SizeMismatch {
                path: f.clone(),
                expected: size,
                found,
            });
        }
    }
    Ok((files.len(), size))
}

fn decode(path: &Path) -> Result<image::DynamicImage, SuiteError> {
    image::open(path).map_err(|e| SuiteError::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Decodes all frames of a directory to 8-bit RGB.
pub fn load_frames(dir: &Path) -> Result<FrameSequence, SuiteError> {
    let files = list_frame_files(dir)?;
    if files.len() < 2 {
        return Err(SuiteError::InsufficientFrames {
            dir: dir.to_path_buf(),
            found: files.len(),
        });
    }
    let mut frames = Vec::with_capacity(files.len());
    let mut size = None;
    for f in &files {
        let img = decode(f)?.to_rgb8();
        let dims = img.dimensions();
        match size {
            None => size = Some(dims),
            Some(expected) if expected != dims => {
                return Err(SuiteError::SizeMismatch {
                    path: f.clone(),
                    expected,
                    found: dims,
                })
            }
            Some(_) => {}
        }
        frames.push(RgbImage::new(dims.0 as usize, dims.1 as usize, img.into_raw())?);
    }
    Ok(FrameSequence::new(frames)?)
}

/// Decodes single-channel masks; pixels ≥ 128 become 1.
pub fn load_masks(dir: &Path, expected_count: usize) -> Result<MaskSequence, SuiteError> {
    let files = list_frame_files(dir)?;
    if files.len() != expected_count {
        return Err(SuiteError::MaskCount {
            dir: dir.to_path_buf(),
            expected: expected_count,
            found: files.len(),
        });
    }
    let mut masks = Vec::with_capacity(files.len());
    for f in &files {
        let img = decode(f)?.to_luma8();
        let (w, h) = img.dimensions();
        masks.push(BinaryMap::from_gray(w as usize, h as usize, img.as_raw())?);
    }
    Ok(MaskSequence::new(masks)?)
}

fn frame_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("{index:05}.png"))
}

/// Writes frames as `00000.png`, `00001.png`, ...
pub fn save_frames(dir: &Path, frames: &FrameSequence) -> Result<(), SuiteError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for (i, f) in frames.frames().iter().enumerate() {
        let path = frame_path(dir, i);
        image::save_buffer(
            &path,
            f.as_raw(),
            f.width() as u32,
            f.height() as u32,
            image::ExtendedColorType::Rgb8,
        )
        .map_err(|e| SuiteError::Encode {
            path: path.clone(),
            message: e.to_string(),
        })?;
    }
    Ok(())
}

/// Writes masks as single-channel PNGs with values 0 and 255.
pub fn save_masks(dir: &Path, masks: &MaskSequence) -> Result<(), SuiteError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for (i, m) in masks.masks().iter().enumerate() {
        let path = frame_path(dir, i);
        image::save_buffer(
            &path,
            &m.to_gray(),
            m.width() as u32,
            m.height() as u32,
            image::ExtendedColorType::L8,
        )
        .map_err(|e| SuiteError::Encode {
            path: path.clone(),
            message: e.to_string(),
        })?;
    }
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Manifest, SuiteError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| SuiteError::Manifest {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Parses and validates a manifest. Directory paths are resolved against
/// the manifest's directory; frame headers are checked but pixel data is
/// decoded only by [`SuiteCase::load`].
pub fn load_suite(manifest_path: &Path) -> Result<EvaluationSuite, SuiteError> {
    let manifest = read_manifest(manifest_path)?;
    let root = manifest_path.parent().unwrap_or(Path::new("."));
    let mut seen = BTreeSet::new();
    let mut cases = Vec::with_capacity(manifest.cases.len());
    let mut warnings = Vec::new();

    for c in manifest.cases {
        if !seen.insert(c.case_id.clone()) {
            return Err(SuiteError::DuplicateCase(c.case_id));
        }
        let prompts = PromptPair::new(c.source_prompt, c.target_prompt).map_err(|source| SuiteError::Prompts {
            case_id: c.case_id.clone(),
            source,
        })?;
        if c.mask_dir.is_some() && c.task != TaskCategory::Sosa {
            return Err(SuiteError::MasksNotAllowed {
                case_id: c.case_id,
                task: c.task,
            });
        }
        let original_dir = root.join(&c.original_dir);
        let edited_dir = root.join(&c.edited_dir);
        let (n_orig, size) = probe_frames(&original_dir)?;
        let (n_edit, edit_size) = probe_frames(&edited_dir)?;
        if n_orig != n_edit {
            return Err(SuiteError::FrameCountMismatch {
                case_id: c.case_id,
                original: n_orig,
                edited: n_edit,
            });
        }
        if edit_size != size {
            return Err(SuiteError::SizeMismatch {
                path: edited_dir,
                expected: size,
                found: edit_size,
            });
        }
        let mask_dir = c.mask_dir.map(|d| root.join(d));
        if let Some(dir) = &mask_dir {
            let files = list_frame_files(dir)?;
            if files.len() != n_orig {
                return Err(SuiteError::MaskCount {
                    dir: dir.clone(),
                    expected: n_orig,
                    found: files.len(),
                });
            }
            for f in &files {
                let found = dimensions(f)?;
                if found != size {
                    return Err(SuiteError::SizeMismatch {
                        path: f.clone(),
                        expected: size,
                        found,
                    });
                }
            }
        }
        if size != CANONICAL_SIZE {
            warnings.push(format!(
                "case '{}': frames are {}x{}, expected {}x{}",
                c.case_id, size.0, size.1, CANONICAL_SIZE.0, CANONICAL_SIZE.1
            ));
        }
        cases.push(SuiteCase {
            case_id: c.case_id,
            task: c.task,
            prompts,
            original_dir,
            edited_dir,
            mask_dir,
            frame_count: n_orig,
            width: size.0,
            height: size.1,
        });
    }

    Ok(EvaluationSuite {
        model_name: manifest.model_name,
        cases,
        warnings,
    })
}

//! Synthetic demo suite: two cases per task category, written to disk as a
//! regular manifest with PNG frames.

use std::path::{Path, PathBuf};

use editboard_core::synth;
use editboard_core::TaskCategory;

use crate::report::write_json;
use crate::suite::{save_frames, save_masks, Manifest, ManifestCase, SuiteError};

pub const MANIFEST_NAME: &str = "manifest.json";

struct DemoCase {
    id: &'static str,
    task: TaskCategory,
    source: &'static str,
    target: &'static str,
}

const CASES: [DemoCase; 8] = [
    DemoCase { id: "sosa-01", task: TaskCategory::Sosa, source: "a gray stone on sand", target: "a red stone on sand" },
    DemoCase { id: "sosa-02", task: TaskCategory::Sosa, source: "a car on a road", target: "a blue car on a road" },
    DemoCase { id: "se-01", task: TaskCategory::Se, source: "a street by day", target: "a street at night" },
    DemoCase { id: "se-02", task: TaskCategory::Se, source: "a lake in summer", target: "a lake in winter" },
    DemoCase { id: "soma-01", task: TaskCategory::Soma, source: "a dog running", target: "a small golden dog running" },
    DemoCase { id: "soma-02", task: TaskCategory::Soma, source: "a boat", target: "a large wooden boat with sails" },
    DemoCase { id: "moa-01", task: TaskCategory::Moa, source: "a cat and a ball", target: "a black cat and a green ball" },
    DemoCase { id: "moa-02", task: TaskCategory::Moa, source: "two birds", target: "a white bird and a red bird" },
];

/// Writes the suite under `dir` and returns the manifest path.
pub fn write_demo_suite(dir: &Path, model_name: &str, size: usize, frames: usize) -> Result<PathBuf, SuiteError> {
    let mut cases = Vec::new();
    for (i, case) in CASES.iter().enumerate() {
        let seed = 100 + i as u64;
        let original = match i % 4 {
            0 => synth::static_video(seed, size, size, frames),
            1 => synth::pan(seed, size, size, frames, 1.0, 0.0),
            2 => synth::pan(seed, size, size, frames, 0.5, 0.5),
            _ => synth::rotating(seed, size, size, frames, 0.01),
        };
        let masks = (case.task == TaskCategory::Sosa).then(|| synth::box_masks(size, size, frames, 0.4));
        let tint = 30 + 10 * i as u8;
        let edited = match &masks {
            Some(m) => synth::map_pixels(&original, |f, x, y, p| {
                if m.masks()[f].get(x, y) {
                    [p[0].saturating_add(tint), p[1], p[2]]
                } else {
                    p
                }
            }),
            None => synth::map_pixels(&original, |_, _, _, p| [p[0], p[1].saturating_add(tint / 2), p[2]]),
        };
        let edited = synth::add_noise(&edited, 2, seed);

        let base = Path::new(case.id);
        save_frames(&dir.join(base).join("original"), &original)?;
        save_frames(&dir.join(base).join("edited"), &edited)?;
        if let Some(m) = &masks {
            save_masks(&dir.join(base).join("masks"), m)?;
        }
        cases.push(ManifestCase {
            case_id: case.id.into(),
            task: case.task,
            original_dir: base.join("original"),
            edited_dir: base.join("edited"),
            source_prompt: case.source.into(),
            target_prompt: case.target.into(),
            mask_dir: masks.map(|_| base.join("masks")),
        });
    }
    let manifest = Manifest {
        model_name: model_name.into(),
        cases,
    };
    let path = dir.join(MANIFEST_NAME);
    write_json(&path, &manifest).map_err(|e| SuiteError::Encode {
        path: path.clone(),
        message: e.to_string(),
    })?;
    Ok(path)
}

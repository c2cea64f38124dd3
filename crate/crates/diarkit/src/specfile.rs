//! Sweep specifications in TOML or JSON.
//!
//! ```toml
//! thresholds = [0.5, 0.6, 0.7]
//! threshold_key = "threshold"        # optional
//!
//! [postprocess_grid]
//! min_duration = [0.0, 0.2]
//! merge_gap = [0.0, 0.5]
//! aba_max_duration = [0.0, 0.3]
//!
//! [der_options]                      # optional
//! collar = 0.0
//! score_overlap = true
//!
//! [params]                           # optional, sent with every request
//! segmentation = "fine-tuned"
//!
//! [[dataset]]
//! audio_path = "audio/r1.wav"        # passed to the backend verbatim
//! reference = "refs/r1.json"         # relative to this file
//! ```

use std::path::{Path, PathBuf};

use diarkit_core::protocol::Params;
use diarkit_core::sweep::{DatasetItem, PostprocessGrid, SweepError, SweepSpec, DEFAULT_THRESHOLD_KEY};
use diarkit_core::DerOptions;
use serde::Deserialize;

use crate::files::{read_single, read_text, FileError};

#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error(transparent)]
    File(#[from] FileError),
    #[error("{path}: {message}")]
    Syntax { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Invalid { path: PathBuf, source: SweepError },
}

fn default_threshold_key() -> String {
    DEFAULT_THRESHOLD_KEY.to_string()
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DerOptionsFile {
    #[serde(default)]
    collar: f64,
    #[serde(default = "default_true")]
    score_overlap: bool,
}

impl Default for DerOptionsFile {
    fn default() -> Self {
        let d = DerOptions::default();
        Self {
            collar: d.collar,
            score_overlap: d.score_overlap,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetFile {
    audio_path: String,
    reference: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    thresholds: Vec<f64>,
    #[serde(default = "default_threshold_key")]
    threshold_key: String,
    postprocess_grid: PostprocessGrid,
    #[serde(default)]
    der_options: DerOptionsFile,
    #[serde(default)]
    params: Params,
    dataset: Vec<DatasetFile>,
}

/// Reads, resolves references and validates. `.json` files are JSON, every
/// other extension is TOML.
pub fn load_sweep_spec(path: &Path) -> Result<SweepSpec, SpecError> {
    let text = read_text(path)?;
    let syntax = |message: String| SpecError::Syntax {
        path: path.to_path_buf(),
        message,
    };
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let file: SpecFile = if is_json {
        serde_json::from_str(&text).map_err(|e| syntax(e.to_string()))?
    } else {
        toml::from_str(&text).map_err(|e| syntax(e.to_string()))?
    };
    let base = path.parent().unwrap_or(Path::new(""));
    let dataset = file
        .dataset
        .into_iter()
        .map(|d| {
            Ok(DatasetItem {
                audio_path: d.audio_path,
                reference: read_single(&base.join(&d.reference), None)?,
            })
        })
        .collect::<Result<Vec<_>, FileError>>()?;
    let spec = SweepSpec {
        thresholds: file.thresholds,
        postprocess_grid: file.postprocess_grid,
        dataset,
        der_options: DerOptions {
            collar: file.der_options.collar,
            score_overlap: file.der_options.score_overlap,
        },
        base_params: file.params,
        threshold_key: file.threshold_key,
    };
    spec.validate().map_err(|source| SpecError::Invalid {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(spec)
}

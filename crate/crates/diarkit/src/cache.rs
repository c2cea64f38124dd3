//! On-disk store of raw predictions.
//!
//! ```text
//! root/
//!   <digest>/
//!     manifest.json        {"digest": "...", "params": {...}}
//!     <recording id>.json  segments JSON at full precision
//! ```
//!
//! Recording ids are percent-escaped into file names. Every file is written
//! under a temporary name and renamed into place, so readers never see a
//! partial file. A manifest whose params differ from the caller's marks a
//! digest collision and is reported as an error, never as a hit.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use diarkit_core::digest::canonical_params;
use diarkit_core::protocol::Params;
use diarkit_core::sweep::PredictionStore;
use diarkit_core::Annotation;
use serde::{Deserialize, Serialize};

use crate::formats::{parse_segments_json, write_segments_json, Precision};

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error("digest {digest} already holds params {stored}, not {requested}")]
    Collision {
        digest: String,
        stored: String,
        requested: String,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    digest: String,
    params: Params,
}

#[derive(Debug, Clone)]
pub struct DiskCache {
    root: PathBuf,
}

/// Keeps `[A-Za-z0-9_-]` and non-leading dots; every other byte becomes `%XX`.
pub fn escape_id(id: &str) -> String {
    let mut out = String::with_capacity(id.len());
    for (i, b) in id.bytes().enumerate() {
        let keep = b.is_ascii_alphanumeric() || b == b'_' || b == b'-' || (b == b'.' && i > 0);
        if keep {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CacheError + '_ {
    move |source| CacheError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), CacheError> {
    let dir = path.parent().expect("cache files live in a digest directory");
    let tmp = dir.join(format!(
        ".tmp-{}-{}",
        std::process::id(),
        TEMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    fs::write(&tmp, contents).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CacheError::Io {
            path: path.to_path_buf(),
            source: e,
        }
    })
}

impl DiskCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entry_path(&self, recording_id: &str, digest: &str) -> PathBuf {
        self.root.join(digest).join(format!("{}.json", escape_id(recording_id)))
    }

    fn manifest_path(&self, digest: &str) -> PathBuf {
        self.root.join(digest).join("manifest.json")
    }

    fn read_manifest(&self, digest: &str) -> Result<Option<Manifest>, CacheError> {
        let path = self.manifest_path(digest);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(io_err(&path)(e)),
        };
        serde_json::from_str(&text).map(Some).map_err(|e| CacheError::Corrupt {
            path,
            message: e.to_string(),
        })
    }

    fn check_manifest(&self, digest: &str, params: &Params) -> Result<bool, CacheError> {
        match self.read_manifest(digest)? {
            None => Ok(false),
            Some(m) if m.params == *params => Ok(true),
            Some(m) => Err(CacheError::Collision {
                digest: digest.to_string(),
                stored: canonical_params(&m.params),
                requested: canonical_params(params),
            }),
        }
    }
}

impl PredictionStore for DiskCache {
    type Error = CacheError;

    fn load(&self, recording_id: &str, digest: &str, params: &Params) -> Result<Option<Annotation>, CacheError> {
        if !self.check_manifest(digest, params)? {
            return Ok(None);
        }
        let path = self.entry_path(recording_id, digest);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(io_err(&path)(e)),
        };
        let ann = parse_segments_json(&text).map_err(|e| CacheError::Corrupt {
            path: path.clone(),
            message: e.to_string(),
        })?;
        if ann.recording_id() != recording_id {
            return Err(CacheError::Corrupt {
                path,
                message: format!("holds recording {:?}", ann.recording_id()),
            });
        }
        Ok(Some(ann))
    }

    fn store(
        &mut self,
        recording_id: &str,
        digest: &str,
        params: &Params,
        prediction: &Annotation,
    ) -> Result<(), CacheError> {
        let dir = self.root.join(digest);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        if !self.check_manifest(digest, params)? {
            let manifest = Manifest {
                digest: digest.to_string(),
                params: params.clone(),
            };
            let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
            text.push('\n');
            write_atomic(&self.manifest_path(digest), &text)?;
        }
        let entry = prediction.clone().with_recording_id(recording_id);
        write_atomic(
            &self.entry_path(recording_id, digest),
            &write_segments_json(&entry, Precision::Full),
        )
    }
}

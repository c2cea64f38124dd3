//! Reading and writing annotation files chosen by extension.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use diarkit_core::Annotation;

use crate::formats::{
    parse_rttm, parse_segments_json, write_rttm, write_segments_json, JsonFormatError, Precision, RttmError, WriteError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Rttm,
    Json,
}

impl Format {
    /// `.rttm` is RTTM, `.json` is segments JSON, anything else is unknown.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "rttm" => Some(Self::Rttm),
            "json" => Some(Self::Json),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Self::Rttm => "rttm",
            Self::Json => "json",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{}: {source}", source.line())]
    Rttm { path: PathBuf, source: RttmError },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: JsonFormatError },
    #[error("{path}: {source}")]
    Write { path: PathBuf, source: WriteError },
    #[error("{path}: cannot tell the format from the extension; expected .rttm or .json")]
    UnknownFormat { path: PathBuf },
    #[error("{path}: segments JSON holds one recording, got {count}")]
    NotSingle { path: PathBuf, count: usize },
}

pub fn read_text(path: &Path) -> Result<String, FileError> {
    fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), FileError> {
    fs::write(path, text).map_err(|source| FileError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn resolve_format(path: &Path, explicit: Option<Format>) -> Result<Format, FileError> {
    explicit
        .or_else(|| Format::from_path(path))
        .ok_or_else(|| FileError::UnknownFormat {
            path: path.to_path_buf(),
        })
}

/// Every annotation in the file. RTTM may hold several; JSON holds one.
pub fn read_annotations(path: &Path, format: Option<Format>) -> Result<Vec<Annotation>, FileError> {
    let format = resolve_format(path, format)?;
    let text = read_text(path)?;
    match format {
        Format::Rttm => parse_rttm(&text)
            .map(|doc| doc.annotations)
            .map_err(|source| FileError::Rttm {
                path: path.to_path_buf(),
                source,
            }),
        Format::Json => parse_segments_json(&text)
            .map(|a| vec![a])
            .map_err(|source| FileError::Json {
                path: path.to_path_buf(),
                source,
            }),
    }
}

/// Exactly one annotation; an RTTM file with no lines yields none and fails.
pub fn read_single(path: &Path, format: Option<Format>) -> Result<Annotation, FileError> {
    let mut all = read_annotations(path, format)?;
    if all.len() != 1 {
        return Err(FileError::NotSingle {
            path: path.to_path_buf(),
            count: all.len(),
        });
    }
    Ok(all.pop().expect("length checked"))
}

pub fn render_annotations(annotations: &[Annotation], format: Format, path: &Path) -> Result<String, FileError> {
    match format {
        Format::Rttm => write_rttm(annotations).map_err(|source| FileError::Write {
            path: path.to_path_buf(),
            source,
        }),
        Format::Json => match annotations {
            [one] => Ok(write_segments_json(one, Precision::Micro)),
            _ => Err(FileError::NotSingle {
                path: path.to_path_buf(),
                count: annotations.len(),
            }),
        },
    }
}

pub fn write_annotations(path: &Path, annotations: &[Annotation], format: Option<Format>) -> Result<(), FileError> {
    let format = resolve_format(path, format)?;
    write_text(path, &render_annotations(annotations, format, path)?)
}

/// Files directly inside `dir` with a recognised extension, sorted by name.
pub fn list_annotation_files(dir: &Path) -> Result<Vec<PathBuf>, FileError> {
    let io_err = |source| FileError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        if path.is_file() && Format::from_path(&path).is_some() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

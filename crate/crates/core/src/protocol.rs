//! Messages exchanged with an inference backend.
//!
//! On the wire each message is one line of UTF-8 JSON. Optional fields are
//! omitted rather than written as `null`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::segment::{check_interval, Segment, SegmentError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Diarize,
    Transcribe,
}

impl Op {
    pub fn as_str(self) -> &'static str {
        match self {
            Op::Diarize => "diarize",
            Op::Transcribe => "transcribe",
        }
    }
}

/// A parameter value forwarded verbatim to the backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Bool(bool),
    Number(f64),
    Text(String),
}

impl From<f64> for Scalar {
    fn from(x: f64) -> Self {
        Scalar::Number(x)
    }
}

impl From<bool> for Scalar {
    fn from(b: bool) -> Self {
        Scalar::Bool(b)
    }
}

impl From<&str> for Scalar {
    fn from(s: &str) -> Self {
        Scalar::Text(s.into())
    }
}

impl From<String> for Scalar {
    fn from(s: String) -> Self {
        Scalar::Text(s)
    }
}

/// Inference parameters, keyed and iterated in sorted order.
pub type Params = BTreeMap<String, Scalar>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RequestError {
    #[error("audio path is empty")]
    EmptyAudioPath,
    #[error("window: {0}")]
    Window(SegmentError),
    #[error("num_speakers must be positive")]
    ZeroSpeakers,
    #[error("num_speakers only applies to diarize requests")]
    SpeakersOnTranscribe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendRequest {
    pub op: Op,
    pub audio_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_speakers: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
    #[serde(default)]
    pub params: Params,
}

impl BackendRequest {
    pub fn diarize(audio_path: impl Into<String>, params: Params) -> Self {
        Self {
            op: Op::Diarize,
            audio_path: audio_path.into(),
            num_speakers: None,
            window: None,
            params,
        }
    }

    pub fn transcribe(audio_path: impl Into<String>, window: Window, params: Params) -> Self {
        Self {
            op: Op::Transcribe,
            audio_path: audio_path.into(),
            num_speakers: None,
            window: Some(window),
            params,
        }
    }

    pub fn validate(&self) -> Result<(), RequestError> {
        if self.audio_path.is_empty() {
            return Err(RequestError::EmptyAudioPath);
        }
        if let Some(w) = self.window {
            check_interval(w.start, w.end).map_err(RequestError::Window)?;
        }
        match (self.op, self.num_speakers) {
            (_, Some(0)) => Err(RequestError::ZeroSpeakers),
            (Op::Transcribe, Some(_)) => Err(RequestError::SpeakersOnTranscribe),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendResponse {
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments: Option<Vec<Segment>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl BackendResponse {
    pub fn segments(segments: Vec<Segment>) -> Self {
        Self {
            status: Status::Ok,
            segments: Some(segments),
            text: None,
            message: None,
        }
    }

    pub fn text(text: impl Into<String>) -> Self {
        Self {
            status: Status::Ok,
            segments: None,
            text: Some(text.into()),
            message: None,
        }
    }

    pub fn error(message: impl Into<String>) -> Self {
        Self {
            status: Status::Error,
            segments: None,
            text: None,
            message: Some(message.into()),
        }
    }

    /// Whether an `ok` response carries the payload `op` asks for.
    pub fn has_payload_for(&self, op: Op) -> bool {
        match op {
            Op::Diarize => self.segments.is_some(),
            Op::Transcribe => self.text.is_some(),
        }
    }
}

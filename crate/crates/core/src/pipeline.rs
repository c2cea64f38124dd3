//! Drivers that sequence requests against a [`Backend`].
//!
//! A backend answers one request at a time, in order. The two-pass driver
//! estimates the speaker count with an unconstrained run and then repeats the
//! identical request with that count fixed; the long-form driver decodes one
//! window per planned chunk and cleans each window's text.

use alloc::string::String;
use alloc::vec::Vec;

use crate::chunk::ChunkPlan;
use crate::protocol::{BackendRequest, BackendResponse, Op, Params, RequestError, Status, Window};
use crate::segment::{Annotation, Transcript, TranscriptEntry};
use crate::text::{clean_transcript, DedupParams};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackendError {
    #[error("could not start backend: {0}")]
    Spawn(String),
    #[error("backend did not answer within {0} s")]
    Timeout(f64),
    #[error("backend exited before answering: {0}")]
    Exited(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("backend reported an error: {0}")]
    Remote(String),
    #[error("backend i/o: {0}")]
    Io(String),
}

pub trait Backend {
    /// Sends one request and waits for its response line.
    fn call(&mut self, request: &BackendRequest) -> Result<BackendResponse, BackendError>;
}

impl<B: Backend + ?Sized> Backend for &mut B {
    fn call(&mut self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        (**self).call(request)
    }
}

/// Calls the backend and turns `status: error` and missing payloads into errors.
pub fn call_checked<B: Backend + ?Sized>(
    backend: &mut B,
    request: &BackendRequest,
) -> Result<BackendResponse, BackendError> {
    let response = backend.call(request)?;
    match response.status {
        Status::Error => Err(BackendError::Remote(
            response.message.unwrap_or_else(|| String::from("no message")),
        )),
        Status::Ok if !response.has_payload_for(request.op) => Err(BackendError::Protocol(alloc::format!(
            "ok response to {} is missing its payload",
            request.op.as_str()
        ))),
        Status::Ok => Ok(response),
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid request: {0}")]
    Request(#[from] RequestError),
    #[error("pass {pass}: {source}")]
    Pass { pass: u8, source: BackendError },
    #[error("chunk {index}: {source}")]
    Chunk { index: usize, source: BackendError },
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Runs one diarize request and wraps the segments as an annotation of `recording_id`.
pub fn diarize_once<B: Backend + ?Sized>(
    backend: &mut B,
    recording_id: &str,
    request: &BackendRequest,
) -> Result<Annotation, BackendError> {
    debug_assert_eq!(request.op, Op::Diarize);
    let response = call_checked(backend, request)?;
    let segments = response.segments.unwrap_or_default();
    Ok(Annotation::new(recording_id, segments))
}

/// Unconstrained pass, then a second pass fixed to the first pass's distinct
/// speaker count. With no speakers found the empty annotation is returned and
/// no second request is made.
pub fn two_pass_diarize<B: Backend + ?Sized>(
    backend: &mut B,
    recording_id: &str,
    audio_path: &str,
    params: &Params,
) -> Result<Annotation, PipelineError> {
    let first = BackendRequest::diarize(audio_path, params.clone());
    first.validate()?;
    let coarse =
        diarize_once(backend, recording_id, &first).map_err(|source| PipelineError::Pass { pass: 1, source })?;
    let speakers = coarse.speakers().len();
    if speakers == 0 {
        return Ok(Annotation::empty(recording_id));
    }
    let second = BackendRequest {
        num_speakers: Some(speakers as u32),
        ..first
    };
    diarize_once(backend, recording_id, &second).map_err(|source| PipelineError::Pass { pass: 2, source })
}

/// Speech regions for chunk planning: the speaker-agnostic union of one
/// unconstrained diarization.
pub fn detect_speech_regions<B: Backend + ?Sized>(
    backend: &mut B,
    audio_path: &str,
    params: &Params,
) -> Result<Vec<(f64, f64)>, PipelineError> {
    let request = BackendRequest::diarize(audio_path, params.clone());
    request.validate()?;
    let ann = diarize_once(backend, "", &request)?;
    Ok(ann.speech_regions())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChunkErrorPolicy {
    FailFast,
    /// Record the failure, emit an empty entry for the chunk and go on.
    #[default]
    Continue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkFailure {
    pub index: usize,
    pub window: Window,
    pub error: BackendError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LongformOutput {
    pub transcript: Transcript,
    pub failures: Vec<ChunkFailure>,
}

/// One transcribe request per chunk, in plan order; each text is cleaned with
/// [`clean_transcript`] before it becomes the chunk's entry.
pub fn transcribe_longform<B: Backend + ?Sized>(
    backend: &mut B,
    recording_id: &str,
    audio_path: &str,
    plan: &ChunkPlan,
    dedup: &DedupParams,
    params: &Params,
    policy: ChunkErrorPolicy,
) -> Result<LongformOutput, PipelineError> {
    let mut entries = Vec::with_capacity(plan.len());
    let mut failures = Vec::new();
    for (index, chunk) in plan.chunks.iter().enumerate() {
        let window = Window {
            start: chunk.start,
            end: chunk.end,
        };
        let request = BackendRequest::transcribe(audio_path, window, params.clone());
        request.validate()?;
        let text = match call_checked(backend, &request) {
            Ok(response) => clean_transcript(&response.text.unwrap_or_default(), dedup),
            Err(error) => match policy {
                ChunkErrorPolicy::FailFast => return Err(PipelineError::Chunk { index, source: error }),
                ChunkErrorPolicy::Continue => {
                    failures.push(ChunkFailure { index, window, error });
                    String::new()
                }
            },
        };
        entries.push(TranscriptEntry {
            start: chunk.start,
            end: chunk.end,
            text,
        });
    }
    let transcript = Transcript::new(recording_id, entries).expect("planned chunks are valid intervals");
    Ok(LongformOutput { transcript, failures })
}

//! Deterministic mock backend driven by a table of canned responses.
//!
//! An entry always names `op` and `audio_path`. It may also pin
//! `num_speakers`, `window` and `params`; a pinned field must equal the
//! request's, an absent one matches anything. Of all matching entries the one
//! pinning the most fields wins, earlier entries winning ties.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::pipeline::{Backend, BackendError};
use crate::protocol::{BackendRequest, BackendResponse, Op, Params, Window};

const WINDOW_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub op: Op,
    pub audio_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_speakers: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Params>,
    pub response: BackendResponse,
    /// Milliseconds the process-level mock sleeps before answering.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_ms: Option<u64>,
    /// Makes the process-level mock exit without answering.
    #[serde(default, skip_serializing_if = "core::ops::Not::not")]
    pub exit: bool,
}

impl FixtureEntry {
    fn matches(&self, req: &BackendRequest) -> bool {
        self.op == req.op
            && self.audio_path == req.audio_path
            && self.num_speakers.is_none_or(|k| req.num_speakers == Some(k))
            && self.window.is_none_or(|w| {
                req.window.is_some_and(|rw| {
                    (rw.start - w.start).abs() <= WINDOW_TOLERANCE && (rw.end - w.end).abs() <= WINDOW_TOLERANCE
                })
            })
            && self.params.as_ref().is_none_or(|p| *p == req.params)
    }

    fn specificity(&self) -> usize {
        usize::from(self.num_speakers.is_some())
            + usize::from(self.window.is_some())
            + usize::from(self.params.is_some())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub entries: Vec<FixtureEntry>,
}

impl Fixture {
    pub fn new(entries: Vec<FixtureEntry>) -> Self {
        Self { entries }
    }

    pub fn lookup(&self, request: &BackendRequest) -> Option<&FixtureEntry> {
        let mut best: Option<&FixtureEntry> = None;
        for e in self.entries.iter().filter(|e| e.matches(request)) {
            if best.is_none_or(|b| e.specificity() > b.specificity()) {
                best = Some(e);
            }
        }
        best
    }

    /// The canned response, or an error response naming the unmatched key.
    pub fn respond(&self, request: &BackendRequest) -> BackendResponse {
        match self.lookup(request) {
            Some(e) => e.response.clone(),
            None => BackendResponse::error(format!(
                "no fixture for op={} audio_path={} num_speakers={:?}",
                request.op.as_str(),
                request.audio_path,
                request.num_speakers
            )),
        }
    }
}

/// In-process mock that answers from a [`Fixture`] and counts calls.
#[derive(Debug, Clone, Default)]
pub struct FixtureBackend {
    fixture: Fixture,
    pub calls: usize,
    pub log: Vec<BackendRequest>,
}

impl FixtureBackend {
    pub fn new(fixture: Fixture) -> Self {
        Self {
            fixture,
            calls: 0,
            log: Vec::new(),
        }
    }
}

impl Backend for FixtureBackend {
    fn call(&mut self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        self.calls += 1;
        self.log.push(request.clone());
        Ok(self.fixture.respond(request))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::Status;
    use crate::segment::Segment;
    use alloc::vec;

    fn entry(num_speakers: Option<u32>, params: Option<Params>, label: &str) -> FixtureEntry {
        FixtureEntry {
            op: Op::Diarize,
            audio_path: "a.wav".into(),
            num_speakers,
            window: None,
            params,
            response: BackendResponse::segments(vec![Segment::new(0.0, 1.0, label).unwrap()]),
            delay_ms: None,
            exit: false,
        }
    }

    fn label_of(r: &BackendResponse) -> &str {
        r.segments.as_ref().unwrap()[0].speaker()
    }

    #[test]
    fn most_specific_entry_wins() {
        let mut p = Params::new();
        p.insert("threshold".into(), 0.5.into());
        let fx = Fixture::new(vec![
            entry(None, None, "generic"),
            entry(Some(2), None, "two"),
            entry(None, Some(p.clone()), "thresholded"),
        ]);
        let mut req = BackendRequest::diarize("a.wav", Params::new());
        assert_eq!(label_of(&fx.respond(&req)), "generic");
        req.num_speakers = Some(2);
        assert_eq!(label_of(&fx.respond(&req)), "two");
        req.num_speakers = None;
        req.params = p;
        assert_eq!(label_of(&fx.respond(&req)), "thresholded");
    }

    #[test]
    fn unknown_key_is_error_response() {
        let fx = Fixture::new(vec![entry(None, None, "x")]);
        let r = fx.respond(&BackendRequest::diarize("missing.wav", Params::new()));
        assert_eq!(r.status, Status::Error);
        assert!(r.message.unwrap().contains("missing.wav"));
    }

    #[test]
    fn backend_counts_calls() {
        let mut b = FixtureBackend::new(Fixture::new(vec![entry(None, None, "x")]));
        let req = BackendRequest::diarize("a.wav", Params::new());
        let a = b.call(&req).unwrap();
        let c = b.call(&req).unwrap();
        assert_eq!(a, c);
        assert_eq!(b.calls, 2);
    }
}

//! Time-stamped speaker segments and transcripts.
//!
//! All times are seconds on the recording timeline. Constructors validate and
//! sort, so any [`Annotation`] or [`Transcript`] in hand is already in
//! canonical order.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SegmentError {
    #[error("time is not finite")]
    NonFinite,
    #[error("start {start} is negative")]
    NegativeStart { start: f64 },
    #[error("segment end {end} does not follow start {start}")]
    NonPositiveDuration { start: f64, end: f64 },
    #[error("speaker label is empty")]
    EmptySpeaker,
    #[error("speaker label {0:?} contains whitespace")]
    WhitespaceInSpeaker(String),
}

/// A labeled interval `[start, end)` on the audio timeline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segment {
    start: f64,
    end: f64,
    speaker: String,
}

impl Segment {
    pub fn new(start: f64, end: f64, speaker: impl Into<String>) -> Result<Self, SegmentError> {
        let speaker = speaker.into();
        check_interval(start, end)?;
        if speaker.is_empty() {
            return Err(SegmentError::EmptySpeaker);
        }
        if speaker.chars().any(char::is_whitespace) {
            return Err(SegmentError::WhitespaceInSpeaker(speaker));
        }
        Ok(Self { start, end, speaker })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn speaker(&self) -> &str {
        &self.speaker
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    /// Same interval under a different label.
    pub fn relabeled(&self, speaker: impl Into<String>) -> Result<Self, SegmentError> {
        Self::new(self.start, self.end, speaker)
    }

    pub(crate) fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.start
            .total_cmp(&other.start)
            .then(self.end.total_cmp(&other.end))
            .then_with(|| self.speaker.cmp(&other.speaker))
    }
}

impl<'de> Deserialize<'de> for Segment {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            start: f64,
            end: f64,
            speaker: String,
        }
        let raw = Raw::deserialize(deserializer)?;
        Segment::new(raw.start, raw.end, raw.speaker).map_err(serde::de::Error::custom)
    }
}

/// Checks `0 <= start < end` with both ends finite.
pub fn check_interval(start: f64, end: f64) -> Result<(), SegmentError> {
    if !start.is_finite() || !end.is_finite() {
        return Err(SegmentError::NonFinite);
    }
    if start < 0.0 {
        return Err(SegmentError::NegativeStart { start });
    }
    if end <= start {
        return Err(SegmentError::NonPositiveDuration { start, end });
    }
    Ok(())
}

/// Every segment of one recording, sorted by start, then end, then speaker.
/// Overlapping segments are allowed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Annotation {
    recording_id: String,
    segments: Vec<Segment>,
}

impl Annotation {
    pub fn new(recording_id: impl Into<String>, mut segments: Vec<Segment>) -> Self {
        segments.sort_by(Segment::canonical_cmp);
        Self {
            recording_id: recording_id.into(),
            segments,
        }
    }

    pub fn empty(recording_id: impl Into<String>) -> Self {
        Self::new(recording_id, Vec::new())
    }

    pub fn recording_id(&self) -> &str {
        &self.recording_id
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn into_segments(self) -> Vec<Segment> {
        self.segments
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn with_recording_id(self, recording_id: impl Into<String>) -> Self {
        Self {
            recording_id: recording_id.into(),
            segments: self.segments,
        }
    }

    /// Distinct speaker labels in sorted order.
    pub fn speakers(&self) -> Vec<&str> {
        let mut labels: Vec<&str> = self.segments.iter().map(Segment::speaker).collect();
        labels.sort_unstable();
        labels.dedup();
        labels
    }

    /// Sum of segment durations; overlapped time counts once per segment.
    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(Segment::duration).sum()
    }

    /// Union of all segments regardless of speaker, as sorted disjoint intervals.
    /// Touching intervals are fused.
    pub fn speech_regions(&self) -> Vec<(f64, f64)> {
        let mut regions: Vec<(f64, f64)> = Vec::new();
        for seg in &self.segments {
            match regions.last_mut() {
                Some(last) if seg.start <= last.1 => {
                    if seg.end > last.1 {
                        last.1 = seg.end;
                    }
                }
                _ => regions.push((seg.start, seg.end)),
            }
        }
        regions
    }
}

impl<'de> Deserialize<'de> for Annotation {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            recording_id: String,
            segments: Vec<Segment>,
        }
        let raw = Raw::deserialize(deserializer)?;
        Ok(Annotation::new(raw.recording_id, raw.segments))
    }
}

/// One decoded window of a long-form transcript. Empty text marks a silent
/// or failed chunk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub start: f64,
    pub end: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transcript {
    recording_id: String,
    entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn new(recording_id: impl Into<String>, mut entries: Vec<TranscriptEntry>) -> Result<Self, SegmentError> {
        for e in &entries {
            check_interval(e.start, e.end)?;
        }
        // stable: equal starts keep their input order
        entries.sort_by(|a, b| a.start.total_cmp(&b.start));
        Ok(Self {
            recording_id: recording_id.into(),
            entries,
        })
    }

    pub fn recording_id(&self) -> &str {
        &self.recording_id
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    /// Entry texts joined by single spaces, skipping empty ones.
    pub fn full_text(&self) -> String {
        let mut out = String::new();
        for e in self.entries.iter().filter(|e| !e.text.trim().is_empty()) {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(e.text.trim());
        }
        out
    }
}

impl<'de> Deserialize<'de> for Transcript {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            recording_id: String,
            entries: Vec<TranscriptEntry>,
        }
        let raw = Raw::deserialize(deserializer)?;
        Transcript::new(raw.recording_id, raw.entries).map_err(serde::de::Error::custom)
    }
}

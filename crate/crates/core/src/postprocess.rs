//! Rule-based cleanup of diarization output.
//!
//! Three deterministic rules, each a pure function over an [`Annotation`]:
//! A-B-A collapse, short-segment removal and same-speaker gap merging.
//! [`apply_postprocess`] composes them in that fixed order and repeats the
//! composition until nothing changes, so the result is idempotent.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::segment::{Annotation, Segment};

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("post-processing parameter {name} = {value} must be finite and non-negative")]
pub struct InvalidParam {
    pub name: &'static str,
    pub value: f64,
}

/// Thresholds, in seconds, for the three cleanup rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PostprocessParams {
    /// Segments shorter than this are dropped (a segment of exactly this length is kept).
    pub min_duration: f64,
    /// Same-speaker segments separated by at most this much silence are fused.
    /// Zero disables merging.
    pub merge_gap: f64,
    /// A middle segment strictly shorter than this is absorbed by matching flanks.
    pub aba_max_duration: f64,
}

impl PostprocessParams {
    pub const ZERO: Self = Self {
        min_duration: 0.0,
        merge_gap: 0.0,
        aba_max_duration: 0.0,
    };

    pub fn new(min_duration: f64, merge_gap: f64, aba_max_duration: f64) -> Result<Self, InvalidParam> {
        let p = Self {
            min_duration,
            merge_gap,
            aba_max_duration,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), InvalidParam> {
        for (name, value) in [
            ("min_duration", self.min_duration),
            ("merge_gap", self.merge_gap),
            ("aba_max_duration", self.aba_max_duration),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(InvalidParam { name, value });
            }
        }
        Ok(())
    }
}

impl Default for PostprocessParams {
    fn default() -> Self {
        Self {
            min_duration: 0.2,
            merge_gap: 0.5,
            aba_max_duration: 0.3,
        }
    }
}

/// Keeps exactly the segments lasting at least `min_duration` seconds.
pub fn remove_short_segments(annotation: &Annotation, min_duration: f64) -> Annotation {
    let kept = annotation
        .segments()
        .iter()
        .filter(|s| s.duration() >= min_duration)
        .cloned()
        .collect();
    Annotation::new(annotation.recording_id(), kept)
}

/// True when some segment not labeled `speaker` intersects the open interval `(from, to)`.
fn occupied_by_other(segments: &[Segment], speaker: &str, from: f64, to: f64) -> bool {
    if to <= from {
        return false;
    }
    segments
        .iter()
        .take_while(|s| s.start() < to)
        .any(|s| s.end() > from && s.speaker() != speaker)
}

/// Fuses consecutive segments of the same speaker whose silence gap is at most
/// `merge_gap`, unless another speaker talks inside that gap.
pub fn merge_same_speaker_gaps(annotation: &Annotation, merge_gap: f64) -> Annotation {
    if merge_gap <= 0.0 || annotation.len() < 2 {
        return annotation.clone();
    }
    let all = annotation.segments();
    let mut by_speaker: BTreeMap<&str, Vec<&Segment>> = BTreeMap::new();
    for s in all {
        by_speaker.entry(s.speaker()).or_default().push(s);
    }

    let mut out = Vec::with_capacity(all.len());
    for (speaker, segs) in by_speaker {
        let mut cur_start = segs[0].start();
        let mut cur_end = segs[0].end();
        for next in &segs[1..] {
            let gap = next.start() - cur_end;
            if gap <= merge_gap && !occupied_by_other(all, speaker, cur_end, next.start()) {
                if next.end() > cur_end {
                    cur_end = next.end();
                }
            } else {
                out.push(Segment::new(cur_start, cur_end, speaker).expect("fused span of valid segments"));
                cur_start = next.start();
                cur_end = next.end();
            }
        }
        out.push(Segment::new(cur_start, cur_end, speaker).expect("fused span of valid segments"));
    }
    Annotation::new(annotation.recording_id(), out)
}

/// Replaces `A, B, A` with a single `A` spanning both flanks when `B` is
/// strictly shorter than `aba_max_duration`.
///
/// The three segments must be consecutive in timeline order, must not overlap
/// one another, and no other segment may reach into the span between the
/// flanks. Scanning is left to right and backs up after each collapse so the
/// fused segment is re-examined with its new neighbours.
pub fn collapse_aba(annotation: &Annotation, aba_max_duration: f64) -> Annotation {
    let mut segs: Vec<Segment> = annotation.segments().to_vec();
    let mut i = 0;
    while i + 2 < segs.len() {
        if is_collapsible(&segs, i, aba_max_duration) {
            let fused = Segment::new(segs[i].start(), segs[i + 2].end(), segs[i].speaker())
                .expect("flank span is a valid interval");
            segs.splice(i..i + 3, [fused]);
            i = i.saturating_sub(2);
        } else {
            i += 1;
        }
    }
    Annotation::new(annotation.recording_id(), segs)
}

fn is_collapsible(segs: &[Segment], i: usize, aba_max_duration: f64) -> bool {
    let (a, b, c) = (&segs[i], &segs[i + 1], &segs[i + 2]);
    if a.speaker() != c.speaker() || a.speaker() == b.speaker() {
        return false;
    }
    if b.duration() >= aba_max_duration {
        return false;
    }
    if a.end() > b.start() || b.end() > c.start() {
        return false;
    }
    // later segments start at or after c, so only earlier ones can reach in
    !segs[..i].iter().any(|s| s.end() > a.end())
}

/// Collapse, drop, merge; repeated until the annotation stops changing.
pub fn apply_postprocess(annotation: &Annotation, params: &PostprocessParams) -> Annotation {
    let mut current = annotation.clone();
    loop {
        let collapsed = collapse_aba(&current, params.aba_max_duration);
        let kept = remove_short_segments(&collapsed, params.min_duration);
        let merged = merge_same_speaker_gaps(&kept, params.merge_gap);
        if merged == current {
            return merged;
        }
        current = merged;
    }
}

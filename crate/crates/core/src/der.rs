//! Diarization error rate with an optimal global speaker mapping.
//!
//! The timeline is cut at every reference, hypothesis and collar boundary.
//! Each resulting interval has a fixed set of active reference and hypothesis
//! speakers. Co-activity durations give a reference × hypothesis overlap
//! matrix; a maximum-weight assignment over it fixes one mapping for the whole
//! recording, and the per-interval counts are then charged as
//!
//! * missed:      `max(0, r - h) · len`
//! * false alarm: `max(0, h - r) · len`
//! * confusion:   `(min(r, h) - mapped) · len`
//!
//! where `mapped` is the number of mapped pairs active together.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::assignment::max_weight_assignment;
use crate::segment::Annotation;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerOptions {
    /// Half-width, in seconds, of the unscored zone around each reference boundary.
    pub collar: f64,
    /// When false, regions where two or more reference speakers overlap are not scored.
    pub score_overlap: bool,
}

impl Default for DerOptions {
    fn default() -> Self {
        Self {
            collar: 0.0,
            score_overlap: true,
        }
    }
}

impl DerOptions {
    /// The md-eval style setting: 250 ms collar, overlap skipped.
    pub fn nist() -> Self {
        Self {
            collar: 0.25,
            score_overlap: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DerError {
    #[error("reference is {reference:?} but hypothesis is {hypothesis:?}")]
    RecordingMismatch { reference: String, hypothesis: String },
    #[error("collar must be finite and non-negative, got {0}")]
    InvalidCollar(f64),
    #[error("cannot aggregate an empty corpus")]
    EmptyCorpus,
}

/// Error durations in seconds.
///
/// `der` is `None` when the reference holds no scored speech; the rate is then
/// undefined even though false alarms may still be present.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerBreakdown {
    pub missed: f64,
    pub false_alarm: f64,
    pub confusion: f64,
    pub total_reference: f64,
    pub der: Option<f64>,
}

impl DerBreakdown {
    pub fn from_parts(missed: f64, false_alarm: f64, confusion: f64, total_reference: f64) -> Self {
        let der = if total_reference > 0.0 {
            Some((missed + false_alarm + confusion) / total_reference)
        } else {
            None
        };
        Self {
            missed,
            false_alarm,
            confusion,
            total_reference,
            der,
        }
    }

    pub fn error_time(&self) -> f64 {
        self.missed + self.false_alarm + self.confusion
    }
}

/// Sums numerators and denominators over recordings, then divides once.
pub fn aggregate_der<'a, I>(parts: I) -> Result<DerBreakdown, DerError>
where
    I: IntoIterator<Item = &'a DerBreakdown>,
{
    let mut any = false;
    let (mut m, mut fa, mut c, mut t) = (0.0, 0.0, 0.0, 0.0);
    for p in parts {
        any = true;
        m += p.missed;
        fa += p.false_alarm;
        c += p.confusion;
        t += p.total_reference;
    }
    if !any {
        return Err(DerError::EmptyCorpus);
    }
    Ok(DerBreakdown::from_parts(m, fa, c, t))
}

/// Scores each `(reference, hypothesis)` pair and aggregates time-weighted.
pub fn score_der_corpus(pairs: &[(Annotation, Annotation)], options: &DerOptions) -> Result<DerBreakdown, DerError> {
    let scored = pairs
        .iter()
        .map(|(r, h)| score_der(r, h, options))
        .collect::<Result<Vec<_>, _>>()?;
    aggregate_der(&scored)
}

#[derive(Clone, Copy)]
enum Event {
    RefOn(usize),
    RefOff(usize),
    HypOn(usize),
    HypOff(usize),
    CollarOn,
    CollarOff,
}

struct Slice {
    len: f64,
    refs: (usize, usize),
    hyps: (usize, usize),
}

/// Scored intervals plus the speaker index pools they point into.
struct Timeline {
    slices: Vec<Slice>,
    ref_pool: Vec<usize>,
    hyp_pool: Vec<usize>,
}

impl Timeline {
    fn refs(&self, s: &Slice) -> &[usize] {
        &self.ref_pool[s.refs.0..s.refs.1]
    }

    fn hyps(&self, s: &Slice) -> &[usize] {
        &self.hyp_pool[s.hyps.0..s.hyps.1]
    }
}

fn label_index(labels: &[&str], label: &str) -> usize {
    labels
        .binary_search(&label)
        .expect("label collected from the same annotation")
}

fn build_timeline(
    reference: &Annotation,
    hypothesis: &Annotation,
    ref_labels: &[&str],
    hyp_labels: &[&str],
    options: &DerOptions,
) -> Timeline {
    let mut events: Vec<(f64, Event)> = Vec::with_capacity(
        2 * (reference.len() + hypothesis.len()) + if options.collar > 0.0 { 4 * reference.len() } else { 0 },
    );
    for s in reference.segments() {
        let i = label_index(ref_labels, s.speaker());
        events.push((s.start(), Event::RefOn(i)));
        events.push((s.end(), Event::RefOff(i)));
        if options.collar > 0.0 {
            for b in [s.start(), s.end()] {
                events.push((b - options.collar, Event::CollarOn));
                events.push((b + options.collar, Event::CollarOff));
            }
        }
    }
    for s in hypothesis.segments() {
        let j = label_index(hyp_labels, s.speaker());
        events.push((s.start(), Event::HypOn(j)));
        events.push((s.end(), Event::HypOff(j)));
    }
    // events sharing a timestamp are applied as one batch, so their order is irrelevant
    events.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut ref_count = vec![0u32; ref_labels.len()];
    let mut hyp_count = vec![0u32; hyp_labels.len()];
    let mut collar_depth = 0u32;
    let mut timeline = Timeline {
        slices: Vec::new(),
        ref_pool: Vec::new(),
        hyp_pool: Vec::new(),
    };

    let mut k = 0;
    while k < events.len() {
        let t = events[k].0;
        while k < events.len() && events[k].0 == t {
            match events[k].1 {
                Event::RefOn(i) => ref_count[i] += 1,
                Event::RefOff(i) => ref_count[i] -= 1,
                Event::HypOn(j) => hyp_count[j] += 1,
                Event::HypOff(j) => hyp_count[j] -= 1,
                Event::CollarOn => collar_depth += 1,
                Event::CollarOff => collar_depth -= 1,
            }
            k += 1;
        }
        let Some(&(next_t, _)) = events.get(k) else { break };
        let len = next_t - t;
        if len <= 0.0 || collar_depth > 0 {
            continue;
        }
        let r0 = timeline.ref_pool.len();
        timeline
            .ref_pool
            .extend(ref_count.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, _)| i));
        let r1 = timeline.ref_pool.len();
        if !options.score_overlap && r1 - r0 >= 2 {
            timeline.ref_pool.truncate(r0);
            continue;
        }
        let h0 = timeline.hyp_pool.len();
        timeline
            .hyp_pool
            .extend(hyp_count.iter().enumerate().filter(|(_, &c)| c > 0).map(|(j, _)| j));
        let h1 = timeline.hyp_pool.len();
        if r1 == r0 && h1 == h0 {
            continue;
        }
        timeline.slices.push(Slice {
            len,
            refs: (r0, r1),
            hyps: (h0, h1),
        });
    }
    timeline
}

/// Converts seconds to whole microseconds for the assignment solver.
fn to_micros(seconds: f64) -> i64 {
    (seconds * 1e6 + 0.5) as i64
}

pub fn score_der(
    reference: &Annotation,
    hypothesis: &Annotation,
    options: &DerOptions,
) -> Result<DerBreakdown, DerError> {
    if reference.recording_id() != hypothesis.recording_id() {
        return Err(DerError::RecordingMismatch {
            reference: reference.recording_id().into(),
            hypothesis: hypothesis.recording_id().into(),
        });
    }
    if !options.collar.is_finite() || options.collar < 0.0 {
        return Err(DerError::InvalidCollar(options.collar));
    }

    let ref_labels = reference.speakers();
    let hyp_labels = hypothesis.speakers();
    let timeline = build_timeline(reference, hypothesis, &ref_labels, &hyp_labels, options);

    let mut overlap = vec![vec![0.0f64; hyp_labels.len()]; ref_labels.len()];
    for s in &timeline.slices {
        for &i in timeline.refs(s) {
            for &j in timeline.hyps(s) {
                overlap[i][j] += s.len;
            }
        }
    }
    let weights: Vec<Vec<i64>> = overlap
        .iter()
        .map(|row| row.iter().map(|&x| to_micros(x)).collect())
        .collect();
    let assigned = max_weight_assignment(&weights);
    // pairs that never co-occur carry no weight and are left unmapped
    let hyp_of_ref: Vec<Option<usize>> = assigned
        .iter()
        .enumerate()
        .map(|(i, j)| j.filter(|&j| overlap[i][j] > 0.0))
        .collect();

    let (mut missed, mut false_alarm, mut confusion, mut total) = (0.0, 0.0, 0.0, 0.0);
    for s in &timeline.slices {
        let refs = timeline.refs(s);
        let hyps = timeline.hyps(s);
        let (r, h) = (refs.len(), hyps.len());
        let mapped = refs
            .iter()
            .filter(|&&i| hyp_of_ref[i].is_some_and(|j| hyps.contains(&j)))
            .count();
        missed += r.saturating_sub(h) as f64 * s.len;
        false_alarm += h.saturating_sub(r) as f64 * s.len;
        confusion += (r.min(h) - mapped) as f64 * s.len;
        total += r as f64 * s.len;
    }
    Ok(DerBreakdown::from_parts(missed, false_alarm, confusion, total))
}

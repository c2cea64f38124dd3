//! Staged hyperparameter search.
//!
//! 1. Sweep the clustering threshold, running full single-pass inference for
//!    each value and scoring with default post-processing.
//! 2. At the winning threshold, store each recording's raw prediction.
//! 3. Sweep the post-processing grid against the stored predictions only.
//!
//! Selection always uses the time-weighted corpus DER. Ties go to the smaller
//! threshold, or to the lexicographically smaller
//! `(min_duration, merge_gap, aba_max_duration)` triple.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::der::{aggregate_der, score_der, DerBreakdown, DerError, DerOptions};
use crate::digest::config_digest;
use crate::pipeline::{diarize_once, Backend};
use crate::postprocess::{apply_postprocess, PostprocessParams};
use crate::protocol::{BackendRequest, Params, Scalar};
use crate::segment::Annotation;

pub const DEFAULT_THRESHOLD_KEY: &str = "threshold";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostprocessGrid {
    pub min_duration: Vec<f64>,
    pub merge_gap: Vec<f64>,
    pub aba_max_duration: Vec<f64>,
}

impl PostprocessGrid {
    /// Cartesian product; `aba_max_duration` varies fastest, `min_duration` slowest.
    pub fn points(&self) -> Vec<PostprocessParams> {
        let mut out = Vec::with_capacity(self.min_duration.len() * self.merge_gap.len() * self.aba_max_duration.len());
        for &min_duration in &self.min_duration {
            for &merge_gap in &self.merge_gap {
                for &aba_max_duration in &self.aba_max_duration {
                    out.push(PostprocessParams {
                        min_duration,
                        merge_gap,
                        aba_max_duration,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetItem {
    pub audio_path: String,
    pub reference: Annotation,
}

impl DatasetItem {
    pub fn recording_id(&self) -> &str {
        self.reference.recording_id()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Ascending.
    pub thresholds: Vec<f64>,
    pub postprocess_grid: PostprocessGrid,
    pub dataset: Vec<DatasetItem>,
    pub der_options: DerOptions,
    /// Inference parameters shared by every request.
    pub base_params: Params,
    /// Name under which the swept threshold is sent to the backend.
    pub threshold_key: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SweepError {
    #[error("invalid sweep spec: {0}")]
    InvalidSpec(String),
    #[error("every threshold failed; first failure: {0}")]
    AllFailed(String),
    #[error("no cached prediction for recording {recording_id:?} under digest {digest}")]
    CacheMiss { recording_id: String, digest: String },
    #[error("prediction store: {0}")]
    Store(String),
    #[error(transparent)]
    Der(#[from] DerError),
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        let invalid = |m: String| Err(SweepError::InvalidSpec(m));
        if self.thresholds.is_empty() {
            return invalid("thresholds is empty".into());
        }
        if self.thresholds.iter().any(|t| !t.is_finite()) {
            return invalid("thresholds must be finite".into());
        }
        if self.thresholds.windows(2).any(|w| w[0] > w[1]) {
            return invalid("thresholds must be sorted ascending".into());
        }
        let g = &self.postprocess_grid;
        for (name, values) in [
            ("min_duration", &g.min_duration),
            ("merge_gap", &g.merge_gap),
            ("aba_max_duration", &g.aba_max_duration),
        ] {
            if values.is_empty() {
                return invalid(format!("postprocess_grid.{name} is empty"));
            }
            if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return invalid(format!(
                    "postprocess_grid.{name} values must be finite and non-negative"
                ));
            }
        }
        if self.dataset.is_empty() {
            return invalid("dataset is empty".into());
        }
        let mut ids = BTreeSet::new();
        for item in &self.dataset {
            if !ids.insert(item.recording_id()) {
                return invalid(format!("recording {:?} listed twice", item.recording_id()));
            }
            if item.audio_path.is_empty() {
                return invalid(format!("recording {:?} has an empty audio path", item.recording_id()));
            }
        }
        if !self.der_options.collar.is_finite() || self.der_options.collar < 0.0 {
            return invalid("der_options.collar must be finite and non-negative".into());
        }
        if self.threshold_key.is_empty() {
            return invalid("threshold_key is empty".into());
        }
        Ok(())
    }

    /// Shared parameters plus the threshold under [`SweepSpec::threshold_key`].
    pub fn inference_params(&self, threshold: f64) -> Params {
        let mut p = self.base_params.clone();
        p.insert(self.threshold_key.clone(), Scalar::Number(threshold));
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweepConfig {
    Threshold { threshold: f64 },
    Postprocess(PostprocessParams),
}

impl SweepConfig {
    fn key(&self) -> [f64; 3] {
        match *self {
            SweepConfig::Threshold { threshold } => [threshold, 0.0, 0.0],
            SweepConfig::Postprocess(p) => [p.min_duration, p.merge_gap, p.aba_max_duration],
        }
    }

    fn tie_cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.key(), other.key());
        a.iter()
            .zip(&b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    }
}

impl fmt::Display for SweepConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepConfig::Threshold { threshold } => write!(f, "threshold={threshold}"),
            SweepConfig::Postprocess(p) => write!(
                f,
                "min_duration={},merge_gap={},aba_max_duration={}",
                p.min_duration, p.merge_gap, p.aba_max_duration
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub config: SweepConfig,
    /// Corpus aggregate; `None` when the configuration failed.
    pub breakdown: Option<DerBreakdown>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub best: usize,
}

impl SweepResult {
    pub fn best_row(&self) -> &SweepRow {
        &self.rows[self.best]
    }
}

/// Index of the row with minimal defined DER, ties by config order.
pub fn select_best(rows: &[SweepRow]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, row) in rows.iter().enumerate() {
        let Some(der) = row.breakdown.and_then(|b| b.der) else {
            continue;
        };
        let better = match best {
            None => true,
            Some((j, d)) => match der.total_cmp(&d) {
                Ordering::Less => true,
                Ordering::Equal => row.config.tie_cmp(&rows[j].config).is_lt(),
                Ordering::Greater => false,
            },
        };
        if better {
            best = Some((i, der));
        }
    }
    best.map(|(i, _)| i)
}

fn finish(rows: Vec<SweepRow>) -> Result<SweepResult, SweepError> {
    match select_best(&rows) {
        Some(best) => Ok(SweepResult { rows, best }),
        None => Err(SweepError::AllFailed(
            rows.iter()
                .find_map(|r| r.error.clone())
                .unwrap_or_else(|| "no configuration produced a defined DER".into()),
        )),
    }
}

/// Post-processes each raw prediction with `params` and returns the corpus aggregate.
pub fn evaluate_postprocess(
    raw: &[(Annotation, Annotation)],
    params: &PostprocessParams,
    options: &DerOptions,
) -> Result<DerBreakdown, DerError> {
    let parts = raw
        .iter()
        .map(|(reference, prediction)| score_der(reference, &apply_postprocess(prediction, params), options))
        .collect::<Result<Vec<_>, _>>()?;
    aggregate_der(&parts)
}

fn request_for(spec: &SweepSpec, item: &DatasetItem, threshold: f64) -> BackendRequest {
    BackendRequest::diarize(item.audio_path.clone(), spec.inference_params(threshold))
}

/// Phase 1. A backend failure marks that threshold failed and moves on.
pub fn phase1_threshold_sweep<B: Backend + ?Sized>(
    spec: &SweepSpec,
    backend: &mut B,
) -> Result<(f64, SweepResult), SweepError> {
    spec.validate()?;
    let defaults = PostprocessParams::default();
    let mut rows = Vec::with_capacity(spec.thresholds.len());
    'thresholds: for &threshold in &spec.thresholds {
        let config = SweepConfig::Threshold { threshold };
        let mut parts = Vec::with_capacity(spec.dataset.len());
        for item in &spec.dataset {
            let request = request_for(spec, item, threshold);
            match diarize_once(backend, item.recording_id(), &request) {
                Ok(raw) => {
                    let cleaned = apply_postprocess(&raw, &defaults);
                    parts.push(score_der(&item.reference, &cleaned, &spec.der_options)?);
                }
                Err(e) => {
                    rows.push(SweepRow {
                        config,
                        breakdown: None,
                        error: Some(format!("recording {}: {e}", item.recording_id())),
                    });
                    continue 'thresholds;
                }
            }
        }
        rows.push(SweepRow {
            config,
            breakdown: Some(aggregate_der(&parts)?),
            error: None,
        });
    }
    let result = finish(rows)?;
    let SweepConfig::Threshold { threshold } = result.best_row().config else {
        unreachable!("phase 1 rows are thresholds")
    };
    Ok((threshold, result))
}

/// Storage for raw predictions keyed by recording and configuration digest.
pub trait PredictionStore {
    type Error: fmt::Display;

    /// `params` is the full configuration behind `digest`; a store may use it
    /// to reject an entry written under a colliding digest.
    fn load(&self, recording_id: &str, digest: &str, params: &Params) -> Result<Option<Annotation>, Self::Error>;

    /// `params` is the full configuration the digest was computed from.
    fn store(
        &mut self,
        recording_id: &str,
        digest: &str,
        params: &Params,
        prediction: &Annotation,
    ) -> Result<(), Self::Error>;
}

/// A [`PredictionStore`] held in memory.
#[derive(Debug, Clone, Default)]
pub struct MemoryStore {
    entries: BTreeMap<(String, String), Annotation>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl PredictionStore for MemoryStore {
    type Error = core::convert::Infallible;

    fn load(&self, recording_id: &str, digest: &str, _params: &Params) -> Result<Option<Annotation>, Self::Error> {
        Ok(self
            .entries
            .get(&(recording_id.to_string(), digest.to_string()))
            .cloned())
    }

    fn store(
        &mut self,
        recording_id: &str,
        digest: &str,
        _params: &Params,
        prediction: &Annotation,
    ) -> Result<(), Self::Error> {
        self.entries
            .insert((recording_id.to_string(), digest.to_string()), prediction.clone());
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryFailure {
    pub recording_id: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase2Report {
    pub threshold: f64,
    pub digest: String,
    /// Recordings fetched from the backend during this run.
    pub fetched: usize,
    /// Recordings already present in the store.
    pub reused: usize,
    pub failures: Vec<EntryFailure>,
}

/// Phase 2. Recordings already stored under the digest are skipped, so a
/// rerun over a warm store makes no backend calls.
pub fn phase2_cache_predictions<B: Backend + ?Sized, S: PredictionStore + ?Sized>(
    best_threshold: f64,
    spec: &SweepSpec,
    backend: &mut B,
    store: &mut S,
) -> Result<Phase2Report, SweepError> {
    spec.validate()?;
    let params = spec.inference_params(best_threshold);
    let digest = config_digest(&params);
    let mut report = Phase2Report {
        threshold: best_threshold,
        digest: digest.clone(),
        fetched: 0,
        reused: 0,
        failures: Vec::new(),
    };
    for item in &spec.dataset {
        let id = item.recording_id();
        match store.load(id, &digest, &params) {
            Ok(Some(_)) => {
                report.reused += 1;
                continue;
            }
            Ok(None) => {}
            Err(e) => {
                report.failures.push(EntryFailure {
                    recording_id: id.into(),
                    message: format!("{e}"),
                });
                continue;
            }
        }
        let raw = match diarize_once(backend, id, &request_for(spec, item, best_threshold)) {
            Ok(raw) => raw,
            Err(e) => {
                report.failures.push(EntryFailure {
                    recording_id: id.into(),
                    message: format!("{e}"),
                });
                continue;
            }
        };
        match store.store(id, &digest, &params, &raw) {
            Ok(()) => report.fetched += 1,
            Err(e) => report.failures.push(EntryFailure {
                recording_id: id.into(),
                message: format!("{e}"),
            }),
        }
    }
    Ok(report)
}

/// Loads every recording's raw prediction for `best_threshold`, paired with
/// its reference.
pub fn load_raw_predictions<S: PredictionStore + ?Sized>(
    store: &S,
    spec: &SweepSpec,
    best_threshold: f64,
) -> Result<Vec<(Annotation, Annotation)>, SweepError> {
    let params = spec.inference_params(best_threshold);
    let digest = config_digest(&params);
    spec.dataset
        .iter()
        .map(|item| {
            let id = item.recording_id();
            match store.load(id, &digest, &params) {
                Ok(Some(raw)) => Ok((item.reference.clone(), raw.with_recording_id(id))),
                Ok(None) => Err(SweepError::CacheMiss {
                    recording_id: id.into(),
                    digest: digest.clone(),
                }),
                Err(e) => Err(SweepError::Store(format!("{id}: {e}"))),
            }
        })
        .collect()
}

/// Scores already-evaluated grid points and picks the best.
pub fn collect_phase3(points: &[PostprocessParams], scores: Vec<DerBreakdown>) -> Result<SweepResult, SweepError> {
    let rows = points
        .iter()
        .zip(scores)
        .map(|(p, b)| SweepRow {
            config: SweepConfig::Postprocess(*p),
            breakdown: Some(b),
            error: None,
        })
        .collect();
    finish(rows)
}

/// Phase 3. Reads only from `store`; no backend is involved.
pub fn phase3_postprocess_sweep<S: PredictionStore + ?Sized>(
    store: &S,
    spec: &SweepSpec,
    best_threshold: f64,
) -> Result<SweepResult, SweepError> {
    spec.validate()?;
    let raw = load_raw_predictions(store, spec, best_threshold)?;
    let points = spec.postprocess_grid.points();
    let scores = points
        .iter()
        .map(|p| evaluate_postprocess(&raw, p, &spec.der_options))
        .collect::<Result<Vec<_>, _>>()?;
    collect_phase3(&points, scores)
}

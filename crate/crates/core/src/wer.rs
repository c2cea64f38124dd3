//! Word error rate over normalized, whitespace-tokenized text.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::text::{normalize, NormalizationProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("cannot aggregate an empty corpus")]
pub struct EmptyCorpus;

/// Edit counts of one optimal alignment.
///
/// `wer` is `None` when the reference has no tokens but the hypothesis does:
/// the rate is undefined and only `insertions` carries information. Two empty
/// texts score `Some(0.0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WerBreakdown {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub reference_tokens: usize,
    pub wer: Option<f64>,
}

impl WerBreakdown {
    pub fn from_counts(substitutions: usize, deletions: usize, insertions: usize, reference_tokens: usize) -> Self {
        let errors = substitutions + deletions + insertions;
        let wer = if reference_tokens > 0 {
            Some(errors as f64 / reference_tokens as f64)
        } else if errors == 0 {
            Some(0.0)
        } else {
            None
        };
        Self {
            substitutions,
            deletions,
            insertions,
            reference_tokens,
            wer,
        }
    }

    pub fn errors(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditOp {
    Match,
    Substitute,
    Delete,
    Insert,
}

/// Minimum-edit alignment with unit costs, returned in reading order.
///
/// When several alignments reach the minimum, the backtrace prefers the
/// diagonal (match or substitution), then deletion, then insertion.
pub fn align<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> Vec<EditOp> {
    let (n, m) = (reference.len(), hypothesis.len());
    let width = m + 1;
    let mut dist = vec![0u32; (n + 1) * width];
    for i in 0..=n {
        dist[i * width] = i as u32;
    }
    for (j, d) in dist[..width].iter_mut().enumerate() {
        *d = j as u32;
    }
    for i in 1..=n {
        for j in 1..=m {
            let diag = dist[(i - 1) * width + j - 1] + u32::from(reference[i - 1] != hypothesis[j - 1]);
            let del = dist[(i - 1) * width + j] + 1;
            let ins = dist[i * width + j - 1] + 1;
            dist[i * width + j] = diag.min(del).min(ins);
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = dist[i * width + j];
        if i > 0 && j > 0 {
            let same = reference[i - 1] == hypothesis[j - 1];
            if dist[(i - 1) * width + j - 1] + u32::from(!same) == here {
                ops.push(if same { EditOp::Match } else { EditOp::Substitute });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && dist[(i - 1) * width + j] + 1 == here {
            ops.push(EditOp::Delete);
            i -= 1;
        } else {
            ops.push(EditOp::Insert);
            j -= 1;
        }
    }
    ops.reverse();
    ops
}

/// Counts S/D/I for two token sequences.
pub fn score_tokens<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> WerBreakdown {
    let (mut s, mut d, mut ins) = (0, 0, 0);
    for op in align(reference, hypothesis) {
        match op {
            EditOp::Match => {}
            EditOp::Substitute => s += 1,
            EditOp::Delete => d += 1,
            EditOp::Insert => ins += 1,
        }
    }
    WerBreakdown::from_counts(s, d, ins, reference.len())
}

/// Normalizes both texts with `profile`, splits on whitespace and aligns.
pub fn score_wer(reference_text: &str, hypothesis_text: &str, profile: &NormalizationProfile) -> WerBreakdown {
    let r = normalize(reference_text, profile);
    let h = normalize(hypothesis_text, profile);
    let rt: Vec<&str> = r.split_whitespace().collect();
    let ht: Vec<&str> = h.split_whitespace().collect();
    score_tokens(&rt, &ht)
}

/// Token-weighted corpus aggregate: counts are summed before dividing.
pub fn aggregate_wer<'a, I>(parts: I) -> Result<WerBreakdown, EmptyCorpus>
where
    I: IntoIterator<Item = &'a WerBreakdown>,
{
    let mut any = false;
    let (mut s, mut d, mut i, mut n) = (0, 0, 0, 0);
    for p in parts {
        any = true;
        s += p.substitutions;
        d += p.deletions;
        i += p.insertions;
        n += p.reference_tokens;
    }
    if !any {
        return Err(EmptyCorpus);
    }
    Ok(WerBreakdown::from_counts(s, d, i, n))
}

pub fn score_wer_corpus<R: AsRef<str>, H: AsRef<str>>(
    pairs: &[(R, H)],
    profile: &NormalizationProfile,
) -> Result<WerBreakdown, EmptyCorpus> {
    let scored: Vec<WerBreakdown> = pairs
        .iter()
        .map(|(r, h)| score_wer(r.as_ref(), h.as_ref(), profile))
        .collect();
    aggregate_wer(&scored)
}

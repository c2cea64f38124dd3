//! Planning bounded-length decoding windows over speech regions.
//!
//! Window span is measured on the audio timeline, silences included, because
//! the recognizer decodes one contiguous slice of audio per window.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub const DEFAULT_CHUNK_LIMIT: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChunkError {
    #[error("chunk limit must be finite and positive, got {0}")]
    InvalidLimit(f64),
    #[error("region {index} ({start}, {end}) is not a finite, non-negative, positive-length interval")]
    InvalidRegion { index: usize, start: f64, end: f64 },
    #[error("region {index} starts before region {} ends", index - 1)]
    Unsorted { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    pub start: f64,
    pub end: f64,
}

impl Chunk {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Sorted, disjoint windows, none longer than the limit they were planned with.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChunkPlan {
    pub chunks: Vec<Chunk>,
}

impl ChunkPlan {
    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }
}

/// Largest `end` with `end - start <= limit`.
fn capped_end(start: f64, limit: f64) -> f64 {
    let mut end = start + limit;
    while end - start > limit {
        end = end.next_down();
    }
    end
}

/// Greedy left-to-right packing.
///
/// A region joins the open chunk while the chunk would still span at most
/// `chunk_limit`; otherwise the chunk is closed and a new one opens at the
/// region's start. A region longer than the limit is cut into full-limit
/// pieces, and its remainder stays open for following regions.
pub fn plan_chunks(regions: &[(f64, f64)], chunk_limit: f64) -> Result<ChunkPlan, ChunkError> {
    if !chunk_limit.is_finite() || chunk_limit <= 0.0 {
        return Err(ChunkError::InvalidLimit(chunk_limit));
    }
    for (index, &(start, end)) in regions.iter().enumerate() {
        if !start.is_finite() || !end.is_finite() || start < 0.0 || end <= start {
            return Err(ChunkError::InvalidRegion { index, start, end });
        }
        if index > 0 && start < regions[index - 1].1 {
            return Err(ChunkError::Unsorted { index });
        }
    }

    let mut chunks = Vec::new();
    let mut open: Option<Chunk> = None;
    for &(start, end) in regions {
        if let Some(c) = open.as_mut() {
            if end - c.start <= chunk_limit {
                c.end = end;
                continue;
            }
            chunks.push(*c);
        }
        let mut piece_start = start;
        while end - piece_start > chunk_limit {
            let piece_end = capped_end(piece_start, chunk_limit);
            chunks.push(Chunk {
                start: piece_start,
                end: piece_end,
            });
            piece_start = piece_end;
        }
        open = Some(Chunk {
            start: piece_start,
            end,
        });
    }
    chunks.extend(open);
    Ok(ChunkPlan { chunks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn spans(plan: &ChunkPlan) -> Vec<(f64, f64)> {
        plan.chunks.iter().map(|c| (c.start, c.end)).collect()
    }

    #[test]
    fn greedy_packing() {
        let plan = plan_chunks(&[(0.0, 10.0), (12.0, 20.0), (25.0, 40.0)], 30.0).unwrap();
        assert_eq!(spans(&plan), vec![(0.0, 20.0), (25.0, 40.0)]);
    }

    #[test]
    fn long_region_split() {
        let plan = plan_chunks(&[(0.0, 70.0)], 30.0).unwrap();
        assert_eq!(spans(&plan), vec![(0.0, 30.0), (30.0, 60.0), (60.0, 70.0)]);
    }

    #[test]
    fn remainder_absorbs_following_region() {
        let plan = plan_chunks(&[(0.0, 70.0), (72.0, 80.0)], 30.0).unwrap();
        assert_eq!(spans(&plan), vec![(0.0, 30.0), (30.0, 60.0), (60.0, 80.0)]);
    }

    #[test]
    fn exact_limit_fits() {
        let plan = plan_chunks(&[(0.0, 10.0), (20.0, 30.0)], 30.0).unwrap();
        assert_eq!(spans(&plan), vec![(0.0, 30.0)]);
        let plan = plan_chunks(&[(0.0, 60.0)], 30.0).unwrap();
        assert_eq!(spans(&plan), vec![(0.0, 30.0), (30.0, 60.0)]);
    }

    #[test]
    fn empty_and_invalid() {
        assert!(plan_chunks(&[], 30.0).unwrap().is_empty());
        assert_eq!(plan_chunks(&[(0.0, 1.0)], 0.0), Err(ChunkError::InvalidLimit(0.0)));
        assert!(matches!(
            plan_chunks(&[(1.0, 1.0)], 30.0),
            Err(ChunkError::InvalidRegion { index: 0, .. })
        ));
        assert_eq!(
            plan_chunks(&[(0.0, 5.0), (4.0, 6.0)], 30.0),
            Err(ChunkError::Unsorted { index: 1 })
        );
    }

    #[test]
    fn awkward_float_limits_never_exceeded() {
        let plan = plan_chunks(&[(0.1, 100.7)], 0.3).unwrap();
        for c in &plan.chunks {
            assert!(c.duration() <= 0.3);
            assert!(c.duration() > 0.0);
        }
        for w in plan.chunks.windows(2) {
            assert_eq!(w[0].end, w[1].start);
        }
        assert_eq!(plan.chunks.last().unwrap().end, 100.7);
    }
}

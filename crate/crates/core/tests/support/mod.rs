//! Independent reference implementations and random generators shared by the
//! property tests and the acceptance suite. Nothing here calls into the
//! scoring code it is used to check.

#![allow(dead_code)]

use std::collections::BTreeSet;

use diarkit_core::{Annotation, Segment};
use rand::Rng;

/// Random annotation with up to `max_speakers` labels drawn from `prefix0..`,
/// 0..=`max_segments` segments, durations in `[0.1, 30]` s, starts in `[0, 120)`.
pub fn random_annotation<R: Rng>(
    rng: &mut R,
    id: &str,
    prefix: &str,
    max_speakers: usize,
    max_segments: usize,
) -> Annotation {
    let speakers = rng.gen_range(1..=max_speakers);
    let n = rng.gen_range(0..=max_segments);
    let segs = (0..n)
        .map(|_| {
            let start = rng.gen_range(0.0..120.0);
            let dur = rng.gen_range(0.1..=30.0);
            let spk = format!("{prefix}{}", rng.gen_range(0..speakers));
            Segment::new(start, start + dur, spk).unwrap()
        })
        .collect();
    Annotation::new(id, segs)
}

/// Error durations for the best mapping found by enumerating every partial
/// injection of reference speakers into hypothesis speakers.
#[derive(Debug, Clone, Copy)]
pub struct OracleDer {
    pub missed: f64,
    pub false_alarm: f64,
    pub confusion: f64,
    pub total: f64,
}

impl OracleDer {
    pub fn der(&self) -> Option<f64> {
        (self.total > 0.0).then(|| (self.missed + self.false_alarm + self.confusion) / self.total)
    }
}

struct Piece {
    len: f64,
    refs: u32,
    hyps: u32,
}

fn active_mask(ann: &Annotation, labels: &[String], t: f64) -> u32 {
    let mut mask = 0;
    for s in ann.segments() {
        if s.start() <= t && t < s.end() {
            let i = labels.iter().position(|l| l == s.speaker()).unwrap();
            mask |= 1 << i;
        }
    }
    mask
}

fn labels_of(ann: &Annotation) -> Vec<String> {
    ann.segments()
        .iter()
        .map(|s| s.speaker().to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Midpoint-sampled timeline plus exhaustive mapping search.
pub fn brute_force_der(reference: &Annotation, hypothesis: &Annotation, collar: f64, score_overlap: bool) -> OracleDer {
    let ref_labels = labels_of(reference);
    let hyp_labels = labels_of(hypothesis);
    let ref_bounds: Vec<f64> = reference.segments().iter().flat_map(|s| [s.start(), s.end()]).collect();

    let mut cuts: Vec<f64> = ref_bounds.clone();
    cuts.extend(hypothesis.segments().iter().flat_map(|s| [s.start(), s.end()]));
    if collar > 0.0 {
        cuts.extend(ref_bounds.iter().flat_map(|b| [b - collar, b + collar]));
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut pieces = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        if collar > 0.0 && ref_bounds.iter().any(|&x| (mid - x).abs() < collar) {
            continue;
        }
        let refs = active_mask(reference, &ref_labels, mid);
        if !score_overlap && refs.count_ones() >= 2 {
            continue;
        }
        let hyps = active_mask(hypothesis, &hyp_labels, mid);
        pieces.push(Piece { len: b - a, refs, hyps });
    }

    let (mut missed, mut fa, mut total) = (0.0, 0.0, 0.0);
    for p in &pieces {
        let (r, h) = (p.refs.count_ones() as f64, p.hyps.count_ones() as f64);
        missed += (r - h).max(0.0) * p.len;
        fa += (h - r).max(0.0) * p.len;
        total += r * p.len;
    }

    // every partial injection ref -> hyp, as a vector of Option<hyp index>
    let mut best_conf = f64::INFINITY;
    let mut mapping = vec![None; ref_labels.len()];
    let mut used = vec![false; hyp_labels.len()];
    enumerate(0, &mut mapping, &mut used, &mut |map| {
        let mut conf = 0.0;
        for p in &pieces {
            let (r, h) = (p.refs.count_ones(), p.hyps.count_ones());
            let mapped = (0..map.len())
                .filter(|&i| p.refs & (1 << i) != 0)
                .filter(|&i| map[i].is_some_and(|j: usize| p.hyps & (1 << j) != 0))
                .count() as u32;
            conf += (r.min(h) - mapped) as f64 * p.len;
        }
        if conf < best_conf {
            best_conf = conf;
        }
    });

    OracleDer {
        missed,
        false_alarm: fa,
        confusion: best_conf,
        total,
    }
}

fn enumerate(i: usize, map: &mut Vec<Option<usize>>, used: &mut Vec<bool>, visit: &mut dyn FnMut(&[Option<usize>])) {
    if i == map.len() {
        visit(map);
        return;
    }
    map[i] = None;
    enumerate(i + 1, map, used, visit);
    for j in 0..used.len() {
        if !used[j] {
            used[j] = true;
            map[i] = Some(j);
            enumerate(i + 1, map, used, visit);
            used[j] = false;
        }
    }
    map[i] = None;
}

/// Every sequence over `0..alphabet` of length `0..=max_len`, shortest first.
pub fn all_sequences(alphabet: u8, max_len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for c in 0..alphabet {
                let mut t: Vec<u8> = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Breadth-first search over single-token edits (insert, delete, substitute)
/// restricted to sequences of length `<= max_len`. Returns the minimum number
/// of edits from `source` to every sequence, indexed like [`all_sequences`].
///
/// Some optimal edit script never leaves the length range spanned by its two
/// endpoints, so the restriction does not change any distance.
pub fn edit_distances_from(source: &[u8], alphabet: u8, max_len: usize) -> Vec<u32> {
    let index = |s: &[u8]| -> usize {
        // offset of the length block plus base-`alphabet` value
        let mut off = 0usize;
        let mut block = 1usize;
        for _ in 0..s.len() {
            off += block;
            block *= alphabet as usize;
        }
        off + s.iter().fold(0usize, |acc, &c| acc * alphabet as usize + c as usize)
    };
    let total: usize = (0..=max_len).map(|l| (alphabet as usize).pow(l as u32)).sum();
    let mut dist = vec![u32::MAX; total];
    let mut queue = std::collections::VecDeque::new();
    dist[index(source)] = 0;
    queue.push_back(source.to_vec());
    while let Some(s) = queue.pop_front() {
        let d = dist[index(&s)];
        let mut neighbours: Vec<Vec<u8>> = Vec::new();
        for i in 0..s.len() {
            let mut t = s.clone();
            t.remove(i);
            neighbours.push(t);
            for c in 0..alphabet {
                if c != s[i] {
                    let mut t = s.clone();
                    t[i] = c;
                    neighbours.push(t);
                }
            }
        }
        if s.len() < max_len {
            for i in 0..=s.len() {
                for c in 0..alphabet {
                    let mut t = s.clone();
                    t.insert(i, c);
                    neighbours.push(t);
                }
            }
        }
        for t in neighbours {
            let k = index(&t);
            if dist[k] == u32::MAX {
                dist[k] = d + 1;
                queue.push_back(t);
            }
        }
    }
    dist
}

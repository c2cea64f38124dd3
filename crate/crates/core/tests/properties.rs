use diarkit_core::chunk::plan_chunks;
use diarkit_core::der::{score_der, DerOptions};
use diarkit_core::postprocess::{apply_postprocess, collapse_aba, merge_same_speaker_gaps, remove_short_segments};
use diarkit_core::text::{clean_transcript, dedup_phrases, dedup_words, normalize, DedupParams, NormalizationProfile};
use diarkit_core::{Annotation, PostprocessParams, Segment};
use proptest::prelude::*;

fn annotation() -> impl Strategy<Value = Annotation> {
    prop::collection::vec((0u32..6000, 1u32..800, 0usize..4), 0..25).prop_map(|raw| {
        let segs = raw
            .into_iter()
            .map(|(s, d, k)| {
                let start = f64::from(s) / 100.0;
                Segment::new(start, start + f64::from(d) / 100.0, ["A", "B", "C", "D"][k]).unwrap()
            })
            .collect();
        Annotation::new("rec", segs)
    })
}

fn params() -> impl Strategy<Value = PostprocessParams> {
    (0u32..100, 0u32..100, 0u32..100).prop_map(|(a, b, c)| {
        PostprocessParams::new(f64::from(a) / 100.0, f64::from(b) / 100.0, f64::from(c) / 100.0).unwrap()
    })
}

/// Per-speaker union length, summed over speakers.
fn labeled_time(a: &Annotation) -> f64 {
    a.speakers()
        .into_iter()
        .map(|spk| {
            let only = Annotation::new(
                "x",
                a.segments().iter().filter(|s| s.speaker() == spk).cloned().collect(),
            );
            only.speech_regions().iter().map(|(s, e)| e - s).sum::<f64>()
        })
        .sum()
}

fn is_canonical(a: &Annotation) -> bool {
    a.segments()
        .windows(2)
        .all(|w| (w[0].start(), w[0].end(), w[0].speaker()) <= (w[1].start(), w[1].end(), w[1].speaker()))
        && a.segments().iter().all(|s| s.end() > s.start())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn postprocess_is_idempotent(a in annotation(), p in params()) {
        let once = apply_postprocess(&a, &p);
        prop_assert_eq!(apply_postprocess(&once, &p), once.clone());
        prop_assert!(is_canonical(&once));
        let before: std::collections::BTreeSet<_> = a.speakers().into_iter().collect();
        prop_assert!(once.speakers().into_iter().all(|s| before.contains(s)));
    }

    #[test]
    fn rule_time_monotonicity(a in annotation(), p in params()) {
        prop_assert!(labeled_time(&remove_short_segments(&a, p.min_duration)) <= labeled_time(&a) + 1e-9);
        prop_assert!(labeled_time(&merge_same_speaker_gaps(&a, p.merge_gap)) >= labeled_time(&a) - 1e-9);
        prop_assert!(labeled_time(&collapse_aba(&a, p.aba_max_duration)) >= labeled_time(&a) - 1e-9);
    }

    #[test]
    fn self_score_is_zero(a in annotation()) {
        let d = score_der(&a, &a, &DerOptions::default()).unwrap();
        prop_assert!(d.der.is_none_or(|x| x == 0.0));
        prop_assert_eq!(d.error_time(), 0.0);
    }

    #[test]
    fn chunk_plan_invariants(raw in prop::collection::vec((0u32..500, 1u32..9000), 0..30), limit in 1u32..4000) {
        let limit = f64::from(limit) / 100.0;
        let mut regions = Vec::new();
        let mut t = 0.0;
        for (gap, len) in raw {
            let start = t + f64::from(gap) / 100.0;
            let end = start + f64::from(len) / 100.0;
            regions.push((start, end));
            t = end;
        }
        let plan = plan_chunks(&regions, limit).unwrap();
        for c in &plan.chunks {
            prop_assert!(c.end > c.start && c.end - c.start <= limit);
        }
        for w in plan.chunks.windows(2) {
            prop_assert!(w[0].end <= w[1].start);
        }
        for &(s, e) in &regions {
            let covered: f64 = plan.chunks.iter().map(|c| (c.end.min(e) - c.start.max(s)).max(0.0)).sum();
            prop_assert!((covered - (e - s)).abs() < 1e-9);
        }
    }

    #[test]
    fn clean_transcript_is_idempotent(words in prop::collection::vec(0usize..4, 0..40)) {
        let vocab = ["ক", "খা", "গগ", "আমি"];
        let text = words.iter().map(|&w| vocab[w]).collect::<Vec<_>>().join(" ");
        let p = DedupParams::default();
        let once = clean_transcript(&text, &p);
        prop_assert_eq!(clean_transcript(&once, &p), once.clone());
        prop_assert!(once.split_whitespace().count() <= words.len());
    }

    #[test]
    fn token_passes_only_delete(words in prop::collection::vec(0usize..3, 0..30), max_len in 2usize..6) {
        let toks: Vec<String> = words.iter().map(|w| ["a", "b", "c"][*w].to_string()).collect();
        let p = DedupParams { max_phrase_len: max_len, ..DedupParams::default() };
        for out in [dedup_phrases(&toks, &p), dedup_words(&toks, 2)] {
            prop_assert!(out.len() <= toks.len());
            for t in ["a", "b", "c"] {
                let n_out = out.iter().filter(|x| *x == t).count();
                let n_in = toks.iter().filter(|x| *x == t).count();
                prop_assert!(n_out <= n_in);
            }
        }
    }

    #[test]
    fn normalize_is_idempotent(s in "[ \\t,।কখাে\u{9cb}a-c.!]{0,30}") {
        let p = NormalizationProfile::default();
        let once = normalize(&s, &p);
        prop_assert_eq!(normalize(&once, &p), once.clone());
    }
}

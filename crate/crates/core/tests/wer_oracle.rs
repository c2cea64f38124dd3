mod support;

use diarkit_core::wer::score_tokens;
use support::{all_sequences, edit_distances_from};

#[test]
fn dp_matches_breadth_first_edit_search_up_to_length_4() {
    let seqs = all_sequences(3, 4);
    for r in &seqs {
        let dist = edit_distances_from(r, 3, 4);
        for (k, h) in seqs.iter().enumerate() {
            let w = score_tokens(r, h);
            assert_eq!(w.errors() as u32, dist[k], "{r:?} -> {h:?}");
            // counts must describe an actual alignment
            assert_eq!(r.len() - w.deletions, h.len() - w.insertions);
            assert!(w.substitutions + w.deletions <= r.len());
        }
    }
}

//! Maximum-weight one-to-one assignment (Hungarian method).
//!
//! Dense O(n^3) shortest-augmenting-path formulation with row/column
//! potentials, over integer weights so that ties resolve identically on every
//! platform. Rectangular inputs are padded with zero-weight dummies.

use alloc::vec;
use alloc::vec::Vec;

/// Returns, for each row, the column it is assigned to, or `None` when the
/// row was matched to a padding column (only possible when rows outnumber
/// columns). The total weight of the returned pairs is maximal.
///
/// `weights` must be rectangular; every row must have the same length.
pub fn max_weight_assignment(weights: &[Vec<i64>]) -> Vec<Option<usize>> {
    let rows = weights.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = weights[0].len();
    debug_assert!(weights.iter().all(|r| r.len() == cols));
    let n = rows.max(cols);
    if cols == 0 {
        return vec![None; rows];
    }

    // minimise the negated weights; padding cells cost 0
    let cost = |i: usize, j: usize| -> i64 {
        if i < rows && j < cols {
            -weights[i][j]
        } else {
            0
        }
    };

    const INF: i64 = i64::MAX / 4;
    // 1-based arrays; index 0 is the virtual source column
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut result = vec![None; rows];
    for (j, &i) in row_of_col.iter().enumerate().skip(1) {
        if i >= 1 && i <= rows && j <= cols {
            result[i - 1] = Some(j - 1);
        }
    }
    result
}

/// Total weight of an assignment as returned by [`max_weight_assignment`].
pub fn assignment_weight(weights: &[Vec<i64>], assignment: &[Option<usize>]) -> i64 {
    assignment
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| weights[i][j]))
        .sum()
}

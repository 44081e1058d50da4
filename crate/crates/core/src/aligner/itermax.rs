//! Iterative mutual-argmax word alignment over a similarity matrix.
//!
//! No distortion prior is applied: positions only matter for tie-breaking,
//! which always prefers the lowest index.

use super::embedding::SimilarityMatrix;

/// Pairs `(i, j)` where column `j` is row `i`'s argmax and row `i` is
/// column `j`'s argmax. Rows or columns that are entirely `-inf` have no
/// argmax.
pub fn mutual_argmax(values: &[f64], rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let mut row_best = vec![None; rows];
    let mut col_best: Vec<Option<(usize, f64)>> = vec![None; cols];
    for (i, best) in row_best.iter_mut().enumerate() {
        let mut cur: Option<(usize, f64)> = None;
        for j in 0..cols {
            let v = values[i * cols + j];
            if v == f64::NEG_INFINITY || v.is_nan() {
                continue;
            }
            if cur.is_none_or(|(_, b)| v > b) {
                cur = Some((j, v));
            }
            if col_best[j].is_none_or(|(_, b)| v > b) {
                col_best[j] = Some((i, v));
            }
        }
        *best = cur.map(|(j, _)| j);
    }
    row_best
        .iter()
        .enumerate()
        .filter_map(|(i, j)| {
            let j = (*j)?;
            (col_best[j].map(|(r, _)| r) == Some(i)).then_some((i, j))
        })
        .collect()
}

/// Runs up to `iters` rounds. After the first, cells with both endpoints
/// aligned are masked to `-inf` and cells with exactly one aligned endpoint
/// are multiplied by `decay` before mutual argmax is recomputed.
pub fn itermax_word_align(sim: &SimilarityMatrix, iters: usize, decay: f64) -> Vec<(usize, usize)> {
    let (rows, cols) = (sim.rows(), sim.cols());
    if rows == 0 || cols == 0 || iters == 0 {
        return Vec::new();
    }
    let mut pairs = mutual_argmax(sim.values(), rows, cols);
    let mut row_aligned = vec![false; rows];
    let mut col_aligned = vec![false; cols];
    for &(i, j) in &pairs {
        row_aligned[i] = true;
        col_aligned[j] = true;
    }
    let mut scratch = vec![0.0; rows * cols];
    for _ in 1..iters {
        for i in 0..rows {
            for j in 0..cols {
                let v = sim.get(i, j);
                scratch[i * cols + j] = match (row_aligned[i], col_aligned[j]) {
                    (true, true) => f64::NEG_INFINITY,
                    (false, false) => v,
                    _ => v * decay,
                };
            }
        }
        let fresh: Vec<_> = mutual_argmax(&scratch, rows, cols);
        if fresh.is_empty() {
            break;
        }
        for &(i, j) in &fresh {
            row_aligned[i] = true;
            col_aligned[j] = true;
        }
        pairs.extend(fresh);
    }
    pairs.sort_unstable();
    pairs
}

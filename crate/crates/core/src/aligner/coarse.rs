//! Monotonic n-m line alignment in two passes.
//!
//! Pass 1 finds a chain of 1-1 anchors: each source line may only match one
//! of its `top_k` most similar target lines, skips cost `skip`. Pass 2 runs a
//! bead DP inside a corridor of `window` lines around that chain. A bead of
//! `a` source and `b` target lines (`a, b <= max_align`) scores the cosine of
//! the two summed line vectors, times the character-length ratio when
//! `len_penalty` is set. Beads with an empty side score `skip`.

use std::ops::Range;

use super::embedding::EmbeddingMatrix;
use super::{AlignError, AlignerParams};

#[derive(Debug, Clone, PartialEq)]
pub struct Bead {
    pub src_lines: Range<usize>,
    pub tgt_lines: Range<usize>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoarseAlignment {
    pub beads: Vec<Bead>,
    /// Sum of bead scores.
    pub score: f64,
    /// Pass-1 anchors as (source line, target line).
    pub anchors: Vec<(usize, usize)>,
}

/// Scores beads from prefix sums of line vectors and character lengths.
pub struct BeadScorer {
    dim: usize,
    src_prefix: Vec<f64>,
    tgt_prefix: Vec<f64>,
    src_chars: Vec<usize>,
    tgt_chars: Vec<usize>,
    skip: f64,
    len_penalty: bool,
}

fn prefix_rows(m: &EmbeddingMatrix) -> Vec<f64> {
    let d = m.dim();
    let mut p = vec![0.0; (m.len() + 1) * d];
    for (i, row) in m.rows().enumerate() {
        for k in 0..d {
            p[(i + 1) * d + k] = p[i * d + k] + row[k];
        }
    }
    p
}

fn prefix_lengths(lens: &[usize]) -> Vec<usize> {
    std::iter::once(0)
        .chain(lens.iter().scan(0, |acc, &l| {
            *acc += l;
            Some(*acc)
        }))
        .collect()
}

impl BeadScorer {
    pub fn new(
        src: &EmbeddingMatrix,
        tgt: &EmbeddingMatrix,
        src_chars: &[usize],
        tgt_chars: &[usize],
        skip: f64,
        len_penalty: bool,
    ) -> Self {
        BeadScorer {
            dim: src.dim(),
            src_prefix: prefix_rows(src),
            tgt_prefix: prefix_rows(tgt),
            src_chars: prefix_lengths(src_chars),
            tgt_chars: prefix_lengths(tgt_chars),
            skip,
            len_penalty,
        }
    }

    pub fn score(&self, src: Range<usize>, tgt: Range<usize>) -> f64 {
        if src.is_empty() || tgt.is_empty() {
            return self.skip;
        }
        let d = self.dim;
        let (s0, s1) = (src.start * d, src.end * d);
        let (t0, t1) = (tgt.start * d, tgt.end * d);
        let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
        for k in 0..d {
            let a = self.src_prefix[s1 + k] - self.src_prefix[s0 + k];
            let b = self.tgt_prefix[t1 + k] - self.tgt_prefix[t0 + k];
            ab += a * b;
            aa += a * a;
            bb += b * b;
        }
        let cos = if aa > 0.0 && bb > 0.0 { ab / (aa.sqrt() * bb.sqrt()) } else { 0.0 };
        cos * self.penalty(src, tgt)
    }

    fn penalty(&self, src: Range<usize>, tgt: Range<usize>) -> f64 {
        if !self.len_penalty {
            return 1.0;
        }
        let cs = self.src_chars[src.end] - self.src_chars[src.start];
        let ct = self.tgt_chars[tgt.end] - self.tgt_chars[tgt.start];
        if cs.max(ct) == 0 {
            1.0
        } else {
            cs.min(ct) as f64 / cs.max(ct) as f64
        }
    }
}

pub fn coarse_align<S: AsRef<str>>(
    src_emb: &EmbeddingMatrix,
    tgt_emb: &EmbeddingMatrix,
    src_lines: &[S],
    tgt_lines: &[S],
    params: &AlignerParams,
) -> Result<CoarseAlignment, AlignError> {
    params.check()?;
    let (n, m) = (src_emb.len(), tgt_emb.len());
    if src_lines.len() != n || tgt_lines.len() != m {
        return Err(AlignError::ShapeMismatch(format!(
            "{n}x{m} line embeddings for {}x{} lines",
            src_lines.len(),
            tgt_lines.len()
        )));
    }
    if n > 0 && m > 0 && src_emb.dim() != tgt_emb.dim() {
        return Err(AlignError::ShapeMismatch(format!(
            "embedding dimensions differ: {} vs {}",
            src_emb.dim(),
            tgt_emb.dim()
        )));
    }
    if n == 0 || m == 0 {
        let beads: Vec<Bead> = (0..n)
            .map(|i| Bead { src_lines: i..i + 1, tgt_lines: 0..0, score: params.skip })
            .chain((0..m).map(|j| Bead { src_lines: n..n, tgt_lines: j..j + 1, score: params.skip }))
            .collect();
        let score = beads.iter().map(|b| b.score).sum();
        return Ok(CoarseAlignment { beads, score, anchors: Vec::new() });
    }

    let anchors = anchor_chain(src_emb, tgt_emb, params);
    let corridor = corridor(n, m, &anchors, params.window);
    let chars = |lines: &[S]| lines.iter().map(|l| l.as_ref().chars().count()).collect::<Vec<_>>();
    let scorer =
        BeadScorer::new(src_emb, tgt_emb, &chars(src_lines), &chars(tgt_lines), params.skip, params.len_penalty);
    let (beads, score) = bead_dp(n, m, &corridor, &scorer, params.max_align)?;
    Ok(CoarseAlignment { beads, score, anchors })
}

fn top_k(sim: &[f64], k: usize) -> Vec<bool> {
    let mut order: Vec<usize> = (0..sim.len()).collect();
    order.sort_by(|&a, &b| sim[b].total_cmp(&sim[a]).then(a.cmp(&b)));
    let mut keep = vec![false; sim.len()];
    for &j in order.iter().take(k) {
        keep[j] = true;
    }
    keep
}

/// Optimal monotonic 1-1 chain restricted to each source line's top-k targets.
fn anchor_chain(src: &EmbeddingMatrix, tgt: &EmbeddingMatrix, params: &AlignerParams) -> Vec<(usize, usize)> {
    let (n, m) = (src.len(), tgt.len());
    let sim: Vec<Vec<f64>> =
        (0..n).map(|i| (0..m).map(|j| super::embedding::dot(src.row(i), tgt.row(j))).collect()).collect();
    let allowed: Vec<Vec<bool>> = sim.iter().map(|row| top_k(row, params.top_k)).collect();

    // move: 0 = match, 1 = skip source, 2 = skip target
    let w = m + 1;
    let mut best = vec![f64::NEG_INFINITY; (n + 1) * w];
    let mut back = vec![u8::MAX; (n + 1) * w];
    best[0] = 0.0;
    for i in 0..=n {
        for j in 0..=m {
            if i == 0 && j == 0 {
                continue;
            }
            let mut cur = f64::NEG_INFINITY;
            let mut mv = u8::MAX;
            if i > 0 && j > 0 && allowed[i - 1][j - 1] {
                cur = best[(i - 1) * w + j - 1] + sim[i - 1][j - 1];
                mv = 0;
            }
            if i > 0 {
                let c = best[(i - 1) * w + j] + params.skip;
                if c > cur {
                    cur = c;
                    mv = 1;
                }
            }
            if j > 0 {
                let c = best[i * w + j - 1] + params.skip;
                if c > cur {
                    cur = c;
                    mv = 2;
                }
            }
            best[i * w + j] = cur;
            back[i * w + j] = mv;
        }
    }
    let mut chain = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        match back[i * w + j] {
            0 => {
                chain.push((i - 1, j - 1));
                i -= 1;
                j -= 1;
            }
            1 => i -= 1,
            _ => j -= 1,
        }
    }
    chain.reverse();
    chain
}

/// Allowed target-prefix range per source-prefix row of the DP lattice.
fn corridor(n: usize, m: usize, anchors: &[(usize, usize)], window: usize) -> Vec<Range<usize>> {
    let mut points = vec![(0usize, 0usize)];
    for &(i, j) in anchors {
        points.push((i, j));
        points.push((i + 1, j + 1));
    }
    points.push((n, m));
    points.dedup();

    let mut lo = vec![usize::MAX; n + 1];
    let mut hi = vec![0usize; n + 1];
    let mut mark = |i: usize, a: usize, b: usize| {
        lo[i] = lo[i].min(a);
        hi[i] = hi[i].max(b);
    };
    for pair in points.windows(2) {
        let ((i0, j0), (i1, j1)) = (pair[0], pair[1]);
        if i0 == i1 {
            mark(i0, j0, j1);
            continue;
        }
        let (di, dj) = (i1 - i0, j1 - j0);
        for i in i0..i1 {
            let a = j0 + (i - i0) * dj / di;
            let b = (j0 + ((i + 1 - i0) * dj).div_ceil(di)).min(j1);
            mark(i, a, b);
        }
        mark(i1, j1, j1);
    }
    (0..=n).map(|i| lo[i].saturating_sub(window)..(hi[i] + window).min(m) + 1).collect()
}

fn bead_dp(
    n: usize,
    m: usize,
    corridor: &[Range<usize>],
    scorer: &BeadScorer,
    max_align: usize,
) -> Result<(Vec<Bead>, f64), AlignError> {
    #[derive(Clone, Copy)]
    struct Cell {
        score: f64,
        beads: usize,
        step: (usize, usize),
    }
    let empty = Cell { score: f64::NEG_INFINITY, beads: 0, step: (0, 0) };
    let mut table: Vec<Vec<Cell>> = corridor.iter().map(|r| vec![empty; r.len()]).collect();
    let get = |table: &Vec<Vec<Cell>>, i: usize, j: usize| -> Option<Cell> {
        let r = &corridor[i];
        r.contains(&j).then(|| table[i][j - r.start])
    };
    table[0][0] = Cell { score: 0.0, beads: 0, step: (0, 0) };

    for i in 0..=n {
        for j in corridor[i].clone() {
            if i == 0 && j == 0 {
                continue;
            }
            let mut best = empty;
            for a in 0..=max_align.min(i) {
                for b in 0..=max_align.min(j) {
                    if a + b == 0 {
                        continue;
                    }
                    let Some(prev) = get(&table, i - a, j - b) else { continue };
                    if prev.score == f64::NEG_INFINITY {
                        continue;
                    }
                    let score = prev.score + scorer.score(i - a..i, j - b..j);
                    let beads = prev.beads + 1;
                    if score > best.score || (score == best.score && beads > best.beads) {
                        best = Cell { score, beads, step: (a, b) };
                    }
                }
            }
            table[i][j - corridor[i].start] = best;
        }
    }

    let last = get(&table, n, m)
        .filter(|c| c.score > f64::NEG_INFINITY)
        .ok_or_else(|| AlignError::Internal("bead lattice end unreachable inside the corridor".into()))?;
    let mut beads = Vec::with_capacity(last.beads);
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let (a, b) = table[i][j - corridor[i].start].step;
        beads.push(Bead { src_lines: i - a..i, tgt_lines: j - b..j, score: scorer.score(i - a..i, j - b..j) });
        i -= a;
        j -= b;
    }
    beads.reverse();
    Ok((beads, last.score))
}

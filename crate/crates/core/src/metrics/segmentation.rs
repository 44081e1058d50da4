//! Span boundary metrics: boundary accuracy/P/R/F1, Pk and WindowDiff.

use serde::Serialize;

use super::{f1_score, ratio_or_vacuous, MetricsError};
use crate::model::{AlignmentDocument, Role, Span};

/// `bits[g]` is true iff a span boundary follows token `g`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BoundaryString {
    tokens: usize,
    bits: Vec<bool>,
}

impl BoundaryString {
    /// Boundaries implied by a set of non-overlapping spans over `tokens`
    /// tokens. Gaps between spans count as their own segments.
    pub fn from_spans(tokens: usize, spans: &[Span]) -> Self {
        let mut bits = vec![false; tokens.saturating_sub(1)];
        for s in spans {
            if s.start > 0 && s.start < tokens {
                bits[s.start - 1] = true;
            }
            if s.end > 0 && s.end < tokens {
                bits[s.end - 1] = true;
            }
        }
        BoundaryString { tokens, bits }
    }

    pub fn from_document(doc: &AlignmentDocument, role: Role) -> Self {
        Self::from_spans(doc.side(role).len(), &doc.spans(role))
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        BoundaryString { tokens: bits.len() + 1, bits }
    }

    pub fn token_count(&self) -> usize {
        self.tokens
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn boundary_count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn segment_count(&self) -> usize {
        if self.tokens == 0 {
            0
        } else {
            self.boundary_count() + 1
        }
    }

    /// Half the mean reference segment length, at least 2.
    pub fn default_window(&self) -> usize {
        let mean_half = self.tokens as f64 / (2.0 * self.segment_count().max(1) as f64);
        (mean_half.round() as usize).max(2)
    }

    fn prefix_counts(&self) -> Vec<usize> {
        let mut prefix = Vec::with_capacity(self.bits.len() + 1);
        prefix.push(0);
        let mut acc = 0;
        for &b in &self.bits {
            acc += usize::from(b);
            prefix.push(acc);
        }
        prefix
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentationScore {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub pk: f64,
    pub window_diff: f64,
    pub k: usize,
}

fn check(reference: &BoundaryString, hypothesis: &BoundaryString, k: usize) -> Result<usize, MetricsError> {
    let n = reference.tokens;
    if n != hypothesis.tokens {
        return Err(MetricsError::LengthMismatch { left: n, right: hypothesis.tokens });
    }
    if n < 2 {
        return Err(MetricsError::TooFewTokens(n));
    }
    if k == 0 || k >= n {
        return Err(MetricsError::InvalidWindow { k, tokens: n });
    }
    Ok(n)
}

/// Windowed error rates `(pk, window_diff)` using boundary counts over the
/// gap ranges `[i, i + k)` for `i in 0..n - k`.
pub fn windowed_errors(
    reference: &BoundaryString,
    hypothesis: &BoundaryString,
    k: usize,
) -> Result<(f64, f64), MetricsError> {
    let n = check(reference, hypothesis, k)?;
    let (pr, ph) = (reference.prefix_counts(), hypothesis.prefix_counts());
    let mut pk_err = 0usize;
    let mut wd_err = 0usize;
    for i in 0..n - k {
        let r = pr[i + k] - pr[i];
        let h = ph[i + k] - ph[i];
        pk_err += usize::from((r == 0) != (h == 0));
        wd_err += usize::from(r != h);
    }
    let positions = (n - k) as f64;
    Ok((pk_err as f64 / positions, wd_err as f64 / positions))
}

pub fn evaluate_segmentation(
    reference: &BoundaryString,
    hypothesis: &BoundaryString,
    k: Option<usize>,
) -> Result<SegmentationScore, MetricsError> {
    let k = k.unwrap_or_else(|| reference.default_window());
    let (pk, window_diff) = windowed_errors(reference, hypothesis, k)?;
    let (mut tp, mut fp, mut fn_, mut agree) = (0usize, 0usize, 0usize, 0usize);
    for (&r, &h) in reference.bits.iter().zip(&hypothesis.bits) {
        match (r, h) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => {}
        }
        agree += usize::from(r == h);
    }
    let precision = ratio_or_vacuous(tp, tp + fp, tp + fn_ == 0);
    let recall = ratio_or_vacuous(tp, tp + fn_, tp + fp == 0);
    Ok(SegmentationScore {
        accuracy: agree as f64 / reference.bits.len() as f64,
        precision,
        recall,
        f1: f1_score(precision, recall),
        pk,
        window_diff,
        k,
    })
}

//! Exact and relaxed span-alignment match.

use std::collections::HashSet;

use serde::Serialize;

use super::{f1_score, MetricsError};
use crate::model::SpanLink;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpanAlignScore {
    /// Percentage of reference links matched on both spans and label.
    pub exact_with_labels: f64,
    /// Percentage of reference links matched on both spans.
    pub exact_without_labels: f64,
    pub relaxed_precision: f64,
    pub relaxed_recall: f64,
    pub relaxed_f1: f64,
}

/// All `(src_token, tgt_token)` pairs inside two-sided links.
pub fn relaxed_pairs(links: &[SpanLink]) -> HashSet<(usize, usize)> {
    let mut pairs = HashSet::new();
    for link in links {
        if let (Some(s), Some(t)) = (link.src, link.tgt) {
            for u in s.range() {
                for v in t.range() {
                    pairs.insert((u, v));
                }
            }
        }
    }
    pairs
}

/// Exact-match percentages use the reference link count as denominator,
/// one-sided links included.
pub fn evaluate_span_alignment(
    reference: &[SpanLink],
    hypothesis: &[SpanLink],
) -> Result<SpanAlignScore, MetricsError> {
    if reference.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    let spans: HashSet<_> = hypothesis.iter().map(|h| (h.src, h.tgt)).collect();
    let labeled: HashSet<_> = hypothesis.iter().map(|h| (h.src, h.tgt, h.label)).collect();
    let with = reference.iter().filter(|r| labeled.contains(&(r.src, r.tgt, r.label))).count();
    let without = reference.iter().filter(|r| spans.contains(&(r.src, r.tgt))).count();

    let ref_pairs = relaxed_pairs(reference);
    let hyp_pairs = relaxed_pairs(hypothesis);
    let common = hyp_pairs.intersection(&ref_pairs).count();
    let precision = if hyp_pairs.is_empty() { 0.0 } else { common as f64 / hyp_pairs.len() as f64 };
    let recall = if ref_pairs.is_empty() { 0.0 } else { common as f64 / ref_pairs.len() as f64 };

    let total = reference.len() as f64;
    Ok(SpanAlignScore {
        exact_with_labels: 100.0 * with as f64 / total,
        exact_without_labels: 100.0 * without as f64 / total,
        relaxed_precision: precision,
        relaxed_recall: recall,
        relaxed_f1: f1_score(precision, recall),
    })
}

//! Token-level label agreement: each token carries the label of its span link.

use std::collections::BTreeMap;

use serde::Serialize;

use super::MetricsError;
use crate::model::{AlignmentDocument, Role, SpanLabel};
use crate::validate::validate_document;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelScore {
    pub accuracy: f64,
    /// Unweighted mean of per-label F1 over the labels present in the reference.
    pub macro_f1: f64,
    pub per_label_f1: BTreeMap<SpanLabel, f64>,
}

/// Source then target token labels of a complete document.
pub fn token_label_sequence(doc: &AlignmentDocument) -> Result<Vec<SpanLabel>, MetricsError> {
    let report = validate_document(doc);
    if !report.is_complete {
        return Err(MetricsError::IncompleteAnnotation(format!(
            "{}: {} source and {} target tokens uncovered",
            doc.pair_id, report.uncovered_source, report.uncovered_target
        )));
    }
    Ok([Role::Source, Role::Target]
        .into_iter()
        .flat_map(|r| doc.token_labels(r))
        .map(|l| l.expect("complete document covers every token"))
        .collect())
}

pub fn evaluate_labels(
    reference: &AlignmentDocument,
    hypothesis: &AlignmentDocument,
) -> Result<LabelScore, MetricsError> {
    for role in [Role::Source, Role::Target] {
        let (r, h) = (reference.side(role).len(), hypothesis.side(role).len());
        if r != h {
            return Err(MetricsError::LengthMismatch { left: r, right: h });
        }
    }
    let gold = token_label_sequence(reference)?;
    let pred = token_label_sequence(hypothesis)?;
    if gold.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(score_sequences(&gold, &pred))
}

pub(crate) fn score_sequences(gold: &[SpanLabel], pred: &[SpanLabel]) -> LabelScore {
    let correct = gold.iter().zip(pred).filter(|(g, p)| g == p).count();
    let mut per_label_f1 = BTreeMap::new();
    for label in SpanLabel::ALL {
        let in_gold = gold.iter().filter(|g| **g == label).count();
        if in_gold == 0 {
            continue;
        }
        let in_pred = pred.iter().filter(|p| **p == label).count();
        let tp = gold.iter().zip(pred).filter(|(g, p)| **g == label && **p == label).count();
        // 2tp / (|gold| + |pred|) is the harmonic mean of precision and recall
        let f1 = 2.0 * tp as f64 / (in_gold + in_pred) as f64;
        per_label_f1.insert(label, f1);
    }
    let macro_f1 = per_label_f1.values().sum::<f64>() / per_label_f1.len() as f64;
    LabelScore { accuracy: correct as f64 / gold.len() as f64, macro_f1, per_label_f1 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LinkId, Span, SpanLink, TranscriptSide};
    use SpanLabel::*;

    #[test]
    fn token_by_token_accuracy() {
        let s = score_sequences(
            &[Translation, Translation, Summarization, Summarization],
            &[Translation, Summarization, Summarization, Summarization],
        );
        assert_eq!(s.accuracy, 0.75);
        // TRAN: tp 1, |g| 2, |p| 1 -> 2/3; SUM: tp 2, |g| 2, |p| 3 -> 4/5
        assert!((s.per_label_f1[&Translation] - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.per_label_f1[&Summarization] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn all_wrong() {
        let s = score_sequences(&[Translation; 3], &[Paraphrase; 3]);
        assert_eq!(s.accuracy, 0.0);
        assert_eq!(s.macro_f1, 0.0);
    }

    fn doc(label: SpanLabel, cover: usize) -> AlignmentDocument {
        let side = |r| TranscriptSide::from_lines("d", "en", r, &[vec!["a", "b", "c"]]);
        let mut d = AlignmentDocument::new("p", side(Role::Source), side(Role::Target));
        d.span_links.push(SpanLink {
            id: LinkId(0),
            src: Some(Span::new(0, cover)),
            tgt: Some(Span::new(0, cover)),
            label,
        });
        d
    }

    #[test]
    fn documents() {
        let r = doc(Translation, 3);
        let s = evaluate_labels(&r, &r).unwrap();
        assert_eq!((s.accuracy, s.macro_f1), (1.0, 1.0));
        assert!(matches!(evaluate_labels(&r, &doc(Translation, 2)), Err(MetricsError::IncompleteAnnotation(_))));
    }
}

//! Corpus-level evaluation with a Table-like text layout and key=value output.

use std::fmt::Write as _;

use serde::Serialize;

use super::labels::{evaluate_labels, LabelScore};
use super::segmentation::{evaluate_segmentation, BoundaryString, SegmentationScore};
use super::span::{evaluate_span_alignment, SpanAlignScore};
use super::word::{evaluate_word_alignment, macro_average, reference_sets, WordAlignScore};
use super::MetricsError;
use crate::model::{AlignmentDocument, Role};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SideSegmentation {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub pk: f64,
    pub window_diff: f64,
    /// Window size used per recording.
    pub k: Vec<usize>,
}

impl SideSegmentation {
    fn mean(scores: &[SegmentationScore]) -> Self {
        let n = scores.len() as f64;
        let avg = |f: fn(&SegmentationScore) -> f64| scores.iter().map(f).sum::<f64>() / n;
        SideSegmentation {
            accuracy: avg(|s| s.accuracy),
            precision: avg(|s| s.precision),
            recall: avg(|s| s.recall),
            f1: avg(|s| s.f1),
            pk: avg(|s| s.pk),
            window_diff: avg(|s| s.window_diff),
            k: scores.iter().map(|s| s.k).collect(),
        }
    }
}

/// All scores are unweighted means over recordings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub recordings: usize,
    pub segmentation_source: SideSegmentation,
    pub segmentation_target: SideSegmentation,
    pub span: SpanAlignScore,
    pub word: WordAlignScore,
    /// `None` when some document is incomplete.
    pub labels: Option<LabelScore>,
    pub hyp_spans_source: f64,
    pub hyp_spans_target: f64,
    pub ref_spans_source: f64,
    pub ref_spans_target: f64,
}

pub fn evaluate_documents(
    pairs: &[(&AlignmentDocument, &AlignmentDocument)],
    k: Option<usize>,
) -> Result<EvaluationReport, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = pairs.len() as f64;
    let mut seg_src = Vec::new();
    let mut seg_tgt = Vec::new();
    let mut spans = Vec::new();
    let mut words = Vec::new();
    let mut labels = Some(Vec::new());
    for (reference, hypothesis) in pairs {
        for (role, out) in [(Role::Source, &mut seg_src), (Role::Target, &mut seg_tgt)] {
            out.push(evaluate_segmentation(
                &BoundaryString::from_document(reference, role),
                &BoundaryString::from_document(hypothesis, role),
                k,
            )?);
        }
        spans.push(evaluate_span_alignment(&reference.span_links, &hypothesis.span_links)?);
        let (sure, possible) = reference_sets(reference);
        let predicted = hypothesis.word_links.iter().map(|w| (w.src_token, w.tgt_token)).collect();
        words.push(evaluate_word_alignment(&predicted, &sure, &possible));
        labels = match (labels, evaluate_labels(reference, hypothesis)) {
            (Some(mut acc), Ok(score)) => {
                acc.push(score);
                Some(acc)
            }
            (_, Err(MetricsError::IncompleteAnnotation(msg))) => {
                log::warn!("label match skipped: {msg}");
                None
            }
            (_, Err(e)) => return Err(e),
            (None, Ok(_)) => None,
        };
    }
    let mean_span = |f: fn(&SpanAlignScore) -> f64| spans.iter().map(f).sum::<f64>() / n;
    let count = |docs: &mut dyn Iterator<Item = &AlignmentDocument>, role| {
        docs.map(|d| d.spans(role).len() as f64).sum::<f64>() / n
    };
    let labels = labels.map(|scores| {
        let mut per_label = std::collections::BTreeMap::new();
        for s in &scores {
            for (label, f1) in &s.per_label_f1 {
                per_label.entry(*label).or_insert_with(Vec::new).push(*f1);
            }
        }
        LabelScore {
            accuracy: scores.iter().map(|s| s.accuracy).sum::<f64>() / n,
            macro_f1: scores.iter().map(|s| s.macro_f1).sum::<f64>() / n,
            per_label_f1: per_label.into_iter().map(|(l, v)| (l, v.iter().sum::<f64>() / v.len() as f64)).collect(),
        }
    });
    Ok(EvaluationReport {
        recordings: pairs.len(),
        segmentation_source: SideSegmentation::mean(&seg_src),
        segmentation_target: SideSegmentation::mean(&seg_tgt),
        span: SpanAlignScore {
            exact_with_labels: mean_span(|s| s.exact_with_labels),
            exact_without_labels: mean_span(|s| s.exact_without_labels),
            relaxed_precision: mean_span(|s| s.relaxed_precision),
            relaxed_recall: mean_span(|s| s.relaxed_recall),
            relaxed_f1: mean_span(|s| s.relaxed_f1),
        },
        word: macro_average(&words).expect("non-empty"),
        labels,
        hyp_spans_source: count(&mut pairs.iter().map(|p| p.1), Role::Source),
        hyp_spans_target: count(&mut pairs.iter().map(|p| p.1), Role::Target),
        ref_spans_source: count(&mut pairs.iter().map(|p| p.0), Role::Source),
        ref_spans_target: count(&mut pairs.iter().map(|p| p.0), Role::Target),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"))
}

impl EvaluationReport {
    /// Column groups: Segmentation | Relaxed match | Exact match | Word align. | Label match | #span.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<4} | {:>6} {:>6} {:>6} {:>6} {:>6} | {:>6} {:>6} {:>6} | {:>6} {:>6} | {:>6} {:>6} | {:>6} {:>6} | {:>6} {:>6}",
            "", "P", "R", "F1", "WD", "Pk", "P", "R", "F1", "w/", "w/o", "AER", "F1", "acc", "F1", "src", "tgt"
        );
        let label_acc = opt(self.labels.as_ref().map(|l| l.accuracy));
        let label_f1 = opt(self.labels.as_ref().map(|l| l.macro_f1));
        for (name, seg) in [("src", &self.segmentation_source), ("tgt", &self.segmentation_target)] {
            let _ = writeln!(
                out,
                "{:<4} | {:>6.3} {:>6.3} {:>6.3} {:>6.3} {:>6.3} | {:>6.3} {:>6.3} {:>6.3} | {:>6.2} {:>6.2} | {:>6.3} {:>6} | {:>6} {:>6} | {:>6.1} {:>6.1}",
                name,
                seg.precision,
                seg.recall,
                seg.f1,
                seg.window_diff,
                seg.pk,
                self.span.relaxed_precision,
                self.span.relaxed_recall,
                self.span.relaxed_f1,
                self.span.exact_with_labels,
                self.span.exact_without_labels,
                self.word.aer,
                opt(self.word.f1),
                label_acc,
                label_f1,
                self.hyp_spans_source,
                self.hyp_spans_target,
            );
        }
        let _ = writeln!(
            out,
            "recordings={} label_f1=macro reference_spans={:.1}/{:.1}",
            self.recordings, self.ref_spans_source, self.ref_spans_target
        );
        out
    }

    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        kv("recordings", self.recordings.to_string());
        for (side, seg) in [("src", &self.segmentation_source), ("tgt", &self.segmentation_target)] {
            kv(&format!("segmentation.{side}.accuracy"), format!("{:.6}", seg.accuracy));
            kv(&format!("segmentation.{side}.precision"), format!("{:.6}", seg.precision));
            kv(&format!("segmentation.{side}.recall"), format!("{:.6}", seg.recall));
            kv(&format!("segmentation.{side}.f1"), format!("{:.6}", seg.f1));
            kv(&format!("segmentation.{side}.window_diff"), format!("{:.6}", seg.window_diff));
            kv(&format!("segmentation.{side}.pk"), format!("{:.6}", seg.pk));
            let ks: Vec<String> = seg.k.iter().map(usize::to_string).collect();
            kv(&format!("segmentation.{side}.k"), ks.join(","));
        }
        kv("relaxed.precision", format!("{:.6}", self.span.relaxed_precision));
        kv("relaxed.recall", format!("{:.6}", self.span.relaxed_recall));
        kv("relaxed.f1", format!("{:.6}", self.span.relaxed_f1));
        kv("exact.with_labels", format!("{:.4}", self.span.exact_with_labels));
        kv("exact.without_labels", format!("{:.4}", self.span.exact_without_labels));
        kv("word.aer", format!("{:.6}", self.word.aer));
        kv("word.precision", format!("{:.6}", self.word.precision));
        kv("word.recall", opt(self.word.recall));
        kv("word.f1", opt(self.word.f1));
        match &self.labels {
            Some(l) => {
                kv("label.accuracy", format!("{:.6}", l.accuracy));
                kv("label.macro_f1", format!("{:.6}", l.macro_f1));
                for (label, f1) in &l.per_label_f1 {
                    kv(&format!("label.f1.{label}"), format!("{f1:.6}"));
                }
            }
            None => kv("label.accuracy", "-".into()),
        }
        kv("label.f1_averaging", "macro".into());
        kv("spans.hyp.src", format!("{:.2}", self.hyp_spans_source));
        kv("spans.hyp.tgt", format!("{:.2}", self.hyp_spans_target));
        kv("spans.ref.src", format!("{:.2}", self.ref_spans_source));
        kv("spans.ref.tgt", format!("{:.2}", self.ref_spans_target));
        out
    }
}

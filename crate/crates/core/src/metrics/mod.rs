//! Evaluation metrics for segmentation, span alignment, word alignment and
//! labeling, plus Cohen's kappa for annotator agreement.

mod kappa;
mod labels;
mod report;
mod segmentation;
mod span;
mod word;

pub use kappa::{cohen_kappa, KappaScore};
pub use labels::{evaluate_labels, LabelScore};
pub use report::{evaluate_documents, EvaluationReport, SideSegmentation};
pub use segmentation::{evaluate_segmentation, windowed_errors, BoundaryString, SegmentationScore};
pub use span::{evaluate_span_alignment, relaxed_pairs, SpanAlignScore};
pub use word::{evaluate_word_alignment, macro_average, reference_sets, WordAlignScore, WordPair};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("sequence lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least 2 tokens, got {0}")]
    TooFewTokens(usize),
    #[error("window size {k} must be in 1..{tokens}")]
    InvalidWindow { k: usize, tokens: usize },
    #[error("reference has no span links")]
    EmptyReference,
    #[error("INCOMPLETE_ANNOTATION: {0}")]
    IncompleteAnnotation(String),
    #[error("empty input")]
    Empty,
}

/// `num / den`, or for an empty denominator 1 when the opposite set is
/// empty too (nothing to find, nothing found) and 0 otherwise.
pub(crate) fn ratio_or_vacuous(num: usize, den: usize, other_empty: bool) -> f64 {
    if den == 0 {
        if other_empty {
            1.0
        } else {
            0.0
        }
    } else {
        num as f64 / den as f64
    }
}

pub(crate) fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

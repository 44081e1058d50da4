//! Label assignment for aligned span pairs.
//!
//! One-sided links are always `ADDU`. Two-sided links get `TRAN` in default
//! mode, or the argmax of a small feed-forward classifier over
//! `[similarity, ln(1 + src_len), ln(1 + tgt_len)]`.

mod mlp;
mod model_file;
mod train;

pub use mlp::MlpParams;
pub use model_file::{load_model, read_model, save_model, write_model, ModelHeader};
pub use train::{train, TrainConfig, TrainReport};

use crate::aligner::embedding::{dot, fallback_embed, EmbeddingMatrix, EmbeddingUnit};
use crate::aligner::DraftAlignment;
use crate::model::{AlignmentDocument, Span, SpanLabel, SpanLink, TranscriptSide};

pub const FEATURES: usize = 3;
pub const HIDDEN: usize = 100;
pub const CLASSES: usize = 5;

/// Output order of the classifier; also the tie-break order for argmax.
pub const CLASS_ORDER: [SpanLabel; CLASSES] = [
    SpanLabel::Translation,
    SpanLabel::Paraphrase,
    SpanLabel::Summarization,
    SpanLabel::Generalization,
    SpanLabel::Replacement,
];

pub fn class_index(label: SpanLabel) -> Option<usize> {
    CLASS_ORDER.iter().position(|l| *l == label)
}

#[derive(Debug, thiserror::Error)]
pub enum LabelerError {
    #[error("ONE_SIDED: link has a span on one side only")]
    OneSided,
    #[error("similarity {0} outside [-1, 1]")]
    SimilarityRange(f64),
    #[error("non-finite parameter or input")]
    NonFinite,
    #[error("bad parameter shape: {0}")]
    Shape(String),
    #[error("training data: {0}")]
    Data(String),
    #[error("training diverged (loss is NaN) at epoch {0}")]
    Diverged(usize),
    #[error("missing similarity for link {0}")]
    MissingSimilarity(usize),
    #[error("model file: {0}")]
    ModelFile(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector([f64; FEATURES]);

/// Length scaling applied to span token counts.
pub fn scale_length(len: usize) -> f64 {
    (len as f64).ln_1p()
}

impl FeatureVector {
    pub fn new(similarity: f64, src_len: usize, tgt_len: usize) -> Self {
        FeatureVector([similarity, scale_length(src_len), scale_length(tgt_len)])
    }

    pub fn from_raw(values: [f64; FEATURES]) -> Self {
        FeatureVector(values)
    }

    pub fn as_array(&self) -> [f64; FEATURES] {
        self.0
    }

    pub fn similarity(&self) -> f64 {
        self.0[0]
    }
}

pub fn extract_features(link: &SpanLink, similarity: f64) -> Result<FeatureVector, LabelerError> {
    let (Some(src), Some(tgt)) = (link.src, link.tgt) else {
        return Err(LabelerError::OneSided);
    };
    features_for(src, tgt, similarity)
}

pub(crate) fn features_for(src: Span, tgt: Span, similarity: f64) -> Result<FeatureVector, LabelerError> {
    if !(-1.0..=1.0).contains(&similarity) {
        return Err(LabelerError::SimilarityRange(similarity));
    }
    Ok(FeatureVector::new(similarity, src.len(), tgt.len()))
}

/// Similarity between a source and a target span.
pub trait SpanSimilarity {
    fn similarity(&self, src: Span, tgt: Span) -> f64;
}

fn pooled_cosine(a: &EmbeddingMatrix, ra: Span, b: &EmbeddingMatrix, rb: Span) -> f64 {
    let sum = |m: &EmbeddingMatrix, r: Span| {
        let mut v = vec![0.0; m.dim()];
        for i in r.range() {
            v.iter_mut().zip(m.row(i)).for_each(|(acc, x)| *acc += x);
        }
        v
    };
    let (va, vb) = (sum(a, ra), sum(b, rb));
    let norm = dot(&va, &va).sqrt() * dot(&vb, &vb).sqrt();
    if norm == 0.0 {
        0.0
    } else {
        (dot(&va, &vb) / norm).clamp(-1.0, 1.0)
    }
}

/// Cosine of the summed token vectors of each span.
pub struct PooledTokenSimilarity<'a> {
    pub source: &'a EmbeddingMatrix,
    pub target: &'a EmbeddingMatrix,
}

impl SpanSimilarity for PooledTokenSimilarity<'_> {
    fn similarity(&self, src: Span, tgt: Span) -> f64 {
        pooled_cosine(self.source, src, self.target, tgt)
    }
}

/// Embeds the span texts with the trigram fallback embedder.
pub struct FallbackTextSimilarity<'a> {
    pub source: &'a TranscriptSide,
    pub target: &'a TranscriptSide,
    pub dim: usize,
}

impl SpanSimilarity for FallbackTextSimilarity<'_> {
    fn similarity(&self, src: Span, tgt: Span) -> f64 {
        let texts = [self.source.text_of(src.range()), self.target.text_of(tgt.range())];
        let m = fallback_embed(&texts, self.dim.max(8), EmbeddingUnit::Line).expect("dimension clamped to at least 8");
        dot(m.row(0), m.row(1)).clamp(-1.0, 1.0)
    }
}

/// How two-sided links are labeled.
#[derive(Debug, Clone)]
pub enum Labeler {
    /// Every two-sided link is a translation.
    Default,
    Classifier(MlpParams),
}

impl Labeler {
    pub fn needs_similarities(&self) -> bool {
        matches!(self, Labeler::Classifier(_))
    }
}

/// Labels for the links of a draft alignment, in link order.
pub fn predict_labels(
    draft: &DraftAlignment,
    labeler: &Labeler,
    similarities: &[Option<f64>],
) -> Result<Vec<SpanLabel>, LabelerError> {
    draft
        .links
        .iter()
        .enumerate()
        .map(|(i, link)| {
            let (Some(src), Some(tgt)) = (link.src, link.tgt) else {
                return Ok(SpanLabel::UninformativeAddition);
            };
            match labeler {
                Labeler::Default => Ok(SpanLabel::Translation),
                Labeler::Classifier(params) => {
                    let sim = similarities.get(i).copied().flatten().ok_or(LabelerError::MissingSimilarity(i))?;
                    let probs = params.forward(&features_for(src, tgt, sim)?)?;
                    Ok(CLASS_ORDER[argmax_first(&probs)])
                }
            }
        })
        .collect()
}

/// Index of the maximum; the earliest index wins ties.
pub fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Relabels an existing document's two-sided links.
pub fn relabel_document(
    doc: &AlignmentDocument,
    labeler: &Labeler,
    sim: &dyn SpanSimilarity,
) -> Result<AlignmentDocument, LabelerError> {
    let draft = DraftAlignment::from_document(doc);
    let sims: Vec<Option<f64>> = draft
        .links
        .iter()
        .map(|l| match (l.src, l.tgt) {
            (Some(s), Some(t)) => Some(sim.similarity(s, t)),
            _ => None,
        })
        .collect();
    let labels = predict_labels(&draft, labeler, &sims)?;
    let mut out = doc.clone();
    for (link, label) in out.span_links.iter_mut().zip(labels) {
        link.label = label;
    }
    Ok(out)
}

/// Training pairs from the two-sided links of an annotated document.
/// Links labeled outside the classifier's classes are skipped.
pub fn training_examples(doc: &AlignmentDocument, sim: &dyn SpanSimilarity) -> Vec<(FeatureVector, SpanLabel)> {
    doc.span_links
        .iter()
        .filter(|l| class_index(l.label).is_some())
        .filter_map(|l| {
            let (s, t) = (l.src?, l.tgt?);
            features_for(s, t, sim.similarity(s, t)).ok().map(|f| (f, l.label))
        })
        .collect()
}

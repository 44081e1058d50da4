//! Automatic alignment: coarse n-m line beads, word links by iterative
//! mutual argmax, sub-segmentation at aligned punctuation, and the two
//! baselines used for comparison.

pub mod baseline;
pub mod coarse;
pub mod embedding;
pub mod itermax;
pub mod pipeline;
pub mod subsegment;

pub use baseline::{baseline_word_align, random_baseline};
pub use coarse::{coarse_align, Bead, BeadScorer, CoarseAlignment};
pub use embedding::{
    fallback_embed, fallback_line_embeddings, fallback_token_embeddings, sliding_windows, EmbeddingFile,
    EmbeddingMatrix, EmbeddingUnit, SimilarityMatrix, FALLBACK_MODEL_TAG,
};
pub use itermax::{itermax_word_align, mutual_argmax};
pub use pipeline::{run_pipeline, PipelineInput, PipelineOutput};
pub use subsegment::{sub_segment, CutRule, PunctuationCut};

use serde::{Deserialize, Serialize};

use crate::labeler::LabelerError;
use crate::model::{AlignmentDocument, LinkId, Span, SpanLabel, SpanLink, Strength, TranscriptSide, WordLink};

#[derive(Debug, thiserror::Error)]
pub enum AlignError {
    #[error("embedding: {0}")]
    Embedding(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("internal: {0}")]
    Internal(String),
    #[error(transparent)]
    Labeler(#[from] LabelerError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlignerParams {
    pub max_align: usize,
    pub top_k: usize,
    pub window: usize,
    pub skip: f64,
    pub len_penalty: bool,
    pub itermax_iters: usize,
    pub itermax_decay: f64,
    pub baseline_window: usize,
    pub baseline_stride: usize,
    /// `None` keeps every pair regardless of position distance.
    pub baseline_max_distance: Option<usize>,
    pub seed: u64,
}

impl Default for AlignerParams {
    fn default() -> Self {
        AlignerParams {
            max_align: 10,
            top_k: 10,
            window: 10,
            skip: 0.0,
            len_penalty: true,
            itermax_iters: 2,
            itermax_decay: 0.9,
            baseline_window: 128,
            baseline_stride: 64,
            baseline_max_distance: Some(50),
            seed: 0,
        }
    }
}

impl AlignerParams {
    pub fn check(&self) -> Result<(), AlignError> {
        let bad = |msg: String| Err(AlignError::InvalidParams(msg));
        if self.max_align < 1 || self.top_k < 1 || self.window < 1 {
            return bad(format!(
                "max_align, top_k and window must be >= 1 (got {}, {}, {})",
                self.max_align, self.top_k, self.window
            ));
        }
        if !self.skip.is_finite() {
            return bad(format!("skip must be finite, got {}", self.skip));
        }
        if self.itermax_iters < 1 {
            return bad("itermax_iters must be >= 1".into());
        }
        if !(self.itermax_decay > 0.0 && self.itermax_decay <= 1.0) {
            return bad(format!("itermax_decay {} not in (0, 1]", self.itermax_decay));
        }
        if self.baseline_window < 1 || self.baseline_stride < 1 || self.baseline_stride > self.baseline_window {
            return bad(format!("baseline stride {} must lie in 1..={}", self.baseline_stride, self.baseline_window));
        }
        Ok(())
    }
}

/// A label-free span link under construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DraftLink {
    pub src: Option<Span>,
    pub tgt: Option<Span>,
}

/// Span links plus word links `(src_token, tgt_token, link_index)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DraftAlignment {
    pub links: Vec<DraftLink>,
    pub word_links: Vec<(usize, usize, usize)>,
}

impl DraftAlignment {
    /// Strips labels, ids and strengths from a document.
    pub fn from_document(doc: &AlignmentDocument) -> Self {
        let links = doc.span_links.iter().map(|l| DraftLink { src: l.src, tgt: l.tgt }).collect();
        let word_links = doc
            .word_links
            .iter()
            .filter_map(|w| {
                let idx = doc.span_links.iter().position(|l| l.id == w.parent)?;
                Some((w.src_token, w.tgt_token, idx))
            })
            .collect();
        DraftAlignment { links, word_links }
    }

    /// Link `i` gets id `i` and `labels[i]`; word links become sure links.
    pub fn into_document(
        &self,
        pair_id: impl Into<String>,
        source: TranscriptSide,
        target: TranscriptSide,
        labels: &[SpanLabel],
    ) -> AlignmentDocument {
        assert_eq!(labels.len(), self.links.len(), "one label per link");
        let mut doc = AlignmentDocument::new(pair_id, source, target);
        doc.span_links = self
            .links
            .iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (l, &label))| SpanLink { id: LinkId(i as u32), src: l.src, tgt: l.tgt, label })
            .collect();
        doc.word_links = self
            .word_links
            .iter()
            .map(|&(s, t, i)| WordLink {
                src_token: s,
                tgt_token: t,
                strength: Strength::Sure,
                parent: LinkId(i as u32),
            })
            .collect();
        doc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_params_are_valid() {
        AlignerParams::default().check().unwrap();
        let bad = AlignerParams { itermax_decay: 0.0, ..Default::default() };
        assert!(bad.check().is_err());
        let bad = AlignerParams { top_k: 0, ..Default::default() };
        assert!(bad.check().is_err());
    }

    #[test]
    fn params_from_partial_toml_like_json() {
        let p: AlignerParams = serde_json::from_str(r#"{"window": 4, "baseline_max_distance": null}"#).unwrap();
        assert_eq!(p.window, 4);
        assert_eq!(p.baseline_max_distance, None);
        assert_eq!(p.max_align, 10);
        assert!(serde_json::from_str::<AlignerParams>(r#"{"windw": 4}"#).is_err());
    }
}

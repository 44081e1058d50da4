//! The full automatic alignment: coarse beads, word links inside each bead,
//! sub-segmentation, labels.

use super::coarse::{coarse_align, CoarseAlignment};
use super::embedding::{EmbeddingMatrix, EmbeddingUnit, SimilarityMatrix};
use super::itermax::itermax_word_align;
use super::subsegment::{sub_segment, CutRule, PunctuationCut};
use super::{AlignError, AlignerParams, DraftAlignment, DraftLink};
use crate::labeler::{predict_labels, Labeler, PooledTokenSimilarity, SpanSimilarity};
use crate::model::{AlignmentDocument, Span, TranscriptSide};
use crate::validate::validate_document;

#[derive(Debug, Clone, Copy)]
pub struct PipelineInput<'a> {
    pub pair_id: &'a str,
    pub source: &'a TranscriptSide,
    pub target: &'a TranscriptSide,
    pub src_lines: &'a EmbeddingMatrix,
    pub tgt_lines: &'a EmbeddingMatrix,
    pub src_tokens: &'a EmbeddingMatrix,
    pub tgt_tokens: &'a EmbeddingMatrix,
}

/// Every intermediate system, so each can be evaluated on its own.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub coarse: CoarseAlignment,
    /// Bead links with word links, default labels.
    pub beads: AlignmentDocument,
    /// After sub-segmentation, default labels.
    pub subsegmented: AlignmentDocument,
    /// After sub-segmentation, labeled by the requested labeler.
    pub document: AlignmentDocument,
}

fn check_unit(m: &EmbeddingMatrix, unit: EmbeddingUnit, side: &TranscriptSide) -> Result<(), AlignError> {
    if m.unit != unit {
        return Err(AlignError::Embedding(format!("expected {unit} embeddings for {}, got {}", side.doc_id, m.unit)));
    }
    m.check_side(side)
}

pub fn run_pipeline(
    input: &PipelineInput,
    labeler: &Labeler,
    params: &AlignerParams,
) -> Result<PipelineOutput, AlignError> {
    run_pipeline_with_rule(input, labeler, params, &PunctuationCut)
}

pub fn run_pipeline_with_rule(
    input: &PipelineInput,
    labeler: &Labeler,
    params: &AlignerParams,
    rule: &dyn CutRule,
) -> Result<PipelineOutput, AlignError> {
    params.check()?;
    let (source, target) = (input.source, input.target);
    check_unit(input.src_lines, EmbeddingUnit::Line, source)?;
    check_unit(input.tgt_lines, EmbeddingUnit::Line, target)?;
    check_unit(input.src_tokens, EmbeddingUnit::Token, source)?;
    check_unit(input.tgt_tokens, EmbeddingUnit::Token, target)?;
    if input.src_tokens.dim() != input.tgt_tokens.dim() {
        return Err(AlignError::ShapeMismatch(format!(
            "token embedding dimensions differ: {} vs {}",
            input.src_tokens.dim(),
            input.tgt_tokens.dim()
        )));
    }

    let src_text: Vec<String> = (0..source.line_count()).map(|l| source.line_text(l)).collect();
    let tgt_text: Vec<String> = (0..target.line_count()).map(|l| target.line_text(l)).collect();
    let coarse = coarse_align(input.src_lines, input.tgt_lines, &src_text, &tgt_text, params)?;

    let mut draft = DraftAlignment::default();
    for bead in &coarse.beads {
        let side_span = |side: &TranscriptSide, lines: &std::ops::Range<usize>| {
            (!lines.is_empty()).then(|| Span::from(side.token_range_of_lines(lines.clone())))
        };
        let link = DraftLink { src: side_span(source, &bead.src_lines), tgt: side_span(target, &bead.tgt_lines) };
        let idx = draft.links.len();
        if let (Some(s), Some(t)) = (link.src, link.tgt) {
            let sim = SimilarityMatrix::between(input.src_tokens, s.range(), input.tgt_tokens, t.range())?;
            for (i, j) in itermax_word_align(&sim, params.itermax_iters, params.itermax_decay) {
                draft.word_links.push((s.start + i, t.start + j, idx));
            }
        }
        draft.links.push(link);
    }
    let subsegmented = sub_segment(&draft, source, target, rule);

    let sim = PooledTokenSimilarity { source: input.src_tokens, target: input.tgt_tokens };
    let sims: Vec<Option<f64>> = if labeler.needs_similarities() {
        subsegmented.links.iter().map(|l| Some(sim.similarity(l.src?, l.tgt?))).collect()
    } else {
        Vec::new()
    };
    let defaults = |d: &DraftAlignment| predict_labels(d, &Labeler::Default, &[]);
    let labels = predict_labels(&subsegmented, labeler, &sims)?;

    let build =
        |d: &DraftAlignment, labels: &[_]| d.into_document(input.pair_id, source.clone(), target.clone(), labels);
    let out = PipelineOutput {
        beads: build(&draft, &defaults(&draft)?),
        subsegmented: build(&subsegmented, &defaults(&subsegmented)?),
        document: build(&subsegmented, &labels),
        coarse,
    };
    let report = validate_document(&out.document);
    if !report.is_valid() || !report.is_complete {
        return Err(AlignError::Internal(format!(
            "pipeline output fails validation: {} errors, {}+{} uncovered tokens",
            report.errors.len(),
            report.uncovered_source,
            report.uncovered_target
        )));
    }
    Ok(out)
}

//! Comparison systems: position-filtered word alignment over whole
//! transcripts, and a random segmentation with shuffled reference labels.

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::embedding::{EmbeddingMatrix, SimilarityMatrix};
use super::itermax::itermax_word_align;
use super::{AlignError, AlignerParams};
use crate::model::{AlignmentDocument, LinkId, Role, Span, SpanLink};
use crate::validate::validate_document;

/// Itermax over the full token similarity matrix, dropping pairs further
/// apart than `params.baseline_max_distance` positions.
pub fn baseline_word_align(
    src_tokens: &EmbeddingMatrix,
    tgt_tokens: &EmbeddingMatrix,
    params: &AlignerParams,
) -> Result<Vec<(usize, usize)>, AlignError> {
    params.check()?;
    let sim = SimilarityMatrix::full(src_tokens, tgt_tokens)?;
    let pairs = itermax_word_align(&sim, params.itermax_iters, params.itermax_decay);
    Ok(filter_distance(pairs, params.baseline_max_distance))
}

pub fn filter_distance(pairs: Vec<(usize, usize)>, max_distance: Option<usize>) -> Vec<(usize, usize)> {
    match max_distance {
        None => pairs,
        Some(d) => pairs.into_iter().filter(|&(i, j)| i.abs_diff(j) <= d).collect(),
    }
}

/// Random contiguous segments: as many boundaries as `boundaries`, drawn
/// uniformly without replacement from the `tokens - 1` gaps.
fn random_segments(tokens: usize, boundaries: usize, rng: &mut ChaCha8Rng) -> Vec<Span> {
    if tokens == 0 {
        return Vec::new();
    }
    let mut cuts = index::sample(rng, tokens - 1, boundaries).into_vec();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(boundaries + 1);
    let mut start = 0;
    for c in cuts {
        out.push(Span::new(start, c + 1));
        start = c + 1;
    }
    out.push(Span::new(start, tokens));
    out
}

/// A random alignment with the reference's boundary count on each side and
/// the reference's label multiset.
///
/// Labels are drawn from the shuffled pool while both sides' segments are
/// walked left to right. A two-sided label takes the next segment of each
/// side. A one-sided label alternates between source and target, starting
/// with source, but goes to the other side when the preferred one has no
/// segment to spare for the two-sided labels still in the pool. With that
/// rule the pool and both segment lists run out together.
pub fn random_baseline(reference: &AlignmentDocument, seed: u64) -> Result<AlignmentDocument, AlignError> {
    let report = validate_document(reference);
    if !report.is_valid() || !report.is_complete {
        return Err(AlignError::InvalidParams(format!("reference {} must be valid and complete", reference.pair_id)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let segments = |role: Role, rng: &mut ChaCha8Rng| {
        let spans = reference.spans(role).len();
        random_segments(reference.side(role).len(), spans.saturating_sub(1), rng)
    };
    let src_segs = segments(Role::Source, &mut rng);
    let tgt_segs = segments(Role::Target, &mut rng);

    let mut pool: Vec<_> = reference.span_links.iter().map(|l| l.label).collect();
    pool.shuffle(&mut rng);
    let mut two_sided_left = pool.iter().filter(|l| !l.is_one_sided()).count();

    let (mut si, mut ti) = (0, 0);
    let mut prefer_source = true;
    let mut out = AlignmentDocument::new(reference.pair_id.clone(), reference.source.clone(), reference.target.clone());
    out.meta = reference.meta.clone();
    for (n, label) in pool.into_iter().enumerate() {
        let (src, tgt) = if label.is_one_sided() {
            let spare_src = src_segs.len() - si > two_sided_left;
            let spare_tgt = tgt_segs.len() - ti > two_sided_left;
            let on_source = if prefer_source { spare_src } else { !spare_tgt };
            prefer_source = !on_source;
            if on_source {
                si += 1;
                (Some(src_segs[si - 1]), None)
            } else {
                ti += 1;
                (None, Some(tgt_segs[ti - 1]))
            }
        } else {
            two_sided_left -= 1;
            si += 1;
            ti += 1;
            (Some(src_segs[si - 1]), Some(tgt_segs[ti - 1]))
        };
        out.span_links.push(SpanLink { id: LinkId(n as u32), src, tgt, label });
    }
    if si != src_segs.len() || ti != tgt_segs.len() {
        return Err(AlignError::Internal(format!(
            "random baseline left {} source and {} target segments unlabeled",
            src_segs.len() - si,
            tgt_segs.len() - ti
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aligner::embedding::{fallback_embed, EmbeddingUnit};
    use crate::metrics::BoundaryString;
    use crate::model::{SpanLabel, TranscriptSide};

    fn reference() -> AlignmentDocument {
        let words: Vec<String> = (0..12).map(|i| format!("w{i}")).collect();
        let src = TranscriptSide::from_lines("s", "en", Role::Source, std::slice::from_ref(&words));
        let tgt = TranscriptSide::from_lines("t", "cs", Role::Target, &[words[..9].to_vec()]);
        let mut doc = AlignmentDocument::new("p", src, tgt);
        let links = [
            (Some((0, 3)), Some((0, 2)), SpanLabel::Translation),
            (Some((3, 4)), None, SpanLabel::UninformativeAddition),
            (Some((4, 8)), Some((2, 4)), SpanLabel::Summarization),
            (None, Some((4, 5)), SpanLabel::FactualAddition),
            (Some((8, 12)), Some((5, 9)), SpanLabel::Paraphrase),
        ];
        for (i, (s, t, label)) in links.into_iter().enumerate() {
            doc.span_links.push(SpanLink {
                id: LinkId(i as u32),
                src: s.map(|(a, b)| Span::new(a, b)),
                tgt: t.map(|(a, b)| Span::new(a, b)),
                label,
            });
        }
        doc
    }

    #[test]
    fn random_baseline_preserves_counts() {
        let r = reference();
        for seed in 0..50 {
            let out = random_baseline(&r, seed).unwrap();
            for role in [Role::Source, Role::Target] {
                assert_eq!(
                    BoundaryString::from_document(&out, role).boundary_count(),
                    BoundaryString::from_document(&r, role).boundary_count()
                );
            }
            assert_eq!(out.label_counts(), r.label_counts());
            let report = validate_document(&out);
            assert!(report.is_valid() && report.is_complete, "seed {seed}: {:?}", report.errors);
        }
        assert_eq!(random_baseline(&r, 7).unwrap(), random_baseline(&r, 7).unwrap());
    }

    #[test]
    fn distance_filter() {
        assert_eq!(filter_distance(vec![(0, 60), (3, 4), (60, 10)], Some(50)), vec![(3, 4), (60, 10)]);
        assert_eq!(filter_distance(vec![(0, 60)], None), vec![(0, 60)]);
    }

    #[test]
    fn identical_tokens_give_diagonal() {
        let toks: Vec<String> = (0..10).map(|i| format!("tok{i}")).collect();
        let m = fallback_embed(&toks, 64, EmbeddingUnit::Token).unwrap();
        let pairs = baseline_word_align(&m, &m, &AlignerParams::default()).unwrap();
        assert_eq!(pairs, (0..10).map(|i| (i, i)).collect::<Vec<_>>());
    }
}

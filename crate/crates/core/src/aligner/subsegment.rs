//! Splitting coarse links where word links join two cut tokens.

use super::{DraftAlignment, DraftLink};
use crate::model::{Span, Token, TranscriptSide};

/// Decides whether an aligned token pair marks a sub-segment boundary.
pub trait CutRule {
    fn is_cut(&self, src: &Token, tgt: &Token) -> bool;
}

/// Cuts where a punctuation token is aligned to a punctuation token.
#[derive(Debug, Clone, Copy, Default)]
pub struct PunctuationCut;

impl CutRule for PunctuationCut {
    fn is_cut(&self, src: &Token, tgt: &Token) -> bool {
        src.is_punctuation() && tgt.is_punctuation()
    }
}

/// Splits every two-sided link after each cut pair's tokens.
///
/// Cut pairs are taken in source order and kept only while they increase on
/// both sides, and a cut at the very end of either span is ignored, so the
/// two sides always get the same number of pieces. Word links are moved to
/// the piece containing both endpoints; links straddling a cut are dropped.
pub fn sub_segment(
    draft: &DraftAlignment,
    source: &TranscriptSide,
    target: &TranscriptSide,
    rule: &dyn CutRule,
) -> DraftAlignment {
    let mut out = DraftAlignment::default();
    for (idx, link) in draft.links.iter().enumerate() {
        let words: Vec<(usize, usize)> = draft.word_links.iter().filter(|w| w.2 == idx).map(|w| (w.0, w.1)).collect();
        let (Some(src), Some(tgt)) = (link.src, link.tgt) else {
            out.links.push(*link);
            continue;
        };
        let mut cuts: Vec<(usize, usize)> = words
            .iter()
            .filter(|&&(u, v)| rule.is_cut(&source.tokens[u], &target.tokens[v]))
            .map(|&(u, v)| (u + 1, v + 1))
            .filter(|&(cu, cv)| cu < src.end && cv < tgt.end)
            .collect();
        cuts.sort_unstable();
        let mut chain: Vec<(usize, usize)> = Vec::new();
        for (cu, cv) in cuts {
            let (lu, lv) = chain.last().copied().unwrap_or((src.start, tgt.start));
            if cu > lu && cv > lv {
                chain.push((cu, cv));
            }
        }
        let mut bounds = vec![(src.start, tgt.start)];
        bounds.extend(chain);
        bounds.push((src.end, tgt.end));
        for pair in bounds.windows(2) {
            let piece =
                DraftLink { src: Some(Span::new(pair[0].0, pair[1].0)), tgt: Some(Span::new(pair[0].1, pair[1].1)) };
            let piece_idx = out.links.len();
            out.links.push(piece);
            for &(u, v) in &words {
                if piece.src.unwrap().contains(u) && piece.tgt.unwrap().contains(v) {
                    out.word_links.push((u, v, piece_idx));
                }
            }
        }
    }
    out
}

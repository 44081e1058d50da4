//! Word alignment error rate against sure/possible reference links.

use std::collections::HashSet;

use serde::Serialize;

use super::f1_score;
use crate::model::{AlignmentDocument, Strength};

pub type WordPair = (usize, usize);

/// `recall` and `f1` are `None` when the reference has no sure links but
/// the prediction is non-empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WordAlignScore {
    pub aer: f64,
    pub precision: f64,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

/// Predicted links count as sure. `possible` is widened to include `sure`.
pub fn evaluate_word_alignment(
    predicted: &HashSet<WordPair>,
    sure: &HashSet<WordPair>,
    possible: &HashSet<WordPair>,
) -> WordAlignScore {
    if predicted.is_empty() && sure.is_empty() {
        return WordAlignScore { aer: 0.0, precision: 1.0, recall: Some(1.0), f1: Some(1.0) };
    }
    let hit_sure = predicted.intersection(sure).count();
    let hit_possible = predicted.iter().filter(|p| possible.contains(p) || sure.contains(p)).count();
    let aer = 1.0 - (hit_sure + hit_possible) as f64 / (predicted.len() + sure.len()) as f64;
    let precision = if predicted.is_empty() { 0.0 } else { hit_possible as f64 / predicted.len() as f64 };
    let recall = (!sure.is_empty()).then(|| hit_sure as f64 / sure.len() as f64);
    WordAlignScore { aer, precision, recall, f1: recall.map(|r| f1_score(precision, r)) }
}

/// Sure and possible reference sets from a document's word links.
pub fn reference_sets(doc: &AlignmentDocument) -> (HashSet<WordPair>, HashSet<WordPair>) {
    let mut sure = HashSet::new();
    let mut possible = HashSet::new();
    for w in &doc.word_links {
        let pair = (w.src_token, w.tgt_token);
        if w.strength == Strength::Sure {
            sure.insert(pair);
        }
        possible.insert(pair);
    }
    (sure, possible)
}

/// Unweighted mean over recordings. Recordings without sure links are left
/// out of the recall and F1 means.
pub fn macro_average(scores: &[WordAlignScore]) -> Option<WordAlignScore> {
    if scores.is_empty() {
        return None;
    }
    let n = scores.len() as f64;
    let with_recall: Vec<_> = scores.iter().filter(|s| s.recall.is_some()).collect();
    if with_recall.len() < scores.len() {
        log::warn!(
            "{} of {} recordings have no sure links; excluded from recall/F1 averages",
            scores.len() - with_recall.len(),
            scores.len()
        );
    }
    let mean_opt = |f: fn(&WordAlignScore) -> Option<f64>| {
        (!with_recall.is_empty())
            .then(|| with_recall.iter().filter_map(|s| f(s)).sum::<f64>() / with_recall.len() as f64)
    };
    Some(WordAlignScore {
        aer: scores.iter().map(|s| s.aer).sum::<f64>() / n,
        precision: scores.iter().map(|s| s.precision).sum::<f64>() / n,
        recall: mean_opt(|s| s.recall),
        f1: mean_opt(|s| s.f1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(pairs: &[(usize, usize)]) -> HashSet<WordPair> {
        pairs.iter().copied().collect()
    }

    #[test]
    fn identity() {
        let s = set(&[(0, 0), (1, 2)]);
        let r = evaluate_word_alignment(&s, &s, &s);
        assert_eq!(r.aer, 0.0);
        assert_eq!(r.f1, Some(1.0));
    }

    #[test]
    fn sure_possible_fixture() {
        let pred = set(&[(0, 0), (1, 1), (2, 3)]);
        let sure = set(&[(0, 0), (2, 2)]);
        let possible = set(&[(0, 0), (2, 2), (1, 1)]);
        let r = evaluate_word_alignment(&pred, &sure, &possible);
        assert!((r.aer - 0.4).abs() < 1e-15);
        assert!((r.precision - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.recall, Some(0.5));
        assert!((r.f1.unwrap() - 4.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn disjoint() {
        let r = evaluate_word_alignment(&set(&[(0, 1)]), &set(&[(0, 0)]), &set(&[(0, 0)]));
        assert_eq!(r.aer, 1.0);
        assert_eq!(r.f1, Some(0.0));
    }

    #[test]
    fn vacuous_cases() {
        let empty = HashSet::new();
        let r = evaluate_word_alignment(&empty, &empty, &empty);
        assert_eq!((r.aer, r.f1), (0.0, Some(1.0)));
        let r = evaluate_word_alignment(&set(&[(0, 0)]), &empty, &set(&[(0, 0)]));
        assert_eq!(r.recall, None);
        assert_eq!(r.aer, 0.0);
    }

    #[test]
    fn macro_average_skips_undefined_recall() {
        let a = WordAlignScore { aer: 0.2, precision: 0.8, recall: Some(0.6), f1: Some(0.5) };
        let b = WordAlignScore { aer: 0.4, precision: 0.4, recall: None, f1: None };
        let m = macro_average(&[a, b]).unwrap();
        assert!((m.aer - 0.3).abs() < 1e-15);
        assert!((m.precision - 0.6).abs() < 1e-15);
        assert_eq!(m.recall, Some(0.6));
        assert_eq!(m.f1, Some(0.5));
        assert!(macro_average(&[]).is_none());
    }
}

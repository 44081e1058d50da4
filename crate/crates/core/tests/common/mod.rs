#![allow(dead_code)]

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use spanalign_core::model::{
    AlignmentDocument, LinkId, Role, Span, SpanLabel, SpanLink, Strength, TranscriptSide, WordLink,
};

const WORDS: &[&str] = &[
    "the", "speech", "minister", "today", "we", "have", "a", "new", "law", "about", "water", "city", "people", "will",
    "vote", "next", "year", "very", "much", "thank", "you", "energy", "price", "school",
];
const PUNCT: &[&str] = &[".", ",", "?", "!"];
const TWO_SIDED: [SpanLabel; 5] = [
    SpanLabel::Translation,
    SpanLabel::Paraphrase,
    SpanLabel::Summarization,
    SpanLabel::Generalization,
    SpanLabel::Replacement,
];
const ONE_SIDED: [SpanLabel; 2] = [SpanLabel::FactualAddition, SpanLabel::UninformativeAddition];

/// Random contiguous segments covering `0..n`.
pub fn random_partition(n: usize, rng: &mut ChaCha8Rng, cut_prob: f64) -> Vec<Span> {
    let mut out = Vec::new();
    let mut start = 0;
    for g in 1..n {
        if rng.random_bool(cut_prob) {
            out.push(Span::new(start, g));
            start = g;
        }
    }
    if n > 0 {
        out.push(Span::new(start, n));
    }
    out
}

pub fn random_sentence(rng: &mut ChaCha8Rng, len: usize) -> Vec<String> {
    let mut words: Vec<String> = (0..len).map(|_| WORDS.choose(rng).unwrap().to_string()).collect();
    if rng.random_bool(0.3) && len > 3 {
        let at = rng.random_range(1..len - 1);
        words.insert(at, ",".into());
    }
    words.push(PUNCT.choose(rng).unwrap().to_string());
    words
}

pub fn random_side(rng: &mut ChaCha8Rng, id: &str, lang: &str, role: Role, lines: usize) -> TranscriptSide {
    let lines: Vec<Vec<String>> = (0..lines)
        .map(|_| {
            let len = rng.random_range(2..9);
            random_sentence(rng, len)
        })
        .collect();
    TranscriptSide::from_lines(id, lang, role, &lines)
}

/// A valid, completely annotated document with random word links.
pub fn random_document(rng: &mut ChaCha8Rng, id: &str) -> AlignmentDocument {
    let (ns, nt) = (rng.random_range(1..5), rng.random_range(1..5));
    let src = random_side(rng, &format!("{id}-src"), "en", Role::Source, ns);
    let tgt = random_side(rng, &format!("{id}-tgt"), "cs", Role::Target, nt);
    let ps = random_partition(src.len(), rng, 0.3);
    let pt = random_partition(tgt.len(), rng, 0.3);
    let mut doc = AlignmentDocument::new(id, src, tgt);
    let (mut i, mut j) = (0, 0);
    let mut next_id = 0u32;
    let mut push = |doc: &mut AlignmentDocument, src: Option<Span>, tgt: Option<Span>, label| {
        doc.span_links.push(SpanLink { id: LinkId(next_id), src, tgt, label });
        next_id += 1;
    };
    while i < ps.len() || j < pt.len() {
        let roll: f64 = rng.random();
        if i < ps.len() && j < pt.len() && roll < 0.7 {
            push(&mut doc, Some(ps[i]), Some(pt[j]), *TWO_SIDED.choose(rng).unwrap());
            i += 1;
            j += 1;
        } else if i < ps.len() && (j == pt.len() || roll < 0.85) {
            push(&mut doc, Some(ps[i]), None, *ONE_SIDED.choose(rng).unwrap());
            i += 1;
        } else {
            push(&mut doc, None, Some(pt[j]), *ONE_SIDED.choose(rng).unwrap());
            j += 1;
        }
    }
    let mut words = Vec::new();
    for link in &doc.span_links {
        if let (Some(s), Some(t)) = (link.src, link.tgt) {
            for u in s.range() {
                for v in t.range() {
                    if rng.random_bool(0.25) {
                        let strength = if rng.random_bool(0.7) { Strength::Sure } else { Strength::Possible };
                        words.push(WordLink { src_token: u, tgt_token: v, strength, parent: link.id });
                    }
                }
            }
        }
    }
    doc.word_links = words;
    if rng.random_bool(0.5) {
        doc.meta.relay = Some(rng.random_bool(0.3));
        doc.meta.annotator_id = Some(format!("A{}", rng.random_range(1..4)));
        doc.meta.duration_seconds = Some(rng.random_range(60.0..900.0));
    }
    doc
}

/// A target transcript derived from the source by dropping, swapping in
/// and inserting words, sometimes merging adjacent lines.
pub fn perturbed_pair(rng: &mut ChaCha8Rng, id: &str) -> (TranscriptSide, TranscriptSide) {
    let lines = rng.random_range(0..7);
    let src_lines: Vec<Vec<String>> = (0..lines)
        .map(|_| {
            let len = rng.random_range(2..12);
            random_sentence(rng, len)
        })
        .collect();
    let mut tgt_lines: Vec<Vec<String>> = Vec::new();
    for line in &src_lines {
        let mut out: Vec<String> = Vec::new();
        for w in line {
            if !rng.random_bool(0.85) {
                continue;
            }
            if rng.random_bool(0.1) {
                out.push(WORDS.choose(rng).unwrap().to_string());
            } else {
                out.push(w.clone());
            }
        }
        if rng.random_bool(0.2) {
            out.push("very".into());
        }
        if out.is_empty() || rng.random_bool(0.1) {
            continue;
        }
        match tgt_lines.last_mut() {
            Some(prev) if rng.random_bool(0.2) => prev.extend(out),
            _ => tgt_lines.push(out),
        }
    }
    if rng.random_bool(0.1) {
        tgt_lines.push(random_sentence(rng, 4));
    }
    (
        TranscriptSide::from_lines(format!("{id}-src"), "en", Role::Source, &src_lines),
        TranscriptSide::from_lines(format!("{id}-tgt"), "cs", Role::Target, &tgt_lines),
    )
}

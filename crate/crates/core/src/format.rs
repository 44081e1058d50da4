//! Canonical on-disk alignment file (UTF-8 JSON).
//!
//! ```json
//! {
//!   "pair_id": "...",
//!   "meta": {"interpreter_id": .., "annotator_id": .., "relay": .., "duration_seconds": ..},
//!   "source": {"doc_id": .., "lang": .., "lines": [["tok", ..], ..],
//!              "flags": {"name": [..], "hesitation": [..], "pause": [..]}},
//!   "target": {..},
//!   "span_links": [{"id": 0, "label": "TRAN", "src": [0, 3], "tgt": [0, 2]}],
//!   "word_links": [{"src": 0, "tgt": 1, "strength": "sure", "parent": 0}]
//! }
//! ```
//!
//! Flags hold sorted token indices. Spans are half-open `[start, end]` pairs
//! and `null` marks the missing side of an addition.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::model::{
    AlignmentDocument, LinkId, Meta, Role, Span, SpanLabel, SpanLink, Strength, TranscriptSide, WordLink,
};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("malformed alignment file: {0}")]
    Malformed(String),
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error("duplicate id: {0}")]
    DuplicateId(String),
    #[error("word link refers to unknown span link {0}")]
    UnknownParent(u32),
}

impl FormatError {
    pub fn code(&self) -> &'static str {
        match self {
            FormatError::Malformed(_) => "MALFORMED",
            FormatError::UnknownLabel(_) => "UNKNOWN_LABEL",
            FormatError::OutOfRange(_) => "OUT_OF_RANGE",
            FormatError::DuplicateId(_) => "DUPLICATE_ID",
            FormatError::UnknownParent(_) => "UNKNOWN_PARENT",
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocWire {
    pair_id: String,
    #[serde(default)]
    meta: Meta,
    source: SideWire,
    target: SideWire,
    #[serde(default)]
    span_links: Vec<LinkWire>,
    #[serde(default)]
    word_links: Vec<WordWire>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SideWire {
    doc_id: String,
    lang: String,
    lines: Vec<Vec<String>>,
    #[serde(default)]
    flags: FlagsWire,
}

#[derive(Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlagsWire {
    #[serde(default)]
    name: Vec<usize>,
    #[serde(default)]
    hesitation: Vec<usize>,
    #[serde(default)]
    pause: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkWire {
    id: u32,
    label: String,
    src: Option<[usize; 2]>,
    tgt: Option<[usize; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WordWire {
    src: usize,
    tgt: usize,
    strength: Strength,
    parent: u32,
}

pub fn serialize(doc: &AlignmentDocument) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&to_wire(doc)).expect("alignment document serializes");
    out.push(b'\n');
    out
}

/// The canonical form as a JSON value, for embedding in larger messages.
pub fn to_value(doc: &AlignmentDocument) -> serde_json::Value {
    serde_json::to_value(to_wire(doc)).expect("alignment document serializes")
}

pub fn from_value(value: serde_json::Value) -> Result<AlignmentDocument, FormatError> {
    let wire: DocWire = serde_json::from_value(value).map_err(|e| FormatError::Malformed(e.to_string()))?;
    from_wire(wire)
}

fn to_wire(doc: &AlignmentDocument) -> DocWire {
    DocWire {
        pair_id: doc.pair_id.clone(),
        meta: doc.meta.clone(),
        source: side_to_wire(&doc.source),
        target: side_to_wire(&doc.target),
        span_links: doc
            .span_links
            .iter()
            .map(|l| LinkWire {
                id: l.id.0,
                label: l.label.code().to_string(),
                src: l.src.map(|s| [s.start, s.end]),
                tgt: l.tgt.map(|s| [s.start, s.end]),
            })
            .collect(),
        word_links: doc
            .word_links
            .iter()
            .map(|w| WordWire { src: w.src_token, tgt: w.tgt_token, strength: w.strength, parent: w.parent.0 })
            .collect(),
    }
}

pub fn deserialize(bytes: &[u8]) -> Result<AlignmentDocument, FormatError> {
    let wire: DocWire = serde_json::from_slice(bytes).map_err(|e| FormatError::Malformed(e.to_string()))?;
    from_wire(wire)
}

fn from_wire(wire: DocWire) -> Result<AlignmentDocument, FormatError> {
    let source = side_from_wire(wire.source, Role::Source)?;
    let target = side_from_wire(wire.target, Role::Target)?;

    let mut ids = HashSet::new();
    let mut span_links = Vec::with_capacity(wire.span_links.len());
    for l in wire.span_links {
        if !ids.insert(l.id) {
            return Err(FormatError::DuplicateId(format!("span link {}", l.id)));
        }
        let label: SpanLabel = l.label.parse().map_err(|_| FormatError::UnknownLabel(l.label.clone()))?;
        let src = l.src.map(|s| span_in(s, source.len(), l.id, Role::Source)).transpose()?;
        let tgt = l.tgt.map(|s| span_in(s, target.len(), l.id, Role::Target)).transpose()?;
        span_links.push(SpanLink { id: LinkId(l.id), src, tgt, label });
    }

    let mut pairs = HashSet::new();
    let mut word_links = Vec::with_capacity(wire.word_links.len());
    for w in wire.word_links {
        if w.src >= source.len() || w.tgt >= target.len() {
            return Err(FormatError::OutOfRange(format!("word link {}-{}", w.src, w.tgt)));
        }
        if !ids.contains(&w.parent) {
            return Err(FormatError::UnknownParent(w.parent));
        }
        if !pairs.insert((w.src, w.tgt)) {
            return Err(FormatError::DuplicateId(format!("word link {}-{}", w.src, w.tgt)));
        }
        word_links.push(WordLink {
            src_token: w.src,
            tgt_token: w.tgt,
            strength: w.strength,
            parent: LinkId(w.parent),
        });
    }

    Ok(AlignmentDocument { pair_id: wire.pair_id, source, target, span_links, word_links, meta: wire.meta })
}

fn span_in(s: [usize; 2], n: usize, id: u32, role: Role) -> Result<Span, FormatError> {
    if s[0] >= s[1] || s[1] > n {
        return Err(FormatError::OutOfRange(format!("{role} span [{}, {}) of link {id} with {n} tokens", s[0], s[1])));
    }
    Ok(Span::new(s[0], s[1]))
}

fn side_to_wire(side: &TranscriptSide) -> SideWire {
    let lines = side.lines.iter().map(|r| side.tokens[r.clone()].iter().map(|t| t.surface.clone()).collect()).collect();
    let pick = |f: fn(&crate::model::Token) -> bool| side.tokens.iter().filter(|t| f(t)).map(|t| t.index).collect();
    SideWire {
        doc_id: side.doc_id.clone(),
        lang: side.lang.clone(),
        lines,
        flags: FlagsWire {
            name: pick(|t| t.is_name),
            hesitation: pick(|t| t.is_hesitation),
            pause: pick(|t| t.is_pause),
        },
    }
}

fn side_from_wire(wire: SideWire, role: Role) -> Result<TranscriptSide, FormatError> {
    if let Some(i) = wire.lines.iter().position(Vec::is_empty) {
        return Err(FormatError::Malformed(format!("{role} line {i} is empty")));
    }
    if wire.lines.iter().flatten().any(|t| t.is_empty() || t.chars().any(char::is_whitespace)) {
        return Err(FormatError::Malformed(format!("{role} contains an empty token or a token with whitespace")));
    }
    let mut side = TranscriptSide::from_lines(wire.doc_id, wire.lang, role, &wire.lines);
    let n = side.len();
    let flag_sets = [(&wire.flags.name, 0), (&wire.flags.hesitation, 1), (&wire.flags.pause, 2)];
    for (indices, kind) in flag_sets {
        for &i in indices {
            let tok = side
                .tokens
                .get_mut(i)
                .ok_or_else(|| FormatError::OutOfRange(format!("{role} flag index {i} with {n} tokens")))?;
            match kind {
                0 => tok.is_name = true,
                1 => tok.is_hesitation = true,
                _ => tok.is_pause = true,
            }
        }
    }
    Ok(side)
}

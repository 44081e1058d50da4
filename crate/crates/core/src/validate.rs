//! Annotation guideline checks.
//!
//! Hard errors are invariant violations. Uncovered tokens are not errors:
//! they only make the document incomplete.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::model::{AlignmentDocument, Role, Span, SpanLink};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IssueCode {
    DuplicateLinkId,
    InvalidSpan,
    LabelSideMismatch,
    OverlappingSpans,
    WordLinkOrphan,
    WordLinkOneSidedParent,
    WordLinkOutOfRange,
    WordLinkCrossesSpans,
    DuplicateWordLink,
}

impl IssueCode {
    pub fn as_str(self) -> &'static str {
        match self {
            IssueCode::DuplicateLinkId => "DUPLICATE_LINK_ID",
            IssueCode::InvalidSpan => "INVALID_SPAN",
            IssueCode::LabelSideMismatch => "LABEL_SIDE_MISMATCH",
            IssueCode::OverlappingSpans => "OVERLAPPING_SPANS",
            IssueCode::WordLinkOrphan => "WORD_LINK_ORPHAN",
            IssueCode::WordLinkOneSidedParent => "WORD_LINK_ONE_SIDED_PARENT",
            IssueCode::WordLinkOutOfRange => "WORD_LINK_OUT_OF_RANGE",
            IssueCode::WordLinkCrossesSpans => "WORD_LINK_CROSSES_SPANS",
            IssueCode::DuplicateWordLink => "DUPLICATE_WORD_LINK",
        }
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationIssue {
    pub code: IssueCode,
    pub message: String,
    /// Offending span link ids, or `src-tgt` for word links.
    pub ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<ValidationIssue>,
    pub is_complete: bool,
    pub uncovered_source: usize,
    pub uncovered_target: usize,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn has(&self, code: IssueCode) -> bool {
        self.errors.iter().any(|e| e.code == code)
    }
}

pub fn validate_document(doc: &AlignmentDocument) -> ValidationReport {
    let mut errors = Vec::new();
    let mut push = |code, message: String, ids: Vec<String>| errors.push(ValidationIssue { code, message, ids });

    let mut seen_ids = HashSet::new();
    for link in &doc.span_links {
        if !seen_ids.insert(link.id) {
            push(
                IssueCode::DuplicateLinkId,
                format!("span link id {} used more than once", link.id),
                vec![link.id.to_string()],
            );
        }
        for role in [Role::Source, Role::Target] {
            if let Some(span) = link.span(role) {
                let n = doc.side(role).len();
                if span.start >= span.end || span.end > n {
                    push(
                        IssueCode::InvalidSpan,
                        format!("{role} span {span} of link {} is empty or exceeds {n} tokens", link.id),
                        vec![link.id.to_string()],
                    );
                }
            }
        }
        if let Some(msg) = label_side_problem(link) {
            push(IssueCode::LabelSideMismatch, msg, vec![link.id.to_string()]);
        }
    }

    for role in [Role::Source, Role::Target] {
        let mut spans: Vec<(Span, &SpanLink)> =
            doc.span_links.iter().filter_map(|l| l.span(role).map(|s| (s, l))).collect();
        spans.sort_by_key(|(s, l)| (s.start, s.end, l.id));
        for (i, (a, la)) in spans.iter().enumerate() {
            for (b, lb) in spans[i + 1..].iter().take_while(|(b, _)| b.start < a.end) {
                if a.overlaps(b) {
                    push(
                        IssueCode::OverlappingSpans,
                        format!("{role} spans {a} (link {}) and {b} (link {}) overlap", la.id, lb.id),
                        vec![la.id.to_string(), lb.id.to_string()],
                    );
                }
            }
        }
    }

    let by_id: HashMap<_, _> = doc.span_links.iter().map(|l| (l.id, l)).collect();
    let mut seen_pairs = HashSet::new();
    for w in &doc.word_links {
        let wid = format!("{}-{}", w.src_token, w.tgt_token);
        if !seen_pairs.insert((w.src_token, w.tgt_token)) {
            push(IssueCode::DuplicateWordLink, format!("word link {wid} appears more than once"), vec![wid.clone()]);
        }
        if w.src_token >= doc.source.len() || w.tgt_token >= doc.target.len() {
            push(IssueCode::WordLinkOutOfRange, format!("word link {wid} points outside the transcripts"), vec![wid]);
            continue;
        }
        let Some(parent) = by_id.get(&w.parent) else {
            push(
                IssueCode::WordLinkOrphan,
                format!("word link {wid} refers to missing span link {}", w.parent),
                vec![wid],
            );
            continue;
        };
        let (Some(src), Some(tgt)) = (parent.src, parent.tgt) else {
            push(
                IssueCode::WordLinkOneSidedParent,
                format!("word link {wid} belongs to one-sided link {}", parent.id),
                vec![wid, parent.id.to_string()],
            );
            continue;
        };
        if !src.contains(w.src_token) || !tgt.contains(w.tgt_token) {
            push(
                IssueCode::WordLinkCrossesSpans,
                format!("word link {wid} leaves its span link {}", parent.id),
                vec![wid, parent.id.to_string()],
            );
        }
    }

    let uncovered_source = uncovered(doc, Role::Source);
    let uncovered_target = uncovered(doc, Role::Target);
    let overlap_free = !errors.iter().any(|e| matches!(e.code, IssueCode::OverlappingSpans | IssueCode::InvalidSpan));
    ValidationReport {
        is_complete: overlap_free && uncovered_source == 0 && uncovered_target == 0,
        errors,
        uncovered_source,
        uncovered_target,
    }
}

fn label_side_problem(link: &SpanLink) -> Option<String> {
    match (link.src.is_some(), link.tgt.is_some(), link.label.is_one_sided()) {
        (false, false, _) => Some(format!("link {} has no span on either side", link.id)),
        (true, true, true) => Some(format!("link {} is labeled {} but has spans on both sides", link.id, link.label)),
        (true, false, false) | (false, true, false) => {
            Some(format!("link {} is labeled {} but has a span on one side only", link.id, link.label))
        }
        _ => None,
    }
}

fn uncovered(doc: &AlignmentDocument, role: Role) -> usize {
    let n = doc.side(role).len();
    let mut covered = vec![false; n];
    for span in doc.span_links.iter().filter_map(|l| l.span(role)) {
        for c in covered.iter_mut().take(span.end.min(n)).skip(span.start) {
            *c = true;
        }
    }
    covered.iter().filter(|c| !**c).count()
}

//! Domain types for aligned transcript pairs.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Which half of a recording pair a transcript belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Source,
    Target,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Source => f.write_str("source"),
            Role::Target => f.write_str("target"),
        }
    }
}

/// Languages of the released corpus. Other codes are accepted outside dataset files.
pub const DATASET_LANGS: [&str; 5] = ["cs", "en", "de", "es", "fr"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub index: usize,
    pub surface: String,
    pub line_index: usize,
    pub is_name: bool,
    pub is_hesitation: bool,
    pub is_pause: bool,
}

impl Token {
    pub fn new(index: usize, surface: impl Into<String>, line_index: usize) -> Self {
        Token { index, surface: surface.into(), line_index, is_name: false, is_hesitation: false, is_pause: false }
    }

    /// Tokens made only of punctuation or symbol characters. Hesitation markers
    /// are excluded even though `@` is a symbol.
    pub fn is_punctuation(&self) -> bool {
        !self.is_hesitation && is_punctuation_surface(&self.surface)
    }
}

pub fn is_punctuation_surface(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| !c.is_alphanumeric() && !c.is_whitespace())
}

/// One language's token sequence together with its line structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptSide {
    pub doc_id: String,
    pub lang: String,
    pub role: Role,
    pub tokens: Vec<Token>,
    /// Token ranges, one per transcript line, partitioning `tokens` in order.
    pub lines: Vec<Range<usize>>,
}

impl TranscriptSide {
    /// Builds a side from already tokenized lines. Empty lines are dropped.
    pub fn from_lines<S: AsRef<str>>(
        doc_id: impl Into<String>,
        lang: impl Into<String>,
        role: Role,
        lines: &[Vec<S>],
    ) -> Self {
        let mut tokens = Vec::new();
        let mut ranges = Vec::new();
        for line in lines.iter().filter(|l| !l.is_empty()) {
            let start = tokens.len();
            let line_index = ranges.len();
            for surface in line {
                let idx = tokens.len();
                tokens.push(Token::new(idx, surface.as_ref(), line_index));
            }
            ranges.push(start..tokens.len());
        }
        TranscriptSide { doc_id: doc_id.into(), lang: lang.into(), role, tokens, lines: ranges }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn line_count(&self) -> usize {
        self.lines.len()
    }

    /// Surface text of a line, tokens joined by single spaces.
    pub fn line_text(&self, line: usize) -> String {
        self.text_of(self.lines[line].clone())
    }

    pub fn text_of(&self, range: Range<usize>) -> String {
        let mut out = String::new();
        for tok in &self.tokens[range] {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(&tok.surface);
        }
        out
    }

    /// Character count of the whole transcript with tokens joined by spaces
    /// inside a line and lines counted without separators.
    pub fn char_len(&self) -> usize {
        (0..self.lines.len()).map(|l| self.line_text(l).chars().count()).sum()
    }

    /// Token range covered by a contiguous range of lines.
    pub fn token_range_of_lines(&self, lines: Range<usize>) -> Range<usize> {
        if lines.is_empty() {
            let at = self.lines.get(lines.start).map_or(self.len(), |r| r.start);
            return at..at;
        }
        self.lines[lines.start].start..self.lines[lines.end - 1].end
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }
}

/// The closed label vocabulary for span links.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SpanLabel {
    #[serde(rename = "TRAN")]
    Translation,
    #[serde(rename = "PARA")]
    Paraphrase,
    #[serde(rename = "SUM")]
    Summarization,
    #[serde(rename = "GEN")]
    Generalization,
    #[serde(rename = "ADDF")]
    FactualAddition,
    #[serde(rename = "ADDU")]
    UninformativeAddition,
    #[serde(rename = "REPL")]
    Replacement,
}

impl SpanLabel {
    pub const ALL: [SpanLabel; 7] = [
        SpanLabel::Translation,
        SpanLabel::Paraphrase,
        SpanLabel::Summarization,
        SpanLabel::Generalization,
        SpanLabel::FactualAddition,
        SpanLabel::UninformativeAddition,
        SpanLabel::Replacement,
    ];

    pub fn code(self) -> &'static str {
        match self {
            SpanLabel::Translation => "TRAN",
            SpanLabel::Paraphrase => "PARA",
            SpanLabel::Summarization => "SUM",
            SpanLabel::Generalization => "GEN",
            SpanLabel::FactualAddition => "ADDF",
            SpanLabel::UninformativeAddition => "ADDU",
            SpanLabel::Replacement => "REPL",
        }
    }

    /// Addition labels mark content present on one side only.
    pub fn is_one_sided(self) -> bool {
        matches!(self, SpanLabel::FactualAddition | SpanLabel::UninformativeAddition)
    }

    pub fn description(self) -> &'static str {
        match self {
            SpanLabel::Translation => "Translation: the target conveys the source content faithfully",
            SpanLabel::Paraphrase => "Paraphrase: same meaning expressed with a different wording or structure",
            SpanLabel::Summarization => "Summarization: the target condenses the source content",
            SpanLabel::Generalization => "Generalization: the target uses a more general expression",
            SpanLabel::FactualAddition => {
                "Factual addition: content on one side only that changes the conveyed information"
            }
            SpanLabel::UninformativeAddition => {
                "Uninformative addition: content on one side only without new information (fillers, repetitions)"
            }
            SpanLabel::Replacement => "Replacement: the target says something different from the source",
        }
    }
}

impl fmt::Display for SpanLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown label {0:?}")]
pub struct UnknownLabel(pub String);

impl FromStr for SpanLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SpanLabel::ALL.into_iter().find(|l| l.code() == s).ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

/// Half-open token range `[start, end)` on one side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, token: usize) -> bool {
        self.start <= token && token < self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }
}

impl From<Range<usize>> for Span {
    fn from(r: Range<usize>) -> Self {
        Span::new(r.start, r.end)
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{})", self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinkId(pub u32);

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanLink {
    pub id: LinkId,
    pub src: Option<Span>,
    pub tgt: Option<Span>,
    pub label: SpanLabel,
}

impl SpanLink {
    pub fn is_two_sided(&self) -> bool {
        self.src.is_some() && self.tgt.is_some()
    }

    pub fn span(&self, role: Role) -> Option<Span> {
        match role {
            Role::Source => self.src,
            Role::Target => self.tgt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strength {
    /// Context-independent translation pair.
    Sure,
    /// Pair that only holds given the surrounding context.
    Possible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WordLink {
    pub src_token: usize,
    pub tgt_token: usize,
    pub strength: Strength,
    pub parent: LinkId,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    #[serde(default)]
    pub interpreter_id: Option<String>,
    #[serde(default)]
    pub annotator_id: Option<String>,
    #[serde(default)]
    pub relay: Option<bool>,
    #[serde(default)]
    pub duration_seconds: Option<f64>,
    /// Dataset split (dev/test) when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<String>,
}

/// Full annotation of one recording pair.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentDocument {
    pub pair_id: String,
    pub source: TranscriptSide,
    pub target: TranscriptSide,
    pub span_links: Vec<SpanLink>,
    pub word_links: Vec<WordLink>,
    pub meta: Meta,
}

impl AlignmentDocument {
    pub fn new(pair_id: impl Into<String>, source: TranscriptSide, target: TranscriptSide) -> Self {
        AlignmentDocument {
            pair_id: pair_id.into(),
            source,
            target,
            span_links: Vec::new(),
            word_links: Vec::new(),
            meta: Meta::default(),
        }
    }

    pub fn side(&self, role: Role) -> &TranscriptSide {
        match role {
            Role::Source => &self.source,
            Role::Target => &self.target,
        }
    }

    pub fn link(&self, id: LinkId) -> Option<&SpanLink> {
        self.span_links.iter().find(|l| l.id == id)
    }

    pub fn next_link_id(&self) -> LinkId {
        LinkId(self.span_links.iter().map(|l| l.id.0 + 1).max().unwrap_or(0))
    }

    /// Spans present on one side, sorted by start.
    pub fn spans(&self, role: Role) -> Vec<Span> {
        let mut spans: Vec<Span> = self.span_links.iter().filter_map(|l| l.span(role)).collect();
        spans.sort();
        spans
    }

    /// Label of the link covering each token of a side; `None` for uncovered tokens.
    pub fn token_labels(&self, role: Role) -> Vec<Option<SpanLabel>> {
        let mut labels = vec![None; self.side(role).len()];
        for link in &self.span_links {
            if let Some(span) = link.span(role) {
                for slot in labels.iter_mut().take(span.end).skip(span.start) {
                    *slot = Some(link.label);
                }
            }
        }
        labels
    }

    /// Number of links per label.
    pub fn label_counts(&self) -> BTreeMap<SpanLabel, usize> {
        let mut counts = BTreeMap::new();
        for link in &self.span_links {
            *counts.entry(link.label).or_default() += 1;
        }
        counts
    }

    /// Removes a span link together with all word links it owns.
    pub fn remove_link(&mut self, id: LinkId) -> Option<(SpanLink, Vec<WordLink>)> {
        let pos = self.span_links.iter().position(|l| l.id == id)?;
        let link = self.span_links.remove(pos);
        let (children, kept): (Vec<_>, Vec<_>) = self.word_links.iter().partition(|w| w.parent == id);
        self.word_links = kept;
        Some((link, children))
    }
}

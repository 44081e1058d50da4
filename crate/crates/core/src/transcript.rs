//! Raw transcript parsing: one sentence per line with inline markup.
//!
//! `[NAME](Václav Havel)` marks an anonymized name, a standalone `@` a
//! hesitation and a standalone `...` a pause.

use crate::model::{Role, Token, TranscriptSide};
use crate::tokenize::tokenize_lang;

const NAME_OPEN: &str = "[NAME](";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}: unclosed [NAME]( markup")]
    UnclosedName { line: usize },
    #[error("line {line}: empty [NAME]() markup")]
    EmptyName { line: usize },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::UnclosedName { line } | ParseError::EmptyName { line } => *line,
        }
    }
}

/// Parses a raw transcript. Line numbers in errors are 1-based; blank lines
/// contribute no line to the result.
pub fn parse_transcript(raw: &str, doc_id: &str, lang: &str, role: Role) -> Result<TranscriptSide, ParseError> {
    let mut tokens: Vec<Token> = Vec::new();
    let mut lines = Vec::new();
    for (lineno, line) in raw.lines().enumerate() {
        let pieces = split_names(line).map_err(|e| match e {
            NameError::Unclosed => ParseError::UnclosedName { line: lineno + 1 },
            NameError::Empty => ParseError::EmptyName { line: lineno + 1 },
        })?;
        let start = tokens.len();
        let line_index = lines.len();
        for (text, is_name) in pieces {
            for surface in tokenize_lang(text, lang) {
                let mut tok = Token::new(tokens.len(), surface, line_index);
                tok.is_name = is_name;
                tok.is_hesitation = !is_name && tok.surface == "@";
                tok.is_pause = !is_name && tok.surface == "...";
                tokens.push(tok);
            }
        }
        if tokens.len() > start {
            lines.push(start..tokens.len());
        }
    }
    Ok(TranscriptSide { doc_id: doc_id.to_string(), lang: lang.to_string(), role, tokens, lines })
}

enum NameError {
    Unclosed,
    Empty,
}

/// Splits a line into (text, is_name) pieces.
fn split_names(line: &str) -> Result<Vec<(&str, bool)>, NameError> {
    let mut pieces = Vec::new();
    let mut rest = line;
    while let Some(pos) = rest.find(NAME_OPEN) {
        pieces.push((&rest[..pos], false));
        let inner_start = pos + NAME_OPEN.len();
        let close = rest[inner_start..].find(')').ok_or(NameError::Unclosed)?;
        let inner = &rest[inner_start..inner_start + close];
        if inner.trim().is_empty() {
            return Err(NameError::Empty);
        }
        pieces.push((inner, true));
        rest = &rest[inner_start + close + 1..];
    }
    pieces.push((rest, false));
    Ok(pieces)
}

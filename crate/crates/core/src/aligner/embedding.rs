//! Embedding matrices, the `EMB1` binary file format and a hashed
//! character-trigram embedder used when no neural encoder is available.
//!
//! `EMB1` layout, all integers little-endian:
//!
//! | bytes | field                                   |
//! |-------|-----------------------------------------|
//! | 4     | magic `EMB1`                            |
//! | 2     | version (1)                             |
//! | 1     | unit: 0 = line, 1 = token               |
//! | 1     | normalized flag (0/1)                   |
//! | 4     | count (rows)                            |
//! | 4     | dim                                     |
//! | 2 + n | model tag, u16 length + UTF-8 bytes     |
//! | 2 + n | doc id, u16 length + UTF-8 bytes        |
//! | 4·count·dim | row-major f32 body               |

use std::fmt;
use std::io::{self, Read, Write};
use std::ops::Range;
use std::path::Path;

use super::AlignError;
use crate::model::TranscriptSide;

pub const MAGIC: &[u8; 4] = b"EMB1";
pub const VERSION: u16 = 1;
const NORM_TOLERANCE: f64 = 1e-6;
const FILE_NORM_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingUnit {
    Line,
    Token,
}

impl fmt::Display for EmbeddingUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EmbeddingUnit::Line => "line",
            EmbeddingUnit::Token => "token",
        })
    }
}

/// Unit-normalized rows, one per line or token of a transcript side.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub unit: EmbeddingUnit,
    pub doc_id: String,
    pub model_tag: String,
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    /// Wraps rows that must already have unit L2 norm (±1e-6).
    pub fn new(
        unit: EmbeddingUnit,
        dim: usize,
        data: Vec<f64>,
        doc_id: impl Into<String>,
        model_tag: impl Into<String>,
    ) -> Result<Self, AlignError> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(AlignError::Embedding(format!("{} values do not form rows of dimension {dim}", data.len())));
        }
        for (i, row) in data.chunks(dim).enumerate() {
            let norm = l2(row);
            if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(AlignError::Embedding(format!("row {i} has L2 norm {norm}")));
            }
        }
        Ok(EmbeddingMatrix { unit, doc_id: doc_id.into(), model_tag: model_tag.into(), dim, data })
    }

    /// Normalizes every row. Zero or non-finite rows are rejected.
    pub fn normalized(
        unit: EmbeddingUnit,
        dim: usize,
        mut data: Vec<f64>,
        doc_id: impl Into<String>,
        model_tag: impl Into<String>,
    ) -> Result<Self, AlignError> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(AlignError::Embedding(format!("{} values do not form rows of dimension {dim}", data.len())));
        }
        for (i, row) in data.chunks_mut(dim).enumerate() {
            let norm = l2(row);
            if !(norm.is_finite() && norm > 0.0) {
                return Err(AlignError::Embedding(format!("row {i} cannot be normalized (norm {norm})")));
            }
            row.iter_mut().for_each(|x| *x /= norm);
        }
        Self::new(unit, dim, data, doc_id, model_tag)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.dim)
    }

    /// Checks the row count against a transcript side.
    pub fn check_side(&self, side: &TranscriptSide) -> Result<(), AlignError> {
        let expected = match self.unit {
            EmbeddingUnit::Line => side.line_count(),
            EmbeddingUnit::Token => side.len(),
        };
        if self.len() != expected {
            return Err(AlignError::ShapeMismatch(format!(
                "{} {} embeddings for {} with {expected} {}s",
                self.len(),
                self.unit,
                side.doc_id,
                self.unit
            )));
        }
        Ok(())
    }

    pub fn to_file(&self) -> EmbeddingFile {
        EmbeddingFile {
            unit: self.unit,
            normalized: true,
            count: self.len(),
            dim: self.dim,
            model_tag: self.model_tag.clone(),
            doc_id: self.doc_id.clone(),
            data: self.data.iter().map(|&x| x as f32).collect(),
        }
    }
}

pub(crate) fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine similarities between rows of two embedding ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn from_values(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), rows * cols, "similarity matrix shape");
        SimilarityMatrix { rows, cols, values }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged similarity rows");
        SimilarityMatrix { rows: rows.len(), cols, values: rows.concat() }
    }

    pub fn between(
        src: &EmbeddingMatrix,
        src_range: Range<usize>,
        tgt: &EmbeddingMatrix,
        tgt_range: Range<usize>,
    ) -> Result<Self, AlignError> {
        if src.dim != tgt.dim {
            return Err(AlignError::ShapeMismatch(format!("embedding dimensions differ: {} vs {}", src.dim, tgt.dim)));
        }
        let mut values = Vec::with_capacity(src_range.len() * tgt_range.len());
        for i in src_range.clone() {
            let a = src.row(i);
            for j in tgt_range.clone() {
                values.push(dot(a, tgt.row(j)));
            }
        }
        Ok(SimilarityMatrix { rows: src_range.len(), cols: tgt_range.len(), values })
    }

    pub fn full(src: &EmbeddingMatrix, tgt: &EmbeddingMatrix) -> Result<Self, AlignError> {
        Self::between(src, 0..src.len(), tgt, 0..tgt.len())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub(crate) fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Raw `EMB1` contents. Values are kept as stored so writing back is bit-exact.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingFile {
    pub unit: EmbeddingUnit,
    pub normalized: bool,
    pub count: usize,
    pub dim: usize,
    pub model_tag: String,
    pub doc_id: String,
    pub data: Vec<f32>,
}

impl EmbeddingFile {
    pub fn read_from(mut r: impl Read) -> Result<Self, AlignError> {
        let mut fixed = [0u8; 16];
        r.read_exact(&mut fixed).map_err(io_err)?;
        if &fixed[0..4] != MAGIC {
            return Err(AlignError::Embedding("bad magic, expected EMB1".into()));
        }
        let version = u16::from_le_bytes([fixed[4], fixed[5]]);
        if version != VERSION {
            return Err(AlignError::Embedding(format!("unsupported EMB1 version {version}")));
        }
        let unit = match fixed[6] {
            0 => EmbeddingUnit::Line,
            1 => EmbeddingUnit::Token,
            u => return Err(AlignError::Embedding(format!("unknown unit code {u}"))),
        };
        let normalized = match fixed[7] {
            0 => false,
            1 => true,
            f => return Err(AlignError::Embedding(format!("bad normalized flag {f}"))),
        };
        let count = u32::from_le_bytes(fixed[8..12].try_into().unwrap()) as usize;
        let dim = u32::from_le_bytes(fixed[12..16].try_into().unwrap()) as usize;
        let model_tag = read_str(&mut r)?;
        let doc_id = read_str(&mut r)?;
        let len = count
            .checked_mul(dim)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| AlignError::Embedding("body size overflows".into()))?;
        let mut body = Vec::new();
        r.take(len as u64 + 1).read_to_end(&mut body).map_err(io_err)?;
        if body.len() != len {
            return Err(AlignError::Embedding(format!("body has {} bytes, header implies {len}", body.len())));
        }
        let data: Vec<f32> = body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        let file = EmbeddingFile { unit, normalized, count, dim, model_tag, doc_id, data };
        if normalized && dim > 0 {
            for (i, row) in file.data.chunks(dim).enumerate() {
                let norm = row.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > FILE_NORM_TOLERANCE {
                    return Err(AlignError::Embedding(format!("row {i} flagged normalized but has norm {norm}")));
                }
            }
        }
        Ok(file)
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<(), AlignError> {
        if self.data.len() != self.count * self.dim {
            return Err(AlignError::Embedding("body length does not match count x dim".into()));
        }
        let mut head = Vec::with_capacity(16);
        head.extend_from_slice(MAGIC);
        head.extend_from_slice(&VERSION.to_le_bytes());
        head.push(match self.unit {
            EmbeddingUnit::Line => 0,
            EmbeddingUnit::Token => 1,
        });
        head.push(u8::from(self.normalized));
        head.extend_from_slice(&(self.count as u32).to_le_bytes());
        head.extend_from_slice(&(self.dim as u32).to_le_bytes());
        w.write_all(&head).map_err(io_err)?;
        write_str(&mut w, &self.model_tag)?;
        write_str(&mut w, &self.doc_id)?;
        let mut body = Vec::with_capacity(self.data.len() * 4);
        for x in &self.data {
            body.extend_from_slice(&x.to_le_bytes());
        }
        w.write_all(&body).map_err(io_err)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AlignError> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| AlignError::Embedding(format!("{}: {e}", path.display())))?;
        Self::read_from(io::BufReader::new(f))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), AlignError> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        std::fs::write(path, buf).map_err(io_err)
    }

    /// Converts to f64 and renormalizes every row.
    pub fn into_matrix(self) -> Result<EmbeddingMatrix, AlignError> {
        let data = self.data.iter().map(|&x| f64::from(x)).collect();
        EmbeddingMatrix::normalized(self.unit, self.dim, data, self.doc_id, self.model_tag)
    }
}

fn io_err(e: io::Error) -> AlignError {
    AlignError::Embedding(format!("i/o: {e}"))
}

fn read_str(r: &mut impl Read) -> Result<String, AlignError> {
    let mut len = [0u8; 2];
    r.read_exact(&mut len).map_err(io_err)?;
    let mut buf = vec![0u8; u16::from_le_bytes(len) as usize];
    r.read_exact(&mut buf).map_err(io_err)?;
    String::from_utf8(buf).map_err(|_| AlignError::Embedding("header string is not UTF-8".into()))
}

fn write_str(w: &mut impl Write, s: &str) -> Result<(), AlignError> {
    let len =
        u16::try_from(s.len()).map_err(|_| AlignError::Embedding("header string longer than 65535 bytes".into()))?;
    w.write_all(&len.to_le_bytes()).map_err(io_err)?;
    w.write_all(s.as_bytes()).map_err(io_err)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub const FALLBACK_MODEL_TAG: &str = "fallback-char3";

/// Sum of hashed one-hot character trigrams of `<lowercased unit>`, L2
/// normalized. Strings shorter than three characters after padding hash as
/// a single gram.
pub fn fallback_embed<S: AsRef<str>>(
    units: &[S],
    dim: usize,
    unit: EmbeddingUnit,
) -> Result<EmbeddingMatrix, AlignError> {
    if dim < 8 {
        return Err(AlignError::InvalidParams(format!("fallback dimension {dim} < 8")));
    }
    let mut data = vec![0.0; units.len() * dim];
    let mut gram = String::new();
    for (row, u) in data.chunks_mut(dim).zip(units) {
        let padded: Vec<char> =
            std::iter::once('<').chain(u.as_ref().to_lowercase().chars()).chain(std::iter::once('>')).collect();
        let grams = if padded.len() < 3 { 1 } else { padded.len() - 2 };
        for g in 0..grams {
            gram.clear();
            gram.extend(&padded[g..(g + 3).min(padded.len())]);
            row[(fnv1a(gram.as_bytes()) % dim as u64) as usize] += 1.0;
        }
        let norm = l2(row);
        row.iter_mut().for_each(|x| *x /= norm);
    }
    EmbeddingMatrix::new(unit, dim, data, "", FALLBACK_MODEL_TAG)
}

pub fn fallback_line_embeddings(side: &TranscriptSide, dim: usize) -> Result<EmbeddingMatrix, AlignError> {
    let lines: Vec<String> = (0..side.line_count()).map(|l| side.line_text(l)).collect();
    let mut m = fallback_embed(&lines, dim, EmbeddingUnit::Line)?;
    m.doc_id = side.doc_id.clone();
    Ok(m)
}

pub fn fallback_token_embeddings(side: &TranscriptSide, dim: usize) -> Result<EmbeddingMatrix, AlignError> {
    let mut m = fallback_embed(&side.surfaces(), dim, EmbeddingUnit::Token)?;
    m.doc_id = side.doc_id.clone();
    Ok(m)
}

/// Start/end token positions of overlapping encoder windows covering `n`
/// tokens. The last window always ends at `n`.
pub fn sliding_windows(n: usize, window: usize, stride: usize) -> Vec<Range<usize>> {
    assert!(window > 0 && stride > 0, "window and stride must be positive");
    let mut out = Vec::new();
    let mut start = 0;
    loop {
        let end = (start + window).min(n);
        out.push(start..end);
        if end >= n {
            break;
        }
        start += stride;
    }
    out
}

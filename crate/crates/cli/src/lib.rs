//! File loading shared by the `spanalign` commands, and the annotation
//! service.

pub mod server;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use spanalign_core::aligner::embedding::{fallback_line_embeddings, fallback_token_embeddings};
use spanalign_core::labeler::load_model;
use spanalign_core::{
    deserialize, parse_transcript, AlignerParams, AlignmentDocument, EmbeddingFile, EmbeddingMatrix, EmbeddingUnit,
    Labeler, Role, TranscriptSide,
};

pub fn load_document(path: &Path) -> Result<AlignmentDocument> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    deserialize(&bytes).with_context(|| format!("parsing {}", path.display()))
}

/// Canonical files named on the command line; directories contribute every
/// `*.json` file below them.
pub fn document_paths(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
        let mut entries: Vec<PathBuf> = fs::read_dir(dir)
            .with_context(|| format!("listing {}", dir.display()))?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()?;
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(&p, out)?;
            } else if p.extension().is_some_and(|e| e == "json") {
                out.push(p);
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            walk(p, &mut out)?;
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

/// The transcripts of a pair: either a canonical `.json` file (its links
/// are ignored) or a prefix `<dir>/<pair>` with files
/// `<pair>.source.<lang>.txt` and `<pair>.target.<lang>.txt` beside it.
pub fn load_pair(path: &Path) -> Result<(String, TranscriptSide, TranscriptSide)> {
    if path.extension().is_some_and(|e| e == "json") && path.is_file() {
        let doc = load_document(path)?;
        return Ok((doc.pair_id, doc.source, doc.target));
    }
    let pair = path
        .file_name()
        .and_then(|n| n.to_str())
        .with_context(|| format!("{} names no pair", path.display()))?
        .to_string();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut sides = [None, None];
    for entry in fs::read_dir(&dir).with_context(|| format!("listing {}", dir.display()))? {
        let file = entry?.path();
        let Some(name) = file.file_name().and_then(|n| n.to_str()) else { continue };
        let Some(rest) = name.strip_prefix(&pair).and_then(|r| r.strip_prefix('.')) else { continue };
        let Some(rest) = rest.strip_suffix(".txt") else { continue };
        let Some((role, lang)) = rest.split_once('.') else { continue };
        let (slot, role) = match role {
            "source" => (0, Role::Source),
            "target" => (1, Role::Target),
            _ => continue,
        };
        if sides[slot].is_some() {
            bail!("more than one {role:?} transcript for pair {pair} in {}", dir.display());
        }
        let raw = fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
        let doc_id = name.trim_end_matches(".txt");
        let side = parse_transcript(&raw, doc_id, lang, role).with_context(|| format!("parsing {}", file.display()))?;
        sides[slot] = Some(side);
    }
    let [Some(source), Some(target)] = sides else {
        bail!("need {pair}.source.<lang>.txt and {pair}.target.<lang>.txt in {}", dir.display());
    };
    Ok((pair, source, target))
}

pub fn load_embedding(path: &Path, unit: EmbeddingUnit) -> Result<EmbeddingMatrix> {
    let matrix = EmbeddingFile::load(path)
        .and_then(EmbeddingFile::into_matrix)
        .with_context(|| format!("reading {}", path.display()))?;
    if matrix.unit != unit {
        bail!("{} holds {} embeddings, expected {unit}", path.display(), matrix.unit);
    }
    Ok(matrix)
}

/// Source and target embeddings from two EMB1 files, or the trigram
/// fallback when no files are given.
pub fn side_embeddings(
    files: Option<&[PathBuf]>,
    unit: EmbeddingUnit,
    source: &TranscriptSide,
    target: &TranscriptSide,
    fallback_dim: usize,
) -> Result<(EmbeddingMatrix, EmbeddingMatrix)> {
    match files {
        Some([s, t]) => Ok((load_embedding(s, unit)?, load_embedding(t, unit)?)),
        Some(other) => bail!("expected a source and a target file, got {}", other.len()),
        None => {
            let embed = match unit {
                EmbeddingUnit::Line => fallback_line_embeddings,
                EmbeddingUnit::Token => fallback_token_embeddings,
            };
            Ok((embed(source, fallback_dim)?, embed(target, fallback_dim)?))
        }
    }
}

pub fn load_params(path: Option<&Path>) -> Result<AlignerParams> {
    let params = match path {
        None => AlignerParams::default(),
        Some(p) => {
            let raw = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&raw).with_context(|| format!("parsing {}", p.display()))?
        }
    };
    params.check()?;
    Ok(params)
}

pub fn load_labeler(model: Option<&Path>) -> Result<Labeler> {
    match model {
        None => Ok(Labeler::Default),
        Some(p) => {
            let (header, params) = load_model(p)?;
            log::info!("labeler {} (seed {})", p.display(), header.seed);
            Ok(Labeler::Classifier(params))
        }
    }
}

/// Writes to `out`, or stdout when absent.
pub fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            if !bytes.ends_with(b"\n") {
                stdout.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

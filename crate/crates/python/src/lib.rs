//! Python bindings: documents, alignment, metrics and `EMB1` files.
//!
//! Structured results (links, reports, validation) cross the boundary as
//! plain dicts and lists, shaped like the canonical JSON format.

use std::fmt::Display;
use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

use spanalign_core::aligner::embedding::{fallback_line_embeddings, fallback_token_embeddings};
use spanalign_core::aligner::{random_baseline as random_baseline_doc, PipelineInput};
use spanalign_core::format::to_value;
use spanalign_core::labeler::load_model;
use spanalign_core::metrics::{cohen_kappa, evaluate_documents, BoundaryString};
use spanalign_core::{
    deserialize, parse_transcript, run_pipeline, serialize, validate_document, AlignerParams, AlignmentDocument,
    EmbeddingFile, EmbeddingMatrix, EmbeddingUnit, Labeler, Role, SpanLabel,
};

create_exception!(spanalign, SpanalignError, PyException);

fn err(e: impl Display) -> PyErr {
    SpanalignError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, value: &Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (value.to_string(),))
}

fn parse_role(role: &str) -> PyResult<Role> {
    match role {
        "source" => Ok(Role::Source),
        "target" => Ok(Role::Target),
        other => Err(PyValueError::new_err(format!("role must be 'source' or 'target', got {other:?}"))),
    }
}

fn parse_unit(unit: &str) -> PyResult<EmbeddingUnit> {
    match unit {
        "line" => Ok(EmbeddingUnit::Line),
        "token" => Ok(EmbeddingUnit::Token),
        other => Err(PyValueError::new_err(format!("unit must be 'line' or 'token', got {other:?}"))),
    }
}

/// One aligned recording pair.
#[pyclass(name = "Document", module = "spanalign", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyDocument {
    doc: AlignmentDocument,
}

#[pymethods]
impl PyDocument {
    /// Builds an unaligned document from two raw transcripts.
    #[staticmethod]
    #[pyo3(signature = (pair_id, source, target, source_lang = "src", target_lang = "tgt"))]
    fn from_transcripts(
        pair_id: &str,
        source: &str,
        target: &str,
        source_lang: &str,
        target_lang: &str,
    ) -> PyResult<Self> {
        let src = parse_transcript(source, &format!("{pair_id}.source"), source_lang, Role::Source).map_err(err)?;
        let tgt = parse_transcript(target, &format!("{pair_id}.target"), target_lang, Role::Target).map_err(err)?;
        Ok(PyDocument { doc: AlignmentDocument::new(pair_id, src, tgt) })
    }

    #[staticmethod]
    fn from_json(data: &str) -> PyResult<Self> {
        Ok(PyDocument { doc: deserialize(data.as_bytes()).map_err(err)? })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let bytes = std::fs::read(&path).map_err(|e| err(format!("{}: {e}", path.display())))?;
        Ok(PyDocument { doc: deserialize(&bytes).map_err(err)? })
    }

    /// Canonical JSON text.
    fn to_json(&self) -> String {
        String::from_utf8(serialize(&self.doc)).expect("serializer emits UTF-8")
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        std::fs::write(&path, serialize(&self.doc)).map_err(|e| err(format!("{}: {e}", path.display())))
    }

    #[getter]
    fn pair_id(&self) -> &str {
        &self.doc.pair_id
    }

    fn tokens(&self, role: &str) -> PyResult<Vec<String>> {
        let side = self.doc.side(parse_role(role)?);
        Ok(side.surfaces().into_iter().map(str::to_string).collect())
    }

    fn line_count(&self, role: &str) -> PyResult<usize> {
        Ok(self.doc.side(parse_role(role)?).line_count())
    }

    #[getter]
    fn span_links<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &to_value(&self.doc)["span_links"])
    }

    #[getter]
    fn word_links<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &to_value(&self.doc)["word_links"])
    }

    /// Token count per label code, over both sides.
    fn label_counts(&self) -> Vec<(&'static str, usize)> {
        self.doc.label_counts().into_iter().map(|(l, n)| (l.code(), n)).collect()
    }

    fn validate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let report = serde_json::to_value(validate_document(&self.doc)).map_err(err)?;
        to_py(py, &report)
    }

    fn __repr__(&self) -> String {
        format!(
            "Document({:?}, source={} tokens, target={} tokens, {} span links, {} word links)",
            self.doc.pair_id,
            self.doc.source.len(),
            self.doc.target.len(),
            self.doc.span_links.len(),
            self.doc.word_links.len()
        )
    }
}

fn load_side_embeddings(
    paths: Option<(PathBuf, PathBuf)>,
    unit: EmbeddingUnit,
    doc: &AlignmentDocument,
    fallback_dim: usize,
) -> PyResult<(EmbeddingMatrix, EmbeddingMatrix)> {
    let load = |p: PathBuf| -> PyResult<EmbeddingMatrix> {
        let m = EmbeddingFile::load(&p).and_then(EmbeddingFile::into_matrix).map_err(err)?;
        if m.unit != unit {
            return Err(err(format!("{}: expected {unit} embeddings, got {}", p.display(), m.unit)));
        }
        Ok(m)
    };
    match paths {
        Some((s, t)) => Ok((load(s)?, load(t)?)),
        None => {
            let embed = match unit {
                EmbeddingUnit::Line => fallback_line_embeddings,
                EmbeddingUnit::Token => fallback_token_embeddings,
            };
            Ok((embed(&doc.source, fallback_dim).map_err(err)?, embed(&doc.target, fallback_dim).map_err(err)?))
        }
    }
}

fn parse_params(py: Python<'_>, params: Option<&Bound<'_, PyDict>>) -> PyResult<AlignerParams> {
    let Some(params) = params else { return Ok(AlignerParams::default()) };
    let text: String = py.import("json")?.call_method1("dumps", (params,))?.extract()?;
    let parsed: AlignerParams = serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))?;
    parsed.check().map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(parsed)
}

/// Aligns the transcripts of `doc`, ignoring any links it already has.
///
/// Embeddings are `(source_path, target_path)` pairs of `EMB1` files; the
/// trigram fallback embedder is used when they are omitted.
#[pyfunction]
#[pyo3(signature = (doc, line_embeddings = None, token_embeddings = None, fallback_dim = 256, labeler = None, params = None))]
fn align(
    py: Python<'_>,
    doc: &PyDocument,
    line_embeddings: Option<(PathBuf, PathBuf)>,
    token_embeddings: Option<(PathBuf, PathBuf)>,
    fallback_dim: usize,
    labeler: Option<PathBuf>,
    params: Option<&Bound<'_, PyDict>>,
) -> PyResult<PyDocument> {
    let params = parse_params(py, params)?;
    let labeler = match labeler {
        None => Labeler::Default,
        Some(p) => Labeler::Classifier(load_model(&p).map_err(err)?.1),
    };
    let doc = &doc.doc;
    let (sl, tl) = load_side_embeddings(line_embeddings, EmbeddingUnit::Line, doc, fallback_dim)?;
    let (st, tt) = load_side_embeddings(token_embeddings, EmbeddingUnit::Token, doc, fallback_dim)?;
    let output = py.detach(|| {
        let input = PipelineInput {
            pair_id: &doc.pair_id,
            source: &doc.source,
            target: &doc.target,
            src_lines: &sl,
            tgt_lines: &tl,
            src_tokens: &st,
            tgt_tokens: &tt,
        };
        run_pipeline(&input, &labeler, &params)
    });
    Ok(PyDocument { doc: output.map_err(err)?.document })
}

/// Corpus-level scores for `(reference, hypothesis)` pairs.
#[pyfunction]
#[pyo3(signature = (pairs, k = None))]
fn evaluate<'py>(
    py: Python<'py>,
    pairs: Vec<(PyRef<'py, PyDocument>, PyRef<'py, PyDocument>)>,
    k: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let borrowed: Vec<(&AlignmentDocument, &AlignmentDocument)> = pairs.iter().map(|(r, h)| (&r.doc, &h.doc)).collect();
    let report = evaluate_documents(&borrowed, k).map_err(err)?;
    to_py(py, &serde_json::to_value(report).map_err(err)?)
}

/// Segmentation and label agreement between two annotations, per side.
#[pyfunction]
fn kappa<'py>(py: Python<'py>, a: &PyDocument, b: &PyDocument) -> PyResult<Bound<'py, PyAny>> {
    let out = PyDict::new(py);
    for (name, role) in [("source", Role::Source), ("target", Role::Target)] {
        let (ba, bb) = (BoundaryString::from_document(&a.doc, role), BoundaryString::from_document(&b.doc, role));
        let seg = cohen_kappa(ba.bits(), bb.bits()).map_err(err)?;
        let lab = cohen_kappa(&a.doc.token_labels(role), &b.doc.token_labels(role)).map_err(err)?;
        let side = serde_json::json!({ "segmentation": seg, "label": lab });
        out.set_item(name, to_py(py, &side)?)?;
    }
    Ok(out.into_any())
}

/// Random segmentation keeping the label counts of `reference`.
#[pyfunction]
fn random_baseline(reference: &PyDocument, seed: u64) -> PyResult<PyDocument> {
    Ok(PyDocument { doc: random_baseline_doc(&reference.doc, seed).map_err(err)? })
}

/// Trigram fallback embeddings for one side, as unit-norm rows.
#[pyfunction]
#[pyo3(signature = (doc, role, unit, dim = 256))]
fn fallback_embeddings(doc: &PyDocument, role: &str, unit: &str, dim: usize) -> PyResult<Vec<Vec<f64>>> {
    let side = doc.doc.side(parse_role(role)?);
    let m = match parse_unit(unit)? {
        EmbeddingUnit::Line => fallback_line_embeddings(side, dim),
        EmbeddingUnit::Token => fallback_token_embeddings(side, dim),
    }
    .map_err(err)?;
    Ok(m.rows().map(<[f64]>::to_vec).collect())
}

/// Reads an `EMB1` file into a dict with its header fields and `rows`.
#[pyfunction]
fn read_embeddings<'py>(py: Python<'py>, path: PathBuf) -> PyResult<Bound<'py, PyDict>> {
    let file = EmbeddingFile::load(&path).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("unit", file.unit.to_string())?;
    out.set_item("normalized", file.normalized)?;
    out.set_item("count", file.count)?;
    out.set_item("dim", file.dim)?;
    out.set_item("model_tag", &file.model_tag)?;
    out.set_item("doc_id", &file.doc_id)?;
    let rows = PyList::empty(py);
    for row in file.data.chunks(file.dim.max(1)) {
        rows.append(row.to_vec())?;
    }
    out.set_item("rows", rows)?;
    Ok(out)
}

/// Writes rows as an `EMB1` file. Rows are L2-normalized first.
#[pyfunction]
#[pyo3(signature = (path, unit, rows, doc_id, model_tag = ""))]
fn write_embeddings(path: PathBuf, unit: &str, rows: Vec<Vec<f64>>, doc_id: &str, model_tag: &str) -> PyResult<()> {
    let dim = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != dim) {
        return Err(PyValueError::new_err("rows differ in length"));
    }
    let m = EmbeddingMatrix::normalized(parse_unit(unit)?, dim, rows.concat(), doc_id, model_tag).map_err(err)?;
    m.to_file().save(&path).map_err(err)
}

/// The label vocabulary as `(code, description, one_sided)` tuples.
#[pyfunction]
fn labels() -> Vec<(&'static str, &'static str, bool)> {
    SpanLabel::ALL.iter().map(|l| (l.code(), l.description(), l.is_one_sided())).collect()
}

#[pymodule]
fn spanalign(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SpanalignError", m.py().get_type::<SpanalignError>())?;
    m.add_class::<PyDocument>()?;
    m.add_function(wrap_pyfunction!(align, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(kappa, m)?)?;
    m.add_function(wrap_pyfunction!(random_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(fallback_embeddings, m)?)?;
    m.add_function(wrap_pyfunction!(read_embeddings, m)?)?;
    m.add_function(wrap_pyfunction!(write_embeddings, m)?)?;
    m.add_function(wrap_pyfunction!(labels, m)?)?;
    Ok(())
}

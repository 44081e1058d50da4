//! Revisioned document storage behind the annotation service.
//!
//! A store is a directory:
//!
//! ```text
//! manifest.json          {"version": 1, "documents": {"<id>": {"revision": 3, "updated_at": 1712345678901}}}
//! docs/<id>.r3.json      canonical alignment file of the current revision
//! ```
//!
//! Every write goes to a fresh file, is synced, and only becomes current
//! when the manifest (itself written to a temporary file and renamed) points
//! at it. A crash at any point leaves the previous revision readable.
//!
//! Edits use optimistic concurrency: an edit names the revision it was made
//! against and is refused with `CONFLICT` if the document has moved on.
//! Writes to one document are serialized; readers get immutable snapshots.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::format::{deserialize, serialize, FormatError};
use crate::model::{AlignmentDocument, LinkId, Role, Span, SpanLabel, SpanLink, Strength, WordLink};
use crate::transcript::parse_transcript;
use crate::validate::{validate_document, IssueCode, ValidationIssue, ValidationReport};

const MANIFEST: &str = "manifest.json";
const DOCS_DIR: &str = "docs";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EditKind {
    CreateSpanLink {
        #[serde(default)]
        src: Option<[usize; 2]>,
        #[serde(default)]
        tgt: Option<[usize; 2]>,
        label: SpanLabel,
    },
    DeleteSpanLink {
        id: LinkId,
    },
    RelabelLink {
        id: LinkId,
        label: SpanLabel,
    },
    /// Without `parent`, the two-sided link covering the source token is used.
    CreateWordLink {
        src: usize,
        tgt: usize,
        #[serde(default = "sure")]
        strength: Strength,
        #[serde(default)]
        parent: Option<LinkId>,
    },
    DeleteWordLink {
        src: usize,
        tgt: usize,
    },
    SetStrength {
        src: usize,
        tgt: usize,
        strength: Strength,
    },
}

fn sure() -> Strength {
    Strength::Sure
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edit {
    pub client_revision: u64,
    #[serde(flatten)]
    pub kind: EditKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoredDocument {
    pub doc: AlignmentDocument,
    pub revision: u64,
    /// Milliseconds since the Unix epoch.
    pub updated_at: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("CONFLICT: edit made against revision {client}, document is at {current}")]
    Conflict { client: u64, current: u64 },
    #[error("REJECTED: edit would violate {} rule(s)", .0.errors.len())]
    Rejected(ValidationReport),
    #[error("invalid edit: {0}")]
    InvalidEdit(String),
    #[error("no document {0:?}")]
    NotFound(String),
    #[error("document {0:?} already exists")]
    Exists(String),
    #[error("document id {0:?} must be non-empty and use only letters, digits, '.', '_' or '-'")]
    InvalidId(String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("i/o: {0}")]
    Io(String),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::Conflict { .. } => "CONFLICT",
            StoreError::Rejected(_) => "REJECTED",
            StoreError::InvalidEdit(_) => "INVALID_EDIT",
            StoreError::NotFound(_) => "NOT_FOUND",
            StoreError::Exists(_) => "EXISTS",
            StoreError::InvalidId(_) => "INVALID_ID",
            StoreError::Format(e) => e.code(),
            StoreError::Io(_) => "IO",
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |e| StoreError::Io(format!("{}: {e}", path.display()))
}

fn now_millis() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

fn single_issue(code: IssueCode, message: String, ids: Vec<String>) -> StoreError {
    StoreError::Rejected(ValidationReport {
        errors: vec![ValidationIssue { code, message, ids }],
        is_complete: false,
        uncovered_source: 0,
        uncovered_target: 0,
    })
}

fn word_index(doc: &AlignmentDocument, src: usize, tgt: usize) -> Result<usize, StoreError> {
    doc.word_links
        .iter()
        .position(|w| w.src_token == src && w.tgt_token == tgt)
        .ok_or_else(|| StoreError::InvalidEdit(format!("no word link {src}-{tgt}")))
}

fn link_index(doc: &AlignmentDocument, id: LinkId) -> Result<usize, StoreError> {
    doc.span_links.iter().position(|l| l.id == id).ok_or_else(|| StoreError::InvalidEdit(format!("no span link {id}")))
}

/// Applies one edit, returning the next revision. Hard validation errors
/// reject the edit; leaving tokens uncovered does not.
pub fn apply_edit(stored: &StoredDocument, edit: &Edit) -> Result<StoredDocument, StoreError> {
    if edit.client_revision != stored.revision {
        return Err(StoreError::Conflict { client: edit.client_revision, current: stored.revision });
    }
    let mut doc = stored.doc.clone();
    match &edit.kind {
        EditKind::CreateSpanLink { src, tgt, label } => {
            let span = |s: &Option<[usize; 2]>| s.map(|[a, b]| Span::new(a, b));
            let id = doc.next_link_id();
            doc.span_links.push(SpanLink { id, src: span(src), tgt: span(tgt), label: *label });
        }
        EditKind::DeleteSpanLink { id } => {
            doc.remove_link(*id).ok_or_else(|| StoreError::InvalidEdit(format!("no span link {id}")))?;
        }
        EditKind::RelabelLink { id, label } => {
            let i = link_index(&doc, *id)?;
            doc.span_links[i].label = *label;
        }
        EditKind::CreateWordLink { src, tgt, strength, parent } => {
            let parent = match parent {
                Some(p) => *p,
                None => doc
                    .span_links
                    .iter()
                    .find(|l| l.is_two_sided() && l.src.is_some_and(|s| s.contains(*src)))
                    .map(|l| l.id)
                    .ok_or_else(|| {
                        single_issue(
                            IssueCode::WordLinkOrphan,
                            format!("source token {src} is not inside a two-sided span link"),
                            vec![format!("{src}-{tgt}")],
                        )
                    })?,
            };
            doc.word_links.push(WordLink { src_token: *src, tgt_token: *tgt, strength: *strength, parent });
        }
        EditKind::DeleteWordLink { src, tgt } => {
            let i = word_index(&doc, *src, *tgt)?;
            doc.word_links.remove(i);
        }
        EditKind::SetStrength { src, tgt, strength } => {
            let i = word_index(&doc, *src, *tgt)?;
            doc.word_links[i].strength = *strength;
        }
    }
    let report = validate_document(&doc);
    if !report.is_valid() {
        return Err(StoreError::Rejected(report));
    }
    Ok(StoredDocument { doc, revision: stored.revision + 1, updated_at: now_millis() })
}

pub fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'))
}

#[derive(Serialize, Deserialize, Default)]
struct Manifest {
    version: u32,
    documents: BTreeMap<String, ManifestEntry>,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
struct ManifestEntry {
    revision: u64,
    updated_at: u64,
}

struct Slot {
    write: Mutex<()>,
    current: RwLock<Arc<StoredDocument>>,
}

impl Slot {
    fn snapshot(&self) -> Arc<StoredDocument> {
        self.current.read().expect("slot lock").clone()
    }
}

/// Listing entry for one stored document.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DocSummary {
    pub id: String,
    pub revision: u64,
    pub updated_at: u64,
    pub source_lang: String,
    pub target_lang: String,
    pub span_links: usize,
    pub word_links: usize,
    pub is_complete: bool,
}

pub struct Store {
    root: PathBuf,
    slots: RwLock<BTreeMap<String, Arc<Slot>>>,
    manifest_lock: Mutex<()>,
}

impl Store {
    /// Opens a store directory, creating an empty one if needed.
    pub fn open(root: impl Into<PathBuf>) -> Result<Store, StoreError> {
        let root = root.into();
        let docs = root.join(DOCS_DIR);
        fs::create_dir_all(&docs).map_err(io_err(&docs))?;
        let manifest_path = root.join(MANIFEST);
        let manifest: Manifest = if manifest_path.exists() {
            let bytes = fs::read(&manifest_path).map_err(io_err(&manifest_path))?;
            serde_json::from_slice(&bytes).map_err(|e| StoreError::Io(format!("{}: {e}", manifest_path.display())))?
        } else {
            Manifest { version: 1, documents: BTreeMap::new() }
        };
        let store = Store { root, slots: RwLock::new(BTreeMap::new()), manifest_lock: Mutex::new(()) };
        let mut slots = BTreeMap::new();
        for (id, entry) in manifest.documents {
            let path = store.doc_path(&id, entry.revision);
            let bytes = fs::read(&path).map_err(io_err(&path))?;
            let doc = deserialize(&bytes)?;
            let stored = StoredDocument { doc, revision: entry.revision, updated_at: entry.updated_at };
            slots.insert(id, Arc::new(Slot { write: Mutex::new(()), current: RwLock::new(Arc::new(stored)) }));
        }
        *store.slots.write().expect("store lock") = slots;
        store.remove_stale_files();
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn doc_path(&self, id: &str, revision: u64) -> PathBuf {
        self.root.join(DOCS_DIR).join(format!("{id}.r{revision}.json"))
    }

    /// Deletes document files not referenced by the manifest, left over
    /// from interrupted writes.
    fn remove_stale_files(&self) {
        let live: Vec<PathBuf> = self
            .slots
            .read()
            .expect("store lock")
            .iter()
            .map(|(id, slot)| self.doc_path(id, slot.snapshot().revision))
            .collect();
        let Ok(entries) = fs::read_dir(self.root.join(DOCS_DIR)) else { return };
        for entry in entries.flatten() {
            let path = entry.path();
            if !live.contains(&path) {
                let _ = fs::remove_file(&path);
            }
        }
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, StoreError> {
        self.slots.read().expect("store lock").get(id).cloned().ok_or_else(|| StoreError::NotFound(id.to_string()))
    }

    pub fn ids(&self) -> Vec<String> {
        self.slots.read().expect("store lock").keys().cloned().collect()
    }

    pub fn get(&self, id: &str) -> Result<Arc<StoredDocument>, StoreError> {
        Ok(self.slot(id)?.snapshot())
    }

    pub fn list(&self) -> Vec<DocSummary> {
        let slots: Vec<(String, Arc<Slot>)> =
            self.slots.read().expect("store lock").iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        slots
            .into_iter()
            .map(|(id, slot)| {
                let s = slot.snapshot();
                DocSummary {
                    id,
                    revision: s.revision,
                    updated_at: s.updated_at,
                    source_lang: s.doc.source.lang.clone(),
                    target_lang: s.doc.target.lang.clone(),
                    span_links: s.doc.span_links.len(),
                    word_links: s.doc.word_links.len(),
                    is_complete: validate_document(&s.doc).is_complete,
                }
            })
            .collect()
    }

    fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
        let tmp = path.with_extension("tmp");
        let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(bytes).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
        fs::rename(&tmp, path).map_err(io_err(path))
    }

    /// Publishes `stored` as the current revision of `slot` and rewrites the
    /// manifest. The document file must already be on disk.
    fn commit(&self, slot: &Slot, stored: Arc<StoredDocument>) -> Result<(), StoreError> {
        let _guard = self.manifest_lock.lock().expect("manifest lock");
        let previous = std::mem::replace(&mut *slot.current.write().expect("slot lock"), stored);
        if let Err(e) = self.write_manifest() {
            *slot.current.write().expect("slot lock") = previous;
            return Err(e);
        }
        Ok(())
    }

    fn write_manifest(&self) -> Result<(), StoreError> {
        let documents = self
            .slots
            .read()
            .expect("store lock")
            .iter()
            .map(|(id, slot)| {
                let s = slot.snapshot();
                (id.clone(), ManifestEntry { revision: s.revision, updated_at: s.updated_at })
            })
            .collect();
        let manifest = Manifest { version: 1, documents };
        let bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        Self::write_atomic(&self.root.join(MANIFEST), &bytes)
    }

    /// Registers a new document at revision 0.
    pub fn insert(&self, doc: AlignmentDocument) -> Result<Arc<StoredDocument>, StoreError> {
        let id = doc.pair_id.clone();
        if !valid_id(&id) {
            return Err(StoreError::InvalidId(id));
        }
        let report = validate_document(&doc);
        if !report.is_valid() {
            return Err(StoreError::Rejected(report));
        }
        let stored = Arc::new(StoredDocument { doc, revision: 0, updated_at: now_millis() });
        let slot = {
            let mut slots = self.slots.write().expect("store lock");
            if slots.contains_key(&id) {
                return Err(StoreError::Exists(id));
            }
            let slot = Arc::new(Slot { write: Mutex::new(()), current: RwLock::new(stored.clone()) });
            slots.insert(id.clone(), slot.clone());
            slot
        };
        let _w = slot.write.lock().expect("slot write lock");
        let written = Self::write_atomic(&self.doc_path(&id, 0), &serialize(&stored.doc))
            .and_then(|()| self.commit(&slot, stored.clone()));
        if let Err(e) = written {
            self.slots.write().expect("store lock").remove(&id);
            return Err(e);
        }
        Ok(stored)
    }

    /// Applies an edit; on success the new revision is durable on disk.
    pub fn apply(&self, id: &str, edit: &Edit) -> Result<Arc<StoredDocument>, StoreError> {
        let slot = self.slot(id)?;
        let _w = slot.write.lock().expect("slot write lock");
        let current = slot.snapshot();
        let next = Arc::new(apply_edit(&current, edit)?);
        let path = self.doc_path(id, next.revision);
        Self::write_atomic(&path, &serialize(&next.doc))?;
        if let Err(e) = self.commit(&slot, next.clone()) {
            let _ = fs::remove_file(&path);
            return Err(e);
        }
        let _ = fs::remove_file(self.doc_path(id, current.revision));
        Ok(next)
    }

    /// Imports a dataset directory, registering every valid document that
    /// is not already stored.
    pub fn import(&self, dir: impl AsRef<Path>) -> Result<ImportSummary, StoreError> {
        let (docs, mut summary) = import_dataset(dir)?;
        summary.imported.clear();
        let mut kept = Vec::new();
        for doc in docs {
            let id = doc.pair_id.clone();
            match self.insert(doc.clone()) {
                Ok(_) => {
                    summary.imported.push(id);
                    kept.push(doc);
                }
                Err(e) => summary.failures.push(ImportFailure { file: id, error: e.to_string() }),
            }
        }
        summary.rows = summary_rows(&kept);
        Ok(summary)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImportRow {
    pub source_lang: String,
    pub target_lang: String,
    pub recordings: usize,
    /// Sum over recordings with a known duration.
    pub duration_seconds: f64,
    pub missing_durations: usize,
    pub source_tokens: usize,
    pub target_tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImportFailure {
    pub file: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct ImportSummary {
    pub imported: Vec<String>,
    pub rows: Vec<ImportRow>,
    pub failures: Vec<ImportFailure>,
}

/// `h:mm:ss`, rounded to the second.
pub fn format_duration(seconds: f64) -> String {
    let total = seconds.round() as u64;
    format!("{:02}:{:02}:{:02}", total / 3600, total / 60 % 60, total % 60)
}

impl ImportSummary {
    pub fn total_recordings(&self) -> usize {
        self.rows.iter().map(|r| r.recordings).sum()
    }

    pub fn total_duration_seconds(&self) -> f64 {
        self.rows.iter().map(|r| r.duration_seconds).sum()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("src\ttgt\trecordings\tduration\tsource_tokens\ttarget_tokens\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                r.source_lang,
                r.target_lang,
                r.recordings,
                format_duration(r.duration_seconds),
                r.source_tokens,
                r.target_tokens
            );
        }
        let _ = writeln!(
            out,
            "total\t\t{}\t{}\t{}\t{}",
            self.total_recordings(),
            format_duration(self.total_duration_seconds()),
            self.rows.iter().map(|r| r.source_tokens).sum::<usize>(),
            self.rows.iter().map(|r| r.target_tokens).sum::<usize>()
        );
        for f in &self.failures {
            let _ = writeln!(out, "# skipped {}: {}", f.file, f.error);
        }
        out
    }
}

fn summary_rows(docs: &[AlignmentDocument]) -> Vec<ImportRow> {
    let mut rows: BTreeMap<(String, String), ImportRow> = BTreeMap::new();
    for d in docs {
        let key = (d.source.lang.clone(), d.target.lang.clone());
        let row = rows.entry(key.clone()).or_insert_with(|| ImportRow {
            source_lang: key.0,
            target_lang: key.1,
            recordings: 0,
            duration_seconds: 0.0,
            missing_durations: 0,
            source_tokens: 0,
            target_tokens: 0,
        });
        row.recordings += 1;
        match d.meta.duration_seconds {
            Some(s) => row.duration_seconds += s,
            None => row.missing_durations += 1,
        }
        row.source_tokens += d.source.len();
        row.target_tokens += d.target.len();
    }
    rows.into_values().collect()
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), StoreError> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io_err(dir))?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_files(&p, out)?;
        } else {
            out.push(p);
        }
    }
    Ok(())
}

/// `<pair>.source.<lang>.txt` / `<pair>.target.<lang>.txt`.
fn transcript_name(file_name: &str) -> Option<(String, Role, String)> {
    let stem = file_name.strip_suffix(".txt")?;
    let (rest, lang) = stem.rsplit_once('.')?;
    let (pair, role) = rest.rsplit_once('.')?;
    let role = match role {
        "source" => Role::Source,
        "target" => Role::Target,
        _ => return None,
    };
    (!pair.is_empty() && !lang.is_empty()).then(|| (pair.to_string(), role, lang.to_string()))
}

/// Reads a dataset directory tree.
///
/// `*.json` files are canonical alignment files. Transcript pairs named
/// `<pair>.source.<lang>.txt` and `<pair>.target.<lang>.txt` become
/// documents without links. When a document has no split and sits below a
/// top-level `dev` or `test` directory, that name becomes its split.
/// Unreadable, malformed or invalid files are listed in the summary and
/// skipped.
pub fn import_dataset(dir: impl AsRef<Path>) -> Result<(Vec<AlignmentDocument>, ImportSummary), StoreError> {
    let dir = dir.as_ref();
    let mut files = Vec::new();
    collect_files(dir, &mut files)?;
    let mut summary = ImportSummary::default();
    let mut docs: BTreeMap<String, AlignmentDocument> = BTreeMap::new();
    let mut transcripts: BTreeMap<String, [Option<PathBuf>; 2]> = BTreeMap::new();
    let mut fail = |file: &Path, error: String| {
        summary.failures.push(ImportFailure { file: file.display().to_string(), error });
    };
    let split_of = |file: &Path| -> Option<String> {
        let first = file.strip_prefix(dir).ok()?.components().next()?.as_os_str().to_str()?;
        matches!(first, "dev" | "test").then(|| first.to_string())
    };
    let mut add = |doc: AlignmentDocument, file: &Path, fail: &mut dyn FnMut(&Path, String)| {
        let report = validate_document(&doc);
        if !report.is_valid() {
            let codes: Vec<&str> = report.errors.iter().map(|e| e.code.as_str()).collect();
            fail(file, format!("invalid document: {}", codes.join(", ")));
        } else if docs.contains_key(&doc.pair_id) {
            fail(file, format!("duplicate pair id {}", doc.pair_id));
        } else {
            docs.insert(doc.pair_id.clone(), doc);
        }
    };

    for file in &files {
        let name = file.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if name.ends_with(".json") {
            let parsed = fs::read(file)
                .map_err(|e| e.to_string())
                .and_then(|b| deserialize(&b).map_err(|e| format!("{}: {e}", e.code())));
            match parsed {
                Ok(mut doc) => {
                    if doc.meta.split.is_none() {
                        doc.meta.split = split_of(file);
                    }
                    add(doc, file, &mut fail);
                }
                Err(e) => fail(file, e),
            }
        } else if let Some((pair, role, _)) = transcript_name(name) {
            let slot = &mut transcripts.entry(pair).or_default()[role as usize];
            if slot.is_some() {
                fail(file, "second transcript for the same pair and side".into());
            } else {
                *slot = Some(file.clone());
            }
        }
    }
    for (pair, [src, tgt]) in transcripts {
        let (Some(src), Some(tgt)) = (src, tgt) else {
            fail(Path::new(&pair), "transcript pair needs both a source and a target file".into());
            continue;
        };
        let read = |p: &Path, role: Role| -> Result<_, String> {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            let (_, _, lang) = transcript_name(name).expect("matched above");
            let raw = fs::read_to_string(p).map_err(|e| e.to_string())?;
            let doc_id = name.trim_end_matches(".txt").to_string();
            parse_transcript(&raw, &doc_id, &lang, role).map_err(|e| e.to_string())
        };
        match (read(&src, Role::Source), read(&tgt, Role::Target)) {
            (Ok(s), Ok(t)) => {
                let mut doc = AlignmentDocument::new(pair, s, t);
                doc.meta.split = split_of(&src);
                add(doc, &src, &mut fail);
            }
            (Err(e), _) => fail(&src, e),
            (_, Err(e)) => fail(&tgt, e),
        }
    }
    let docs: Vec<AlignmentDocument> = docs.into_values().collect();
    summary.imported = docs.iter().map(|d| d.pair_id.clone()).collect();
    summary.rows = summary_rows(&docs);
    Ok((docs, summary))
}

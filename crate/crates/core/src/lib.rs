//! Alignment workbench for speech transcripts and their simultaneous
//! interpretation.
//!
//! * [`model`], [`transcript`], [`validate`], [`format`]: annotation data,
//!   parsing, guideline checks and the canonical file format.
//! * [`metrics`]: segmentation, span, word and label scores and Cohen's kappa.
//! * [`aligner`], [`labeler`]: automatic alignment, baselines and the label
//!   classifier.
//! * [`analysis`]: corpus statistics.
//! * [`store`]: revisioned on-disk storage and edits for the annotation
//!   service.

pub mod aligner;
pub mod analysis;
pub mod format;
pub mod labeler;
pub mod metrics;
pub mod model;
pub mod store;
pub mod tokenize;
pub mod transcript;
pub mod validate;

pub use aligner::{run_pipeline, AlignError, AlignerParams, EmbeddingFile, EmbeddingMatrix, EmbeddingUnit};
pub use format::{deserialize, serialize, FormatError};
pub use labeler::{Labeler, LabelerError, MlpParams};
pub use model::{
    AlignmentDocument, LinkId, Meta, Role, Span, SpanLabel, SpanLink, Strength, Token, TranscriptSide, WordLink,
};
pub use store::{apply_edit, Edit, EditKind, Store, StoreError, StoredDocument};
pub use transcript::{parse_transcript, ParseError};
pub use validate::{validate_document, IssueCode, ValidationIssue, ValidationReport};

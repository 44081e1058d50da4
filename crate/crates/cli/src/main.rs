use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use spanalign_cli::{
    document_paths, emit, load_document, load_labeler, load_pair, load_params, server, side_embeddings,
};
use spanalign_core::aligner::baseline::baseline_word_align;
use spanalign_core::aligner::{random_baseline, run_pipeline, DraftAlignment, DraftLink, PipelineInput};
use spanalign_core::analysis::{lengths_plot_data, lengths_to_tsv, span_length_distribution, CorpusStats, GroupBy};
use spanalign_core::labeler::{
    save_model, train, training_examples, FallbackTextSimilarity, ModelHeader, PooledTokenSimilarity, SpanSimilarity,
    TrainConfig,
};
use spanalign_core::metrics::{cohen_kappa, evaluate_documents, BoundaryString};
use spanalign_core::store::import_dataset;
use spanalign_core::{serialize, validate_document, AlignmentDocument, EmbeddingUnit, Role, Span, SpanLabel, Store};

#[derive(Parser)]
#[command(name = "spanalign", version, about = "Align, evaluate and annotate interpretation transcripts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Embeddings {
    /// Source and target line embeddings (EMB1); trigram fallback if omitted.
    #[arg(long, num_args = 2, value_names = ["SRC", "TGT"])]
    line_emb: Option<Vec<PathBuf>>,
    /// Source and target token embeddings (EMB1); trigram fallback if omitted.
    #[arg(long, num_args = 2, value_names = ["SRC", "TGT"])]
    tok_emb: Option<Vec<PathBuf>>,
    /// Dimension of fallback embeddings.
    #[arg(long, default_value_t = 256)]
    fallback_dim: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Check alignment files against the annotation rules.
    Validate {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Also fail on documents with uncovered tokens.
        #[arg(long)]
        complete: bool,
    },
    /// Corpus statistics: label shares, length ratios, span lengths, relay and multi-track.
    Stats {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Report each dataset split separately, then all documents.
        #[arg(long)]
        split: bool,
        /// Also print span lengths grouped by `label` or `annotator`.
        #[arg(long)]
        lengths_by: Option<GroupBy>,
        /// Write plot-ready span length samples here.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Align one transcript pair.
    Align {
        /// A canonical `.json` file, or `<dir>/<pair>` with `<pair>.source.<lang>.txt` and `<pair>.target.<lang>.txt`.
        pair: PathBuf,
        #[command(flatten)]
        emb: Embeddings,
        /// Aligner parameters (TOML).
        #[arg(long)]
        params: Option<PathBuf>,
        /// Trained label classifier.
        #[arg(long, conflicts_with = "default_labels")]
        labeler: Option<PathBuf>,
        /// Label every two-sided link as TRAN.
        #[arg(long)]
        default_labels: bool,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Score hypothesis alignments against references.
    Evaluate {
        /// Reference file or directory.
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Hypothesis file or directory; documents are matched by pair id.
        #[arg(long)]
        hyp: PathBuf,
        /// Pk/WindowDiff window; half the mean reference segment length if omitted.
        #[arg(long)]
        k: Option<usize>,
        /// Print `key=value` lines instead of a table.
        #[arg(long)]
        plain: bool,
        /// Print JSON.
        #[arg(long, conflicts_with = "plain")]
        json: bool,
    },
    /// Inter-annotator agreement between two annotations of one recording.
    Kappa {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Random segmentation with the reference's boundary counts and shuffled labels.
    BaselineRandom {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Word alignment over whole transcripts, filtered by position distance.
    BaselineWord {
        /// As for `align`.
        pair: PathBuf,
        /// Source and target token embeddings (EMB1); trigram fallback if omitted.
        #[arg(long, num_args = 2, value_names = ["SRC", "TGT"])]
        tok_emb: Option<Vec<PathBuf>>,
        #[arg(long, default_value_t = 256)]
        fallback_dim: usize,
        /// Drop pairs further apart than this many positions; `none` keeps all.
        #[arg(long, default_value = "50")]
        max_distance: String,
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Train the span label classifier on annotated documents.
    TrainLabeler {
        /// Directory (or file) of annotated canonical documents.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory with `<pair_id>.source.tokens.emb` / `<pair_id>.target.tokens.emb`; trigram fallback if omitted.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long, default_value_t = 300)]
        max_epochs: usize,
        #[arg(long, default_value_t = 1e-3)]
        learning_rate: f64,
    },
    /// Run the annotation service.
    Serve {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Import a dataset directory before serving.
        #[arg(long)]
        import: Option<PathBuf>,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = match run(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    };
    std::process::exit(code);
}

fn run(command: Command) -> Result<i32> {
    match command {
        Command::Validate { paths, complete } => validate(&paths, complete),
        Command::Stats { paths, split, lengths_by, plot } => stats(&paths, split, lengths_by, plot.as_deref()),
        Command::Align { pair, emb, params, labeler, default_labels: _, out } => {
            align(&pair, &emb, params.as_deref(), labeler.as_deref(), out.as_deref())
        }
        Command::Evaluate { reference, hyp, k, plain, json } => evaluate(&reference, &hyp, k, plain, json),
        Command::Kappa { a, b } => kappa(&a, &b),
        Command::BaselineRandom { reference, seed, out } => {
            let doc = random_baseline(&load_document(&reference)?, seed)?;
            emit(out.as_deref(), &serialize(&doc))?;
            Ok(0)
        }
        Command::BaselineWord { pair, tok_emb, fallback_dim, max_distance, params, out } => {
            baseline_word(&pair, tok_emb.as_deref(), fallback_dim, &max_distance, params.as_deref(), out.as_deref())
        }
        Command::TrainLabeler { data, out, seed, embeddings, max_epochs, learning_rate } => {
            let config = TrainConfig { seed, max_epochs, learning_rate, ..Default::default() };
            train_labeler(&data, &out, embeddings.as_deref(), &config)
        }
        Command::Serve { store, port, host, import } => serve(&store, &host, port, import.as_deref()),
    }
}

fn validate(paths: &[PathBuf], require_complete: bool) -> Result<i32> {
    let mut failed = 0;
    for path in document_paths(paths)? {
        let report = match load_document(&path) {
            Ok(doc) => validate_document(&doc),
            Err(e) => {
                println!("{}\tERROR\t{e:#}", path.display());
                failed += 1;
                continue;
            }
        };
        let status = match (report.is_valid(), report.is_complete) {
            (false, _) => "INVALID",
            (true, true) => "OK",
            (true, false) => "INCOMPLETE",
        };
        if !report.is_valid() || (require_complete && !report.is_complete) {
            failed += 1;
        }
        println!(
            "{}\t{status}\tuncovered source={} target={}",
            path.display(),
            report.uncovered_source,
            report.uncovered_target
        );
        for issue in &report.errors {
            println!("  {}\t{}\t{}", issue.code.as_str(), issue.message, issue.ids.join(","));
        }
    }
    Ok(i32::from(failed > 0))
}

/// Directories go through the dataset importer, files are read directly.
fn load_corpus(paths: &[PathBuf]) -> Result<Vec<AlignmentDocument>> {
    let mut docs = Vec::new();
    for p in paths {
        if p.is_dir() {
            let (found, summary) = import_dataset(p)?;
            for f in &summary.failures {
                log::warn!("skipped {}: {}", f.file, f.error);
            }
            docs.extend(found);
        } else {
            docs.push(load_document(p)?);
        }
    }
    Ok(docs)
}

fn stats(paths: &[PathBuf], split: bool, lengths_by: Option<GroupBy>, plot: Option<&Path>) -> Result<i32> {
    let docs = load_corpus(paths)?;
    if docs.is_empty() {
        bail!("no documents found");
    }
    let refs: Vec<&AlignmentDocument> = docs.iter().collect();
    let blocks = if split { CorpusStats::by_split(&refs) } else { vec![CorpusStats::compute("all", &refs)] };
    let text: Vec<String> = blocks.iter().map(CorpusStats::to_tsv).collect();
    print!("{}", text.join("\n"));
    if let Some(group) = lengths_by {
        let rows = span_length_distribution(&refs, group)?;
        println!("\n# span length (tokens) by {group:?}");
        print!("{}", lengths_to_tsv(&rows));
        if let Some(p) = plot {
            emit(Some(p), lengths_plot_data(&rows).as_bytes())?;
        }
    } else if let Some(p) = plot {
        let rows = span_length_distribution(&refs, GroupBy::Label)?;
        emit(Some(p), lengths_plot_data(&rows).as_bytes())?;
    }
    Ok(0)
}

fn align(
    pair: &Path,
    emb: &Embeddings,
    params: Option<&Path>,
    labeler: Option<&Path>,
    out: Option<&Path>,
) -> Result<i32> {
    let (pair_id, source, target) = load_pair(pair)?;
    let params = load_params(params)?;
    let labeler = load_labeler(labeler)?;
    let (sl, tl) = side_embeddings(emb.line_emb.as_deref(), EmbeddingUnit::Line, &source, &target, emb.fallback_dim)?;
    let (st, tt) = side_embeddings(emb.tok_emb.as_deref(), EmbeddingUnit::Token, &source, &target, emb.fallback_dim)?;
    let input = PipelineInput {
        pair_id: &pair_id,
        source: &source,
        target: &target,
        src_lines: &sl,
        tgt_lines: &tl,
        src_tokens: &st,
        tgt_tokens: &tt,
    };
    let output = run_pipeline(&input, &labeler, &params)?;
    log::info!("{} beads, score {:.4}", output.coarse.beads.len(), output.coarse.score);
    emit(out, &serialize(&output.document))?;
    Ok(0)
}

fn load_matched(reference: &Path, hyp: &Path) -> Result<Vec<(AlignmentDocument, AlignmentDocument)>> {
    if reference.is_file() && hyp.is_file() {
        return Ok(vec![(load_document(reference)?, load_document(hyp)?)]);
    }
    let refs = load_corpus(&[reference.to_path_buf()])?;
    let hyps = load_corpus(&[hyp.to_path_buf()])?;
    let mut pairs = Vec::new();
    for r in refs {
        match hyps.iter().find(|h| h.pair_id == r.pair_id) {
            Some(h) => pairs.push((r, h.clone())),
            None => log::warn!("no hypothesis for {}", r.pair_id),
        }
    }
    if pairs.is_empty() {
        bail!("no reference has a hypothesis with the same pair id");
    }
    Ok(pairs)
}

fn evaluate(reference: &Path, hyp: &Path, k: Option<usize>, plain: bool, json: bool) -> Result<i32> {
    let pairs = load_matched(reference, hyp)?;
    let borrowed: Vec<(&AlignmentDocument, &AlignmentDocument)> = pairs.iter().map(|(r, h)| (r, h)).collect();
    let report = evaluate_documents(&borrowed, k)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else if plain {
        print!("{}", report.to_key_values());
    } else {
        print!("{}", report.to_table());
    }
    Ok(0)
}

fn kappa(a: &Path, b: &Path) -> Result<i32> {
    let (a, b) = (load_document(a)?, load_document(b)?);
    println!("measure\tside\tkappa\tobserved\texpected");
    for role in [Role::Source, Role::Target] {
        let side = match role {
            Role::Source => "source",
            Role::Target => "target",
        };
        let (ba, bb) = (BoundaryString::from_document(&a, role), BoundaryString::from_document(&b, role));
        let seg = cohen_kappa(ba.bits(), bb.bits()).context("segmentation kappa")?;
        println!(
            "segmentation\t{side}\t{:.4}\t{:.4}\t{:.4}",
            seg.kappa, seg.observed_agreement, seg.expected_agreement
        );
        let la = a.token_labels(role);
        let lb = b.token_labels(role);
        let lab = cohen_kappa(&la, &lb).context("label kappa")?;
        println!("label\t{side}\t{:.4}\t{:.4}\t{:.4}", lab.kappa, lab.observed_agreement, lab.expected_agreement);
    }
    Ok(0)
}

fn baseline_word(
    pair: &Path,
    tok_emb: Option<&[PathBuf]>,
    fallback_dim: usize,
    max_distance: &str,
    params: Option<&Path>,
    out: Option<&Path>,
) -> Result<i32> {
    let (pair_id, source, target) = load_pair(pair)?;
    let mut params = load_params(params)?;
    params.baseline_max_distance = match max_distance {
        "none" => None,
        d => Some(d.parse().with_context(|| format!("--max-distance {d:?}"))?),
    };
    let (st, tt) = side_embeddings(tok_emb, EmbeddingUnit::Token, &source, &target, fallback_dim)?;
    let pairs = baseline_word_align(&st, &tt, &params)?;
    // one link over both whole transcripts carries the word links
    let whole = |n: usize| (n > 0).then(|| Span::new(0, n));
    let draft = match (whole(source.len()), whole(target.len())) {
        (Some(s), Some(t)) => DraftAlignment {
            links: vec![DraftLink { src: Some(s), tgt: Some(t) }],
            word_links: pairs.into_iter().map(|(i, j)| (i, j, 0)).collect(),
        },
        _ => DraftAlignment::default(),
    };
    let labels = vec![SpanLabel::Translation; draft.links.len()];
    let doc = draft.into_document(&pair_id, source, target, &labels);
    emit(out, &serialize(&doc))?;
    Ok(0)
}

fn train_labeler(data: &Path, out: &Path, embeddings: Option<&Path>, config: &TrainConfig) -> Result<i32> {
    let docs = load_corpus(&[data.to_path_buf()])?;
    let mut examples = Vec::new();
    for doc in &docs {
        let found = match embeddings {
            Some(dir) => {
                let file = |side: &str| dir.join(format!("{}.{side}.tokens.emb", doc.pair_id));
                let (s, t) = side_embeddings(
                    Some(&[file("source"), file("target")]),
                    EmbeddingUnit::Token,
                    &doc.source,
                    &doc.target,
                    0,
                )?;
                s.check_side(&doc.source)?;
                t.check_side(&doc.target)?;
                let sim = PooledTokenSimilarity { source: &s, target: &t };
                training_examples(doc, &sim as &dyn SpanSimilarity)
            }
            None => {
                let sim = FallbackTextSimilarity { source: &doc.source, target: &doc.target, dim: 256 };
                training_examples(doc, &sim)
            }
        };
        examples.extend(found);
    }
    let report = train(&examples, config)?;
    save_model(out, &ModelHeader::new(config.seed), &report.params)?;
    println!(
        "examples\t{}\ntrain\t{}\nheldout\t{}\nbest_epoch\t{}\nepochs_run\t{}\nheldout_loss\t{:.6}\nheldout_accuracy\t{:.4}",
        examples.len(),
        report.train_size,
        report.heldout_size,
        report.best_epoch,
        report.train_losses.len(),
        report.heldout_losses.get(report.best_epoch.saturating_sub(1)).copied().unwrap_or(f64::NAN),
        report.heldout_accuracy
    );
    Ok(0)
}

fn serve(root: &Path, host: &str, port: u16, import: Option<&Path>) -> Result<i32> {
    let store = Store::open(root)?;
    if let Some(dir) = import {
        let summary = store.import(dir)?;
        eprint!("{}", summary.to_tsv());
    }
    let addr: SocketAddr = format!("{host}:{port}").parse().with_context(|| format!("address {host}:{port}"))?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(server::serve(Arc::new(store), addr))?;
    Ok(0)
}

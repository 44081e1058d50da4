use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use spanalign_core::aligner::embedding::{fallback_line_embeddings, fallback_token_embeddings};
use spanalign_core::{deserialize, serialize, validate_document, EmbeddingFile, LinkId, Span, SpanLabel, SpanLink};

const SOURCE: &str = "Good morning, everyone.\n\
Today we talk about [NAME](Anna) and the new water law.\n\
\n\
The price of energy will be lower next year.\n\
Thank you very much.\n";

const TARGET: &str = "Dobré ráno všem.\n\
Dnes mluvíme o [NAME](Anna) a @ novém vodním zákoně ...\n\
Cena energie bude příští rok nižší.\n\
Děkuji.\n";

fn spanalign(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spanalign")).args(args).current_dir(dir).output().unwrap()
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "status {:?}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn pair_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("talk.source.en.txt"), SOURCE).unwrap();
    fs::write(dir.path().join("talk.target.cs.txt"), TARGET).unwrap();
    dir
}

#[test]
fn align_produces_a_complete_canonical_file() {
    let dir = pair_dir();
    ok(&spanalign(&["align", "talk", "--default-labels", "-o", "talk.json"], dir.path()));
    let doc = deserialize(&fs::read(dir.path().join("talk.json")).unwrap()).unwrap();
    assert_eq!(doc.pair_id, "talk");
    assert_eq!(doc.source.line_count(), 4);
    let report = validate_document(&doc);
    assert!(report.is_valid() && report.is_complete, "{report:?}");
    assert!(doc.span_links.iter().filter(|l| l.is_two_sided()).all(|l| l.label == SpanLabel::Translation));

    let raw: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("talk.json")).unwrap()).unwrap();
    for key in ["pair_id", "meta", "source", "target", "span_links", "word_links"] {
        assert!(raw.get(key).is_some(), "missing {key}");
    }
    assert_eq!(raw["source"]["flags"]["name"], serde_json::json!([9]));

    let out = ok(&spanalign(&["validate", "talk.json", "--complete"], dir.path()));
    assert!(out.contains("\tOK\t"));
}

#[test]
fn align_reads_emb1_files() {
    let dir = pair_dir();
    ok(&spanalign(&["align", "talk", "-o", "talk.json"], dir.path()));
    let doc = deserialize(&fs::read(dir.path().join("talk.json")).unwrap()).unwrap();
    let write = |name: &str, m: spanalign_core::EmbeddingMatrix| {
        let file = m.to_file();
        let path = dir.path().join(name);
        file.save(&path).unwrap();
        let bytes = fs::read(&path).unwrap();
        let back = EmbeddingFile::load(&path).unwrap();
        assert_eq!(back, file);
        let mut again = Vec::new();
        back.write_to(&mut again).unwrap();
        assert_eq!(again, bytes);
    };
    write("s.lines.emb", fallback_line_embeddings(&doc.source, 64).unwrap());
    write("t.lines.emb", fallback_line_embeddings(&doc.target, 64).unwrap());
    write("s.tokens.emb", fallback_token_embeddings(&doc.source, 64).unwrap());
    write("t.tokens.emb", fallback_token_embeddings(&doc.target, 64).unwrap());

    let args = [
        "align",
        "talk.json",
        "--line-emb",
        "s.lines.emb",
        "t.lines.emb",
        "--tok-emb",
        "s.tokens.emb",
        "t.tokens.emb",
        "-o",
        "emb.json",
    ];
    ok(&spanalign(&args, dir.path()));
    let aligned = deserialize(&fs::read(dir.path().join("emb.json")).unwrap()).unwrap();
    assert!(validate_document(&aligned).is_complete);

    // token file where a line file is expected
    let swapped = ["align", "talk.json", "--line-emb", "s.tokens.emb", "t.tokens.emb"];
    let out = spanalign(&swapped, dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("token"));
}

#[test]
fn evaluate_kappa_and_baselines() {
    let dir = pair_dir();
    ok(&spanalign(&["align", "talk", "-o", "hyp.json"], dir.path()));
    let table = ok(&spanalign(&["evaluate", "--ref", "hyp.json", "--hyp", "hyp.json"], dir.path()));
    assert!(table.contains("1.000"));
    let plain =
        ok(&spanalign(&["evaluate", "--ref", "hyp.json", "--hyp", "hyp.json", "--plain", "--k", "2"], dir.path()));
    assert!(plain.contains("word.aer=0.000000"));
    assert!(plain.contains("segmentation.src.pk=0.000000"));
    let json = ok(&spanalign(&["evaluate", "--ref", "hyp.json", "--hyp", "hyp.json", "--json"], dir.path()));
    let report: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(report["span"]["relaxed_f1"], 1.0);

    let kappa = ok(&spanalign(&["kappa", "--a", "hyp.json", "--b", "hyp.json"], dir.path()));
    assert!(kappa.lines().any(|l| l.starts_with("segmentation\tsource\t1.0000")));

    ok(&spanalign(&["baseline-random", "--ref", "hyp.json", "--seed", "4", "-o", "r1.json"], dir.path()));
    ok(&spanalign(&["baseline-random", "--ref", "hyp.json", "--seed", "4", "-o", "r2.json"], dir.path()));
    let (r1, r2) = (fs::read(dir.path().join("r1.json")).unwrap(), fs::read(dir.path().join("r2.json")).unwrap());
    assert_eq!(r1, r2);
    let reference = deserialize(&fs::read(dir.path().join("hyp.json")).unwrap()).unwrap();
    assert_eq!(deserialize(&r1).unwrap().label_counts(), reference.label_counts());

    ok(&spanalign(&["baseline-word", "talk", "--max-distance", "2", "-o", "w.json"], dir.path()));
    let w = deserialize(&fs::read(dir.path().join("w.json")).unwrap()).unwrap();
    assert!(validate_document(&w).is_valid());
    assert!(w.word_links.iter().all(|l| l.src_token.abs_diff(l.tgt_token) <= 2));
}

#[test]
fn validate_flags_broken_files() {
    let dir = pair_dir();
    ok(&spanalign(&["align", "talk", "-o", "good.json"], dir.path()));
    let mut doc = deserialize(&fs::read(dir.path().join("good.json")).unwrap()).unwrap();
    let first = doc.span_links[0].clone();
    doc.span_links.push(SpanLink { id: LinkId(99), src: first.src, tgt: None, label: SpanLabel::FactualAddition });
    fs::write(dir.path().join("overlap.json"), serialize(&doc)).unwrap();
    fs::write(dir.path().join("garbage.json"), b"{not json").unwrap();
    let out = spanalign(&["validate", "."], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("good.json\tOK"));
    assert!(text.contains("overlap.json\tINVALID"));
    assert!(text.contains("garbage.json\tERROR"));

    doc.span_links.truncate(1);
    doc.span_links[0].src = Some(Span::new(0, 1));
    doc.word_links.retain(|w| w.parent == LinkId(0) && w.src_token < 1);
    fs::write(dir.path().join("partial.json"), serialize(&doc)).unwrap();
    let out = spanalign(&["validate", "partial.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let out = spanalign(&["validate", "partial.json", "--complete"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn stats_and_labeler_training() {
    let dir = pair_dir();
    let data = dir.path().join("data");
    fs::create_dir_all(data.join("dev")).unwrap();
    ok(&spanalign(&["align", "talk", "-o", "data/dev/talk.json"], dir.path()));
    let out =
        ok(&spanalign(&["stats", "data", "--split", "--lengths-by", "label", "--plot", "lengths.tsv"], dir.path()));
    assert!(out.contains("## dev (1 documents)"));
    assert!(out.contains("## all (1 documents)"));
    assert!(out.contains("TRAN\t100.00\t100.00"));
    assert!(dir.path().join("lengths.tsv").exists());
    let out = spanalign(&["stats", "data", "--lengths-by", "annotator"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    // mix labels so training sees two classes
    let path = data.join("dev/talk.json");
    let mut doc = deserialize(&fs::read(&path).unwrap()).unwrap();
    let mut copies = Vec::new();
    for i in 0..6 {
        let mut d = doc.clone();
        d.pair_id = format!("talk{i}");
        for (j, l) in d.span_links.iter_mut().enumerate() {
            if l.is_two_sided() && (i + j) % 2 == 0 {
                l.label = SpanLabel::Paraphrase;
            }
        }
        copies.push(d);
    }
    doc.pair_id = "talk-base".into();
    copies.push(doc);
    fs::remove_file(&path).unwrap();
    for d in &copies {
        fs::write(data.join(format!("dev/{}.json", d.pair_id)), serialize(d)).unwrap();
    }
    let out = ok(&spanalign(
        &["train-labeler", "--data", "data", "--out", "model.bin", "--seed", "3", "--max-epochs", "5"],
        dir.path(),
    ));
    assert!(out.contains("heldout_accuracy"));
    ok(&spanalign(&["align", "talk", "--labeler", "model.bin", "-o", "labeled.json"], dir.path()));
    let labeled = deserialize(&fs::read(dir.path().join("labeled.json")).unwrap()).unwrap();
    assert!(validate_document(&labeled).is_complete);

    let out = spanalign(&["align", "talk", "--labeler", "model.bin", "--default-labels"], dir.path());
    assert!(!out.status.success());
}

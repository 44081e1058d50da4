//! Corpus statistics over annotated documents: label shares, span lengths,
//! length ratios, direct vs relay interpreting and multi-track pairs.
//!
//! Every report sorts its inputs by `pair_id` first, so results do not
//! depend on the order documents are passed in.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::model::{AlignmentDocument, Role, SpanLabel};
use crate::validate::validate_document;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AnalysisError {
    #[error("document {0} is not completely annotated")]
    Incomplete(String),
    #[error("document {0} has no annotator id")]
    MissingAnnotator(String),
    #[error("unknown group key `{0}` (expected label or annotator)")]
    UnknownGroup(String),
}

fn sorted<'a>(docs: &[&'a AlignmentDocument]) -> Vec<&'a AlignmentDocument> {
    let mut v = docs.to_vec();
    v.sort_by(|a, b| a.pair_id.cmp(&b.pair_id));
    v
}

fn role_name(role: Role) -> &'static str {
    match role {
        Role::Source => "source",
        Role::Target => "target",
    }
}

/// Percentage of tokens under each label, per side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelDistribution {
    pub source: BTreeMap<SpanLabel, f64>,
    pub target: BTreeMap<SpanLabel, f64>,
    pub source_tokens: usize,
    pub target_tokens: usize,
}

impl LabelDistribution {
    pub fn side(&self, role: Role) -> &BTreeMap<SpanLabel, f64> {
        match role {
            Role::Source => &self.source,
            Role::Target => &self.target,
        }
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("label\tsource_pct\ttarget_pct\n");
        for label in SpanLabel::ALL {
            let _ = writeln!(out, "{}\t{:.2}\t{:.2}", label, self.source[&label], self.target[&label]);
        }
        out
    }
}

pub fn token_label_distribution(docs: &[&AlignmentDocument]) -> Result<LabelDistribution, AnalysisError> {
    let mut counts = [BTreeMap::new(), BTreeMap::new()];
    let mut totals = [0usize; 2];
    for doc in sorted(docs) {
        if !validate_document(doc).is_complete {
            return Err(AnalysisError::Incomplete(doc.pair_id.clone()));
        }
        for (k, role) in [Role::Source, Role::Target].into_iter().enumerate() {
            for label in doc.token_labels(role).into_iter().flatten() {
                *counts[k].entry(label).or_insert(0usize) += 1;
                totals[k] += 1;
            }
        }
    }
    let pct = |k: usize| -> BTreeMap<SpanLabel, f64> {
        SpanLabel::ALL
            .iter()
            .map(|l| {
                let n = counts[k].get(l).copied().unwrap_or(0);
                let p = if totals[k] == 0 { 0.0 } else { 100.0 * n as f64 / totals[k] as f64 };
                (*l, p)
            })
            .collect()
    };
    Ok(LabelDistribution { source: pct(0), target: pct(1), source_tokens: totals[0], target_tokens: totals[1] })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelRatio {
    pub label: SpanLabel,
    pub links: usize,
    pub source_tokens: usize,
    pub target_tokens: usize,
    /// Source-length-weighted mean of per-link target/source token ratios.
    pub ratio: f64,
}

/// Per label, `Σ tgt_len / Σ src_len` over two-sided links. Labels without
/// links are left out.
pub fn weighted_length_ratio(docs: &[&AlignmentDocument]) -> Vec<LabelRatio> {
    let mut acc: BTreeMap<SpanLabel, (usize, usize, usize)> = BTreeMap::new();
    for doc in docs {
        for link in &doc.span_links {
            if let (Some(s), Some(t)) = (link.src, link.tgt) {
                let e = acc.entry(link.label).or_default();
                e.0 += 1;
                e.1 += s.len();
                e.2 += t.len();
            }
        }
    }
    acc.into_iter()
        .filter(|(_, (_, s, _))| *s > 0)
        .map(|(label, (links, s, t))| LabelRatio {
            label,
            links,
            source_tokens: s,
            target_tokens: t,
            ratio: t as f64 / s as f64,
        })
        .collect()
}

pub fn ratios_to_tsv(rows: &[LabelRatio]) -> String {
    let mut out = String::from("label\tlinks\tsource_tokens\ttarget_tokens\tratio\n");
    for r in rows {
        let _ = writeln!(out, "{}\t{}\t{}\t{}\t{:.4}", r.label, r.links, r.source_tokens, r.target_tokens, r.ratio);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    Label,
    Annotator,
}

impl FromStr for GroupBy {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "label" => Ok(GroupBy::Label),
            "annotator" => Ok(GroupBy::Annotator),
            other => Err(AnalysisError::UnknownGroup(other.to_string())),
        }
    }
}

/// Linearly interpolated quantile of sorted data (R's type 7).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthSummary {
    pub group: String,
    pub side: &'static str,
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// Span lengths in tokens, ascending; the plot-ready sample.
    pub lengths: Vec<usize>,
}

/// Span lengths in tokens, grouped by label or annotator and by side.
pub fn span_length_distribution(
    docs: &[&AlignmentDocument],
    group_by: GroupBy,
) -> Result<Vec<LengthSummary>, AnalysisError> {
    let mut groups: BTreeMap<(String, &'static str), Vec<usize>> = BTreeMap::new();
    for doc in sorted(docs) {
        let annotator = match group_by {
            GroupBy::Label => None,
            GroupBy::Annotator => Some(
                doc.meta.annotator_id.clone().ok_or_else(|| AnalysisError::MissingAnnotator(doc.pair_id.clone()))?,
            ),
        };
        for link in &doc.span_links {
            for role in [Role::Source, Role::Target] {
                if let Some(span) = link.span(role) {
                    let key = annotator.clone().unwrap_or_else(|| link.label.to_string());
                    groups.entry((key, role_name(role))).or_default().push(span.len());
                }
            }
        }
    }
    Ok(groups
        .into_iter()
        .map(|((group, side), mut lengths)| {
            lengths.sort_unstable();
            let xs: Vec<f64> = lengths.iter().map(|&l| l as f64).collect();
            LengthSummary {
                group,
                side,
                count: xs.len(),
                mean: lengths.iter().sum::<usize>() as f64 / xs.len() as f64,
                min: xs[0],
                q1: quantile(&xs, 0.25),
                median: quantile(&xs, 0.5),
                q3: quantile(&xs, 0.75),
                max: xs[xs.len() - 1],
                lengths,
            }
        })
        .collect())
}

pub fn lengths_to_tsv(rows: &[LengthSummary]) -> String {
    let mut out = String::from("group\tside\tcount\tmean\tmin\tq1\tmedian\tq3\tmax\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{:.3}\t{}\t{}\t{}\t{}\t{}",
            r.group, r.side, r.count, r.mean, r.min, r.q1, r.median, r.q3, r.max
        );
    }
    out
}

/// One line per span, for external plotting.
pub fn lengths_plot_data(rows: &[LengthSummary]) -> String {
    let mut out = String::from("group\tside\tlength\n");
    for r in rows {
        for l in &r.lengths {
            let _ = writeln!(out, "{}\t{}\t{l}", r.group, r.side);
        }
    }
    out
}

fn char_ratio(doc: &AlignmentDocument) -> Option<f64> {
    let src = doc.source.char_len();
    (src > 0).then(|| doc.target.char_len() as f64 / src as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelayGroup {
    pub documents: usize,
    /// Mean over documents of interpretation/source character length.
    pub mean_char_ratio: f64,
    /// Token label shares of this group, in percent.
    pub labels: Option<LabelDistribution>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelayReport {
    pub direct: Option<RelayGroup>,
    pub relay: Option<RelayGroup>,
    /// Documents without a relay flag, left out of both groups.
    pub unflagged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiTrackRow {
    pub source_doc: String,
    pub lang: String,
    pub first: String,
    pub second: String,
    /// Character length of the first interpretation over the second.
    pub char_ratio: f64,
    pub token_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparativeReport {
    /// Missing when no document carries a relay flag.
    pub relay: Option<RelayReport>,
    pub multi_track: Vec<MultiTrackRow>,
}

fn relay_group(docs: &[&AlignmentDocument]) -> Option<RelayGroup> {
    let ratios: Vec<f64> = docs.iter().filter_map(|d| char_ratio(d)).collect();
    if ratios.is_empty() {
        return None;
    }
    let complete: Vec<&AlignmentDocument> = docs.iter().copied().filter(|d| validate_document(d).is_complete).collect();
    Some(RelayGroup {
        documents: docs.len(),
        mean_char_ratio: ratios.iter().sum::<f64>() / ratios.len() as f64,
        labels: (!complete.is_empty()).then(|| token_label_distribution(&complete).expect("complete documents")),
    })
}

/// Direct vs relay length and label comparison, plus every pair of
/// interpretations sharing a source document and target language.
///
/// Multi-track pairs are taken in `pair_id` order within each group; the
/// ratio is first over second.
pub fn comparative_reports(docs: &[&AlignmentDocument]) -> ComparativeReport {
    let docs = sorted(docs);
    let flagged: Vec<_> = docs.iter().filter(|d| d.meta.relay.is_some()).copied().collect();
    let relay = if flagged.is_empty() {
        log::warn!("no document carries a relay flag; direct/relay comparison omitted");
        None
    } else {
        let pick = |flag: bool| flagged.iter().copied().filter(|d| d.meta.relay == Some(flag)).collect::<Vec<_>>();
        Some(RelayReport {
            direct: relay_group(&pick(false)),
            relay: relay_group(&pick(true)),
            unflagged: docs.len() - flagged.len(),
        })
    };

    let mut tracks: BTreeMap<(String, String), Vec<&AlignmentDocument>> = BTreeMap::new();
    for d in &docs {
        tracks.entry((d.source.doc_id.clone(), d.target.lang.clone())).or_default().push(d);
    }
    let mut multi_track = Vec::new();
    for ((source_doc, lang), group) in tracks {
        for (i, a) in group.iter().enumerate() {
            for b in &group[i + 1..] {
                let (ca, cb) = (a.target.char_len(), b.target.char_len());
                let (ta, tb) = (a.target.len(), b.target.len());
                if cb == 0 || tb == 0 {
                    continue;
                }
                multi_track.push(MultiTrackRow {
                    source_doc: source_doc.clone(),
                    lang: lang.clone(),
                    first: a.target.doc_id.clone(),
                    second: b.target.doc_id.clone(),
                    char_ratio: ca as f64 / cb as f64,
                    token_ratio: ta as f64 / tb as f64,
                });
            }
        }
    }
    ComparativeReport { relay, multi_track }
}

impl ComparativeReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        match &self.relay {
            None => out.push_str("# direct/relay: no relay metadata\n"),
            Some(r) => {
                out.push_str("group\tdocuments\tmean_char_ratio");
                for l in SpanLabel::ALL {
                    let _ = write!(out, "\tsrc_{l}\ttgt_{l}");
                }
                out.push('\n');
                for (name, g) in [("direct", &r.direct), ("relay", &r.relay)] {
                    let Some(g) = g else { continue };
                    let _ = write!(out, "{name}\t{}\t{:.4}", g.documents, g.mean_char_ratio);
                    for l in SpanLabel::ALL {
                        match &g.labels {
                            Some(d) => {
                                let _ = write!(out, "\t{:.2}\t{:.2}", d.source[&l], d.target[&l]);
                            }
                            None => out.push_str("\t-\t-"),
                        }
                    }
                    out.push('\n');
                }
            }
        }
        out.push_str("\nsource_doc\tlang\tfirst\tsecond\tchar_ratio\ttoken_ratio\n");
        for r in &self.multi_track {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{:.4}\t{:.4}",
                r.source_doc, r.lang, r.first, r.second, r.char_ratio, r.token_ratio
            );
        }
        out
    }
}

/// The statistics of one document set, as printed by the `stats` command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub name: String,
    pub documents: usize,
    pub labels: Option<LabelDistribution>,
    pub ratios: Vec<LabelRatio>,
    pub lengths: Vec<LengthSummary>,
    pub comparative: ComparativeReport,
}

impl CorpusStats {
    /// Label shares need complete documents; when some are incomplete that
    /// section is left empty and a warning is logged.
    pub fn compute(name: impl Into<String>, docs: &[&AlignmentDocument]) -> Self {
        let name = name.into();
        let labels = match token_label_distribution(docs) {
            Ok(d) => Some(d),
            Err(e) => {
                log::warn!("{name}: label distribution skipped: {e}");
                None
            }
        };
        CorpusStats {
            documents: docs.len(),
            labels,
            ratios: weighted_length_ratio(docs),
            lengths: span_length_distribution(docs, GroupBy::Label).expect("label grouping cannot fail"),
            comparative: comparative_reports(docs),
            name,
        }
    }

    /// One block per split (from `meta.split`) and one for all documents.
    pub fn by_split(docs: &[&AlignmentDocument]) -> Vec<CorpusStats> {
        let mut splits: BTreeMap<String, Vec<&AlignmentDocument>> = BTreeMap::new();
        for d in docs {
            if let Some(s) = &d.meta.split {
                splits.entry(s.clone()).or_default().push(d);
            }
        }
        let mut out: Vec<CorpusStats> = splits.iter().map(|(s, ds)| Self::compute(s.clone(), ds)).collect();
        out.push(Self::compute("all", docs));
        out
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("## {} ({} documents)\n\n", self.name, self.documents);
        out.push_str("# token label distribution (%)\n");
        match &self.labels {
            Some(d) => out.push_str(&d.to_tsv()),
            None => out.push_str("# skipped: incomplete documents\n"),
        }
        out.push_str("\n# weighted span length ratio (target/source tokens)\n");
        out.push_str(&ratios_to_tsv(&self.ratios));
        out.push_str("\n# span length (tokens) per label\n");
        out.push_str(&lengths_to_tsv(&self.lengths));
        out.push_str("\n# direct vs relay; multi-track\n");
        out.push_str(&self.comparative.to_tsv());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LinkId, Meta, Span, SpanLink, TranscriptSide};

    type RawLink = (Option<(usize, usize)>, Option<(usize, usize)>, SpanLabel);

    fn doc(id: &str, src: usize, tgt: usize, links: &[RawLink]) -> AlignmentDocument {
        let words = |n: usize| vec![(0..n).map(|i| format!("w{i}")).collect::<Vec<_>>()];
        let mut d = AlignmentDocument::new(
            id,
            TranscriptSide::from_lines(format!("{id}-s"), "en", Role::Source, &words(src)),
            TranscriptSide::from_lines(format!("{id}-t"), "cs", Role::Target, &words(tgt)),
        );
        for (i, (s, t, label)) in links.iter().enumerate() {
            d.span_links.push(SpanLink {
                id: LinkId(i as u32),
                src: s.map(|(a, b)| Span::new(a, b)),
                tgt: t.map(|(a, b)| Span::new(a, b)),
                label: *label,
            });
        }
        d
    }

    #[test]
    fn single_translation_is_all_tran() {
        let d = doc("a", 5, 3, &[(Some((0, 5)), Some((0, 3)), SpanLabel::Translation)]);
        let dist = token_label_distribution(&[&d]).unwrap();
        assert_eq!(dist.source[&SpanLabel::Translation], 100.0);
        assert_eq!(dist.target[&SpanLabel::Translation], 100.0);
    }

    #[test]
    fn one_sided_addition_counts_on_its_side_only() {
        let d = doc(
            "a",
            4,
            2,
            &[(Some((0, 2)), Some((0, 2)), SpanLabel::Translation), (Some((2, 4)), None, SpanLabel::FactualAddition)],
        );
        let dist = token_label_distribution(&[&d]).unwrap();
        assert_eq!(dist.source[&SpanLabel::FactualAddition], 50.0);
        assert_eq!(dist.target[&SpanLabel::FactualAddition], 0.0);
        let total: f64 = dist.source.values().sum();
        assert!((total - 100.0).abs() < 1e-9);
        let partial = doc("b", 4, 2, &[(Some((0, 2)), Some((0, 2)), SpanLabel::Translation)]);
        assert_eq!(token_label_distribution(&[&partial]), Err(AnalysisError::Incomplete("b".into())));
    }

    #[test]
    fn weighted_ratio() {
        let d = doc(
            "a",
            5,
            3,
            &[
                (Some((0, 4)), Some((0, 2)), SpanLabel::Summarization),
                (Some((4, 5)), Some((2, 3)), SpanLabel::Summarization),
            ],
        );
        let r = weighted_length_ratio(&[&d]);
        assert_eq!(r.len(), 1);
        assert!((r[0].ratio - 0.6).abs() < 1e-12);
        let one = doc("b", 4, 2, &[(Some((0, 4)), Some((0, 2)), SpanLabel::Generalization)]);
        assert_eq!(weighted_length_ratio(&[&one])[0].ratio, 0.5);
    }

    #[test]
    fn quartiles_type7() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&xs, 0.25), 1.75);
        assert_eq!(quantile(&xs, 0.5), 2.5);
        assert_eq!(quantile(&xs, 0.75), 3.25);
        assert_eq!(quantile(&[7.0], 0.3), 7.0);
    }

    #[test]
    fn constant_lengths_and_annotator_grouping() {
        let d = doc(
            "a",
            6,
            6,
            &[
                (Some((0, 3)), Some((0, 3)), SpanLabel::Translation),
                (Some((3, 6)), Some((3, 6)), SpanLabel::Translation),
            ],
        );
        let rows = span_length_distribution(&[&d], GroupBy::Label).unwrap();
        assert!(rows.iter().all(|r| r.mean == 3.0 && r.q3 - r.q1 == 0.0));
        assert_eq!(
            span_length_distribution(&[&d], GroupBy::Annotator),
            Err(AnalysisError::MissingAnnotator("a".into()))
        );
        assert!("speaker".parse::<GroupBy>().is_err());
        let mut e = d.clone();
        e.meta = Meta { annotator_id: Some("A1".into()), ..Meta::default() };
        let rows = span_length_distribution(&[&e], GroupBy::Annotator).unwrap();
        assert_eq!(rows[0].group, "A1");
    }

    #[test]
    fn direct_vs_relay_means() {
        let mut a = doc("a", 1, 1, &[(Some((0, 1)), Some((0, 1)), SpanLabel::Translation)]);
        a.target.tokens[0].surface = "x".into();
        a.meta.relay = Some(false);
        let mut b = doc("b", 1, 1, &[(Some((0, 1)), Some((0, 1)), SpanLabel::Translation)]);
        b.meta.relay = Some(true);
        let r = comparative_reports(&[&b, &a]).relay.unwrap();
        assert_eq!(r.direct.unwrap().mean_char_ratio, 0.5);
        assert_eq!(r.relay.unwrap().mean_char_ratio, 1.0);
        assert!(comparative_reports(&[&doc("c", 1, 1, &[])]).relay.is_none());
    }

    #[test]
    fn multi_track_pairs() {
        let mut a = doc("a", 3, 4, &[]);
        let mut b = doc("b", 3, 2, &[]);
        a.source.doc_id = "speech".into();
        b.source.doc_id = "speech".into();
        let report = comparative_reports(&[&b, &a]);
        assert_eq!(report.multi_track.len(), 1);
        let row = &report.multi_track[0];
        assert_eq!((row.first.as_str(), row.second.as_str()), ("a-t", "b-t"));
        assert_eq!(row.token_ratio, 2.0);
    }
}

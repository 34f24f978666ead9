//! Tagged bibliographic records (the ISI / Web of Science plain-text export)
//! and document × feature incidence matrices built from them.
//!
//! Record grammar: two-letter tag in columns 1–2, value from column 4,
//! continuation lines start with three spaces, `ER` closes a record and `EF`
//! closes the file. `FN` / `VR` header lines are skipped.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::{DataMatrix, Matrix};

/// A parsed bibliographic record.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocRecord {
    /// `UT` accession number when present, otherwise the 1-based record ordinal.
    pub id: String,
    pub authors: Vec<String>,
    pub title: String,
    pub references: Vec<String>,
    pub year: Option<i32>,
    /// Unrecognized fields, kept in input order so the writer can reproduce them.
    pub other: Vec<(String, Vec<String>)>,
}

#[derive(Default)]
struct PendingRecord {
    fields: Vec<(String, Vec<String>)>,
}

impl PendingRecord {
    fn finish(self, ordinal: usize, line: usize) -> Result<DocRecord> {
        let mut rec = DocRecord {
            id: ordinal.to_string(),
            authors: Vec::new(),
            title: String::new(),
            references: Vec::new(),
            year: None,
            other: Vec::new(),
        };
        for (tag, values) in self.fields {
            match tag.as_str() {
                "AU" => rec.authors.extend(values),
                "CR" => rec.references.extend(values),
                "TI" => rec.title = values.join(" "),
                "PY" => {
                    let text = values.join(" ");
                    rec.year = Some(text.trim().parse().map_err(|_| Error::MalformedRecord {
                        line,
                        message: format!("invalid PY value `{text}`"),
                    })?);
                }
                "UT" => rec.id = values.join(" "),
                _ => rec.other.push((tag, values)),
            }
        }
        Ok(rec)
    }
}

/// Parses a tagged export into records.
pub fn parse_records(text: &str) -> Result<Vec<DocRecord>> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut records: Vec<DocRecord> = Vec::new();
    let mut ids = BTreeSet::new();
    let mut pending: Option<PendingRecord> = None;
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if line.starts_with("   ") {
            let field = pending
                .as_mut()
                .and_then(|p| p.fields.last_mut())
                .ok_or_else(|| Error::MalformedRecord {
                    line: line_no,
                    message: "continuation line outside a field".into(),
                })?;
            field.1.push(line.trim().to_string());
            continue;
        }
        let tag = line.get(..2).ok_or_else(|| Error::MalformedRecord {
            line: line_no,
            message: format!("line too short for a tag: `{line}`"),
        })?;
        let value = line.get(3..).unwrap_or("").trim();
        match tag {
            "FN" | "VR" if pending.is_none() => {}
            "ER" => {
                let rec = pending.take().ok_or_else(|| Error::MalformedRecord {
                    line: line_no,
                    message: "ER without an open record".into(),
                })?;
                let rec = rec.finish(records.len() + 1, line_no)?;
                if !ids.insert(rec.id.clone()) {
                    return Err(Error::MalformedRecord {
                        line: line_no,
                        message: format!("duplicate record id `{}`", rec.id),
                    });
                }
                records.push(rec);
            }
            "EF" => {
                if pending.is_some() {
                    return Err(Error::MalformedRecord {
                        line: line_no,
                        message: "missing ER before EF".into(),
                    });
                }
                return Ok(records);
            }
            _ => {
                let rec = pending.get_or_insert_with(PendingRecord::default);
                rec.fields.push((tag.to_string(), vec![value.to_string()]));
            }
        }
    }
    if pending.is_some() {
        return Err(Error::MalformedRecord {
            line: last_line,
            message: "record not terminated by ER".into(),
        });
    }
    Ok(records)
}

fn write_field(out: &mut String, tag: &str, values: &[String]) {
    for (i, v) in values.iter().enumerate() {
        let lead = if i == 0 { tag } else { "  " };
        let _ = writeln!(out, "{lead} {v}");
    }
}

/// Canonical tagged export of `records`; [`parse_records`] reads it back unchanged.
pub fn write_records(records: &[DocRecord]) -> String {
    let mut out = String::from("FN interinfo canonical export\nVR 1.0\n");
    for rec in records {
        write_field(&mut out, "AU", &rec.authors);
        if !rec.title.is_empty() {
            write_field(&mut out, "TI", std::slice::from_ref(&rec.title));
        }
        if let Some(y) = rec.year {
            let _ = writeln!(out, "PY {y}");
        }
        write_field(&mut out, "CR", &rec.references);
        for (tag, values) in &rec.other {
            write_field(&mut out, tag, values);
        }
        let _ = writeln!(out, "UT {}", rec.id);
        out.push_str("ER\n\n");
    }
    out.push_str("EF\n");
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    TitleWord,
    Author,
    Reference,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::TitleWord => "title_word",
            FeatureKind::Author => "author",
            FeatureKind::Reference => "reference",
        }
    }
}

impl std::str::FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "title_word" | "word" | "words" => Ok(FeatureKind::TitleWord),
            "author" | "authors" => Ok(FeatureKind::Author),
            "reference" | "references" => Ok(FeatureKind::Reference),
            other => Err(Error::InvalidParameter(format!(
                "unknown feature kind `{other}`"
            ))),
        }
    }
}

/// How cited references are turned into feature labels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMode {
    /// The whole normalized reference string.
    #[default]
    Full,
    /// The cited source (journal or book title), the third comma-separated field.
    SourceTitle,
}

/// Which features to extract and how to threshold them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub kind: FeatureKind,
    /// Minimum number of documents a feature must occur in (inclusive).
    pub min_occurrence: usize,
    #[serde(default = "default_stopword_set")]
    pub stopwords: BTreeSet<String>,
    #[serde(default)]
    pub reference_mode: ReferenceMode,
}

impl FeatureSpec {
    pub fn new(kind: FeatureKind, min_occurrence: usize) -> Self {
        FeatureSpec {
            kind,
            min_occurrence,
            stopwords: default_stopword_set(),
            reference_mode: ReferenceMode::Full,
        }
    }

    fn describe(&self) -> String {
        format!(
            "{} (min_occurrence = {})",
            self.kind.as_str(),
            self.min_occurrence
        )
    }
}

/// English function words excluded from title-word features by default.
pub const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "among", "an", "and", "any", "are",
    "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but",
    "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "few", "for",
    "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers", "him", "his",
    "how", "i", "if", "in", "into", "is", "it", "its", "itself", "more", "most", "my", "no", "nor",
    "not", "of", "off", "on", "once", "only", "or", "other", "our", "out", "over", "own", "same",
    "she", "should", "so", "some", "such", "than", "that", "the", "their", "them", "then", "there",
    "these", "they", "this", "those", "through", "to", "too", "toward", "towards", "under",
    "until", "up", "upon", "very", "via", "was", "we", "were", "what", "when", "where", "which",
    "while", "who", "whom", "why", "will", "with", "within", "without", "would", "you", "your",
];

pub fn default_stopword_set() -> BTreeSet<String> {
    DEFAULT_STOPWORDS.iter().map(|w| w.to_string()).collect()
}

/// Reads a stopword list: one word per line, `#` starts a comment.
pub fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase())
        .filter(|w| !w.is_empty())
        .collect()
}

/// Case-folds and collapses internal whitespace.
pub fn normalize_label(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

fn title_words(title: &str, stopwords: &BTreeSet<String>) -> BTreeSet<String> {
    title
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty() && !stopwords.contains(*w))
        .map(str::to_string)
        .collect()
}

fn reference_label(reference: &str, mode: ReferenceMode) -> String {
    match mode {
        ReferenceMode::Full => normalize_label(reference),
        ReferenceMode::SourceTitle => {
            let fields: Vec<&str> = reference.split(',').collect();
            match fields.get(2) {
                Some(source) if !source.trim().is_empty() => normalize_label(source),
                _ => normalize_label(reference),
            }
        }
    }
}

fn document_features(doc: &DocRecord, spec: &FeatureSpec) -> BTreeSet<String> {
    match spec.kind {
        FeatureKind::TitleWord => title_words(&doc.title, &spec.stopwords),
        FeatureKind::Author => doc
            .authors
            .iter()
            .map(|a| normalize_label(a))
            .filter(|a| !a.is_empty())
            .collect(),
        FeatureKind::Reference => doc
            .references
            .iter()
            .map(|r| reference_label(r, spec.reference_mode))
            .filter(|r| !r.is_empty())
            .collect(),
    }
}

/// Documents × features 0/1 matrix of the features occurring in at least
/// `spec.min_occurrence` documents. Columns are in lexicographic order and
/// documents without any surviving feature keep an all-zero row.
pub fn extract_features(docs: &[DocRecord], spec: &FeatureSpec) -> Result<DataMatrix> {
    if docs.is_empty() {
        return Err(Error::InvalidParameter("no documents".into()));
    }
    if spec.min_occurrence == 0 {
        return Err(Error::InvalidParameter(
            "min_occurrence must be at least 1".into(),
        ));
    }
    let per_doc: Vec<BTreeSet<String>> = docs.iter().map(|d| document_features(d, spec)).collect();
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for set in &per_doc {
        for f in set {
            *df.entry(f.as_str()).or_default() += 1;
        }
    }
    let vocab: Vec<&str> = df
        .into_iter()
        .filter(|(_, n)| *n >= spec.min_occurrence)
        .map(|(f, _)| f)
        .collect();
    if vocab.is_empty() {
        return Err(Error::EmptyFeatures(spec.describe()));
    }
    let column: BTreeMap<&str, usize> = vocab.iter().enumerate().map(|(j, f)| (*f, j)).collect();
    let mut values = Matrix::zeros(docs.len(), vocab.len());
    for (i, set) in per_doc.iter().enumerate() {
        for f in set {
            if let Some(&j) = column.get(f.as_str()) {
                values[(i, j)] = 1.0;
            }
        }
    }
    let m = DataMatrix::new(
        docs.iter().map(|d| d.id.clone()).collect(),
        vocab.iter().map(|f| f.to_string()).collect(),
        values,
    )?;
    Ok(m.with_kind(spec.kind.as_str()))
}

/// Concatenates matrices over the same cases column-wise, prefixing each
/// variable label with its matrix's kind (or `m<i>` when unset).
pub fn juxtapose(matrices: &[DataMatrix]) -> Result<DataMatrix> {
    let first = matrices
        .first()
        .ok_or_else(|| Error::InvalidParameter("nothing to juxtapose".into()))?;
    let cases = &first.case_labels;
    for m in &matrices[1..] {
        if m.case_labels != *cases {
            let row = (0..cases.len().max(m.case_labels.len()))
                .find(|&i| cases.get(i) != m.case_labels.get(i))
                .unwrap_or(0);
            return Err(Error::Alignment {
                row,
                expected: cases.get(row).cloned().unwrap_or_else(|| "<none>".into()),
                found: m
                    .case_labels
                    .get(row)
                    .cloned()
                    .unwrap_or_else(|| "<none>".into()),
            });
        }
    }
    let total: usize = matrices.iter().map(DataMatrix::variables).sum();
    let mut values = Matrix::zeros(cases.len(), total);
    let mut labels = Vec::with_capacity(total);
    let mut offset = 0;
    for (idx, m) in matrices.iter().enumerate() {
        let prefix = m.kind.clone().unwrap_or_else(|| format!("m{}", idx + 1));
        labels.extend(m.variable_labels.iter().map(|l| format!("{prefix}:{l}")));
        for i in 0..cases.len() {
            for j in 0..m.variables() {
                values[(i, offset + j)] = m.values[(i, j)];
            }
        }
        offset += m.variables();
    }
    let kinds: Vec<String> = matrices
        .iter()
        .enumerate()
        .map(|(i, m)| m.kind.clone().unwrap_or_else(|| format!("m{}", i + 1)))
        .collect();
    Ok(DataMatrix::new(cases.clone(), labels, values)?.with_kind(kinds.join("+")))
}

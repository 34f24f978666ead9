//! End-to-end runs: tagged records → incidence matrices → three rotated
//! factors → binned joint table → measure reports, one per variable set.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::biblio::{
    default_stopword_set, extract_features, juxtapose, parse_records, parse_stopwords, DocRecord,
    FeatureKind, FeatureSpec, ReferenceMode,
};
use crate::error::{Error, Result};
use crate::factor::{
    bin_loadings_with, correlation_matrix, extract_factors, varimax_rotate, VarimaxOptions,
};
use crate::ipf::{
    full_report, IpfOptions, MeasureReport, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE,
};

/// Exit status conventions shared by the command-line tools.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const INPUT_ERROR: i32 = 1;
    pub const NOT_CONVERGED: i32 = 2;
    pub const PARTIAL_FAILURE: i32 = 3;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub kind: FeatureKind,
    pub min_occurrence: usize,
    #[serde(default)]
    pub reference_mode: ReferenceMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableSetConfig {
    pub name: String,
    /// Keys into [`PipelineConfig::features`], juxtaposed left to right.
    pub features: Vec<String>,
}

fn default_features() -> BTreeMap<String, FeatureConfig> {
    let f = |kind, min_occurrence| FeatureConfig {
        kind,
        min_occurrence,
        reference_mode: ReferenceMode::Full,
    };
    BTreeMap::from([
        ("words".to_string(), f(FeatureKind::TitleWord, 3)),
        ("authors".to_string(), f(FeatureKind::Author, 2)),
        ("references".to_string(), f(FeatureKind::Reference, 2)),
    ])
}

fn default_sets() -> Vec<VariableSetConfig> {
    [
        ("words", &["words"][..]),
        ("authors", &["authors"]),
        ("references", &["references"]),
        ("words+authors", &["words", "authors"]),
        (
            "words+authors+references",
            &["words", "authors", "references"],
        ),
    ]
    .into_iter()
    .map(|(name, feats)| VariableSetConfig {
        name: name.to_string(),
        features: feats.iter().map(|s| s.to_string()).collect(),
    })
    .collect()
}

fn default_factors() -> usize {
    3
}
fn default_bins() -> usize {
    10
}
fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}
fn default_max_iterations() -> usize {
    DEFAULT_MAX_ITERATIONS
}
fn default_true() -> bool {
    true
}
fn default_threads() -> usize {
    1
}

/// Pipeline settings, read from a TOML or JSON document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub inputs: Vec<PathBuf>,
    pub output_dir: PathBuf,
    #[serde(default = "default_features")]
    pub features: BTreeMap<String, FeatureConfig>,
    #[serde(default = "default_sets")]
    pub sets: Vec<VariableSetConfig>,
    #[serde(default = "default_factors")]
    pub factors: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_tolerance")]
    pub ipf_tolerance: f64,
    #[serde(default = "default_max_iterations")]
    pub ipf_max_iterations: usize,
    #[serde(default = "default_true")]
    pub charts: bool,
    /// Variable sets processed concurrently.
    #[serde(default = "default_threads")]
    pub threads: usize,
    #[serde(default)]
    pub stopwords_path: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn new(inputs: Vec<PathBuf>, output_dir: PathBuf) -> Self {
        PipelineConfig {
            inputs,
            output_dir,
            features: default_features(),
            sets: default_sets(),
            factors: default_factors(),
            bins: default_bins(),
            ipf_tolerance: DEFAULT_TOLERANCE,
            ipf_max_iterations: DEFAULT_MAX_ITERATIONS,
            charts: true,
            threads: 1,
            stopwords_path: None,
        }
    }

    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self> {
        parse_document(text)
    }

    /// Loads a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = PipelineConfig::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.inputs.iter_mut().for_each(resolve);
        resolve(&mut cfg.output_dir);
        if let Some(p) = cfg.stopwords_path.as_mut() {
            resolve(p);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.inputs.is_empty() {
            return bad("no input files".into());
        }
        if self.factors != 3 {
            return bad(format!(
                "the binning stage needs 3 factors, got {}",
                self.factors
            ));
        }
        if self.bins < 2 {
            return bad(format!("bin count must be at least 2, got {}", self.bins));
        }
        IpfOptions::new(self.ipf_tolerance, self.ipf_max_iterations)?;
        if self.sets.is_empty() {
            return bad("no variable sets configured".into());
        }
        let mut names = BTreeSet::new();
        for set in &self.sets {
            if set.name.is_empty()
                || !set
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || "+-_.".contains(c))
                || set.name.starts_with('.')
            {
                return bad(format!(
                    "variable set name `{}` is not a safe file name",
                    set.name
                ));
            }
            if !names.insert(set.name.as_str()) {
                return bad(format!("duplicate variable set `{}`", set.name));
            }
            if set.features.is_empty() {
                return bad(format!("variable set `{}` has no features", set.name));
            }
            for f in &set.features {
                if !self.features.contains_key(f) {
                    return bad(format!(
                        "variable set `{}` uses unknown feature `{f}`",
                        set.name
                    ));
                }
            }
        }
        for (name, f) in &self.features {
            if f.min_occurrence == 0 {
                return bad(format!("feature `{name}` needs min_occurrence >= 1"));
            }
        }
        Ok(())
    }

    fn ipf_options(&self) -> IpfOptions {
        IpfOptions {
            tolerance: self.ipf_tolerance,
            max_iterations: self.ipf_max_iterations,
        }
    }
}

fn parse_document<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    if text.trim_start().starts_with('{') {
        Ok(serde_json::from_str(text)?)
    } else {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Settings for a single feature extraction; every field may be overridden
/// on the command line.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestConfig {
    pub kind: Option<FeatureKind>,
    pub min_occurrence: Option<usize>,
    pub reference_mode: Option<ReferenceMode>,
    pub stopwords_path: Option<PathBuf>,
}

impl IngestConfig {
    pub fn parse(text: &str) -> Result<Self> {
        parse_document(text)
    }

    /// Loads a config file; a relative stopword path resolves against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = IngestConfig::parse(&text)?;
        if let Some(p) = cfg.stopwords_path.as_mut() {
            if p.is_relative() {
                *p = path.parent().unwrap_or(Path::new("")).join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Resolves the stopword list and builds the extraction spec.
    pub fn feature_spec(&self) -> Result<FeatureSpec> {
        let kind = self
            .kind
            .ok_or_else(|| Error::InvalidParameter("feature kind is required".into()))?;
        let stopwords = match &self.stopwords_path {
            Some(p) => parse_stopwords(&fs::read_to_string(p).map_err(|e| Error::io(p, e))?),
            None => default_stopword_set(),
        };
        Ok(FeatureSpec {
            kind,
            min_occurrence: self.min_occurrence.unwrap_or(1),
            stopwords,
            reference_mode: self.reference_mode.unwrap_or_default(),
        })
    }
}

/// Labels describing how a set's table was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageMetadata {
    pub matrix: String,
    pub extraction: String,
    pub rotation: String,
    pub factors: usize,
    pub bins: usize,
    pub eigenvalues: Vec<f64>,
    pub varimax_sweeps: usize,
}

/// Everything written for one successful variable set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetReport {
    pub set: String,
    pub features: Vec<String>,
    pub documents: usize,
    pub variables: usize,
    pub dropped_constant: Vec<String>,
    pub metadata: StageMetadata,
    pub measures: MeasureReport,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SetStatus {
    Completed(Box<SetReport>),
    Failed {
        stage: &'static str,
        message: String,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SetOutcome {
    pub name: String,
    pub status: SetStatus,
}

impl SetOutcome {
    pub fn report(&self) -> Option<&SetReport> {
        match &self.status {
            SetStatus::Completed(r) => Some(r),
            SetStatus::Failed { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineOutcome {
    pub sets: Vec<SetOutcome>,
    pub written: Vec<PathBuf>,
}

impl PipelineOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.sets.iter().any(|s| s.report().is_none()) {
            exit::PARTIAL_FAILURE
        } else if self
            .sets
            .iter()
            .any(|s| s.report().is_some_and(|r| !r.measures.converged()))
        {
            exit::NOT_CONVERGED
        } else {
            exit::SUCCESS
        }
    }

    /// One line per set, in configuration order.
    pub fn diagnostics(&self) -> Vec<String> {
        self.sets
            .iter()
            .map(|s| match &s.status {
                SetStatus::Completed(r) => format!(
                    "{}: I = {}, -mu* = {}, R = {}{}",
                    s.name,
                    fixed6(r.measures.i),
                    fixed6(-r.measures.mu_star),
                    fixed6(r.measures.r),
                    if r.measures.converged() {
                        ""
                    } else {
                        " (IPF not converged)"
                    }
                ),
                SetStatus::Failed { stage, message } => {
                    format!("{}: skipped at {stage} stage: {message}", s.name)
                }
            })
            .collect()
    }
}

/// Six-decimal rendering used for every report number outside JSON.
pub fn fixed6(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

fn fail(stage: &'static str) -> impl Fn(Error) -> SetStatus {
    move |e| SetStatus::Failed {
        stage,
        message: e.to_string(),
    }
}

fn run_set(
    docs: &[DocRecord],
    cfg: &PipelineConfig,
    stopwords: &BTreeSet<String>,
    set: &VariableSetConfig,
) -> SetStatus {
    let mut matrices = Vec::new();
    for key in &set.features {
        let fc = &cfg.features[key];
        let spec = FeatureSpec {
            kind: fc.kind,
            min_occurrence: fc.min_occurrence,
            stopwords: stopwords.clone(),
            reference_mode: fc.reference_mode,
        };
        match extract_features(docs, &spec) {
            Ok(m) => matrices.push(m.with_kind(key.clone())),
            Err(e) => return fail("ingest")(e),
        }
    }
    let joined = match juxtapose(&matrices) {
        Ok(m) => m,
        Err(e) => return fail("ingest")(e),
    };
    let (data, dropped_constant) = joined.drop_constant_columns();
    if data.variables() < cfg.factors {
        return SetStatus::Failed {
            stage: "factor",
            message: format!(
                "only {} non-constant variables remain ({} constant dropped); {} factors need at least {}",
                data.variables(),
                dropped_constant.len(),
                cfg.factors,
                cfg.factors
            ),
        };
    }
    let result = (|| -> Result<SetReport> {
        let corr = correlation_matrix(&data)?;
        let extracted = extract_factors(&corr, cfg.factors)?;
        let rotated = varimax_rotate(&extracted, VarimaxOptions::default());
        let table = bin_loadings_with(&rotated.loadings, cfg.bins)?;
        let measures = full_report(&table, cfg.ipf_options())?;
        Ok(SetReport {
            set: set.name.clone(),
            features: set.features.clone(),
            documents: data.cases(),
            variables: data.variables(),
            dropped_constant,
            metadata: StageMetadata {
                matrix: "binary_incidence".into(),
                extraction: "principal_components".into(),
                rotation: "varimax_raw".into(),
                factors: cfg.factors,
                bins: cfg.bins,
                eigenvalues: extracted.eigenvalues.clone(),
                varimax_sweeps: rotated.criterion_trace.len() - 1,
            },
            measures,
        })
    })();
    match result {
        Ok(r) => SetStatus::Completed(Box::new(r)),
        Err(e) => fail("factor")(e),
    }
}

/// Writes via a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(contents).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Reads and concatenates the records of every input file.
pub fn load_corpus(inputs: &[PathBuf]) -> Result<Vec<DocRecord>> {
    let mut docs: Vec<DocRecord> = Vec::new();
    let mut ids = BTreeSet::new();
    for path in inputs {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        for rec in parse_records(&text)? {
            if !ids.insert(rec.id.clone()) {
                return Err(Error::Parse(format!(
                    "record id `{}` in {} repeats an earlier record",
                    rec.id,
                    path.display()
                )));
            }
            docs.push(rec);
        }
    }
    if docs.is_empty() {
        return Err(Error::Parse("input files contain no records".into()));
    }
    Ok(docs)
}

/// Runs every configured variable set and writes `<set>.json`, `summary.csv`
/// and (when enabled) `chart.svg` into the output directory.
///
/// Input and configuration problems are errors; per-set failures are reported
/// in the outcome and the remaining sets still run.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutcome> {
    cfg.validate()?;
    let docs = load_corpus(&cfg.inputs)?;
    let stopwords = match &cfg.stopwords_path {
        Some(p) => parse_stopwords(&fs::read_to_string(p).map_err(|e| Error::io(p, e))?),
        None => default_stopword_set(),
    };

    let statuses: Mutex<Vec<Option<SetStatus>>> = Mutex::new(vec![None; cfg.sets.len()]);
    let next = AtomicUsize::new(0);
    let workers = cfg.threads.clamp(1, cfg.sets.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                let Some(set) = cfg.sets.get(idx) else { break };
                let status = run_set(&docs, cfg, &stopwords, set);
                statuses.lock().expect("status lock")[idx] = Some(status);
            });
        }
    });
    let sets: Vec<SetOutcome> = cfg
        .sets
        .iter()
        .zip(statuses.into_inner().expect("status lock"))
        .map(|(set, status)| SetOutcome {
            name: set.name.clone(),
            status: status.expect("every set ran"),
        })
        .collect();

    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    let mut written = Vec::new();
    let completed: Vec<&SetReport> = sets.iter().filter_map(SetOutcome::report).collect();
    for report in &completed {
        let path = cfg.output_dir.join(format!("{}.json", report.set));
        let mut json = serde_json::to_string_pretty(report)?;
        json.push('\n');
        write_atomic(&path, json.as_bytes())?;
        written.push(path);
    }
    let path = cfg.output_dir.join("summary.csv");
    write_atomic(&path, summary_csv(&completed).as_bytes())?;
    written.push(path);
    if cfg.charts {
        let path = cfg.output_dir.join("chart.svg");
        write_atomic(&path, bar_chart_svg(&completed).as_bytes())?;
        written.push(path);
    }
    Ok(PipelineOutcome { sets, written })
}

/// `set,i,neg_mu_star,r` with six decimals.
pub fn summary_csv(reports: &[&SetReport]) -> String {
    let mut out = String::from("set,i,neg_mu_star,r\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.set,
            fixed6(r.measures.i),
            fixed6(-r.measures.mu_star),
            fixed6(r.measures.r)
        );
    }
    out
}

/// Two-column `measure,value` listing of a report with six decimals.
pub fn report_csv(report: &MeasureReport) -> String {
    let mut out = String::from("measure,value\n");
    let mut row = |k: &str, v: f64| {
        let _ = writeln!(out, "{k},{}", fixed6(v));
    };
    for (axis, h) in &report.axis_entropies {
        row(&format!("H({axis})"), *h);
    }
    for (pair, h) in &report.pairwise_entropies {
        row(&format!("H({pair})"), *h);
    }
    row("H(joint)", report.joint_entropy);
    row("mu_star", report.mu_star);
    row("q", report.q);
    row("i", report.i);
    row("r", report.r);
    row("r_krippendorff", report.r_krippendorff);
    row("ipf_max_margin_error", report.ipf.max_margin_error);
    let _ = writeln!(out, "ipf_iterations,{}", report.ipf.iterations);
    let _ = writeln!(out, "ipf_converged,{}", report.ipf.converged);
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Grouped bar chart: per variable set, one bar for I and one for −μ*.
///
/// The only `<rect>` elements are the bars themselves.
pub fn bar_chart_svg(reports: &[&SetReport]) -> String {
    const GROUP: f64 = 140.0;
    const BAR: f64 = 40.0;
    const LEFT: f64 = 70.0;
    const TOP: f64 = 50.0;
    const PLOT_H: f64 = 300.0;
    let width = LEFT + GROUP * reports.len().max(1) as f64 + 40.0;
    let height = TOP + PLOT_H + 90.0;

    let values = reports
        .iter()
        .flat_map(|r| [r.measures.i, -r.measures.mu_star]);
    let (lo, hi) = values.fold((0.0f64, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let span = if hi - lo > 0.0 { hi - lo } else { 1.0 };
    let y = |v: f64| TOP + (hi - v) / span * PLOT_H;
    let zero = y(0.0);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(
        s,
        r#"  <text x="{:.1}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">Interaction information (I) and remaining redundancy (-mu*) among the three main components</text>"#,
        width / 2.0
    );
    let _ = writeln!(
        s,
        r##"  <line x1="{LEFT:.1}" y1="{TOP:.1}" x2="{LEFT:.1}" y2="{:.1}" stroke="#000"/>"##,
        TOP + PLOT_H
    );
    let _ = writeln!(
        s,
        r##"  <line x1="{LEFT:.1}" y1="{zero:.2}" x2="{:.1}" y2="{zero:.2}" stroke="#000"/>"##,
        width - 20.0
    );
    for (v, label) in [(hi, hi), (lo, lo)] {
        let _ = writeln!(
            s,
            r#"  <text x="{:.1}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            y(v) + 4.0,
            fixed6(label)
        );
    }
    for (g, r) in reports.iter().enumerate() {
        let x0 = LEFT + 20.0 + GROUP * g as f64;
        for (b, (v, class, fill)) in [
            (r.measures.i, "bar bar-i", "#4472c4"),
            (-r.measures.mu_star, "bar bar-neg-mu-star", "#ed7d31"),
        ]
        .into_iter()
        .enumerate()
        {
            let top = y(v).min(zero);
            let h = (y(v) - zero).abs();
            let _ = writeln!(
                s,
                r#"  <rect class="{class}" x="{:.2}" y="{top:.2}" width="{BAR:.1}" height="{h:.2}" fill="{fill}"><title>{}: {}</title></rect>"#,
                x0 + BAR * b as f64,
                xml_escape(&r.set),
                fixed6(v)
            );
        }
        let _ = writeln!(
            s,
            r#"  <text x="{:.2}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="middle">{}</text>"#,
            x0 + BAR,
            TOP + PLOT_H + 20.0,
            xml_escape(&r.set)
        );
    }
    let ly = TOP + PLOT_H + 50.0;
    for (i, (label, fill)) in [("I(ABC -> AB:AC:BC)", "#4472c4"), ("-mu* (Q)", "#ed7d31")]
        .into_iter()
        .enumerate()
    {
        let lx = LEFT + 180.0 * i as f64;
        let _ = writeln!(
            s,
            r#"  <circle cx="{lx:.1}" cy="{ly:.1}" r="6" fill="{fill}"/>"#
        );
        let _ = writeln!(
            s,
            r#"  <text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11">{}</text>"#,
            lx + 12.0,
            ly + 4.0,
            xml_escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{ArgAction, Parser, Subcommand};
use interinfo_core::biblio::{extract_features, parse_records, FeatureKind, ReferenceMode};
use interinfo_core::dynamics::{simulate, Decisions, DynamicsParams, Truncation, Variant};
use interinfo_core::factor::{
    correlation_matrix, extract_factors, varimax_rotate, DataMatrix, VarimaxOptions,
};
use interinfo_core::pipeline::{
    exit, fixed6, load_corpus, report_csv, run_pipeline, write_atomic, IngestConfig, PipelineConfig,
};
use interinfo_core::{full_report, ipf_fit, IpfOptions, JointTable, MarginSet};

#[derive(Parser)]
#[command(
    name = "interinfo",
    version,
    about = "Co-information, interaction information and redundancy for discrete tables"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Entropies, mu*, Q, I and R of a three-axis table (JSON report on stdout).
    Measures {
        /// Table as JSON, or CSV when the file ends in `.csv`.
        table: PathBuf,
        #[arg(long, default_value_t = interinfo_core::ipf::DEFAULT_TOLERANCE)]
        tolerance: f64,
        #[arg(long, default_value_t = interinfo_core::ipf::DEFAULT_MAX_ITERATIONS)]
        max_iterations: usize,
        /// Also write the report as `measure,value` CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Runs ingest → factor → varimax → bin → measures for every variable set.
    Pipeline {
        /// TOML or JSON config; flags below override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        factors: Option<usize>,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long)]
        ipf_tolerance: Option<f64>,
        #[arg(long)]
        ipf_max_iterations: Option<usize>,
        #[arg(long, action = ArgAction::Set)]
        charts: Option<bool>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        stopwords_path: Option<PathBuf>,
    },
    /// Principal components of a data matrix, varimax rotated → loadings CSV.
    Factor {
        matrix: PathBuf,
        #[arg(long, default_value_t = 3)]
        factors: usize,
        /// Skip the varimax rotation.
        #[arg(long)]
        unrotated: bool,
        /// Defaults to stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Tagged bibliographic records → documents × features 0/1 matrix CSV.
    Ingest {
        #[arg(required = true)]
        records: Vec<PathBuf>,
        /// title_word, author or reference.
        #[arg(long)]
        kind: Option<FeatureKind>,
        #[arg(long)]
        min_occurrence: Option<usize>,
        /// full or source_title.
        #[arg(long, value_parser = parse_reference_mode)]
        reference_mode: Option<ReferenceMode>,
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Defaults to stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Maximum-entropy fit to a set of margins; diagnostics JSON on stdout.
    Ipf {
        table: PathBuf,
        /// Constraints such as `A,B;A,C;B,C`. Defaults to all pairs.
        #[arg(long)]
        margins: Option<MarginSet>,
        #[arg(long, default_value_t = interinfo_core::ipf::DEFAULT_TOLERANCE)]
        tolerance: f64,
        #[arg(long, default_value_t = interinfo_core::ipf::DEFAULT_MAX_ITERATIONS)]
        max_iterations: usize,
        /// Fitted table, CSV when the name ends in `.csv`, JSON otherwise.
        #[arg(long)]
        output: PathBuf,
    },
    /// Simulates a logistic map variant and writes the trajectory CSV.
    Dynamics {
        /// recursive, incursive or hyper_incursive.
        #[arg(long)]
        variant: Variant,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        x0: f64,
        #[arg(long)]
        steps: usize,
        /// Seed for random root choices (hyper-incursive only).
        #[arg(long, conflicts_with = "decisions")]
        seed: Option<u64>,
        /// Explicit root choices, e.g. `1,0,1`; 1 takes the upper root.
        #[arg(long, value_delimiter = ',', value_parser = parse_bit)]
        decisions: Option<Vec<bool>>,
        #[arg(long)]
        output: PathBuf,
    },
}

fn parse_reference_mode(s: &str) -> Result<ReferenceMode, String> {
    match s {
        "full" => Ok(ReferenceMode::Full),
        "source_title" | "source-title" => Ok(ReferenceMode::SourceTitle),
        other => Err(format!("unknown reference mode `{other}`")),
    }
}

fn parse_bit(s: &str) -> Result<bool, String> {
    match s.trim() {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        other => Err(format!("decision must be 0 or 1, got `{other}`")),
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn read_table(path: &Path) -> Result<JointTable> {
    let table = if is_csv(path) {
        let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        JointTable::read_csv(BufReader::new(file))
    } else {
        let text =
            fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        JointTable::from_json(&text)
    };
    table.with_context(|| format!("{} is not a valid table", path.display()))
}

fn write_table(table: &JointTable, path: &Path) -> Result<()> {
    let bytes = if is_csv(path) {
        let mut buf = Vec::new();
        table.write_csv(&mut buf)?;
        buf
    } else {
        let mut json = table.to_json()?;
        json.push('\n');
        json.into_bytes()
    };
    write_atomic(path, &bytes)?;
    Ok(())
}

/// Writes to `path` atomically, or to stdout when no path is given.
fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, bytes)?,
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn cmd_measures(
    table: &Path,
    tolerance: f64,
    max_iterations: usize,
    csv: Option<&Path>,
) -> Result<i32> {
    let table = read_table(table)?;
    let report = full_report(&table, IpfOptions::new(tolerance, max_iterations)?)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    if let Some(path) = csv {
        write_atomic(path, report_csv(&report).as_bytes())?;
    }
    if report.converged() {
        Ok(exit::SUCCESS)
    } else {
        eprintln!(
            "warning: IPF stopped after {} iterations with margin error {:e}",
            report.ipf.iterations, report.ipf.max_margin_error
        );
        Ok(exit::NOT_CONVERGED)
    }
}

struct PipelineOverrides {
    inputs: Vec<PathBuf>,
    output_dir: Option<PathBuf>,
    factors: Option<usize>,
    bins: Option<usize>,
    ipf_tolerance: Option<f64>,
    ipf_max_iterations: Option<usize>,
    charts: Option<bool>,
    threads: Option<usize>,
    stopwords_path: Option<PathBuf>,
}

fn cmd_pipeline(config: Option<&Path>, o: PipelineOverrides) -> Result<i32> {
    let mut cfg = match config {
        Some(path) => PipelineConfig::load(path)?,
        None => {
            let output_dir = o
                .output_dir
                .clone()
                .ok_or_else(|| anyhow!("--output-dir is required without --config"))?;
            PipelineConfig::new(Vec::new(), output_dir)
        }
    };
    if !o.inputs.is_empty() {
        cfg.inputs = o.inputs;
    }
    if let Some(v) = o.output_dir {
        cfg.output_dir = v;
    }
    if let Some(v) = o.factors {
        cfg.factors = v;
    }
    if let Some(v) = o.bins {
        cfg.bins = v;
    }
    if let Some(v) = o.ipf_tolerance {
        cfg.ipf_tolerance = v;
    }
    if let Some(v) = o.ipf_max_iterations {
        cfg.ipf_max_iterations = v;
    }
    if let Some(v) = o.charts {
        cfg.charts = v;
    }
    if let Some(v) = o.threads {
        cfg.threads = v;
    }
    if o.stopwords_path.is_some() {
        cfg.stopwords_path = o.stopwords_path;
    }
    let outcome = run_pipeline(&cfg)?;
    for line in outcome.diagnostics() {
        println!("{line}");
    }
    for path in &outcome.written {
        eprintln!("wrote {}", path.display());
    }
    Ok(outcome.exit_code())
}

fn cmd_factor(
    matrix: &Path,
    factors: usize,
    unrotated: bool,
    output: Option<&Path>,
) -> Result<i32> {
    let file = File::open(matrix).with_context(|| format!("cannot open {}", matrix.display()))?;
    let data = DataMatrix::read_csv(BufReader::new(file))
        .with_context(|| format!("{} is not a valid data matrix", matrix.display()))?;
    let (data, dropped) = data.drop_constant_columns();
    if !dropped.is_empty() {
        eprintln!(
            "dropped {} constant column(s): {}",
            dropped.len(),
            dropped.join(", ")
        );
    }
    let corr = correlation_matrix(&data)?;
    let mut loadings = extract_factors(&corr, factors)?;
    if !unrotated {
        loadings = varimax_rotate(&loadings, VarimaxOptions::default()).loadings;
    }
    let mut buf = Vec::new();
    loadings.write_csv(&mut buf)?;
    emit(output, &buf)?;
    Ok(exit::SUCCESS)
}

struct IngestArgs {
    records: Vec<PathBuf>,
    kind: Option<FeatureKind>,
    min_occurrence: Option<usize>,
    reference_mode: Option<ReferenceMode>,
    stopwords: Option<PathBuf>,
    config: Option<PathBuf>,
    output: Option<PathBuf>,
}

fn cmd_ingest(a: IngestArgs) -> Result<i32> {
    let mut cfg = match &a.config {
        Some(path) => IngestConfig::load(path)?,
        None => IngestConfig::default(),
    };
    cfg.kind = a.kind.or(cfg.kind);
    cfg.min_occurrence = a.min_occurrence.or(cfg.min_occurrence);
    cfg.reference_mode = a.reference_mode.or(cfg.reference_mode);
    cfg.stopwords_path = a.stopwords.or(cfg.stopwords_path);
    let spec = cfg.feature_spec()?;
    let docs = if a.records.len() == 1 {
        let path = &a.records[0];
        let text =
            fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        parse_records(&text).with_context(|| format!("in {}", path.display()))?
    } else {
        load_corpus(&a.records)?
    };
    let matrix = extract_features(&docs, &spec)?;
    eprintln!(
        "{} documents × {} features",
        matrix.cases(),
        matrix.variables()
    );
    let mut buf = Vec::new();
    matrix.write_csv(&mut buf)?;
    emit(a.output.as_deref(), &buf)?;
    Ok(exit::SUCCESS)
}

fn cmd_ipf(
    table: &Path,
    margins: Option<MarginSet>,
    tolerance: f64,
    max_iterations: usize,
    output: &Path,
) -> Result<i32> {
    let table = read_table(table)?;
    let margins = match margins {
        Some(m) => m,
        None => MarginSet::all_pairs(&table)?,
    };
    let fit = ipf_fit(
        &table,
        &margins,
        IpfOptions::new(tolerance, max_iterations)?,
    )?;
    write_table(&fit.fitted, output)?;
    println!("{}", serde_json::to_string_pretty(&fit.diagnostics())?);
    Ok(if fit.converged {
        exit::SUCCESS
    } else {
        exit::NOT_CONVERGED
    })
}

fn cmd_dynamics(
    variant: Variant,
    params: DynamicsParams,
    seed: Option<u64>,
    decisions: Option<Vec<bool>>,
    output: &Path,
) -> Result<i32> {
    let decisions = match (variant, seed, decisions) {
        (Variant::HyperIncursive, Some(s), None) => Some(Decisions::Seeded(s)),
        (Variant::HyperIncursive, None, Some(d)) => Some(Decisions::Explicit(d)),
        (Variant::HyperIncursive, None, None) => {
            bail!("hyper_incursive needs --seed or --decisions")
        }
        (_, None, None) => None,
        (v, _, _) => bail!("--seed and --decisions only apply to hyper_incursive, not {v}"),
    };
    let trajectory = simulate(params, variant, decisions)?;
    let mut buf = Vec::new();
    trajectory.write_csv(&mut buf)?;
    write_atomic(output, &buf)?;
    println!("variant: {variant}");
    println!("steps computed: {}", trajectory.values.len() - 1);
    println!("final value: {}", fixed6(trajectory.final_value()));
    match &trajectory.truncation {
        None => println!("truncated: false"),
        Some(Truncation::ComplexRoot { step, discriminant }) => println!(
            "truncated: true (complex roots at step {step}, discriminant {})",
            fixed6(*discriminant)
        ),
        Some(Truncation::LeftUnitInterval { step }) => {
            println!("truncated: true (left [0, 1] at step {step})")
        }
    }
    Ok(exit::SUCCESS)
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Measures {
            table,
            tolerance,
            max_iterations,
            csv,
        } => cmd_measures(&table, tolerance, max_iterations, csv.as_deref()),
        Command::Pipeline {
            config,
            inputs,
            output_dir,
            factors,
            bins,
            ipf_tolerance,
            ipf_max_iterations,
            charts,
            threads,
            stopwords_path,
        } => cmd_pipeline(
            config.as_deref(),
            PipelineOverrides {
                inputs,
                output_dir,
                factors,
                bins,
                ipf_tolerance,
                ipf_max_iterations,
                charts,
                threads,
                stopwords_path,
            },
        ),
        Command::Factor {
            matrix,
            factors,
            unrotated,
            output,
        } => cmd_factor(&matrix, factors, unrotated, output.as_deref()),
        Command::Ingest {
            records,
            kind,
            min_occurrence,
            reference_mode,
            stopwords,
            config,
            output,
        } => cmd_ingest(IngestArgs {
            records,
            kind,
            min_occurrence,
            reference_mode,
            stopwords,
            config,
            output,
        }),
        Command::Ipf {
            table,
            margins,
            tolerance,
            max_iterations,
            output,
        } => cmd_ipf(&table, margins, tolerance, max_iterations, &output),
        Command::Dynamics {
            variant,
            a,
            x0,
            steps,
            seed,
            decisions,
            output,
        } => cmd_dynamics(
            variant,
            DynamicsParams::new(a, x0, steps)?,
            seed,
            decisions,
            &output,
        ),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::INPUT_ERROR as u8)
        }
    }
}

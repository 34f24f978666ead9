//! Iterative proportional fitting of maximum-entropy tables, interaction
//! information and the redundancy decomposition built on it.
//!
//! Fitting starts from the uniform table and cyclically rescales it so each
//! constrained margin matches the observed one. Constraints are visited in the
//! lexicographic order of their (sorted) member names, so results do not depend
//! on the order the caller listed them in.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{co_information, entropy, entropy_bits};
use crate::table::{JointTable, VariableSubset};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;

/// A set of marginal constraints, stored in canonical cycling order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarginSet {
    constraints: Vec<VariableSubset>,
}

impl MarginSet {
    pub fn new<I: IntoIterator<Item = VariableSubset>>(constraints: I) -> Result<Self> {
        let mut constraints: Vec<VariableSubset> = constraints.into_iter().collect();
        if constraints.is_empty() {
            return Err(Error::InvalidMargins("margin set is empty".into()));
        }
        constraints.sort_by(|a, b| a.sorted_members().cmp(&b.sorted_members()));
        if let Some(w) = constraints
            .windows(2)
            .find(|w| w[0].sorted_members() == w[1].sorted_members())
        {
            return Err(Error::InvalidMargins(format!(
                "duplicate margin {{{}}}",
                w[0]
            )));
        }
        Ok(MarginSet { constraints })
    }

    /// Every pair of the table's axes, e.g. `AB:AC:BC` for three axes.
    pub fn all_pairs(table: &JointTable) -> Result<Self> {
        let names = table.axis_names();
        if names.len() < 2 {
            return Err(Error::Arity("pairwise margins need at least 2 axes".into()));
        }
        let mut pairs = Vec::new();
        for i in 0..names.len() {
            for j in i + 1..names.len() {
                pairs.push(VariableSubset::new([names[i], names[j]])?);
            }
        }
        MarginSet::new(pairs)
    }

    pub fn constraints(&self) -> &[VariableSubset] {
        &self.constraints
    }

    /// Resolves each constraint to sorted axis positions, checking that the
    /// constraints jointly cover every axis.
    fn resolve(&self, table: &JointTable) -> Result<Vec<Vec<usize>>> {
        let resolved = self
            .constraints
            .iter()
            .map(|c| table.subset_indices(c))
            .collect::<Result<Vec<_>>>()?;
        let covered: BTreeSet<usize> = resolved.iter().flatten().copied().collect();
        if let Some(missing) = (0..table.axes().len()).find(|i| !covered.contains(i)) {
            return Err(Error::InvalidMargins(format!(
                "axis `{}` is not covered by any margin",
                table.axes()[missing].name
            )));
        }
        Ok(resolved)
    }
}

impl fmt::Display for MarginSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.constraints.iter().map(|c| c.to_string()).collect();
        f.write_str(&parts.join(";"))
    }
}

impl FromStr for MarginSet {
    type Err = Error;

    /// Parses `A,B;A,C;B,C`.
    fn from_str(s: &str) -> Result<Self> {
        let subsets = s
            .split(';')
            .filter(|p| !p.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<VariableSubset>>>()?;
        MarginSet::new(subsets)
    }
}

/// Stopping rule for [`ipf_fit`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IpfOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for IpfOptions {
    fn default() -> Self {
        IpfOptions {
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

impl IpfOptions {
    pub fn new(tolerance: f64, max_iterations: usize) -> Result<Self> {
        let opts = IpfOptions {
            tolerance,
            max_iterations,
        };
        opts.validate()?;
        Ok(opts)
    }

    fn validate(&self) -> Result<()> {
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "max_iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of a fit. Non-convergence is reported here rather than as an error.
#[derive(Clone, Debug, PartialEq)]
pub struct IpfResult {
    pub fitted: JointTable,
    /// Full cycles through the constraints that were performed.
    pub iterations: usize,
    /// Largest absolute difference between a fitted and a target margin cell.
    pub max_margin_error: f64,
    pub converged: bool,
}

impl IpfResult {
    pub fn diagnostics(&self) -> IpfDiagnostics {
        IpfDiagnostics {
            iterations: self.iterations,
            max_margin_error: self.max_margin_error,
            converged: self.converged,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IpfDiagnostics {
    pub iterations: usize,
    pub max_margin_error: f64,
    pub converged: bool,
}

struct Constraint {
    map: Vec<usize>,
    target: Vec<f64>,
}

fn prepare(table: &JointTable, margins: &MarginSet) -> Result<Vec<Constraint>> {
    Ok(margins
        .resolve(table)?
        .into_iter()
        .map(|kept| {
            let (map, len) = table.margin_map(&kept);
            let mut target = vec![0.0; len];
            for (p, &m) in table.cells().iter().zip(&map) {
                target[m] += p;
            }
            Constraint { map, target }
        })
        .collect())
}

fn current_margin(fit: &[f64], c: &Constraint, buf: &mut Vec<f64>) {
    buf.clear();
    buf.resize(c.target.len(), 0.0);
    for (p, &m) in fit.iter().zip(&c.map) {
        buf[m] += p;
    }
}

fn max_error(fit: &[f64], constraints: &[Constraint], buf: &mut Vec<f64>) -> f64 {
    let mut worst = 0.0f64;
    for c in constraints {
        current_margin(fit, c, buf);
        for (cur, want) in buf.iter().zip(&c.target) {
            worst = worst.max((cur - want).abs());
        }
    }
    worst
}

fn run(
    table: &JointTable,
    margins: &MarginSet,
    opts: IpfOptions,
    start: Vec<f64>,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<IpfResult> {
    opts.validate()?;
    let full = prepare(table, margins)?;
    // Cells with a zero target margin (or a zero start) stay zero under scaling,
    // so only the remaining support is iterated.
    let active: Vec<usize> = (0..start.len())
        .filter(|&cell| start[cell] > 0.0 && full.iter().all(|c| c.target[c.map[cell]] > 0.0))
        .collect();
    let constraints: Vec<Constraint> = full
        .iter()
        .map(|c| Constraint {
            map: active.iter().map(|&cell| c.map[cell]).collect(),
            target: c.target.clone(),
        })
        .collect();
    let mut fit: Vec<f64> = active.iter().map(|&cell| start[cell]).collect();

    let mut buf = Vec::new();
    let mut factors = Vec::new();
    let mut iterations = 0;
    let mut error = f64::INFINITY;
    while iterations < opts.max_iterations {
        iterations += 1;
        for c in &constraints {
            current_margin(&fit, c, &mut buf);
            factors.clear();
            // 0/0 and x/0 both scale by zero
            factors.extend(
                buf.iter()
                    .zip(&c.target)
                    .map(|(&cur, &want)| if cur > 0.0 { want / cur } else { 0.0 }),
            );
            for (p, &m) in fit.iter_mut().zip(&c.map) {
                *p *= factors[m];
            }
        }
        error = max_error(&fit, &constraints, &mut buf);
        if let Some(t) = trace.as_deref_mut() {
            t.push(error);
        }
        if error <= opts.tolerance {
            break;
        }
    }
    let mut cells = vec![0.0; start.len()];
    for (&cell, p) in active.iter().zip(fit) {
        cells[cell] = p;
    }
    Ok(IpfResult {
        fitted: JointTable::from_parts(table.axes().to_vec(), cells),
        iterations,
        max_margin_error: error,
        converged: error <= opts.tolerance,
    })
}

/// Fits the maximum-entropy table whose `margins` agree with those of `table`.
pub fn ipf_fit(table: &JointTable, margins: &MarginSet, opts: IpfOptions) -> Result<IpfResult> {
    let start = vec![1.0 / table.len() as f64; table.len()];
    run(table, margins, opts, start, None)
}

/// As [`ipf_fit`], also returning the margin error after every iteration.
pub fn ipf_fit_traced(
    table: &JointTable,
    margins: &MarginSet,
    opts: IpfOptions,
) -> Result<(IpfResult, Vec<f64>)> {
    let start = vec![1.0 / table.len() as f64; table.len()];
    let mut trace = Vec::new();
    let result = run(table, margins, opts, start, Some(&mut trace))?;
    Ok((result, trace))
}

/// Fits starting from `initial` instead of the uniform table.
///
/// The result is only the maximum-entropy fit when `initial` itself belongs to
/// the log-linear family of `margins` (uniform, or a previous fit).
pub fn ipf_fit_from(
    table: &JointTable,
    margins: &MarginSet,
    opts: IpfOptions,
    initial: &JointTable,
) -> Result<IpfResult> {
    if initial.axes() != table.axes() {
        return Err(Error::InvalidTable(
            "initial table has different axes".into(),
        ));
    }
    run(table, margins, opts, initial.cells().to_vec(), None)
}

/// Interaction information together with the fit it was computed from.
#[derive(Clone, Debug, PartialEq)]
pub struct Interaction {
    pub bits: f64,
    pub fit: IpfResult,
}

/// `H(maxent fit) - H(table)`: the information in `table` not accounted for by
/// the constrained margins. For three axes and all pairs this is I(ABC → AB:AC:BC).
pub fn interaction_information(
    table: &JointTable,
    margins: &MarginSet,
    opts: IpfOptions,
) -> Result<Interaction> {
    let fit = ipf_fit(table, margins, opts)?;
    let bits = entropy_bits(fit.fitted.cells()) - entropy_bits(table.cells());
    Ok(Interaction { bits, fit })
}

/// Redundancy `R = I - μ*`, both measured in bits of information.
///
/// Positive values are remaining redundancy, negative values remaining uncertainty.
pub fn redundancy(i: f64, mu_star: f64) -> f64 {
    i - mu_star
}

/// Every measure for a three-axis table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub axis_entropies: BTreeMap<String, f64>,
    /// Keyed `A:B` with axes in table order.
    pub pairwise_entropies: BTreeMap<String, f64>,
    pub joint_entropy: f64,
    pub mu_star: f64,
    pub q: f64,
    /// Interaction information I(ABC → AB:AC:BC).
    pub i: f64,
    /// `I - μ*`.
    pub r: f64,
    /// `I - Q`, the unrevised convention, kept for comparison.
    pub r_krippendorff: f64,
    pub ipf: IpfDiagnostics,
    pub settings: IpfOptions,
}

impl MeasureReport {
    pub fn converged(&self) -> bool {
        self.ipf.converged
    }
}

/// Computes a [`MeasureReport`] for a three-axis table with all pairwise margins.
pub fn full_report(table: &JointTable, opts: IpfOptions) -> Result<MeasureReport> {
    let names = table.axis_names();
    if names.len() != 3 {
        return Err(Error::Arity(format!(
            "measure report needs exactly 3 axes, got {}",
            names.len()
        )));
    }
    let mut axis_entropies = BTreeMap::new();
    for name in &names {
        axis_entropies.insert(
            name.to_string(),
            entropy(table, &VariableSubset::new([*name])?)?,
        );
    }
    let mut pairwise_entropies = BTreeMap::new();
    for a in 0..3 {
        for b in a + 1..3 {
            let pair = VariableSubset::new([names[a], names[b]])?;
            pairwise_entropies.insert(format!("{}:{}", names[a], names[b]), entropy(table, &pair)?);
        }
    }
    let joint_entropy = entropy_bits(table.cells());
    let mu_star = co_information(table, &table.all_axes())?;
    let q = -mu_star;
    let interaction = interaction_information(table, &MarginSet::all_pairs(table)?, opts)?;
    let i = interaction.bits;
    Ok(MeasureReport {
        axis_entropies,
        pairwise_entropies,
        joint_entropy,
        mu_star,
        q,
        i,
        r: redundancy(i, mu_star),
        r_krippendorff: i - q,
        ipf: interaction.fit.diagnostics(),
        settings: opts,
    })
}

//! Dense n-dimensional probability tables with named axes.
//!
//! Cells are stored row-major: the last axis varies fastest. A table is always
//! normalized (cells sum to one within [`NORMALIZATION_TOLERANCE`]); building
//! one from raw counts divides by the count total.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Allowed deviation of the cell sum from one.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// One dimension of a [`JointTable`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub categories: Vec<String>,
}

impl Axis {
    pub fn new(name: impl Into<String>, categories: Vec<String>) -> Self {
        Axis {
            name: name.into(),
            categories,
        }
    }

    /// An axis whose categories are labelled `0..cardinality`.
    pub fn with_cardinality(name: impl Into<String>, cardinality: usize) -> Self {
        Axis::new(name, (0..cardinality).map(|c| c.to_string()).collect())
    }

    pub fn cardinality(&self) -> usize {
        self.categories.len()
    }
}

/// A non-empty set of axis names.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VariableSubset(Vec<String>);

impl VariableSubset {
    pub fn new<I, S>(members: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let members: Vec<String> = members.into_iter().map(Into::into).collect();
        if members.is_empty() {
            return Err(Error::InvalidSubset("subset is empty".into()));
        }
        let mut seen = BTreeSet::new();
        for m in &members {
            if !seen.insert(m.as_str()) {
                return Err(Error::InvalidSubset(format!("duplicate member `{m}`")));
            }
        }
        Ok(VariableSubset(members))
    }

    pub fn members(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.iter().any(|m| m == name)
    }

    pub fn is_disjoint(&self, other: &VariableSubset) -> bool {
        !self.0.iter().any(|m| other.contains(m))
    }

    /// Members in lexicographic order; used as the canonical ordering key.
    pub fn sorted_members(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.0.iter().map(String::as_str).collect();
        v.sort_unstable();
        v
    }

    pub fn union(&self, other: &VariableSubset) -> Result<VariableSubset> {
        VariableSubset::new(self.0.iter().chain(other.0.iter()).cloned())
    }
}

impl fmt::Display for VariableSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(","))
    }
}

impl FromStr for VariableSubset {
    type Err = Error;

    /// Parses a comma-separated member list such as `A,B`.
    fn from_str(s: &str) -> Result<Self> {
        VariableSubset::new(s.split(',').map(str::trim).filter(|m| !m.is_empty()))
    }
}

#[derive(Deserialize)]
struct RawTable {
    axes: Vec<Axis>,
    cells: Vec<f64>,
}

/// An n-dimensional discrete probability distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable")]
pub struct JointTable {
    axes: Vec<Axis>,
    cells: Vec<f64>,
}

impl TryFrom<RawTable> for JointTable {
    type Error = Error;

    fn try_from(raw: RawTable) -> Result<Self> {
        JointTable::new(raw.axes, raw.cells)
    }
}

fn check_axes(axes: &[Axis]) -> Result<usize> {
    if axes.is_empty() {
        return Err(Error::InvalidTable("table has no axes".into()));
    }
    let mut names = BTreeSet::new();
    let mut size = 1usize;
    for axis in axes {
        if !names.insert(axis.name.as_str()) {
            return Err(Error::InvalidTable(format!(
                "duplicate axis name `{}`",
                axis.name
            )));
        }
        if axis.categories.is_empty() {
            return Err(Error::InvalidTable(format!(
                "axis `{}` has no categories",
                axis.name
            )));
        }
        size = size
            .checked_mul(axis.cardinality())
            .ok_or_else(|| Error::InvalidTable("table too large".into()))?;
    }
    Ok(size)
}

impl JointTable {
    /// Builds a table from probabilities; they must be non-negative and sum to one.
    pub fn new(axes: Vec<Axis>, cells: Vec<f64>) -> Result<Self> {
        let size = check_axes(&axes)?;
        if cells.len() != size {
            return Err(Error::InvalidTable(format!(
                "expected {size} cells, got {}",
                cells.len()
            )));
        }
        if let Some(bad) = cells.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidTable(format!(
                "invalid cell probability {bad}"
            )));
        }
        let total: f64 = cells.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidTable(format!("cells sum to {total}, not 1")));
        }
        Ok(JointTable { axes, cells })
    }

    /// Builds a table from non-negative counts, dividing by their total.
    pub fn from_counts(axes: Vec<Axis>, counts: &[f64]) -> Result<Self> {
        let size = check_axes(&axes)?;
        if counts.len() != size {
            return Err(Error::InvalidTable(format!(
                "expected {size} cells, got {}",
                counts.len()
            )));
        }
        if let Some(bad) = counts.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::InvalidTable(format!("invalid count {bad}")));
        }
        let total: f64 = counts.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidTable("counts sum to zero".into()));
        }
        let cells = counts.iter().map(|c| c / total).collect();
        Ok(JointTable { axes, cells })
    }

    pub fn uniform(axes: Vec<Axis>) -> Result<Self> {
        let size = check_axes(&axes)?;
        Ok(JointTable {
            axes,
            cells: vec![1.0 / size as f64; size],
        })
    }

    /// Used by the fitting code, whose output is normalized up to rounding.
    pub(crate) fn from_parts(axes: Vec<Axis>, cells: Vec<f64>) -> Self {
        debug_assert_eq!(check_axes(&axes).ok(), Some(cells.len()));
        JointTable { axes, cells }
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Axis::cardinality).collect()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn axis_names(&self) -> Vec<&str> {
        self.axes.iter().map(|a| a.name.as_str()).collect()
    }

    pub fn axis_index(&self, name: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::AxisNotFound(name.to_string()))
    }

    /// The subset naming every axis, in table order.
    pub fn all_axes(&self) -> VariableSubset {
        VariableSubset(self.axes.iter().map(|a| a.name.clone()).collect())
    }

    /// Positions of the subset's members, sorted into table order.
    pub fn subset_indices(&self, subset: &VariableSubset) -> Result<Vec<usize>> {
        let mut idx = subset
            .members()
            .iter()
            .map(|m| self.axis_index(m))
            .collect::<Result<Vec<_>>>()?;
        idx.sort_unstable();
        Ok(idx)
    }

    /// Cell value at a multi-index.
    pub fn get(&self, index: &[usize]) -> f64 {
        let mut flat = 0;
        for (axis, &i) in self.axes.iter().zip(index) {
            flat = flat * axis.cardinality() + i;
        }
        self.cells[flat]
    }

    /// For every cell, its flat index within the marginal over `kept` (sorted axis positions).
    pub(crate) fn margin_map(&self, kept: &[usize]) -> (Vec<usize>, usize) {
        let shape = self.shape();
        let n = shape.len();
        // stride of each table axis inside the marginal; zero for summed-out axes
        let mut margin_stride = vec![0usize; n];
        let mut stride = 1;
        for &k in kept.iter().rev() {
            margin_stride[k] = stride;
            stride *= shape[k];
        }
        let margin_len = stride;
        let mut map = Vec::with_capacity(self.cells.len());
        let mut counter = vec![0usize; n];
        let mut pos = 0usize;
        for _ in 0..self.cells.len() {
            map.push(pos);
            for ax in (0..n).rev() {
                counter[ax] += 1;
                pos += margin_stride[ax];
                if counter[ax] < shape[ax] {
                    break;
                }
                pos -= margin_stride[ax] * shape[ax];
                counter[ax] = 0;
            }
        }
        (map, margin_len)
    }

    pub(crate) fn marginal_cells(&self, kept: &[usize]) -> Vec<f64> {
        let (map, len) = self.margin_map(kept);
        let mut out = vec![0.0; len];
        for (p, &m) in self.cells.iter().zip(&map) {
            out[m] += p;
        }
        out
    }

    /// The marginal distribution over `subset`, with axes kept in table order.
    pub fn marginalize(&self, subset: &VariableSubset) -> Result<JointTable> {
        let kept = self.subset_indices(subset)?;
        let cells = self.marginal_cells(&kept);
        let axes = kept.iter().map(|&k| self.axes[k].clone()).collect();
        Ok(JointTable { axes, cells })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Writes one index column per axis plus a `p` column, one row per cell.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.axis_names();
        header.push("p");
        w.write_record(&header)?;
        let shape = self.shape();
        let mut counter = vec![0usize; shape.len()];
        for p in &self.cells {
            let mut row: Vec<String> = counter
                .iter()
                .zip(&self.axes)
                .map(|(&c, a)| a.categories[c].clone())
                .collect();
            row.push(p.to_string());
            w.write_record(&row)?;
            for ax in (0..shape.len()).rev() {
                counter[ax] += 1;
                if counter[ax] < shape[ax] {
                    break;
                }
                counter[ax] = 0;
            }
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Reads the CSV form. Categories are ordered by first appearance; absent
    /// combinations are zero.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        let n = header.len();
        if n < 2 || &header[n - 1] != "p" {
            return Err(Error::Parse(
                "table CSV needs at least one axis column and a final `p` column".into(),
            ));
        }
        let names: Vec<String> = header.iter().take(n - 1).map(str::to_string).collect();
        let mut categories: Vec<Vec<String>> = vec![Vec::new(); n - 1];
        let mut lookup: Vec<HashMap<String, usize>> = vec![HashMap::new(); n - 1];
        let mut rows: Vec<(Vec<usize>, f64)> = Vec::new();
        for (line, record) in r.records().enumerate() {
            let record = record?;
            if record.len() != n {
                return Err(Error::Parse(format!(
                    "row {} has {} fields",
                    line + 2,
                    record.len()
                )));
            }
            let mut idx = Vec::with_capacity(n - 1);
            for ax in 0..n - 1 {
                let label = record[ax].to_string();
                let next = categories[ax].len();
                let i = *lookup[ax].entry(label.clone()).or_insert_with(|| {
                    categories[ax].push(label);
                    next
                });
                idx.push(i);
            }
            let p: f64 = record[n - 1]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("row {}: bad probability", line + 2)))?;
            rows.push((idx, p));
        }
        let axes: Vec<Axis> = names
            .into_iter()
            .zip(categories)
            .map(|(name, cats)| Axis::new(name, cats))
            .collect();
        let size = check_axes(&axes)?;
        let mut cells = vec![0.0; size];
        let mut filled = vec![false; size];
        for (idx, p) in rows {
            let mut flat = 0;
            for (axis, &i) in axes.iter().zip(&idx) {
                flat = flat * axis.cardinality() + i;
            }
            if filled[flat] {
                return Err(Error::Parse("duplicate cell in table CSV".into()));
            }
            filled[flat] = true;
            cells[flat] = p;
        }
        JointTable::new(axes, cells)
    }
}

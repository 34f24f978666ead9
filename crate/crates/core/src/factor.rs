//! Principal-component factor extraction with raw varimax rotation, and the
//! binning of three-factor loadings into a joint distribution.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::table::{Axis, JointTable};

/// Jacobi stops once the off-diagonal Frobenius norm drops below this.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;
pub const DEFAULT_BINS: usize = 10;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidParameter("ragged matrix rows".into()));
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Cases × variables data, e.g. a document × term incidence matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DataMatrix {
    pub case_labels: Vec<String>,
    pub variable_labels: Vec<String>,
    pub values: Matrix,
    /// Feature kind used to prefix labels when matrices are juxtaposed.
    pub kind: Option<String>,
}

impl DataMatrix {
    pub fn new(
        case_labels: Vec<String>,
        variable_labels: Vec<String>,
        values: Matrix,
    ) -> Result<Self> {
        if values.rows() != case_labels.len() || values.cols() != variable_labels.len() {
            return Err(Error::InvalidParameter(format!(
                "matrix is {}x{} but there are {} case and {} variable labels",
                values.rows(),
                values.cols(),
                case_labels.len(),
                variable_labels.len()
            )));
        }
        let mut seen = BTreeSet::new();
        if let Some(dup) = variable_labels.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(Error::InvalidParameter(format!(
                "duplicate variable label `{dup}`"
            )));
        }
        Ok(DataMatrix {
            case_labels,
            variable_labels,
            values,
            kind: None,
        })
    }

    pub fn with_kind(mut self, kind: impl Into<String>) -> Self {
        self.kind = Some(kind.into());
        self
    }

    pub fn cases(&self) -> usize {
        self.values.rows()
    }

    pub fn variables(&self) -> usize {
        self.values.cols()
    }

    /// Removes columns whose values are all equal, returning the removed labels.
    pub fn drop_constant_columns(&self) -> (DataMatrix, Vec<String>) {
        let keep: Vec<usize> = (0..self.variables())
            .filter(|&j| {
                let col = self.values.column(j);
                col.iter().any(|v| *v != col[0])
            })
            .collect();
        let dropped = (0..self.variables())
            .filter(|j| !keep.contains(j))
            .map(|j| self.variable_labels[j].clone())
            .collect();
        let mut values = Matrix::zeros(self.cases(), keep.len());
        for i in 0..self.cases() {
            for (jj, &j) in keep.iter().enumerate() {
                values[(i, jj)] = self.values[(i, j)];
            }
        }
        let m = DataMatrix {
            case_labels: self.case_labels.clone(),
            variable_labels: keep
                .iter()
                .map(|&j| self.variable_labels[j].clone())
                .collect(),
            values,
            kind: self.kind.clone(),
        };
        (m, dropped)
    }

    /// Header row `case,<variables...>`, then one row per case.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["case".to_string()];
        header.extend(self.variable_labels.iter().cloned());
        w.write_record(&header)?;
        for (i, label) in self.case_labels.iter().enumerate() {
            let mut row = vec![label.clone()];
            row.extend(self.values.row(i).iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        if header.len() < 2 {
            return Err(Error::Parse(
                "data matrix CSV needs a case column and at least one variable".into(),
            ));
        }
        let variable_labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut case_labels = Vec::new();
        let mut rows = Vec::new();
        for (line, record) in r.records().enumerate() {
            let record = record?;
            case_labels.push(record[0].to_string());
            let row = record
                .iter()
                .skip(1)
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("row {}: bad number `{v}`", line + 2)))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let values = if rows.is_empty() {
            Matrix::zeros(0, variable_labels.len())
        } else {
            Matrix::from_rows(&rows)?
        };
        DataMatrix::new(case_labels, variable_labels, values)
    }
}

/// Symmetric variables × variables correlation matrix with its labels.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMatrix {
    pub labels: Vec<String>,
    pub values: Matrix,
}

/// Pearson correlations between all pairs of columns.
pub fn correlation_matrix(data: &DataMatrix) -> Result<CorrelationMatrix> {
    let (n, m) = (data.cases(), data.variables());
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "correlation needs at least 2 cases, got {n}"
        )));
    }
    let mut centered = Matrix::zeros(n, m);
    let mut norms = vec![0.0; m];
    for j in 0..m {
        let col = data.values.column(j);
        if col.iter().all(|v| *v == col[0]) {
            return Err(Error::ZeroVariance(data.variable_labels[j].clone()));
        }
        let mean = col.iter().sum::<f64>() / n as f64;
        let mut ss = 0.0;
        for (i, v) in col.iter().enumerate() {
            let d = v - mean;
            centered[(i, j)] = d;
            ss += d * d;
        }
        if ss <= 0.0 {
            return Err(Error::ZeroVariance(data.variable_labels[j].clone()));
        }
        norms[j] = ss.sqrt();
    }
    let mut r = Matrix::identity(m);
    for a in 0..m {
        for b in a + 1..m {
            let mut s = 0.0;
            for i in 0..n {
                s += centered[(i, a)] * centered[(i, b)];
            }
            let v = (s / (norms[a] * norms[b])).clamp(-1.0, 1.0);
            r[(a, b)] = v;
            r[(b, a)] = v;
        }
    }
    Ok(CorrelationMatrix {
        labels: data.variable_labels.clone(),
        values: r,
    })
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let mut s = 0.0;
    for p in 0..a.rows() {
        for q in 0..a.cols() {
            if p != q {
                s += a[(p, q)] * a[(p, q)];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Returns unsorted eigenvalues and the matrix whose columns are the
/// corresponding eigenvectors.
pub fn symmetric_eigen(matrix: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = matrix.rows();
    assert_eq!(
        n,
        matrix.cols(),
        "eigendecomposition of a non-square matrix"
    );
    let mut a = matrix.clone();
    let mut v = Matrix::identity(n);
    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off < JACOBI_TOLERANCE {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::EigenNonConvergence {
                sweeps,
                off_norm: off,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values = (0..n).map(|i| a[(i, i)]).collect();
    Ok((values, v))
}

/// Flips column `j` of `m` (and of `companion`, if given) so its
/// largest-magnitude entry is positive. Ties go to the first row.
fn fix_column_sign(m: &mut Matrix, j: usize, companion: Option<&mut Matrix>) {
    let mut best = 0;
    for i in 1..m.rows() {
        if m[(i, j)].abs() > m[(best, j)].abs() {
            best = i;
        }
    }
    if m.rows() > 0 && m[(best, j)] < 0.0 {
        for i in 0..m.rows() {
            m[(i, j)] = -m[(i, j)];
        }
        if let Some(c) = companion {
            for i in 0..c.rows() {
                c[(i, j)] = -c[(i, j)];
            }
        }
    }
}

/// Variables × factors loadings.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadingsMatrix {
    pub variable_labels: Vec<String>,
    pub loadings: Matrix,
    /// Eigenvalues of the extracted components, before rotation.
    pub eigenvalues: Vec<f64>,
}

impl LoadingsMatrix {
    pub fn k(&self) -> usize {
        self.loadings.cols()
    }

    pub fn communalities(&self) -> Vec<f64> {
        (0..self.loadings.rows())
            .map(|i| self.loadings.row(i).iter().map(|l| l * l).sum())
            .collect()
    }

    /// Variables as rows, `factor1..factork` as columns, and a final
    /// `eigenvalue` row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["variable".to_string()];
        header.extend((1..=self.k()).map(|j| format!("factor{j}")));
        w.write_record(&header)?;
        for (i, label) in self.variable_labels.iter().enumerate() {
            let mut row = vec![label.clone()];
            row.extend(self.loadings.row(i).iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        let mut footer = vec!["eigenvalue".to_string()];
        footer.extend(self.eigenvalues.iter().map(|v| v.to_string()));
        w.write_record(&footer)?;
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let data = DataMatrix::read_csv(reader)?;
        if data.case_labels.last().map(String::as_str) != Some("eigenvalue") {
            return Err(Error::Parse(
                "loadings CSV lacks the eigenvalue footer".into(),
            ));
        }
        let n = data.cases() - 1;
        let k = data.variables();
        let eigenvalues = data.values.row(n).to_vec();
        let mut loadings = Matrix::zeros(n, k);
        for i in 0..n {
            for j in 0..k {
                loadings[(i, j)] = data.values[(i, j)];
            }
        }
        Ok(LoadingsMatrix {
            variable_labels: data.case_labels[..n].to_vec(),
            loadings,
            eigenvalues,
        })
    }
}

/// Top-`k` principal components of a correlation matrix as loadings
/// (`eigenvector · √eigenvalue`), in descending eigenvalue order.
pub fn extract_factors(corr: &CorrelationMatrix, k: usize) -> Result<LoadingsMatrix> {
    let r = &corr.values;
    let n = r.rows();
    if r.cols() != n || corr.labels.len() != n {
        return Err(Error::InvalidParameter(
            "correlation matrix must be square and labelled".into(),
        ));
    }
    for i in 0..n {
        if (r[(i, i)] - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "diagonal entry {i} is not 1"
            )));
        }
        for j in i + 1..n {
            if (r[(i, j)] - r[(j, i)]).abs() > 1e-9 {
                return Err(Error::InvalidParameter(
                    "correlation matrix is not symmetric".into(),
                ));
            }
        }
    }
    if k == 0 || k > n {
        return Err(Error::Arity(format!(
            "cannot extract {k} factors from {n} variables"
        )));
    }
    let (values, vectors) = symmetric_eigen(r)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut loadings = Matrix::zeros(n, k);
    let mut eigenvalues = Vec::with_capacity(k);
    for (j, &src) in order.iter().take(k).enumerate() {
        let scale = values[src].max(0.0).sqrt();
        for i in 0..n {
            loadings[(i, j)] = vectors[(i, src)] * scale;
        }
        fix_column_sign(&mut loadings, j, None);
        eigenvalues.push(values[src]);
    }
    Ok(LoadingsMatrix {
        variable_labels: corr.labels.clone(),
        loadings,
        eigenvalues,
    })
}

/// Raw varimax criterion `Σ_j [Σ_i l⁴/n - (Σ_i l²/n)²]`.
pub fn varimax_criterion(loadings: &Matrix) -> f64 {
    let n = loadings.rows() as f64;
    (0..loadings.cols())
        .map(|j| {
            let (mut s2, mut s4) = (0.0, 0.0);
            for i in 0..loadings.rows() {
                let sq = loadings[(i, j)] * loadings[(i, j)];
                s2 += sq;
                s4 += sq * sq;
            }
            s4 / n - (s2 / n) * (s2 / n)
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VarimaxOptions {
    pub max_sweeps: usize,
    /// Stop once a sweep improves the criterion by less than this.
    pub tolerance: f64,
}

impl Default for VarimaxOptions {
    fn default() -> Self {
        VarimaxOptions {
            max_sweeps: 100,
            tolerance: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Varimax {
    pub loadings: LoadingsMatrix,
    /// Orthogonal k × k matrix with `rotated = original · rotation`.
    pub rotation: Matrix,
    /// Criterion before rotation and after each sweep.
    pub criterion_trace: Vec<f64>,
}

/// Raw varimax (rows not normalized to unit communality) rotation by pairwise planar rotations.
///
/// Each column of the result is sign-normalized so its largest-magnitude
/// loading is positive. A single factor is returned unchanged.
pub fn varimax_rotate(loadings: &LoadingsMatrix, opts: VarimaxOptions) -> Varimax {
    let k = loadings.k();
    let n = loadings.loadings.rows();
    let mut l = loadings.loadings.clone();
    let mut rotation = Matrix::identity(k);
    let mut trace = vec![varimax_criterion(&l)];
    if k < 2 || n == 0 {
        return Varimax {
            loadings: loadings.clone(),
            rotation,
            criterion_trace: trace,
        };
    }
    let nf = n as f64;
    for _ in 0..opts.max_sweeps {
        for p in 0..k {
            for q in p + 1..k {
                let (mut a, mut b, mut c, mut d) = (0.0, 0.0, 0.0, 0.0);
                for i in 0..n {
                    let (x, y) = (l[(i, p)], l[(i, q)]);
                    let u = x * x - y * y;
                    let v = 2.0 * x * y;
                    a += u;
                    b += v;
                    c += u * u - v * v;
                    d += 2.0 * u * v;
                }
                let num = d - 2.0 * a * b / nf;
                let den = c - (a * a - b * b) / nf;
                let phi = num.atan2(den) / 4.0;
                if phi == 0.0 {
                    continue;
                }
                let (sin, cos) = phi.sin_cos();
                for i in 0..n {
                    let (x, y) = (l[(i, p)], l[(i, q)]);
                    l[(i, p)] = cos * x + sin * y;
                    l[(i, q)] = -sin * x + cos * y;
                }
                for i in 0..k {
                    let (x, y) = (rotation[(i, p)], rotation[(i, q)]);
                    rotation[(i, p)] = cos * x + sin * y;
                    rotation[(i, q)] = -sin * x + cos * y;
                }
            }
        }
        let crit = varimax_criterion(&l);
        let gain = crit - trace.last().copied().unwrap_or(crit);
        trace.push(crit);
        if gain < opts.tolerance {
            break;
        }
    }
    for j in 0..k {
        fix_column_sign(&mut l, j, Some(&mut rotation));
    }
    Varimax {
        loadings: LoadingsMatrix {
            variable_labels: loadings.variable_labels.clone(),
            loadings: l,
            eigenvalues: loadings.eigenvalues.clone(),
        },
        rotation,
        criterion_trace: trace,
    }
}

/// Bin index of a loading in `[-1, 1]` split into `bins` equal half-open
/// intervals; the top interval is closed and out-of-range values are clamped.
pub fn bin_index(loading: f64, bins: usize) -> usize {
    let v = loading.clamp(-1.0, 1.0);
    let raw = ((v + 1.0) * bins as f64 / 2.0).floor();
    (raw.max(0.0) as usize).min(bins - 1)
}

/// Counts each variable once in the cell given by its three binned loadings
/// and normalizes into a `bins³` table with axes `factor1..factor3`.
pub fn bin_loadings_with(loadings: &LoadingsMatrix, bins: usize) -> Result<JointTable> {
    if loadings.k() != 3 {
        return Err(Error::Arity(format!(
            "binning needs 3 factors, got {}",
            loadings.k()
        )));
    }
    if bins < 2 {
        return Err(Error::InvalidParameter(format!(
            "bin count must be at least 2, got {bins}"
        )));
    }
    if loadings.loadings.rows() == 0 {
        return Err(Error::InvalidParameter("no variables to bin".into()));
    }
    let width = 2.0 / bins as f64;
    let labels: Vec<String> = (0..bins)
        .map(|b| format!("{:.2}", -1.0 + width * b as f64))
        .collect();
    let axes: Vec<Axis> = (1..=3)
        .map(|j| Axis::new(format!("factor{j}"), labels.clone()))
        .collect();
    let mut counts = vec![0.0; bins * bins * bins];
    for i in 0..loadings.loadings.rows() {
        let row = loadings.loadings.row(i);
        let cell = row
            .iter()
            .fold(0, |acc, &l| acc * bins + bin_index(l, bins));
        counts[cell] += 1.0;
    }
    JointTable::from_counts(axes, &counts)
}

/// [`bin_loadings_with`] using ten bins of width 0.2.
pub fn bin_loadings(loadings: &LoadingsMatrix) -> Result<JointTable> {
    bin_loadings_with(loadings, DEFAULT_BINS)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(cols: &[&[f64]]) -> DataMatrix {
        let n = cols[0].len();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| cols.iter().map(|c| c[i]).collect())
            .collect();
        DataMatrix::new(
            (0..n).map(|i| format!("c{i}")).collect(),
            (0..cols.len()).map(|j| format!("v{j}")).collect(),
            Matrix::from_rows(&rows).unwrap(),
        )
        .unwrap()
    }

    fn corr(rows: &[Vec<f64>]) -> CorrelationMatrix {
        CorrelationMatrix {
            labels: (0..rows.len()).map(|i| format!("v{i}")).collect(),
            values: Matrix::from_rows(rows).unwrap(),
        }
    }

    fn loadings(rows: &[Vec<f64>]) -> LoadingsMatrix {
        let m = Matrix::from_rows(rows).unwrap();
        LoadingsMatrix {
            variable_labels: (0..m.rows()).map(|i| format!("v{i}")).collect(),
            eigenvalues: vec![1.0; m.cols()],
            loadings: m,
        }
    }

    #[test]
    fn correlation_examples() {
        let r =
            correlation_matrix(&data(&[&[1.0, 2.0, 3.0, 4.0], &[3.0, 6.0, 9.0, 12.0]])).unwrap();
        assert_eq!(r.values[(0, 0)], 1.0);
        assert!((r.values[(0, 1)] - 1.0).abs() < 1e-15);

        let r = correlation_matrix(&data(&[&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]])).unwrap();
        assert!((r.values[(0, 1)] - 0.8).abs() < 1e-12);
        assert_eq!(r.values[(0, 1)], r.values[(1, 0)]);
    }

    #[test]
    fn zero_variance_names_variable() {
        let err = correlation_matrix(&data(&[&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]])).unwrap_err();
        assert!(matches!(err, Error::ZeroVariance(v) if v == "v1"));
        assert!(correlation_matrix(&data(&[&[1.0], &[2.0]])).is_err());
    }

    #[test]
    fn identity_extraction() {
        let c = corr(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        let l = extract_factors(&c, 3).unwrap();
        assert_eq!(l.eigenvalues, vec![1.0, 1.0, 1.0]);
        for j in 0..3 {
            let col = l.loadings.column(j);
            assert_eq!(col.iter().filter(|v| **v == 1.0).count(), 1);
            assert_eq!(col.iter().filter(|v| **v == 0.0).count(), 2);
        }
    }

    #[test]
    fn two_by_two_eigenvalues() {
        let l = extract_factors(&corr(&[vec![1.0, 0.6], vec![0.6, 1.0]]), 2).unwrap();
        assert!((l.eigenvalues[0] - 1.6).abs() < 1e-12);
        assert!((l.eigenvalues[1] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn rank_one_extraction() {
        let l = extract_factors(&corr(&[vec![1.0; 3], vec![1.0; 3], vec![1.0; 3]]), 1).unwrap();
        assert!((l.eigenvalues[0] - 3.0).abs() < 1e-12);
        for v in l.loadings.column(0) {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn extraction_rejects_bad_k() {
        let c = corr(&[vec![1.0, 0.6], vec![0.6, 1.0]]);
        assert!(matches!(extract_factors(&c, 3), Err(Error::Arity(_))));
        assert!(matches!(extract_factors(&c, 0), Err(Error::Arity(_))));
    }

    #[test]
    fn eigenvalues_sum_to_trace() {
        let c = corr(&[
            vec![1.0, 0.5, 0.2, -0.1],
            vec![0.5, 1.0, 0.3, 0.0],
            vec![0.2, 0.3, 1.0, 0.4],
            vec![-0.1, 0.0, 0.4, 1.0],
        ]);
        let l = extract_factors(&c, 4).unwrap();
        assert!((l.eigenvalues.iter().sum::<f64>() - 4.0).abs() < 1e-9);
        assert!(l.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        // full extraction reproduces the correlation matrix
        let back = l.loadings.matmul(&l.loadings.transpose());
        assert!(back.max_abs_diff(&c.values) < 1e-9);
    }

    #[test]
    fn simple_structure_is_left_alone() {
        let l = loadings(&[
            vec![0.9, 0.0],
            vec![0.8, 0.0],
            vec![0.0, 0.7],
            vec![0.0, 0.6],
        ]);
        let v = varimax_rotate(&l, VarimaxOptions::default());
        assert!(v.loadings.loadings.max_abs_diff(&l.loadings) < 1e-12);
    }

    #[test]
    fn single_factor_unchanged() {
        let l = loadings(&[vec![0.9], vec![-0.3]]);
        let v = varimax_rotate(&l, VarimaxOptions::default());
        assert_eq!(v.loadings, l);
        assert_eq!(v.rotation, Matrix::identity(1));
    }

    #[test]
    fn maximally_mixed_rotates_by_quarter_pi() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let l = loadings(&[vec![h, h], vec![h, h], vec![h, -h], vec![h, -h]]);
        let v = varimax_rotate(&l, VarimaxOptions::default());
        for i in 0..4 {
            let row = v.loadings.loadings.row(i);
            let (big, small) = (
                row[0].abs().max(row[1].abs()),
                row[0].abs().min(row[1].abs()),
            );
            assert!(
                (big - 1.0).abs() < 1e-12 && small < 1e-12,
                "row {i}: {row:?}"
            );
        }
    }

    #[test]
    fn binning_examples() {
        assert_eq!(bin_index(-1.0, 10), 0);
        assert_eq!(bin_index(1.0, 10), 9);
        assert_eq!(bin_index(0.0, 10), 5);
        assert_eq!(bin_index(0.19, 10), 5);
        assert_eq!(bin_index(-0.01, 10), 4);
        assert_eq!(bin_index(1.3, 10), 9);
        assert_eq!(bin_index(-1.3, 10), 0);

        let l = loadings(&[
            vec![-1.0, -1.0, -1.0],
            vec![1.0, 1.0, 1.0],
            vec![0.0, 0.19, -0.01],
        ]);
        let t = bin_loadings(&l).unwrap();
        assert_eq!(t.shape(), vec![10, 10, 10]);
        let third = 1.0 / 3.0;
        assert_eq!(t.get(&[0, 0, 0]), third);
        assert_eq!(t.get(&[9, 9, 9]), third);
        assert_eq!(t.get(&[5, 5, 4]), third);
        assert_eq!(t.axis_names(), vec!["factor1", "factor2", "factor3"]);
    }

    #[test]
    fn binning_needs_three_factors() {
        let l = loadings(&[vec![0.1, 0.2]]);
        assert!(matches!(bin_loadings(&l), Err(Error::Arity(_))));
    }

    #[test]
    fn loadings_csv_round_trip() {
        let l = loadings(&[vec![0.5, -0.25], vec![0.125, 1.0]]);
        let mut buf = Vec::new();
        l.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "variable,factor1,factor2\nv0,0.5,-0.25\nv1,0.125,1\neigenvalue,1,1\n"
        );
        assert_eq!(LoadingsMatrix::read_csv(text.as_bytes()).unwrap(), l);
    }

    #[test]
    fn drop_constant_columns_reports_labels() {
        let d = data(&[&[1.0, 0.0, 1.0], &[1.0, 1.0, 1.0], &[0.0, 0.0, 1.0]]);
        let (kept, dropped) = d.drop_constant_columns();
        assert_eq!(kept.variable_labels, vec!["v0", "v2"]);
        assert_eq!(dropped, vec!["v1"]);
    }
}

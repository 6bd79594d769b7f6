//! Paired samples, CSV ingestion, rescaling, pairwise distances and double
//! centering.

use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sum;

/// Dense row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::Shape {
                    expected: cols,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Single-column matrix.
    pub fn column_vector(values: Vec<f64>) -> Self {
        Self {
            rows: values.len(),
            cols: 1,
            data: values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }

    /// Rows reordered so that row `k` of the result is row `order[k]` of `self`.
    pub fn permute_rows(&self, order: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for &k in order {
            data.extend_from_slice(self.row(k));
        }
        Self {
            rows: order.len(),
            cols: self.cols,
            data,
        }
    }

    fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.data
            .iter()
            .position(|v| !v.is_finite())
            .map(|i| (i / self.cols.max(1), i % self.cols.max(1)))
    }
}

/// Aligned observations of two random vectors: `x` is n×p, `y` is n×q.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    x: Matrix,
    y: Matrix,
}

impl PairedSample {
    pub fn new(x: Matrix, y: Matrix) -> Result<Self> {
        if x.rows() != y.rows() {
            return Err(Error::RowMismatch {
                x: x.rows(),
                y: y.rows(),
            });
        }
        if x.rows() < 2 {
            return Err(Error::TooFewRows(x.rows()));
        }
        if x.cols() == 0 || y.cols() == 0 {
            return Err(Error::InvalidSelector("empty column set".into()));
        }
        for m in [&x, &y] {
            if let Some((row, column)) = m.first_non_finite() {
                return Err(Error::NonFinite { row, column });
            }
        }
        Ok(Self { x, y })
    }

    /// Convenience constructor for two scalar columns.
    pub fn from_columns(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        Self::new(Matrix::column_vector(x), Matrix::column_vector(y))
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &Matrix {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn is_scalar(&self) -> bool {
        self.x.cols() == 1 && self.y.cols() == 1
    }

    /// The same sample with the roles of x and y exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            x: self.y.clone(),
            y: self.x.clone(),
        }
    }

    /// Both margins mapped into the unit interval column by column.
    pub fn rescaled(&self) -> Result<Self> {
        Ok(Self {
            x: rescale_unit_interval(&self.x)?,
            y: rescale_unit_interval(&self.y)?,
        })
    }
}

/// Column selector: a set of zero-based column indices.
///
/// Parses from comma-separated indices and inclusive ranges, e.g. `0`,
/// `1,3`, `2-4`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSelector(Vec<usize>);

impl ColumnSelector {
    pub fn new(columns: Vec<usize>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InvalidSelector("empty column set".into()));
        }
        let unique: BTreeSet<_> = columns.iter().collect();
        if unique.len() != columns.len() {
            return Err(Error::InvalidSelector(format!(
                "duplicate column in {columns:?}"
            )));
        }
        Ok(Self(columns))
    }

    pub fn columns(&self) -> &[usize] {
        &self.0
    }

    pub fn is_disjoint(&self, other: &ColumnSelector) -> bool {
        self.0.iter().all(|c| !other.0.contains(c))
    }
}

impl FromStr for ColumnSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidSelector(s.to_string());
        let mut columns = Vec::new();
        for part in s.split(',').map(str::trim) {
            match part.split_once('-') {
                Some((lo, hi)) => {
                    let lo: usize = lo.trim().parse().map_err(|_| bad())?;
                    let hi: usize = hi.trim().parse().map_err(|_| bad())?;
                    if hi < lo {
                        return Err(bad());
                    }
                    columns.extend(lo..=hi);
                }
                None => columns.push(part.parse().map_err(|_| bad())?),
            }
        }
        Self::new(columns)
    }
}

/// Reads a comma-delimited numeric file into a paired sample.
///
/// Row numbers in errors are 1-based file line numbers.
pub fn load_paired_csv(
    path: impl AsRef<Path>,
    x_cols: &ColumnSelector,
    y_cols: &ColumnSelector,
    has_header: bool,
) -> Result<PairedSample> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_paired_csv(file, x_cols, y_cols, has_header)
}

/// As [`load_paired_csv`], from any reader.
pub fn read_paired_csv<R: Read>(
    reader: R,
    x_cols: &ColumnSelector,
    y_cols: &ColumnSelector,
    has_header: bool,
) -> Result<PairedSample> {
    if !x_cols.is_disjoint(y_cols) {
        return Err(Error::InvalidSelector(
            "x and y selectors overlap".to_string(),
        ));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let mut rows = 0usize;
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            row: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(rows + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        for (selector, sink) in [(x_cols, &mut xs), (y_cols, &mut ys)] {
            for &column in selector.columns() {
                let cell = record.get(column).ok_or(Error::SelectorOutOfRange {
                    column,
                    row: line,
                    width: record.len(),
                })?;
                let value: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                    row: line,
                    column,
                    value: cell.to_string(),
                })?;
                if !value.is_finite() {
                    return Err(Error::NonFinite { row: line, column });
                }
                sink.push(value);
            }
        }
        rows += 1;
    }
    if rows < 2 {
        return Err(Error::TooFewRows(rows));
    }
    PairedSample::new(
        Matrix::new(rows, x_cols.columns().len(), xs)?,
        Matrix::new(rows, y_cols.columns().len(), ys)?,
    )
}

/// Maps each column affinely onto [0,1] (min to 0, max to 1).
pub fn rescale_unit_interval(m: &Matrix) -> Result<Matrix> {
    let mut out = m.clone();
    for c in 0..m.cols() {
        let column = m.column(c);
        let (lo, hi) = min_max(&column);
        if !(hi > lo) {
            return Err(Error::ConstantColumn(c));
        }
        let range = hi - lo;
        for (r, v) in column.into_iter().enumerate() {
            out.set(r, c, (v - lo) / range);
        }
    }
    Ok(out)
}

pub(crate) fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

/// Symmetric n×n matrix of pairwise Euclidean distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    /// Validates symmetry, zero diagonal and nonnegativity.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let m = Matrix::from_rows(rows)?;
        let n = m.rows();
        if m.cols() != n {
            return Err(Error::Shape {
                expected: n * n,
                got: n * m.cols(),
            });
        }
        for k in 0..n {
            for l in 0..n {
                let v = m.get(k, l);
                let ok = v.is_finite() && v >= 0.0 && v == m.get(l, k) && (k != l || v == 0.0);
                if !ok {
                    return Err(Error::InvalidArgument(format!(
                        "not a distance matrix at ({k}, {l})"
                    )));
                }
            }
        }
        Ok(Self { n, d: m.data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.d[k * self.n + l]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.d[k * self.n..(k + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.d
    }
}

#[inline]
pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == 1 {
        return (a[0] - b[0]).abs();
    }
    a.iter()
        .zip(b)
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        .sqrt()
}

/// Pairwise Euclidean distances between the rows of `m`.
pub fn pairwise_distances(m: &Matrix) -> Result<DistanceMatrix> {
    let n = m.rows();
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }
    if let Some((row, column)) = m.first_non_finite() {
        return Err(Error::NonFinite { row, column });
    }
    let mut d = vec![0.0; n * n];
    // (a-b)^2 == (b-a)^2 bit for bit, so entries come out exactly symmetric.
    d.par_chunks_mut(n).enumerate().for_each(|(k, row)| {
        for (l, out) in row.iter_mut().enumerate() {
            *out = euclidean(m.row(k), m.row(l));
        }
    });
    Ok(DistanceMatrix { n, d })
}

/// Double-centered distance matrix: every row and column sums to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredMatrix {
    n: usize,
    a: Vec<f64>,
}

impl CenteredMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.a[k * self.n + l]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.a[k * self.n..(k + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.a
    }

    /// Centers this (already centered) matrix again.
    pub fn recentered(&self) -> CenteredMatrix {
        CenteredMatrix {
            n: self.n,
            a: center_symmetric(&self.a, self.n),
        }
    }

    /// Compensated sum of the elementwise product with `other`.
    pub fn inner(&self, other: &CenteredMatrix) -> f64 {
        sum::sum(self.a.iter().zip(&other.a).map(|(u, v)| u * v))
    }
}

/// Subtracts row and column means and adds back the grand mean.
pub fn double_center(d: &DistanceMatrix) -> CenteredMatrix {
    CenteredMatrix {
        n: d.n,
        a: center_symmetric(&d.d, d.n),
    }
}

fn center_symmetric(values: &[f64], n: usize) -> Vec<f64> {
    let row_means: Vec<f64> = values.chunks(n).map(sum::mean).collect();
    let grand = sum::mean(&row_means);
    let mut out = vec![0.0; n * n];
    // Row means double as column means for symmetric input; r_k + r_l is
    // commutative so the result stays exactly symmetric.
    out.par_chunks_mut(n).enumerate().for_each(|(k, row)| {
        for (l, slot) in row.iter_mut().enumerate() {
            *slot = (values[k * n + l] - (row_means[k] + row_means[l])) + grand;
        }
    });
    out
}

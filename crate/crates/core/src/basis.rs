//! Haar/Schauder basis machinery and the (U,V)-covariance computed from a
//! truncated coefficient matrix.
//!
//! Basis index 0 is the linear term (`H_0 ≡ 1`, `S_0(t) = t`); index
//! `i = 2^j + k` with `0 <= k < 2^j` is resolution `j`, offset `k`,
//! supported on `[k/2^j, (k+1)/2^j]`. Truncation at level `L` keeps the
//! contiguous prefix of indices `0..2^(L+1)`.

use std::f64::consts::SQRT_2;
use std::io::{self, Write};

use serde::Serialize;

use crate::data::{self, Matrix, PairedSample};
use crate::error::{Error, Result};
use crate::sum::CompensatedSum;

/// Default truncation level (128 functions per axis).
pub const DEFAULT_LEVEL: u32 = 6;

/// Number of basis functions kept at truncation level `level`.
pub fn basis_count(level: u32) -> usize {
    1usize << (level + 1)
}

/// Resolution and offset of a non-constant index; `None` for index 0.
pub fn dyadic_index(i: usize) -> Option<(u32, usize)> {
    if i == 0 {
        return None;
    }
    let j = usize::BITS - 1 - i.leading_zeros();
    Some((j, i - (1usize << j)))
}

/// Dyadic support of basis function `i` (index 0 covers the unit interval).
pub fn support_interval(i: usize) -> (f64, f64) {
    match dyadic_index(i) {
        None => (0.0, 1.0),
        Some((j, k)) => {
            let w = (-(j as f64)).exp2();
            (k as f64 * w, (k + 1) as f64 * w)
        }
    }
}

fn check_unit(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::OutsideUnitInterval { row: 0, value: t })
    }
}

/// Haar function `H_i(t)`. At `t = 1` the left limit is used.
pub fn haar(i: usize, t: f64) -> Result<f64> {
    check_unit(t)?;
    let Some((j, k)) = dyadic_index(i) else {
        return Ok(1.0);
    };
    let scale = (j as f64).exp2();
    let height = (j as f64 / 2.0).exp2();
    let last = (1usize << j) - 1;
    let u = t * scale - k as f64;
    Ok(if t == 1.0 {
        if k == last {
            -height
        } else {
            0.0
        }
    } else if (0.0..0.5).contains(&u) {
        height
    } else if (0.5..1.0).contains(&u) {
        -height
    } else {
        0.0
    })
}

/// Schauder function `S_i(t) = ∫_0^t H_i`, evaluated in closed form.
pub fn schauder(i: usize, t: f64) -> Result<f64> {
    check_unit(t)?;
    Ok(schauder_unchecked(i, t))
}

#[inline]
fn tent(j: u32, k: usize, t: f64) -> f64 {
    let scale = (j as f64).exp2();
    let u = t * scale - k as f64;
    if !(0.0..=1.0).contains(&u) {
        return 0.0;
    }
    // 2^{j/2} times the distance to the nearer end, in original units.
    (j as f64 / 2.0).exp2() * u.min(1.0 - u) / scale
}

fn schauder_unchecked(i: usize, t: f64) -> f64 {
    match dyadic_index(i) {
        None => t,
        Some((j, k)) => tent(j, k, t),
    }
}

/// Calls `f(i, S_i(t))` for every index below `count` where `S_i(t) != 0`.
/// At most one tent per resolution is nonzero at a given point.
fn for_each_nonzero(count: usize, t: f64, mut f: impl FnMut(usize, f64)) {
    if count == 0 {
        return;
    }
    if t != 0.0 {
        f(0, t);
    }
    let mut j = 0u32;
    while (1usize << j) < count {
        let cells = 1usize << j;
        let k = ((t * cells as f64) as usize).min(cells - 1);
        let i = cells + k;
        if i < count {
            let v = tent(j, k, t);
            if v != 0.0 {
                f(i, v);
            }
        }
        j += 1;
    }
}

/// Basis families admitted by [`BasisSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisFamily {
    HaarSchauder,
}

impl BasisFamily {
    pub fn eval(&self, i: usize, t: f64) -> Result<f64> {
        match self {
            BasisFamily::HaarSchauder => schauder(i, t),
        }
    }

    pub fn support(&self, i: usize) -> (f64, f64) {
        match self {
            BasisFamily::HaarSchauder => support_interval(i),
        }
    }
}

/// One axis of a truncated expansion: a prefix of the basis enumeration
/// together with its positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSpec {
    family: BasisFamily,
    count: usize,
    level: Option<u32>,
    weights: Vec<f64>,
}

impl BasisSpec {
    /// Schauder functions `0..2^(level+1)` with unit weights.
    pub fn at_level(level: u32) -> Self {
        let count = basis_count(level);
        Self {
            family: BasisFamily::HaarSchauder,
            count,
            level: Some(level),
            weights: vec![1.0; count],
        }
    }

    /// The first `count` Schauder functions with unit weights.
    pub fn prefix(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidArgument("basis must be nonempty".into()));
        }
        let level = (count >= 2 && count.is_power_of_two()).then(|| count.trailing_zeros() - 1);
        Ok(Self {
            family: BasisFamily::HaarSchauder,
            count,
            level,
            weights: vec![1.0; count],
        })
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        check_weights(&weights, self.count)?;
        self.weights = weights;
        Ok(self)
    }

    pub fn family(&self) -> BasisFamily {
        self.family
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Truncation level, when the count is a full level.
    pub fn level(&self) -> Option<u32> {
        self.level
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

fn check_weights(weights: &[f64], expected: usize) -> Result<()> {
    if weights.len() != expected {
        return Err(Error::WeightLength {
            expected,
            got: weights.len(),
        });
    }
    if let Some((index, &value)) = weights
        .iter()
        .enumerate()
        .find(|(_, w)| !(w.is_finite() && **w > 0.0))
    {
        return Err(Error::InvalidWeight { index, value });
    }
    Ok(())
}

/// Empirical matrix of basis-function covariances `Cov(φ_i(X), ψ_j(Y))`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    a: Matrix,
    basis_x: BasisSpec,
    basis_y: BasisSpec,
    n: usize,
}

impl CoefficientMatrix {
    pub fn new(a: Matrix, basis_x: BasisSpec, basis_y: BasisSpec, n: usize) -> Result<Self> {
        if a.rows() != basis_x.count() || a.cols() != basis_y.count() {
            return Err(Error::CoefficientShape {
                rows: a.rows(),
                cols: a.cols(),
                expected_rows: basis_x.count(),
                expected_cols: basis_y.count(),
            });
        }
        if a.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        Ok(Self {
            a,
            basis_x,
            basis_y,
            n,
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a.get(i, j)
    }

    pub fn basis_x(&self) -> &BasisSpec {
        &self.basis_x
    }

    pub fn basis_y(&self) -> &BasisSpec {
        &self.basis_y
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Plug-in (1/n) covariances between basis evaluations of x and y.
///
/// Both margins must be scalar and lie in [0,1].
pub fn coefficient_matrix(
    s: &PairedSample,
    basis_x: &BasisSpec,
    basis_y: &BasisSpec,
) -> Result<CoefficientMatrix> {
    if !s.is_scalar() {
        return Err(Error::NotScalar {
            p: s.x().cols(),
            q: s.y().cols(),
        });
    }
    let (x, y) = (s.x().as_slice(), s.y().as_slice());
    for v in [x, y] {
        if let Some(row) = v.iter().position(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::OutsideUnitInterval { row, value: v[row] });
        }
    }
    let (ix, jy) = (basis_x.count(), basis_y.count());
    let n = s.n();

    let mut sum_x = vec![CompensatedSum::new(); ix];
    let mut sum_y = vec![CompensatedSum::new(); jy];
    let mut cross = vec![CompensatedSum::new(); ix * jy];
    let (mut fx, mut fy) = (Vec::new(), Vec::new());
    for (&xm, &ym) in x.iter().zip(y) {
        fx.clear();
        fy.clear();
        for_each_nonzero(ix, xm, |i, v| fx.push((i, v)));
        for_each_nonzero(jy, ym, |j, v| fy.push((j, v)));
        for &(i, u) in &fx {
            sum_x[i].add(u);
            for &(j, v) in &fy {
                cross[i * jy + j].add(u * v);
            }
        }
        for &(j, v) in &fy {
            sum_y[j].add(v);
        }
    }

    // Covariance with a constant margin is zero; the product-minus-means
    // form below would leave rounding residue.
    let constant = |v: &[f64]| v.iter().all(|&t| t == v[0]);
    if constant(x) || constant(y) {
        return CoefficientMatrix::new(Matrix::zeros(ix, jy), basis_x.clone(), basis_y.clone(), n);
    }

    let nf = n as f64;
    let mean_x: Vec<f64> = sum_x.iter().map(|c| c.value() / nf).collect();
    let mean_y: Vec<f64> = sum_y.iter().map(|c| c.value() / nf).collect();
    let mut a = Matrix::zeros(ix, jy);
    for i in 0..ix {
        for j in 0..jy {
            a.set(i, j, cross[i * jy + j].value() / nf - mean_x[i] * mean_y[j]);
        }
    }
    CoefficientMatrix::new(a, basis_x.clone(), basis_y.clone(), n)
}

/// `Σ σ_i² τ_j² a_ij²`, summed shell by shell (`max(i, j)` ascending) so
/// that enlarging the prefix only appends nonnegative terms.
pub fn weighted_sum_sq(a: &Matrix, sigma: &[f64], tau: &[f64]) -> Result<f64> {
    if sigma.len() != a.rows() {
        return Err(Error::WeightLength {
            expected: a.rows(),
            got: sigma.len(),
        });
    }
    if tau.len() != a.cols() {
        return Err(Error::WeightLength {
            expected: a.cols(),
            got: tau.len(),
        });
    }
    let term = |i: usize, j: usize| {
        let w = sigma[i] * sigma[i] * tau[j] * tau[j];
        let v = a.get(i, j);
        w * v * v
    };
    let mut total = 0.0;
    for s in 0..a.rows().max(a.cols()) {
        if s < a.cols() {
            for i in 0..s.min(a.rows()) {
                total += term(i, s);
            }
        }
        if s < a.rows() {
            for j in 0..(s + 1).min(a.cols()) {
                total += term(s, j);
            }
        }
    }
    Ok(total)
}

/// Squared (U,V)-covariance of the truncated expansion.
pub fn uv_cov_sq(a: &CoefficientMatrix) -> f64 {
    weighted_sum_sq(&a.a, a.basis_x.weights(), a.basis_y.weights())
        .expect("weights validated at construction")
}

/// Unweighted Frobenius norm `√(Σ a_ij²)`.
pub fn frobenius_norm(a: &CoefficientMatrix) -> f64 {
    let ones_x = vec![1.0; a.a.rows()];
    let ones_y = vec![1.0; a.a.cols()];
    weighted_sum_sq(&a.a, &ones_x, &ones_y)
        .expect("unit weights match")
        .sqrt()
}

/// Maps a column onto [0,1]; a constant column maps to all zeros, where
/// every coefficient vanishes.
pub fn unit_scaled(values: &[f64]) -> Vec<f64> {
    let (lo, hi) = data::min_max(values);
    if !(hi > lo) {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - lo) / (hi - lo)).collect()
}

/// Scalar sample with both margins passed through [`unit_scaled`].
pub fn unit_scaled_sample(s: &PairedSample) -> Result<PairedSample> {
    if !s.is_scalar() {
        return Err(Error::NotScalar {
            p: s.x().cols(),
            q: s.y().cols(),
        });
    }
    PairedSample::from_columns(unit_scaled(s.x().as_slice()), unit_scaled(s.y().as_slice()))
}

/// Weights realizing the two-sided Brownian motion used by distance
/// covariance (`Cov(W_s, W_t) = |s| + |t| - |s - t|`), i.e. √2 times the
/// standard Lévy–Ciesielski series.
pub fn brownian_spec(level: u32) -> BasisSpec {
    BasisSpec::at_level(level)
        .with_weights(vec![SQRT_2; basis_count(level)])
        .expect("positive weights")
}

/// Truncated Brownian covariance on the unit-scaled sample.
///
/// Equals `2 √(Σ a_ij²)` with Schauder bases on both axes; the factor 2
/// converts the standard Brownian motion of the series into the
/// normalization under which Brownian covariance equals distance
/// covariance.
pub fn brownian_cov_truncated(s: &PairedSample, level: u32) -> Result<f64> {
    let t = unit_scaled_sample(s)?;
    let spec = brownian_spec(level);
    let a = coefficient_matrix(&t, &spec, &spec)?;
    Ok(uv_cov_sq(&a).sqrt())
}

/// One dyadic rectangle of the dependence map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MapCell {
    pub i: usize,
    pub j: usize,
    pub x_interval: (f64, f64),
    pub y_interval: (f64, f64),
    pub contribution: f64,
}

/// Per-rectangle contributions `σ_i² τ_j² a_ij²`.
#[derive(Debug, Clone, PartialEq)]
pub struct DependenceMap {
    rows: usize,
    cols: usize,
    cells: Vec<MapCell>,
    total: f64,
}

impl DependenceMap {
    pub fn cells(&self) -> &[MapCell] {
        &self.cells
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn cell(&self, i: usize, j: usize) -> &MapCell {
        &self.cells[i * self.cols + j]
    }

    /// Cell with the largest contribution (first in row-major order on ties).
    pub fn max_cell(&self) -> &MapCell {
        self.cells
            .iter()
            .reduce(|best, c| {
                if c.contribution > best.contribution {
                    c
                } else {
                    best
                }
            })
            .expect("map is nonempty")
    }

    /// CSV with header `i,j,x_lo,x_hi,y_lo,y_hi,contribution`, row-major.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "i,j,x_lo,x_hi,y_lo,y_hi,contribution")?;
        for c in &self.cells {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                c.i,
                c.j,
                c.x_interval.0,
                c.x_interval.1,
                c.y_interval.0,
                c.y_interval.1,
                c.contribution
            )?;
        }
        Ok(())
    }

    /// Binary 8-bit graymap (P5): width = y basis count, height = x basis
    /// count, pixel `(i, j)` = round(255 · contribution / max). An all-zero
    /// map renders black.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> io::Result<()> {
        let max = self.max_cell().contribution;
        write!(w, "P5\n{} {}\n255\n", self.cols, self.rows)?;
        let pixels: Vec<u8> = self
            .cells
            .iter()
            .map(|c| {
                if max > 0.0 {
                    (255.0 * c.contribution / max).round() as u8
                } else {
                    0
                }
            })
            .collect();
        w.write_all(&pixels)
    }
}

/// Dependence map of a coefficient matrix; `total` equals [`uv_cov_sq`].
pub fn dependence_map(a: &CoefficientMatrix) -> DependenceMap {
    let (rows, cols) = (a.a.rows(), a.a.cols());
    let (sx, sy) = (a.basis_x.weights(), a.basis_y.weights());
    let mut cells = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let v = a.get(i, j);
            cells.push(MapCell {
                i,
                j,
                x_interval: a.basis_x.family().support(i),
                y_interval: a.basis_y.family().support(j),
                contribution: sx[i] * sx[i] * sy[j] * sy[j] * v * v,
            });
        }
    }
    DependenceMap {
        rows,
        cols,
        cells,
        total: uv_cov_sq(a),
    }
}

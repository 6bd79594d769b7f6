//! Empirical distance covariance, variance and correlation.
//!
//! All statistics are V-statistics with `1/n²` normalization. Two routes
//! compute the same quantities:
//!
//! * [`dcov_sq_naive`] streams over all pairs (any dimension, O(n²) time,
//!   O(n) memory);
//! * [`dcov_sq_fast`] handles scalar pairs in O(n log n) by sorting and a
//!   merge-sort dominance sweep.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{self, Matrix, PairedSample};
use crate::error::{Error, Result};
use crate::sum::{self, CompensatedSum};

/// Squared distance covariance and variances with the derived correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DcovResult {
    pub dcov_sq: f64,
    pub dvar_x_sq: f64,
    pub dvar_y_sq: f64,
    pub dcor: f64,
    pub n: usize,
    /// `dcov_sq` before clamping rounding-level negatives to zero.
    pub dcov_sq_raw: f64,
}

impl DcovResult {
    fn from_raw(dcov_sq_raw: f64, dvar_x_raw: f64, dvar_y_raw: f64, n: usize) -> Self {
        let dcov_sq = dcov_sq_raw.max(0.0);
        let dvar_x_sq = dvar_x_raw.max(0.0);
        let dvar_y_sq = dvar_y_raw.max(0.0);
        let denom = dvar_x_sq * dvar_y_sq;
        let dcor = if denom > 0.0 {
            (dcov_sq.sqrt() / denom.sqrt().sqrt()).min(1.0)
        } else {
            0.0
        };
        Self {
            dcov_sq,
            dvar_x_sq,
            dvar_y_sq,
            dcor,
            n,
            dcov_sq_raw,
        }
    }
}

trait Points: Sync {
    fn len(&self) -> usize;
    fn dist(&self, k: usize, l: usize) -> f64;
}

struct Scalars<'a>(&'a [f64]);

impl Points for Scalars<'_> {
    fn len(&self) -> usize {
        self.0.len()
    }

    #[inline(always)]
    fn dist(&self, k: usize, l: usize) -> f64 {
        (self.0[k] - self.0[l]).abs()
    }
}

struct Rows<'a>(&'a Matrix);

impl Points for Rows<'_> {
    fn len(&self) -> usize {
        self.0.rows()
    }

    #[inline(always)]
    fn dist(&self, k: usize, l: usize) -> f64 {
        data::euclidean(self.0.row(k), self.0.row(l))
    }
}

const LANES: usize = 4;

/// Compensated accumulators over `LANES` interleaved streams, merged in a
/// fixed order.
#[derive(Clone, Copy, Default)]
struct Lanes([CompensatedSum; LANES]);

impl Lanes {
    #[inline(always)]
    fn add(&mut self, lane: usize, v: f64) {
        self.0[lane].add(v);
    }

    fn total(&self) -> CompensatedSum {
        let mut acc = CompensatedSum::new();
        for lane in self.0 {
            acc += lane;
        }
        acc
    }
}

fn row_means<P: Points>(p: &P) -> Vec<f64> {
    let n = p.len();
    (0..n)
        .into_par_iter()
        .map(|k| {
            let mut acc = Lanes::default();
            for l in 0..n {
                acc.add(l % LANES, p.dist(k, l));
            }
            acc.total().value() / n as f64
        })
        .collect()
}

fn naive_kernel<P: Points, Q: Points>(x: &P, y: &Q) -> DcovResult {
    let n = x.len();
    let (rx, ry) = (row_means(x), row_means(y));
    let (gx, gy) = (sum::mean(&rx), sum::mean(&ry));

    let centered = |k: usize, l: usize| {
        let a = (x.dist(k, l) - (rx[k] + rx[l])) + gx;
        let b = (y.dist(k, l) - (ry[k] + ry[l])) + gy;
        (a, b)
    };

    // Strict lower triangle per row; the matrices are symmetric.
    let rows: Vec<[CompensatedSum; 3]> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut acc = [Lanes::default(); 3];
            for l in 0..k {
                let (a, b) = centered(k, l);
                let lane = l % LANES;
                acc[0].add(lane, a * b);
                acc[1].add(lane, a * a);
                acc[2].add(lane, b * b);
            }
            acc.map(|lanes| lanes.total())
        })
        .collect();

    let mut off = [CompensatedSum::new(); 3];
    let mut diag = [CompensatedSum::new(); 3];
    for (k, row) in rows.into_iter().enumerate() {
        for (o, r) in off.iter_mut().zip(row) {
            *o += r;
        }
        let (a, b) = centered(k, k);
        diag[0].add(a * b);
        diag[1].add(a * a);
        diag[2].add(b * b);
    }
    let n2 = (n as f64) * (n as f64);
    let total = |i: usize| (2.0 * off[i].value() + diag[i].value()) / n2;
    DcovResult::from_raw(total(0), total(1), total(2), n)
}

/// Reference O(n²) computation from double-centered distance matrices.
pub fn dcov_sq_naive(s: &PairedSample) -> DcovResult {
    let (x, y) = (s.x(), s.y());
    match (x.cols(), y.cols()) {
        (1, 1) => naive_kernel(&Scalars(x.as_slice()), &Scalars(y.as_slice())),
        (1, _) => naive_kernel(&Scalars(x.as_slice()), &Rows(y)),
        (_, 1) => naive_kernel(&Rows(x), &Scalars(y.as_slice())),
        _ => naive_kernel(&Rows(x), &Rows(y)),
    }
}

/// O(n log n) computation for scalar x and y.
pub fn dcov_sq_fast(x: &[f64], y: &[f64]) -> Result<DcovResult> {
    if x.len() != y.len() {
        return Err(Error::RowMismatch {
            x: x.len(),
            y: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }
    for (column, v) in [x, y].into_iter().enumerate() {
        if let Some(row) = v.iter().position(|t| !t.is_finite()) {
            return Err(Error::NonFinite { row, column });
        }
    }
    Ok(fast_kernel(x, y))
}

/// Dispatches to the fast path for scalar samples, naive otherwise.
pub fn dcov_sq(s: &PairedSample) -> DcovResult {
    if s.is_scalar() {
        fast_kernel(s.x().as_slice(), s.y().as_slice())
    } else {
        dcov_sq_naive(s)
    }
}

/// Fast path for a sample; rejects multivariate margins.
pub fn dcov_sq_fast_sample(s: &PairedSample) -> Result<DcovResult> {
    if !s.is_scalar() {
        return Err(Error::NotScalar {
            p: s.x().cols(),
            q: s.y().cols(),
        });
    }
    Ok(fast_kernel(s.x().as_slice(), s.y().as_slice()))
}

fn shift_to_zero(v: &[f64]) -> Vec<f64> {
    let (lo, _) = data::min_max(v);
    v.iter().map(|t| t - lo).collect()
}

fn sort_order(v: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    order
}

/// Distance row sums Σ_l |v_k - v_l| for every k, via sorted prefix sums.
fn abs_row_sums(v: &[f64], order: &[usize]) -> Vec<f64> {
    let n = v.len();
    let total = sum::sum(v.iter().copied());
    let mut out = vec![0.0; n];
    let mut prefix = CompensatedSum::new();
    for (r, &k) in order.iter().enumerate() {
        let below = prefix.value();
        // r values below contribute v·r - P, the rest (T - P - v) - v·(n-r-1).
        let mut acc = CompensatedSum::new();
        acc.add(v[k] * (2.0 * r as f64 - n as f64));
        acc.add(total);
        acc.add(-2.0 * below);
        out[k] = acc.value();
        prefix.add(v[k]);
    }
    out
}

/// Σ_{k,l} (v_k - v_l)² = 2n Σ (v - mean)².
fn sum_sq_diffs(v: &[f64]) -> f64 {
    let m = sum::mean(v);
    2.0 * v.len() as f64 * sum::sum(v.iter().map(|t| (t - m) * (t - m)))
}

#[derive(Clone, Copy, Default)]
struct Dominance {
    count: f64,
    sx: CompensatedSum,
    sy: CompensatedSum,
    sxy: CompensatedSum,
}

/// For each k (in the given order), sums over earlier l with y_l <= y_k.
fn dominance_sums(xs: &[f64], ys: &[f64]) -> Vec<Dominance> {
    let n = xs.len();
    let mut dom = vec![Dominance::default(); n];
    let mut idx: Vec<usize> = (0..n).collect();
    let mut buf = vec![0usize; n];
    let mut width = 1;
    while width < n {
        let mut lo = 0;
        while lo < n {
            let mid = (lo + width).min(n);
            let hi = (lo + 2 * width).min(n);
            let (mut i, mut j, mut out) = (lo, mid, lo);
            let mut run = Dominance::default();
            while i < mid || j < hi {
                let take_left = j >= hi || (i < mid && ys[idx[i]] <= ys[idx[j]]);
                if take_left {
                    let l = idx[i];
                    run.count += 1.0;
                    run.sx.add(xs[l]);
                    run.sy.add(ys[l]);
                    run.sxy.add(xs[l] * ys[l]);
                    buf[out] = l;
                    i += 1;
                } else {
                    let k = idx[j];
                    let d = &mut dom[k];
                    d.count += run.count;
                    d.sx += run.sx;
                    d.sy += run.sy;
                    d.sxy += run.sxy;
                    buf[out] = k;
                    j += 1;
                }
                out += 1;
            }
            lo = hi;
        }
        std::mem::swap(&mut idx, &mut buf);
        width *= 2;
    }
    dom
}

/// Σ_{k,l} |x_k - x_l| |y_k - y_l| without forming the pair matrix.
fn cross_abs_sum(x: &[f64], y: &[f64], order_x: &[usize]) -> f64 {
    let xs: Vec<f64> = order_x.iter().map(|&k| x[k]).collect();
    let ys: Vec<f64> = order_x.iter().map(|&k| y[k]).collect();
    let dom = dominance_sums(&xs, &ys);

    // Over l < k in x order, |x_k - x_l| = x_k - x_l and
    // |y_k - y_l| = ±(y_k - y_l), giving 2·T_dom - T_all.
    let mut all = CompensatedSum::new();
    let mut dominated = CompensatedSum::new();
    let (mut px, mut py, mut pxy) = (
        CompensatedSum::new(),
        CompensatedSum::new(),
        CompensatedSum::new(),
    );
    for k in 0..xs.len() {
        let (xk, yk) = (xs[k], ys[k]);
        all.add(k as f64 * xk * yk);
        all.add(-xk * py.value());
        all.add(-yk * px.value());
        all.add(pxy.value());

        let d = &dom[k];
        dominated.add(d.count * xk * yk);
        dominated.add(-xk * d.sy.value());
        dominated.add(-yk * d.sx.value());
        dominated.add(d.sxy.value());

        px.add(xk);
        py.add(yk);
        pxy.add(xk * yk);
    }
    2.0 * (2.0 * dominated.value() - all.value())
}

fn fast_kernel(x: &[f64], y: &[f64]) -> DcovResult {
    let n = x.len();
    let nf = n as f64;
    let (x, y) = (shift_to_zero(x), shift_to_zero(y));
    let (order_x, order_y) = (sort_order(&x), sort_order(&y));
    let (a, b) = (abs_row_sums(&x, &order_x), abs_row_sums(&y, &order_y));

    let (sa, sb) = (sum::sum(a.iter().copied()), sum::sum(b.iter().copied()));
    let combine = |pairs: f64, rows: f64, grand: f64| {
        // (1/n²)[Σ d_kl e_kl - (2/n) Σ d_k· e_k· + d·· e·· / n²]
        let mut acc = CompensatedSum::new();
        acc.add(pairs);
        acc.add(-2.0 * rows / nf);
        acc.add(grand / (nf * nf));
        acc.value() / (nf * nf)
    };

    let dcov = combine(
        cross_abs_sum(&x, &y, &order_x),
        sum::sum(a.iter().zip(&b).map(|(u, v)| u * v)),
        sa * sb,
    );
    let dvar_x = combine(sum_sq_diffs(&x), sum::sum(a.iter().map(|u| u * u)), sa * sa);
    let dvar_y = combine(sum_sq_diffs(&y), sum::sum(b.iter().map(|v| v * v)), sb * sb);
    DcovResult::from_raw(dcov, dvar_x, dvar_y, n)
}

/// Least-squares residuals `(I - H) y` for the design `[1 | x]`.
pub fn residual_projection(x: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
    Projector::new(x)?.residuals(y)
}

/// Orthonormal basis of the intercept-augmented design, factored once so
/// repeated projections against the same x skip the QR.
pub(crate) struct Projector {
    q: DMatrix<f64>,
}

impl Projector {
    pub(crate) fn new(x: &Matrix) -> Result<Self> {
        let n = x.rows();
        let columns = x.cols() + 1;
        if n <= columns {
            return Err(Error::Underdetermined { n, columns });
        }
        let design = DMatrix::from_fn(
            n,
            columns,
            |r, c| if c == 0 { 1.0 } else { x.get(r, c - 1) },
        );
        let norms: Vec<f64> = design.column_iter().map(|c| c.norm()).collect();
        let qr = design.qr();
        let r = qr.r();
        for (j, &norm) in norms.iter().enumerate() {
            if !(r[(j, j)].abs() > 1e-10 * norm) {
                return Err(Error::RankDeficient(j));
            }
        }
        Ok(Self { q: qr.q() })
    }

    /// `(I − H) y`, zeroed when it is pure rounding noise relative to y.
    pub(crate) fn residuals(&self, y: &[f64]) -> Result<Vec<f64>> {
        let n = self.q.nrows();
        if y.len() != n {
            return Err(Error::RowMismatch { x: n, y: y.len() });
        }
        let q = &self.q;
        let yv = DVector::from_column_slice(y);
        let mut resid = &yv - q * (q.transpose() * &yv);
        // One reorthogonalization pass.
        resid -= q * (q.transpose() * &resid);

        if resid.norm() <= n as f64 * f64::EPSILON * yv.norm() {
            return Ok(vec![0.0; n]);
        }
        Ok(resid.iter().copied().collect())
    }
}

/// Squared distance covariance between x and the linear-fit residuals of y.
pub fn nonlinearity_statistic(s: &PairedSample) -> Result<f64> {
    if s.y().cols() != 1 {
        return Err(Error::InvalidArgument(format!(
            "nonlinearity statistic needs a scalar response, got {} columns",
            s.y().cols()
        )));
    }
    let resid = residual_projection(s.x(), s.y().as_slice())?;
    let t = PairedSample::new(s.x().clone(), Matrix::column_vector(resid))?;
    Ok(dcov_sq(&t).dcov_sq)
}

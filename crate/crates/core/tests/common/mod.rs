#![allow(dead_code)]

use depcov::{Matrix, PairedSample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n)
        .map(|_| lo + (hi - lo) * rng.random::<f64>())
        .collect()
}

pub fn normal(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn scalar_sample(x: Vec<f64>, y: Vec<f64>) -> PairedSample {
    PairedSample::from_columns(x, y).unwrap()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Matrix {
    Matrix::new(n, p, normal(rng, n * p)).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Random orthogonal matrix (QR of a Gaussian matrix), row-major.
pub fn random_rotation(rng: &mut ChaCha8Rng, p: usize) -> Vec<f64> {
    let g = nalgebra::DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = g.qr().q();
    (0..p * p).map(|i| q[(i / p, i % p)]).collect()
}

/// Applies `rows ↦ rows·Qᵀ + shift`.
pub fn rotate_and_shift(m: &Matrix, q: &[f64], shift: &[f64]) -> Matrix {
    let p = m.cols();
    let mut out = Matrix::zeros(m.rows(), p);
    for r in 0..m.rows() {
        for i in 0..p {
            let v: f64 = (0..p).map(|j| q[i * p + j] * m.get(r, j)).sum();
            out.set(r, i, v + shift[i]);
        }
    }
    out
}

/// Σ H_i H_j over [0,1], exact: both are constant on cells of width 2^-(L+2).
pub fn haar_inner(i: usize, j: usize, level: u32) -> f64 {
    let cells = 1usize << (level + 2);
    let w = 1.0 / cells as f64;
    (0..cells)
        .map(|c| {
            let t = (c as f64 + 0.5) * w;
            depcov::haar(i, t).unwrap() * depcov::haar(j, t).unwrap() * w
        })
        .sum()
}

/// ∫_0^t H_i on a uniform grid of `points` cells; the partial last cell is
/// integrated exactly since H_i is constant on each grid cell.
pub fn integrated_haar(i: usize, t: f64, points: usize) -> f64 {
    let h = 1.0 / points as f64;
    let full = ((t / h).floor() as usize).min(points);
    let mut acc = 0.0;
    for c in 0..full {
        acc += depcov::haar(i, (c as f64 + 0.5) * h).unwrap() * h;
    }
    if full < points {
        let start = full as f64 * h;
        acc += depcov::haar(i, (full as f64 + 0.5) * h).unwrap() * (t - start);
    }
    acc
}

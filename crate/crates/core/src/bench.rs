//! Naive-versus-fast timing harness.

use std::io::{self, Write};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::PairedSample;
use crate::dcov::{dcov_sq_fast, dcov_sq_naive, DcovResult};
use crate::error::Result;

/// Sample sizes visited by the harness, capped by `max_n`.
pub const BENCH_SIZES: [usize; 4] = [100, 1_000, 10_000, 100_000];

/// Seed of the synthetic bench data.
pub const BENCH_SEED: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub naive_seconds: f64,
    pub fast_seconds: f64,
    pub ratio: f64,
    pub max_rel_err: f64,
}

/// Standard-uniform x with y = x + independent standard-uniform noise.
pub fn synthetic_pairs(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let y = x.iter().map(|v| v + rng.random::<f64>()).collect();
    (x, y)
}

/// Largest relative discrepancy over the three squared statistics.
pub fn max_relative_error(a: &DcovResult, b: &DcovResult) -> f64 {
    [
        (a.dcov_sq, b.dcov_sq),
        (a.dvar_x_sq, b.dvar_x_sq),
        (a.dvar_y_sq, b.dvar_y_sq),
    ]
    .into_iter()
    .map(|(u, v)| {
        let scale = u.abs().max(v.abs());
        if scale == 0.0 {
            0.0
        } else {
            (u - v).abs() / scale
        }
    })
    .fold(0.0, f64::max)
}

// Repeats cheap calls until at least `budget` has elapsed; returns the
// mean duration of one call and the last result.
fn time_call<T>(budget: Duration, mut f: impl FnMut() -> T) -> (f64, T) {
    let start = Instant::now();
    let mut calls = 0u32;
    loop {
        let out = f();
        calls += 1;
        let elapsed = start.elapsed();
        if elapsed >= budget {
            return (elapsed.as_secs_f64() / calls as f64, out);
        }
    }
}

/// Times both paths at one sample size.
pub fn bench_at(n: usize) -> Result<BenchRow> {
    let (x, y) = synthetic_pairs(n, BENCH_SEED);
    let sample = PairedSample::from_columns(x.clone(), y.clone())?;
    let budget = Duration::from_millis(20);
    let (naive_seconds, naive) = time_call(budget, || dcov_sq_naive(&sample));
    let (fast_seconds, fast) = time_call(budget, || dcov_sq_fast(&x, &y));
    let fast = fast?;
    Ok(BenchRow {
        n,
        naive_seconds,
        fast_seconds,
        ratio: naive_seconds / fast_seconds,
        max_rel_err: max_relative_error(&naive, &fast),
    })
}

/// Runs the harness for every size in [`BENCH_SIZES`] not above `max_n`.
pub fn run_bench(max_n: usize) -> Result<Vec<BenchRow>> {
    BENCH_SIZES
        .iter()
        .filter(|&&n| n <= max_n)
        .map(|&n| {
            let row = bench_at(n)?;
            log_row(&row);
            Ok(row)
        })
        .collect()
}

fn log_row(row: &BenchRow) {
    eprintln!(
        "bench n={} naive={:.3e}s fast={:.3e}s ratio={:.1}",
        row.n, row.naive_seconds, row.fast_seconds, row.ratio
    );
}

/// CSV table `n,naive_seconds,fast_seconds,ratio,max_rel_err`.
pub fn write_csv<W: Write>(rows: &[BenchRow], mut w: W) -> io::Result<()> {
    writeln!(w, "n,naive_seconds,fast_seconds,ratio,max_rel_err")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.n, r.naive_seconds, r.fast_seconds, r.ratio, r.max_rel_err
        )?;
    }
    Ok(())
}

//! Permutation tests for independence and for nonlinearity.
//!
//! Replicate `r` draws its permutation from a ChaCha8 stream keyed by
//! `(seed, r)`, so results do not depend on how replicates are scheduled
//! across threads.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{self, brownian_spec};
use crate::data::{Matrix, PairedSample};
use crate::dcov::{self, Projector};
use crate::error::{Error, Result};

/// Permuted statistics within this relative distance of the observed value
/// count as ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Statistic recomputed under each permutation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    DcovSq,
    BrownianTruncated {
        level: u32,
    },
    /// Residuals are re-fitted on every permuted sample.
    Nonlinearity,
}

impl Statistic {
    pub fn name(&self) -> String {
        match self {
            Statistic::DcovSq => "dcov_sq".to_string(),
            Statistic::BrownianTruncated { level } => format!("brownian_cov_truncated_L{level}"),
            Statistic::Nonlinearity => "nonlinearity".to_string(),
        }
    }
}

/// How nonlinearity-test replicates treat the fitted residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResidualReplicates {
    /// Permute the observed residuals against x.
    #[default]
    Permute,
    /// Permute y and refit the linear model for every replicate.
    Refit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic_name: String,
    pub statistic: f64,
    pub p_value: f64,
    pub permutations: usize,
    pub exceed_count: usize,
    pub seed: u64,
}

/// Permutation of `0..n` used by replicate `replicate` under `seed`.
pub fn replicate_permutation(n: usize, seed: u64, replicate: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order
}

fn exceeds(permuted: f64, observed: f64) -> bool {
    permuted >= observed - TIE_TOLERANCE * observed.abs()
}

fn run<F>(
    name: String,
    observed: f64,
    n: usize,
    b: usize,
    seed: u64,
    replicate: F,
) -> Result<TestResult>
where
    F: Fn(&[usize]) -> Result<f64> + Sync,
{
    if b == 0 {
        return Err(Error::InvalidArgument(
            "need at least one permutation".into(),
        ));
    }
    let flags = (0..b as u64)
        .into_par_iter()
        .map(|r| {
            let order = replicate_permutation(n, seed, r);
            replicate(&order).map(|t| exceeds(t, observed) as usize)
        })
        .collect::<Result<Vec<usize>>>()?;
    let exceed_count: usize = flags.into_iter().sum();
    Ok(TestResult {
        statistic_name: name,
        statistic: observed,
        p_value: (1 + exceed_count) as f64 / (b + 1) as f64,
        permutations: b,
        exceed_count,
        seed,
    })
}

fn permuted(values: &[f64], order: &[usize]) -> Vec<f64> {
    order.iter().map(|&k| values[k]).collect()
}

/// Tests independence by permuting the rows of y against fixed x.
pub fn permutation_test(
    s: &PairedSample,
    statistic: Statistic,
    b: usize,
    seed: u64,
) -> Result<TestResult> {
    let n = s.n();
    let name = statistic.name();
    match statistic {
        Statistic::DcovSq if s.is_scalar() => {
            let (x, y) = (s.x().as_slice(), s.y().as_slice());
            let observed = dcov::dcov_sq_fast(x, y)?.dcov_sq;
            run(name, observed, n, b, seed, |order| {
                Ok(dcov::dcov_sq_fast(x, &permuted(y, order))?.dcov_sq)
            })
        }
        Statistic::DcovSq => {
            let observed = dcov::dcov_sq_naive(s).dcov_sq;
            run(name, observed, n, b, seed, |order| {
                let t = PairedSample::new(s.x().clone(), s.y().permute_rows(order))?;
                Ok(dcov::dcov_sq_naive(&t).dcov_sq)
            })
        }
        Statistic::BrownianTruncated { level } => {
            let scaled = basis::unit_scaled_sample(s)?;
            let spec = brownian_spec(level);
            let stat = |t: &PairedSample| -> Result<f64> {
                let a = basis::coefficient_matrix(t, &spec, &spec)?;
                Ok(basis::uv_cov_sq(&a).sqrt())
            };
            let observed = stat(&scaled)?;
            let x = scaled.x().as_slice().to_vec();
            let y = scaled.y().as_slice();
            run(name, observed, n, b, seed, |order| {
                stat(&PairedSample::from_columns(x.clone(), permuted(y, order))?)
            })
        }
        Statistic::Nonlinearity => nonlinearity_test_with(s, b, seed, ResidualReplicates::Refit),
    }
}

/// Nonlinearity test with residual-permutation replicates.
pub fn nonlinearity_test(s: &PairedSample, b: usize, seed: u64) -> Result<TestResult> {
    nonlinearity_test_with(s, b, seed, ResidualReplicates::Permute)
}

pub fn nonlinearity_test_with(
    s: &PairedSample,
    b: usize,
    seed: u64,
    mode: ResidualReplicates,
) -> Result<TestResult> {
    let n = s.n();
    let name = Statistic::Nonlinearity.name();
    let observed = dcov::nonlinearity_statistic(s)?;
    match mode {
        ResidualReplicates::Permute => {
            let projector = Projector::new(s.x())?;
            let resid = projector.residuals(s.y().as_slice())?;
            // Permuted residuals are projected again so that, like the
            // observed residuals, they carry no linear trend in x.
            run(name, observed, n, b, seed, |order| {
                let r = projector.residuals(&permuted(&resid, order))?;
                let t = PairedSample::new(s.x().clone(), Matrix::column_vector(r))?;
                Ok(dcov::dcov_sq(&t).dcov_sq)
            })
        }
        ResidualReplicates::Refit => run(name, observed, n, b, seed, |order| {
            let t = PairedSample::new(s.x().clone(), s.y().permute_rows(order))?;
            dcov::nonlinearity_statistic(&t)
        }),
    }
}

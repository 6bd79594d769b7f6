//! Dependence measures built on pairwise distances and on truncated
//! Haar/Schauder expansions.
//!
//! * [`data`]: paired samples, CSV ingestion, distances, double centering.
//! * [`dcov`]: distance covariance/correlation (naive and O(n log n) paths),
//!   linear-fit residuals and the nonlinearity statistic.
//! * [`basis`]: Schauder coefficient matrices, (U,V)-covariance, truncated
//!   Brownian covariance and the dyadic dependence map.
//! * [`inference`]: seeded permutation tests.
//! * [`bench`]: naive-versus-fast timing harness.
//! * [`cli`]: the `depcov` command line.

pub mod basis;
pub mod bench;
pub mod cli;
pub mod data;
pub mod dcov;
pub mod error;
pub mod inference;
pub mod sum;

pub use basis::{
    brownian_cov_truncated, coefficient_matrix, dependence_map, haar, schauder, uv_cov_sq,
    BasisSpec, CoefficientMatrix, DependenceMap,
};
pub use data::{
    double_center, load_paired_csv, pairwise_distances, rescale_unit_interval, CenteredMatrix,
    ColumnSelector, DistanceMatrix, Matrix, PairedSample,
};
pub use dcov::{
    dcov_sq, dcov_sq_fast, dcov_sq_naive, nonlinearity_statistic, residual_projection, DcovResult,
};
pub use error::{Error, Result};
pub use inference::{nonlinearity_test, permutation_test, Statistic, TestResult};

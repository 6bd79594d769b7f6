//! Command-line front end.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::basis::{self, BasisSpec, DEFAULT_LEVEL};
use crate::bench;
use crate::data::{load_paired_csv, ColumnSelector, PairedSample};
use crate::dcov;
use crate::error::Error;
use crate::inference::{self, ResidualReplicates, Statistic};

#[derive(Debug, Parser)]
#[command(
    name = "depcov",
    version,
    about = "Distance and Brownian covariance toolkit"
)]
pub struct Cli {
    /// Worker threads for inner parallel loops.
    #[arg(long, global = true, env = "DEPCOV_THREADS", default_value_t = 1)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Distance covariance, variances and correlation (JSON).
    Dcov {
        #[command(flatten)]
        input: InputArgs,
        /// Force the O(n²) reference path.
        #[arg(long)]
        naive: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Weighted (U,V)-covariance and truncated Brownian covariance (JSON).
    Uvcov {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        basis: BasisArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Multi-resolution dependence map (CSV, or graymap).
    Map {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        basis: BasisArgs,
        #[arg(long, value_enum, default_value_t = MapFormat::Csv)]
        format: MapFormat,
        /// Also write the graymap to this file.
        #[arg(long)]
        pgm: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Permutation test of independence (JSON).
    Test {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value_t = StatisticArg::Dcov)]
        statistic: StatisticArg,
        /// Truncation level for the brownian statistic.
        #[arg(long, default_value_t = DEFAULT_LEVEL)]
        level: u32,
        #[command(flatten)]
        perm: PermutationArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Permutation test for nonlinearity of y in x (JSON).
    Nonlin {
        #[command(flatten)]
        input: InputArgs,
        /// Refit the linear model on each permuted sample.
        #[arg(long)]
        refit: bool,
        #[command(flatten)]
        perm: PermutationArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Time naive against fast dCov on synthetic data (CSV).
    Bench {
        #[arg(long, default_value_t = 100_000)]
        max_n: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Comma-delimited numeric input file.
    #[arg(long)]
    pub input: PathBuf,
    /// Columns of x, e.g. `0` or `0,2-3`.
    #[arg(long = "x")]
    pub x_cols: ColumnSelector,
    /// Columns of y.
    #[arg(long = "y")]
    pub y_cols: ColumnSelector,
    /// Skip the first line.
    #[arg(long)]
    pub header: bool,
}

#[derive(Debug, Args)]
pub struct BasisArgs {
    #[arg(long, default_value_t = DEFAULT_LEVEL)]
    pub level: u32,
    /// x-axis weights: `unit` or a comma-separated list.
    #[arg(long, default_value = "unit")]
    pub sigma: Weights,
    /// y-axis weights: `unit` or a comma-separated list.
    #[arg(long, default_value = "unit")]
    pub tau: Weights,
}

#[derive(Debug, Args)]
pub struct PermutationArgs {
    /// Number of permutations.
    #[arg(long = "B", alias = "permutations", default_value_t = 999)]
    pub permutations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file (standard output when omitted).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MapFormat {
    Csv,
    Pgm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatisticArg {
    Dcov,
    Brownian,
    Nonlinearity,
}

/// Basis weights given on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum Weights {
    Unit,
    List(Vec<f64>),
}

impl std::str::FromStr for Weights {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim() == "unit" {
            return Ok(Weights::Unit);
        }
        s.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(Weights::List)
    }
}

impl Weights {
    fn apply(&self, spec: BasisSpec) -> Result<BasisSpec, Error> {
        match self {
            Weights::Unit => Ok(spec),
            Weights::List(w) => spec.with_weights(w.clone()),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Compute(#[from] Error),
    #[error("cannot write output: {0}")]
    Io(#[from] io::Error),
    #[error("cannot serialize output: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot start thread pool: {0}")]
    Threads(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    /// Machine-readable error line for the error stream.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.to_string() }).to_string()
    }
}

fn load(input: &InputArgs) -> Result<PairedSample, Error> {
    load_paired_csv(&input.input, &input.x_cols, &input.y_cols, input.header)
}

fn open_output<'a>(
    path: Option<&Path>,
    stdout: &'a mut (dyn Write + Send),
) -> Result<Box<dyn Write + 'a>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(stdout),
    })
}

fn write_json<T: serde::Serialize>(
    value: &T,
    output: &OutputArgs,
    stdout: &mut (dyn Write + Send),
) -> Result<(), CliError> {
    let mut w = open_output(output.output.as_deref(), stdout)?;
    serde_json::to_writer(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn basis_specs(args: &BasisArgs) -> Result<(BasisSpec, BasisSpec), Error> {
    Ok((
        args.sigma.apply(BasisSpec::at_level(args.level))?,
        args.tau.apply(BasisSpec::at_level(args.level))?,
    ))
}

/// Runs one command, writing its result to `stdout` or the `--output` file.
pub fn run(cli: &Cli, stdout: &mut (dyn Write + Send)) -> Result<(), CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.max(1))
        .build()?;
    pool.install(|| dispatch(&cli.command, stdout))
}

fn dispatch(command: &Command, stdout: &mut (dyn Write + Send)) -> Result<(), CliError> {
    match command {
        Command::Dcov {
            input,
            naive,
            output,
        } => {
            let s = load(input)?;
            let r = if *naive {
                dcov::dcov_sq_naive(&s)
            } else {
                dcov::dcov_sq(&s)
            };
            write_json(&r, output, stdout)
        }
        Command::Uvcov {
            input,
            basis: args,
            output,
        } => {
            let s = basis::unit_scaled_sample(&load(input)?)?;
            let (bx, by) = basis_specs(args)?;
            let a = basis::coefficient_matrix(&s, &bx, &by)?;
            let value = serde_json::json!({
                "uv_cov_sq": basis::uv_cov_sq(&a),
                "brownian_cov_truncated": basis::brownian_cov_truncated(&s, args.level)?,
                "level": args.level,
                "n": s.n(),
            });
            write_json(&value, output, stdout)
        }
        Command::Map {
            input,
            basis: args,
            format,
            pgm,
            output,
        } => {
            let s = basis::unit_scaled_sample(&load(input)?)?;
            let (bx, by) = basis_specs(args)?;
            let map = basis::dependence_map(&basis::coefficient_matrix(&s, &bx, &by)?);
            if let Some(path) = pgm {
                let mut f = BufWriter::new(File::create(path)?);
                map.write_pgm(&mut f)?;
                f.flush()?;
            }
            let mut w = open_output(output.output.as_deref(), stdout)?;
            match format {
                MapFormat::Csv => map.write_csv(&mut w)?,
                MapFormat::Pgm => map.write_pgm(&mut w)?,
            }
            w.flush()?;
            Ok(())
        }
        Command::Test {
            input,
            statistic,
            level,
            perm,
            output,
        } => {
            let s = load(input)?;
            let stat = match statistic {
                StatisticArg::Dcov => Statistic::DcovSq,
                StatisticArg::Brownian => Statistic::BrownianTruncated { level: *level },
                StatisticArg::Nonlinearity => Statistic::Nonlinearity,
            };
            let r = inference::permutation_test(&s, stat, perm.permutations, perm.seed)?;
            write_json(&r, output, stdout)
        }
        Command::Nonlin {
            input,
            refit,
            perm,
            output,
        } => {
            let s = load(input)?;
            let mode = if *refit {
                ResidualReplicates::Refit
            } else {
                ResidualReplicates::Permute
            };
            let r = inference::nonlinearity_test_with(&s, perm.permutations, perm.seed, mode)?;
            write_json(&r, output, stdout)
        }
        Command::Bench { max_n, output } => {
            let rows = bench::run_bench(*max_n)?;
            let mut w = open_output(output.output.as_deref(), stdout)?;
            bench::write_csv(&rows, &mut w)?;
            w.flush()?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_parse() {
        assert_eq!("unit".parse::<Weights>().unwrap(), Weights::Unit);
        assert_eq!(
            "1, 0.5".parse::<Weights>().unwrap(),
            Weights::List(vec![1.0, 0.5])
        );
        assert!("1,a".parse::<Weights>().is_err());
    }

    #[test]
    fn flags_belong_to_their_subcommand() {
        assert!(Cli::try_parse_from([
            "depcov", "dcov", "--input", "f", "--x", "0", "--y", "1", "--B", "9"
        ])
        .is_err());
        assert!(Cli::try_parse_from([
            "depcov", "test", "--input", "f", "--x", "0", "--y", "1", "--B", "9", "--seed", "1"
        ])
        .is_ok());
        assert!(Cli::try_parse_from(["depcov", "bench", "--level", "3"]).is_err());
    }
}

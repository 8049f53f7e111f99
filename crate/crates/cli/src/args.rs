//! Command-line grammar and flag validation.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::exit::UsageError;

#[derive(Debug, Parser)]
#[command(name = "onebit-mac", version, about = "Capacity region of the two-user Gaussian MAC with a one-bit receiver")]
pub struct Cli {
    /// Worker threads for multistarts and power tables [default: available parallelism].
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Maximize the weighted rate objective for one slope and budget.
    Solve(SolveArgs),
    /// Trace boundary points of the capacity region.
    Trace(TraceArgs),
    /// Certify a product input read from two distribution files.
    Verify(VerifyArgs),
    /// Compare product inputs with time sharing under unit power.
    Remark2(Remark2Args),
    /// Run the built-in invariant suite.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
pub struct ChannelArgs {
    /// Quantizer threshold.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Seed of the random multistarts.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of starts; start 0 is deterministic.
    #[arg(long, default_value_t = 16)]
    pub multistarts: usize,
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    /// Power budget of user 1.
    #[arg(long, allow_negative_numbers = true)]
    pub p1: f64,
    /// Power budget of user 2.
    #[arg(long, allow_negative_numbers = true)]
    pub p2: f64,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Slope of the supporting line `R1 + λR2`.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: f64,
    #[command(flatten)]
    pub budget: BudgetArgs,
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    /// Comma-separated slopes.
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    pub lambdas: Vec<f64>,
    #[command(flatten)]
    pub budget: BudgetArgs,
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Directory receiving region.csv, region.json and boundary.dat.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// JSON file with the law of user 1.
    #[arg(long)]
    pub f1: PathBuf,
    /// JSON file with the law of user 2.
    #[arg(long)]
    pub f2: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: f64,
    #[command(flatten)]
    pub budget: BudgetArgs,
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Remark2Args {
    /// Points per axis of the `(p, p')` grid.
    #[arg(long, default_value_t = 101)]
    pub grid_n: usize,
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Corrupt one check on purpose; exercises the failure path.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

const MAX_POWER: f64 = 1e4;
const MAX_THRESHOLD: f64 = 50.0;
const MAX_LAMBDA: f64 = 1e6;
const MAX_MULTISTARTS: usize = 4096;
const MAX_GRID_N: usize = 100_001;
const MAX_WORKERS: usize = 1024;

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), UsageError> {
    if ok {
        Ok(())
    } else {
        Err(UsageError(msg()))
    }
}

pub fn check_lambda(name: &str, l: f64) -> Result<(), UsageError> {
    check(l.is_finite() && l > 0.0 && l <= MAX_LAMBDA, || {
        format!("--{name} must lie in (0, {MAX_LAMBDA}], got {l}")
    })
}

impl BudgetArgs {
    pub fn validate(&self) -> Result<(), UsageError> {
        for (name, p) in [("p1", self.p1), ("p2", self.p2)] {
            check(p.is_finite() && (0.0..=MAX_POWER).contains(&p), || {
                format!("--{name} must lie in [0, {MAX_POWER}], got {p}")
            })?;
        }
        Ok(())
    }
}

impl ChannelArgs {
    pub fn validate(&self) -> Result<(), UsageError> {
        let t = self.threshold;
        check(t.is_finite() && t.abs() <= MAX_THRESHOLD, || {
            format!("--threshold must lie in [-{MAX_THRESHOLD}, {MAX_THRESHOLD}], got {t}")
        })
    }
}

impl SolverArgs {
    pub fn validate(&self) -> Result<(), UsageError> {
        let m = self.multistarts;
        check((1..=MAX_MULTISTARTS).contains(&m), || {
            format!("--multistarts must lie in [1, {MAX_MULTISTARTS}], got {m}")
        })
    }
}

impl Remark2Args {
    pub fn validate(&self) -> Result<(), UsageError> {
        let n = self.grid_n;
        check((2..=MAX_GRID_N).contains(&n), || format!("--grid-n must lie in [2, {MAX_GRID_N}], got {n}"))?;
        self.channel.validate()
    }
}

pub fn check_workers(w: Option<usize>) -> Result<(), UsageError> {
    match w {
        Some(n) => check((1..=MAX_WORKERS).contains(&n), || format!("--workers must lie in [1, {MAX_WORKERS}], got {n}")),
        None => Ok(()),
    }
}

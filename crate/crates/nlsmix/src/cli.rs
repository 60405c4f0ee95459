use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "nlsmix", version, about = "Radial ground states, normalized solutions and confinement states")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Options that locate files or size the pool. They never change results and
/// are left out of the input hash.
#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Directory for the envelope and the CSV tables.
    #[arg(long, global = true, default_value = "nlsmix-out")]
    pub out: PathBuf,
    /// Flat key=value file; its entries act as flags, explicit flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Profile cache location; NLS_CACHE_DIR overrides the default.
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub no_cache: bool,
    /// Worker threads for scans and sweeps.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Ground state at one coupling.
    GroundState(GroundStateArgs),
    /// Every positive radial solution found by a height scan.
    Scan(ScanArgs),
    /// Least energy, threshold and exponent fits over a coupling grid.
    Sweep(SweepArgs),
    /// Mass-constrained solutions at a given coupling.
    Reduce(ReduceArgs),
    /// Confined ground states and their normalized rescalings.
    Confine(ConfineArgs),
    /// Built-in certificate suite.
    Verify(VerifyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GroundState(_) => "ground-state",
            Command::Scan(_) => "scan",
            Command::Sweep(_) => "sweep",
            Command::Reduce(_) => "reduce",
            Command::Confine(_) => "confine",
            Command::Verify(_) => "verify",
        }
    }

    /// The resolved inputs, echoed in the envelope and hashed.
    pub fn echo(&self) -> serde_json::Value {
        let v = match self {
            Command::GroundState(a) => serde_json::to_value(a),
            Command::Scan(a) => serde_json::to_value(a),
            Command::Sweep(a) => serde_json::to_value(a),
            Command::Reduce(a) => serde_json::to_value(a),
            Command::Confine(a) => serde_json::to_value(a),
            Command::Verify(a) => serde_json::to_value(a),
        };
        v.expect("argument structs serialize")
    }
}

pub const COMMANDS: [&str; 6] = ["ground-state", "scan", "sweep", "reduce", "confine", "verify"];

#[derive(Args, Debug, Clone, Serialize)]
pub struct ProblemArgs {
    #[arg(long = "N", default_value_t = 3)]
    #[serde(rename = "N")]
    pub dim: u32,
    #[arg(long, default_value_t = 3.0)]
    pub q: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Drop the Sobolev-critical term.
    #[arg(long)]
    pub no_crit: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ShootArgs {
    #[arg(long, default_value_t = 1e-8)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub atol: f64,
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long)]
    pub d_min: Option<f64>,
    #[arg(long)]
    pub d_max: Option<f64>,
    #[arg(long, default_value_t = 160)]
    pub n_scan: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GroundStateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub shoot: ShootArgs,
    #[arg(long)]
    pub t: f64,
    /// Shooting bracket; with both ends given the scan is skipped.
    #[arg(long, requires = "d_hi")]
    pub d_lo: Option<f64>,
    #[arg(long, requires = "d_lo")]
    pub d_hi: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ScanArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub shoot: ShootArgs,
    #[arg(long)]
    pub t: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SweepArgs {
    #[arg(long = "N", default_value_t = 3)]
    #[serde(rename = "N")]
    pub dim: u32,
    #[arg(long, default_value_t = 3.0)]
    pub q: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub shoot: ShootArgs,
    #[arg(long, default_value_t = 0.1)]
    pub t_min: f64,
    #[arg(long, default_value_t = 1e4)]
    pub t_max: f64,
    /// Points of the geometric grid.
    #[arg(long, default_value_t = 40)]
    pub points: usize,
    /// Fixed grid ratio; replaces `points` when given.
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Fit window; defaults to half a decade above the threshold up to t-max.
    #[arg(long)]
    pub fit_min: Option<f64>,
    #[arg(long)]
    pub fit_max: Option<f64>,
    #[arg(long, default_value_t = 1e-5)]
    pub cert_tol: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ReduceArgs {
    #[arg(long = "N", default_value_t = 3)]
    #[serde(rename = "N")]
    pub dim: u32,
    #[arg(long, default_value_t = 2.5)]
    pub q: f64,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long)]
    pub mu: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub shoot: ShootArgs,
    #[arg(long, default_value_t = 0.1)]
    pub t_min: f64,
    #[arg(long, default_value_t = 1e3)]
    pub t_max: f64,
    #[arg(long, default_value_t = 40)]
    pub points: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ConfineArgs {
    #[arg(long, default_value_t = 4.0)]
    pub p: f64,
    /// Large-t grid, solved by continuation from t-max downwards.
    #[arg(long, default_value_t = 10.0)]
    pub t_min: f64,
    #[arg(long, default_value_t = 1e5)]
    pub t_max: f64,
    #[arg(long, default_value_t = 9)]
    pub points: usize,
    /// Small-t grid for the mass law; zero points skips it.
    #[arg(long, default_value_t = 1e-3)]
    pub small_t_min: f64,
    #[arg(long, default_value_t = 0.1)]
    pub small_t_max: f64,
    #[arg(long, default_value_t = 7)]
    pub small_points: usize,
    /// Nodes per side of the fine mesh (odd).
    #[arg(long, default_value_t = 257)]
    pub nodes: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub flow_tol: f64,
    #[arg(long, default_value_t = 3000)]
    pub max_iter: usize,
    /// Also solve the large-t grid cold and compare with the continuation.
    #[arg(long)]
    pub uniqueness: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct VerifyArgs {}

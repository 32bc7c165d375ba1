use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rvsmanopt::simulation::SnrNorm;
use rvsmanopt::solver::ArmijoConfig;
use rvsmanopt::tuning::WeightExponents;
use rvsmanopt::{SolverConfig, TuningGrid};

#[derive(Debug, Parser)]
#[command(name = "rvsmanopt", version, about = "Sparse reduced-rank regression with rank and variable selection")]
pub struct Cli {
    /// Worker threads for grid cells and replicates (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Include wall-clock timing in the result document.
    #[arg(long, global = true)]
    pub timing: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one (lambda1, lambda2) pair, or tune with --tune.
    Fit(FitArgs),
    /// Fit every cell of a lambda grid and keep the BIC minimiser.
    Tune(TuneArgs),
    /// Write one simulated dataset as CSV files.
    Simulate(SimulateArgs),
    /// Monte Carlo replicates of a simulation case.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Predictor matrix, comma-separated, one observation per row.
    #[arg(long)]
    pub x: PathBuf,
    /// Response matrix, same row order as --x.
    #[arg(long)]
    pub y: PathBuf,
    /// Both files start with a header row.
    #[arg(long)]
    pub header: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    Frobenius,
    Spectral,
}

impl From<NormArg> for SnrNorm {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Frobenius => SnrNorm::Frobenius,
            NormArg::Spectral => SnrNorm::Spectral,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long = "gamma-u", default_value_t = 1.0)]
    pub gamma_u: f64,
    #[arg(long = "gamma-v", default_value_t = 1.0)]
    pub gamma_v: f64,
    #[arg(long = "gamma-d", default_value_t = 1.0)]
    pub gamma_d: f64,
    /// One value for all three ADMM penalties, or three comma-separated.
    #[arg(long, value_delimiter = ',', num_args = 1..=3, default_value = "1")]
    pub rho: Vec<f64>,
    #[arg(long = "max-iter", default_value_t = 500)]
    pub max_iter: usize,
    /// Primal residual tolerance (default scales with the block size).
    #[arg(long = "primal-tol")]
    pub primal_tol: Option<f64>,
    #[arg(long = "objective-tol", default_value_t = 1e-6)]
    pub objective_tol: f64,
}

impl SolverArgs {
    pub fn config(&self, lambda1: f64, lambda2: f64) -> Result<SolverConfig, String> {
        let rho = match self.rho.as_slice() {
            [r] => [*r; 3],
            [a, b, c] => [*a, *b, *c],
            other => return Err(format!("--rho takes one or three values, got {}", other.len())),
        };
        Ok(SolverConfig {
            lambda1,
            lambda2,
            alpha: self.alpha,
            rho,
            gammas: WeightExponents {
                gamma_u: self.gamma_u,
                gamma_v: self.gamma_v,
                gamma_d: self.gamma_d,
            },
            max_iter: self.max_iter,
            primal_tol: self.primal_tol,
            objective_tol: self.objective_tol,
            armijo: ArmijoConfig::default(),
            record_trace: false,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long = "grid-points", default_value_t = 10)]
    pub grid_points: usize,
    #[arg(long = "lambda-min", default_value_t = 1e-15)]
    pub lambda_min: f64,
    #[arg(long = "lambda-max", default_value_t = 1.0)]
    pub lambda_max: f64,
}

impl GridArgs {
    pub fn grid(&self) -> TuningGrid {
        TuningGrid {
            lambda_min: self.lambda_min,
            lambda_max: self.lambda_max,
            points_per_axis: self.grid_points,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub rank: usize,
    #[arg(long, required_unless_present = "tune")]
    pub lambda1: Option<f64>,
    #[arg(long, required_unless_present = "tune")]
    pub lambda2: Option<f64>,
    /// Choose lambda1 and lambda2 by BIC over the grid instead.
    #[arg(long, conflicts_with_all = ["lambda1", "lambda2"])]
    pub tune: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Result document (JSON).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub rank: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Preset: 1 and 2 use (n, p, q) = (400, 80, 50), 3 and 4 use
    /// (400, 120, 60); noise correlation 0.3 for odd cases, 0.5 for even.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub case: Option<u8>,
    /// True rank of the planted coefficient matrix.
    #[arg(long)]
    pub rank: usize,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    /// Noise correlation rho in delta_ij = rho^|i-j|.
    #[arg(long = "rho-noise")]
    pub rho_noise: Option<f64>,
    /// Signal-to-noise ratio; "inf" gives noiseless responses.
    #[arg(long, default_value_t = 0.5)]
    pub snr: f64,
    #[arg(long = "snr-norm", value_enum, default_value_t = NormArg::Frobenius)]
    pub snr_norm: NormArg,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Output directory for x.csv, y.csv, c.csv and scenario.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value_t = 50)]
    pub replicates: usize,
    /// Rank passed to the solver (default: the true rank).
    #[arg(long = "fit-rank")]
    pub fit_rank: Option<usize>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Summary document (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Per-replicate rows (CSV); defaults to --out with a .csv extension.
    #[arg(long)]
    pub rows: Option<PathBuf>,
}

//! JSON result documents.
//!
//! Matrices are written as row-major nested arrays. Nothing that varies
//! between identical runs (thread count, output paths, timing unless asked
//! for) is recorded, so repeated runs produce byte-identical files.

use rvsmanopt::simulation::{MetricsSummary, ReplicateRow, ScenarioSpec};
use rvsmanopt::solver::{FitResult, StopReason};
use rvsmanopt::tuning::CellRecord;
use rvsmanopt::{FactorTriple, Mat, SolverConfig, TuningGrid, TuningReport};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub schema_version: u32,
    pub command: CommandEcho,
    pub result: ResultBody,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputEcho {
    pub x: String,
    pub y: String,
    pub header: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandEcho {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<InputEcho>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<TuningGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_rank: Option<usize>,
}

impl CommandEcho {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            inputs: None,
            rank: None,
            solver: None,
            grid: None,
            scenario: None,
            replicates: None,
            fit_rank: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResultBody {
    Fit(FitSummary),
    Tune(TuneSummary),
    Simulate(SimulateSummary),
    Bench(BenchSummary),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factors {
    pub u: Vec<Vec<f64>>,
    pub d: Vec<f64>,
    pub v: Vec<Vec<f64>>,
}

pub fn rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

impl From<&FactorTriple> for Factors {
    fn from(f: &FactorTriple) -> Self {
        Self {
            u: rows(&f.u),
            d: f.d.iter().copied().collect(),
            v: rows(&f.v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub rank: usize,
    pub sse: f64,
    pub df: i64,
    pub bic: f64,
    pub bic_clamped: bool,
    pub iterations: usize,
    pub converged: bool,
    pub stop: StopReason,
    pub primal_residuals: [f64; 3],
    pub objective: f64,
    pub max_u_infeasibility: f64,
    pub max_v_infeasibility: f64,
    pub line_search_stalls: usize,
    pub factors: Factors,
}

impl From<&FitResult> for FitSummary {
    fn from(f: &FitResult) -> Self {
        Self {
            rank: f.factors.rank(),
            sse: f.sse,
            df: f.df,
            bic: f.bic,
            bic_clamped: f.bic_clamped,
            iterations: f.iterations,
            converged: f.converged,
            stop: f.stop,
            primal_residuals: f.primal_residuals,
            objective: f.objective,
            max_u_infeasibility: f.diagnostics.max_u_infeasibility,
            max_v_infeasibility: f.diagnostics.max_v_infeasibility,
            line_search_stalls: f.diagnostics.u_stalls + f.diagnostics.v_stalls,
            factors: Factors::from(&f.factors),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneSummary {
    pub best_cell: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub best: FitSummary,
    pub cells: Vec<CellRecord>,
}

impl From<&TuningReport> for TuneSummary {
    fn from(r: &TuningReport) -> Self {
        Self {
            best_cell: r.best,
            lambda1: r.best_cell().lambda1,
            lambda2: r.best_cell().lambda2,
            best: FitSummary::from(&r.best_fit),
            cells: r.cells.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateSummary {
    pub sigma: f64,
    pub truth: Factors,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub summary: MetricsSummary,
    /// How the support metrics are defined.
    pub notes: Vec<String>,
    pub rows: Vec<ReplicateRow>,
}

pub const BENCH_NOTES: [&str; 3] = [
    "f_measure uses recall and precision as sums of the U and V support fractions, so perfect recovery scores 2",
    "f_measure_halved halves both sums, so perfect recovery scores 1",
    "estimated columns are matched to true columns by position; missing columns count as zero",
];

impl ResultDocument {
    pub fn to_json(&self) -> Result<String, serde_json::Error> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

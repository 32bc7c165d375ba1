//! Command-line front end: CSV matrices in, JSON result documents out.

pub mod args;
pub mod csvio;
pub mod document;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rvsmanopt::manifold::FEASIBILITY_TOL;
use rvsmanopt::simulation::{generate, run_replicates, ReplicateSettings, Scenario, ScenarioSpec};
use rvsmanopt::{grid_search, Execution, FitResult, Problem};
use thiserror::Error;

use args::{BenchArgs, Cli, Command, DataArgs, FitArgs, GridArgs, ScenarioArgs, SimulateArgs, SolverArgs, TuneArgs};
use document::{
    BenchSummary, CommandEcho, Factors, FitSummary, InputEcho, ResultBody, ResultDocument, SimulateSummary,
    TuneSummary, BENCH_NOTES, SCHEMA_VERSION,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl From<rvsmanopt::Error> for CliError {
    fn from(e: rvsmanopt::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let threads = cli.threads;
    if threads == Some(0) {
        return Err(CliError::Input("--threads must be at least 1".into()));
    }
    let timing = cli.timing;
    with_threads(threads, move || match cli.command {
        Command::Fit(a) => cmd_fit(&a, timing),
        Command::Tune(a) => cmd_tune(&a, timing),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Bench(a) => cmd_bench(&a, timing),
    })
}

#[cfg(feature = "parallel")]
fn with_threads<F>(threads: Option<usize>, f: F) -> Result<(), CliError>
where
    F: FnOnce() -> Result<(), CliError> + Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
    pool.install(f)
}

#[cfg(not(feature = "parallel"))]
fn with_threads<F>(_threads: Option<usize>, f: F) -> Result<(), CliError>
where
    F: FnOnce() -> Result<(), CliError> + Send,
{
    f()
}

fn load_problem(data: &DataArgs) -> Result<Problem, CliError> {
    let x = csvio::read_matrix_csv(&data.x, data.header)?;
    let y = csvio::read_matrix_csv(&data.y, data.header)?;
    Ok(Problem::new(x, y)?)
}

fn input_echo(data: &DataArgs) -> InputEcho {
    InputEcho {
        x: data.x.display().to_string(),
        y: data.y.display().to_string(),
        header: data.header,
    }
}

fn check_fit(fit: &FitResult) -> Result<(), CliError> {
    let d = &fit.diagnostics;
    if d.max_u_infeasibility > FEASIBILITY_TOL || d.max_v_infeasibility > FEASIBILITY_TOL {
        return Err(CliError::Internal(format!(
            "iterates left the manifold (U {:e}, V {:e})",
            d.max_u_infeasibility, d.max_v_infeasibility
        )));
    }
    Ok(())
}

/// Serialise, verify the document reloads unchanged, and write it.
fn write_document(path: &Path, doc: &ResultDocument) -> Result<(), CliError> {
    let json = doc.to_json().map_err(|e| CliError::Internal(format!("serialising result: {e}")))?;
    let back = ResultDocument::from_json(&json).map_err(|e| CliError::Internal(format!("reloading result: {e}")))?;
    if &back != doc {
        return Err(CliError::Internal("result document does not round-trip".into()));
    }
    csvio::write_text(path, &json)
}

fn document(command: CommandEcho, result: ResultBody, timing: bool, start: Instant) -> ResultDocument {
    ResultDocument {
        schema_version: SCHEMA_VERSION,
        command,
        result,
        timing_seconds: timing.then(|| start.elapsed().as_secs_f64()),
    }
}

fn print_fit(fit: &FitResult) {
    println!(
        "rank {}  bic {:.6}  sse {:.6e}  iterations {}{}",
        fit.factors.rank(),
        fit.bic,
        fit.sse,
        fit.iterations,
        if fit.converged { "" } else { "  (not converged)" }
    );
}

fn tune_body(problem: &Problem, rank: usize, solver: &SolverArgs, grid: &GridArgs) -> Result<(ResultBody, CommandEcho), CliError> {
    let config = solver.config(0.0, 0.0).map_err(CliError::Input)?;
    let grid = grid.grid();
    let report = grid_search(problem, rank, &grid, &config, Execution::Parallel)?;
    check_fit(&report.best_fit)?;
    print_fit(&report.best_fit);
    let best = report.best_cell();
    println!("lambda1 {:e}  lambda2 {:e}  (cell {} of {})", best.lambda1, best.lambda2, report.best + 1, report.cells.len());
    let mut echo = CommandEcho::new("tune");
    echo.rank = Some(rank);
    echo.solver = Some(config);
    echo.grid = Some(grid);
    Ok((ResultBody::Tune(TuneSummary::from(&report)), echo))
}

pub fn cmd_fit(a: &FitArgs, timing: bool) -> Result<(), CliError> {
    let start = Instant::now();
    let problem = load_problem(&a.data)?;
    let (body, mut echo) = if a.tune {
        tune_body(&problem, a.rank, &a.solver, &a.grid)?
    } else {
        let (l1, l2) = (a.lambda1.unwrap_or_default(), a.lambda2.unwrap_or_default());
        let config = a.solver.config(l1, l2).map_err(CliError::Input)?;
        let fit = rvsmanopt::solver::fit_problem(&problem, a.rank, &config)?;
        check_fit(&fit)?;
        print_fit(&fit);
        let mut echo = CommandEcho::new("fit");
        echo.rank = Some(a.rank);
        echo.solver = Some(config);
        (ResultBody::Fit(FitSummary::from(&fit)), echo)
    };
    echo.name = "fit".into();
    echo.inputs = Some(input_echo(&a.data));
    report_elapsed(start);
    write_document(&a.out, &document(echo, body, timing, start))
}

pub fn cmd_tune(a: &TuneArgs, timing: bool) -> Result<(), CliError> {
    let start = Instant::now();
    let problem = load_problem(&a.data)?;
    let (body, mut echo) = tune_body(&problem, a.rank, &a.solver, &a.grid)?;
    echo.inputs = Some(input_echo(&a.data));
    report_elapsed(start);
    write_document(&a.out, &document(echo, body, timing, start))
}

pub fn scenario_spec(a: &ScenarioArgs) -> Result<ScenarioSpec, CliError> {
    let mut spec = match a.case {
        Some(c) => ScenarioSpec::case(c, a.rank, a.seed)?,
        None => {
            let (Some(n), Some(p), Some(q), Some(rho)) = (a.n, a.p, a.q, a.rho_noise) else {
                return Err(CliError::Input(
                    "give --case, or all of --n, --p, --q and --rho-noise".into(),
                ));
            };
            ScenarioSpec {
                n,
                p,
                q,
                r: a.rank,
                rho_noise: rho,
                snr: a.snr,
                snr_norm: a.snr_norm.into(),
                seed: a.seed,
            }
        }
    };
    spec.n = a.n.unwrap_or(spec.n);
    spec.p = a.p.unwrap_or(spec.p);
    spec.q = a.q.unwrap_or(spec.q);
    spec.rho_noise = a.rho_noise.unwrap_or(spec.rho_noise);
    spec.snr = a.snr;
    spec.snr_norm = a.snr_norm.into();
    Ok(spec)
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let spec = scenario_spec(&a.scenario)?;
    let scenario = Scenario::new(spec)?;
    let data = generate(&scenario)?;
    std::fs::create_dir_all(&a.out).map_err(|e| CliError::Input(format!("{}: {e}", a.out.display())))?;
    let names = ["x.csv", "y.csv", "c.csv"];
    for (name, m) in names.iter().zip([&data.x, &data.y, &scenario.truth.coefficient()]) {
        csvio::write_matrix_csv(&a.out.join(name), m)?;
    }
    let mut echo = CommandEcho::new("simulate");
    echo.scenario = Some(spec);
    let body = ResultBody::Simulate(SimulateSummary {
        sigma: data.sigma,
        truth: Factors::from(&scenario.truth),
        files: names.iter().map(|s| s.to_string()).collect(),
    });
    println!("n {}  p {}  q {}  rank {}  sigma {:.6}", spec.n, spec.p, spec.q, spec.r, data.sigma);
    write_document(&a.out.join("scenario.json"), &document(echo, body, false, Instant::now()))
}

fn rows_path(a: &BenchArgs) -> PathBuf {
    a.rows.clone().unwrap_or_else(|| a.out.with_extension("csv"))
}

pub fn cmd_bench(a: &BenchArgs, timing: bool) -> Result<(), CliError> {
    let start = Instant::now();
    let spec = scenario_spec(&a.scenario)?;
    let scenario = Scenario::new(spec)?;
    let settings = ReplicateSettings {
        grid: a.grid.grid(),
        solver: a.solver.config(0.0, 0.0).map_err(CliError::Input)?,
        fit_rank: a.fit_rank,
        execution: Execution::Parallel,
    };
    let report = run_replicates(&scenario, a.replicates, &settings)?;
    let s = &report.summary;
    println!(
        "replicates {} (failed {})  Er(XC)x1e4 {:.3} (sd {:.3})  F {:.3}  F/2 {:.3}  Er(r) {:.2}",
        s.replicates,
        s.failures,
        s.er_xc * 1e4,
        s.er_xc_sd * 1e4,
        s.f_measure,
        s.f_measure_halved,
        s.er_rank
    );
    let mut echo = CommandEcho::new("bench");
    echo.scenario = Some(spec);
    echo.solver = Some(settings.solver.clone());
    echo.grid = Some(settings.grid);
    echo.replicates = Some(a.replicates);
    echo.fit_rank = a.fit_rank;
    csvio::write_rows_csv(&rows_path(a), &report.rows)?;
    let body = ResultBody::Bench(BenchSummary {
        summary: report.summary.clone(),
        notes: BENCH_NOTES.iter().map(|s| s.to_string()).collect(),
        rows: report.rows,
    });
    report_elapsed(start);
    write_document(&a.out, &document(echo, body, timing, start))
}

fn report_elapsed(start: Instant) {
    println!("elapsed {:.2} s", start.elapsed().as_secs_f64());
}

//! Manifold ADMM for the rank- and variable-selecting factor model.
//!
//! The smooth part `½‖Y − XUDVᵀ‖²` is minimised over `U ∈ St_G(r, p)`,
//! `V ∈ St(r, q)` and diagonal `D`. The adaptive-lasso penalties on `U` and
//! `V` and the column indicator penalty on `V` act on split copies `U*`,
//! `V*`, `V**`, coupled through scaled duals `Ω`, `Φ`, `Ψ`. One iteration
//! updates, in order: `U` (one Armijo-accepted retraction), `V` (same), `D`
//! (closed form), `U*`, `V*` (soft thresholds), `V**` (column keep-or-kill)
//! and the three duals.
//!
//! A column whose `V**` copy is thresholded to zero is dropped from the
//! model for the rest of the run: its dual `Ψ` column is reset to zero and
//! it no longer enters the `V**` coupling. Unit-norm Stiefel columns can
//! never equal a zero column, so without this the dual would grow until the
//! column is readmitted and the decision would oscillate.

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{default_ridge, pseudo_solve, spd_factorize, top_eigen, Mat, SpdFactorization};
use crate::manifold::{GeneralizedStiefel, Manifold, Stiefel};
use crate::prox::{shrink, survives};
use crate::tuning::{adaptive_weights, bic, WeightExponents, Weights};

/// Relative floor below which an initialization eigenvalue counts as zero.
pub const IDENTIFIABLE_EIGENVALUE: f64 = 1e-12;

/// Data matrices with the cross products and metric shared by every fit.
#[derive(Debug, Clone)]
pub struct Problem {
    x: Mat,
    y: Mat,
    xtx: Mat,
    xty: Mat,
    y_norm_sq: f64,
    metric: Arc<SpdFactorization>,
}

impl Problem {
    /// Uses the default ridge rule for `G = XᵀX/n`.
    pub fn new(x: Mat, y: Mat) -> Result<Self> {
        Self::build(x, y, None)
    }

    pub fn with_ridge(x: Mat, y: Mat, ridge: f64) -> Result<Self> {
        Self::build(x, y, Some(ridge))
    }

    fn build(x: Mat, y: Mat, ridge: Option<f64>) -> Result<Self> {
        let n = x.nrows();
        if y.nrows() != n {
            return Err(Error::dim(
                "problem",
                format!("X has {n} rows but Y has {}", y.nrows()),
            ));
        }
        if n < 2 {
            return Err(Error::InvalidArgument(format!("need n >= 2 observations, got {n}")));
        }
        if x.ncols() == 0 || y.ncols() == 0 {
            return Err(Error::dim("problem", "X and Y need at least one column"));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("X and Y must have finite entries".into()));
        }
        let xt = x.transpose();
        let xtx = &xt * &x;
        let xty = &xt * &y;
        let g = &xtx / n as f64;
        let g = crate::linalg::sym_unchecked(&g);
        let ridge = ridge.unwrap_or_else(|| default_ridge(&g, n));
        let metric = Arc::new(spd_factorize(&g, ridge)?);
        let y_norm_sq = y.norm_squared();
        Ok(Self {
            x,
            y,
            xtx,
            xty,
            y_norm_sq,
            metric,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn q(&self) -> usize {
        self.y.ncols()
    }

    pub fn x(&self) -> &Mat {
        &self.x
    }

    pub fn y(&self) -> &Mat {
        &self.y
    }

    /// `XᵀY`.
    pub fn xty(&self) -> &Mat {
        &self.xty
    }

    /// `XᵀX`.
    pub fn xtx(&self) -> &Mat {
        &self.xtx
    }

    pub fn metric(&self) -> &Arc<SpdFactorization> {
        &self.metric
    }

    /// `‖Y − XC‖_F²`, computed directly.
    pub fn sse(&self, c: &Mat) -> f64 {
        (&self.y - &self.x * c).norm_squared()
    }

    /// `½‖Y − X·U·diag(D)·Vᵀ‖²` through the cross products.
    fn half_loss(&self, u: &Mat, d: &DVector<f64>, v: &Mat) -> f64 {
        let ud = scale_columns(u, d);
        let cross = ud.dot(&(&self.xty * v));
        let quad = (ud.transpose() * &self.xtx * &ud).dot(&(v.transpose() * v));
        0.5 * (self.y_norm_sq - 2.0 * cross + quad)
    }
}

fn scale_columns(m: &Mat, d: &DVector<f64>) -> Mat {
    let mut out = m.clone();
    for (j, &dj) in d.iter().enumerate() {
        out.column_mut(j).scale_mut(dj);
    }
    out
}

/// `U·diag(D)·Vᵀ` factors of a coefficient matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorTriple {
    pub u: Mat,
    pub d: DVector<f64>,
    pub v: Mat,
}

impl FactorTriple {
    pub fn new(u: Mat, d: DVector<f64>, v: Mat) -> Result<Self> {
        let r = d.len();
        if u.ncols() != r || v.ncols() != r {
            return Err(Error::dim(
                "factor_triple",
                format!("U has {} cols, D has {r}, V has {}", u.ncols(), v.ncols()),
            ));
        }
        Ok(Self { u, d, v })
    }

    pub fn empty(p: usize, q: usize) -> Self {
        Self {
            u: Mat::zeros(p, 0),
            d: DVector::zeros(0),
            v: Mat::zeros(q, 0),
        }
    }

    pub fn rank(&self) -> usize {
        self.d.len()
    }

    pub fn coefficient(&self) -> Mat {
        scale_columns(&self.u, &self.d) * self.v.transpose()
    }

    /// Number of nonzero entries of `U` plus `V`.
    pub fn nonzeros(&self) -> usize {
        self.u.iter().chain(self.v.iter()).filter(|&&x| x != 0.0).count()
    }
}

/// All nine ADMM blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub u: Mat,
    pub v: Mat,
    pub d: DVector<f64>,
    /// `U*`
    pub u_split: Mat,
    /// `V*`
    pub v_split: Mat,
    /// `V**`
    pub v_group: Mat,
    /// `Ω`
    pub dual_u: Mat,
    /// `Φ`
    pub dual_v: Mat,
    /// `Ψ`
    pub dual_g: Mat,
    /// Columns still in the model; cleared once `V**` zeroes a column.
    pub active: Vec<bool>,
    pub iteration: usize,
}

impl AdmmState {
    pub fn rank(&self) -> usize {
        self.d.len()
    }

    /// Current `(U, D, V)` on the manifolds.
    pub fn factors(&self) -> FactorTriple {
        FactorTriple {
            u: self.u.clone(),
            d: self.d.clone(),
            v: self.v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmijoConfig {
    pub initial_step: f64,
    pub contraction: f64,
    pub sufficient_decrease: f64,
    pub max_backtracks: usize,
    /// Start each search one expansion above the previously accepted step
    /// (capped at `initial_step`) instead of at `initial_step`.
    pub warm_start: bool,
}

impl Default for ArmijoConfig {
    fn default() -> Self {
        Self {
            initial_step: 1.0,
            contraction: 0.5,
            sufficient_decrease: 1e-4,
            max_backtracks: 30,
            warm_start: true,
        }
    }
}

impl ArmijoConfig {
    fn validate(&self) -> Result<()> {
        let ok = self.initial_step > 0.0
            && self.initial_step.is_finite()
            && self.contraction > 0.0
            && self.contraction < 1.0
            && self.sufficient_decrease > 0.0
            && self.sufficient_decrease < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid Armijo settings {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Trade-off between elementwise sparsity of `V` and column removal.
    pub alpha: f64,
    /// `ρ₁, ρ₂, ρ₃`.
    pub rho: [f64; 3],
    pub gammas: WeightExponents,
    pub max_iter: usize,
    /// Overrides the default `1e-4·√(pr)` / `1e-4·√(qr)` primal tolerances.
    pub primal_tol: Option<f64>,
    pub objective_tol: f64,
    pub armijo: ArmijoConfig,
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda1: 0.0,
            lambda2: 0.0,
            alpha: 0.5,
            rho: [1.0; 3],
            gammas: WeightExponents::default(),
            max_iter: 500,
            primal_tol: None,
            objective_tol: 1e-6,
            armijo: ArmijoConfig::default(),
            record_trace: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.lambda1 >= 0.0 && self.lambda1.is_finite()) {
            return bad(format!("lambda1 must be finite and >= 0, got {}", self.lambda1));
        }
        if !(self.lambda2 >= 0.0 && self.lambda2.is_finite()) {
            return bad(format!("lambda2 must be finite and >= 0, got {}", self.lambda2));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha must lie in [0, 1], got {}", self.alpha));
        }
        if self.rho.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return bad(format!("rho must be positive, got {:?}", self.rho));
        }
        if let Some(tol) = self.primal_tol {
            if !(tol > 0.0) {
                return bad(format!("primal_tol must be positive, got {tol}"));
            }
        }
        if !(self.objective_tol >= 0.0) {
            return bad(format!("objective_tol must be >= 0, got {}", self.objective_tol));
        }
        self.gammas.validate()?;
        self.armijo.validate()
    }

    pub fn with_lambdas(&self, lambda1: f64, lambda2: f64) -> Self {
        Self {
            lambda1,
            lambda2,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Converged,
    MaxIterations,
    /// Every `V**` column was removed; the extracted model is rank 0
    /// whatever further iterations would do.
    AllColumnsRemoved,
    /// `Y = 0`: the zero model is returned without iterating.
    ZeroResponse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub u_objective_before: f64,
    pub u_objective_after: f64,
    pub v_objective_before: f64,
    pub v_objective_after: f64,
    pub u_step: f64,
    pub v_step: f64,
    pub residuals: [f64; 3],
    pub u_infeasibility: f64,
    pub v_infeasibility: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Largest `‖UᵀGU − I‖_F` seen over all iterates.
    pub max_u_infeasibility: f64,
    /// Largest `‖VᵀV − I‖_F` seen over all iterates.
    pub max_v_infeasibility: f64,
    pub u_backtracks: usize,
    pub v_backtracks: usize,
    /// Line searches that exhausted their backtracks and kept the point.
    pub u_stalls: usize,
    pub v_stalls: usize,
    pub trace: Vec<IterationRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub factors: FactorTriple,
    pub sse: f64,
    pub df: i64,
    pub bic: f64,
    /// SSE was zero and clamped before taking the log.
    pub bic_clamped: bool,
    pub iterations: usize,
    pub converged: bool,
    pub stop: StopReason,
    /// `‖U − U*‖_F`, `‖V − V*‖_F`, `‖V − V**‖_F` (retained columns).
    pub primal_residuals: [f64; 3],
    pub objective: f64,
    pub diagnostics: FitDiagnostics,
}

/// Spectral initialization: `D̃²` and `Ṽ` are the top eigenpairs of
/// `(1/n) YᵀX (XᵀX)⁺ XᵀY`, `Ũ = (XᵀX)⁺ XᵀY Ṽ D̃⁻¹`, split copies equal the
/// primal blocks and the duals are zero.
pub fn initialize(problem: &Problem, r: usize) -> Result<AdmmState> {
    let (p, q) = (problem.p(), problem.q());
    if r == 0 || r > p.min(q) {
        return Err(Error::InvalidArgument(format!(
            "rank must lie in 1..={}, got {r}",
            p.min(q)
        )));
    }
    let n = problem.n() as f64;
    let projected = pseudo_solve(&problem.xtx, &problem.xty)?;
    let m = crate::linalg::sym_unchecked(&(problem.xty.transpose() * &projected / n));
    let (values, v) = top_eigen(&m, r)?;
    let floor = IDENTIFIABLE_EIGENVALUE * values[0].max(1.0);
    for (k, &value) in values.iter().enumerate() {
        if !(value > floor) {
            return Err(Error::RankNotIdentifiable {
                index: k + 1,
                value,
            });
        }
    }
    let d = values.map(f64::sqrt);
    let u_raw = scale_columns(&(&projected * &v), &d.map(|x| 1.0 / x));
    let gst = GeneralizedStiefel::new(problem.metric.clone());
    // a no-op up to rounding unless G carries a ridge
    let u = gst.retract(&u_raw, &Mat::zeros(p, r))?;
    Ok(AdmmState {
        u_split: u.clone(),
        v_split: v.clone(),
        v_group: v.clone(),
        dual_u: Mat::zeros(p, r),
        dual_v: Mat::zeros(q, r),
        dual_g: Mat::zeros(q, r),
        active: vec![true; r],
        iteration: 0,
        u,
        v,
        d,
    })
}

/// `∇L_U = −XᵀYVD + ρ₁(U − U* + Ω)`.
pub fn euclid_grad_u(state: &AdmmState, problem: &Problem, config: &SolverConfig) -> Mat {
    let data = scale_columns(&(&problem.xty * &state.v), &state.d);
    (&state.u - &state.u_split + &state.dual_u) * config.rho[0] - data
}

/// `∇L_V = −YᵀXUD + ρ₂(V − V* + Φ) + ρ₃(V − V** + Ψ)`, the last term over
/// retained columns only.
pub fn euclid_grad_v(state: &AdmmState, problem: &Problem, config: &SolverConfig) -> Mat {
    let data = scale_columns(&(problem.xty.transpose() * &state.u), &state.d);
    let mut grad = (&state.v - &state.v_split + &state.dual_v) * config.rho[1] - data;
    let group = group_residual(state);
    grad += group * config.rho[2];
    grad
}

/// `V − V** + Ψ` with removed columns zeroed.
fn group_residual(state: &AdmmState) -> Mat {
    let mut out = &state.v - &state.v_group + &state.dual_g;
    for (k, &on) in state.active.iter().enumerate() {
        if !on {
            out.column_mut(k).fill(0.0);
        }
    }
    out
}

/// `½‖Y − XUDVᵀ‖² + (ρ₁/2)‖U − U* + Ω‖²` as a function of `U`.
pub fn u_objective(state: &AdmmState, problem: &Problem, config: &SolverConfig, u: &Mat) -> f64 {
    problem.half_loss(u, &state.d, &state.v)
        + 0.5 * config.rho[0] * (u - &state.u_split + &state.dual_u).norm_squared()
}

/// `½‖Y − XUDVᵀ‖² + (ρ₂/2)‖V − V* + Φ‖² + (ρ₃/2)‖V − V** + Ψ‖²` as a
/// function of `V`.
pub fn v_objective(state: &AdmmState, problem: &Problem, config: &SolverConfig, v: &Mat) -> f64 {
    let mut group = v - &state.v_group + &state.dual_g;
    for (k, &on) in state.active.iter().enumerate() {
        if !on {
            group.column_mut(k).fill(0.0);
        }
    }
    problem.half_loss(&state.u, &state.d, v)
        + 0.5 * config.rho[1] * (v - &state.v_split + &state.dual_v).norm_squared()
        + 0.5 * config.rho[2] * group.norm_squared()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmijoOutcome {
    pub point: Mat,
    pub step: f64,
    pub backtracks: usize,
    pub value: f64,
}

/// Backtracking along the retraction curve `t ↦ R_x(−t·grad)`.
///
/// Accepts the first `t = initial·contractionᵏ` with
/// `f(R_x(−t·grad)) ≤ f(x) − c·t·‖grad‖²` (norm in the manifold metric).
/// Trial points where the retraction fails or the objective is not finite
/// count as rejections. If every trial is rejected the point is returned
/// unchanged with `step = 0`.
pub fn armijo_manifold_step<M, F>(
    manifold: &M,
    point: &Mat,
    value: f64,
    riem_grad: &Mat,
    objective: F,
    config: &ArmijoConfig,
    initial_step: f64,
) -> ArmijoOutcome
where
    M: Manifold + ?Sized,
    F: Fn(&Mat) -> f64,
{
    let slope = manifold.inner(riem_grad, riem_grad);
    if slope == 0.0 {
        return ArmijoOutcome {
            point: point.clone(),
            step: initial_step,
            backtracks: 0,
            value,
        };
    }
    let mut t = initial_step;
    for k in 0..=config.max_backtracks {
        if let Ok(candidate) = manifold.retract(point, &(riem_grad * -t)) {
            let f = objective(&candidate);
            if f.is_finite() && f <= value - config.sufficient_decrease * t * slope {
                return ArmijoOutcome {
                    point: candidate,
                    step: t,
                    backtracks: k,
                    value: f,
                };
            }
        }
        t *= config.contraction;
    }
    ArmijoOutcome {
        point: point.clone(),
        step: 0.0,
        backtracks: config.max_backtracks,
        value,
    }
}

/// `diag((1/n) VᵀYᵀXU)`.
pub fn update_d(state: &AdmmState, problem: &Problem) -> DVector<f64> {
    let n = problem.n() as f64;
    let m = state.u.transpose() * &problem.xty * &state.v;
    DVector::from_fn(state.rank(), |k, _| m[(k, k)] / n)
}

/// Soft thresholds for `U*`, `V*` and the column rule for `V**`.
///
/// Levels: `nλ₁w⁽ᵘ⁾/ρ₁`, `nαλ₂w⁽ᵛ⁾/ρ₂` and `√(2n√q(1−α)λ₂w⁽ᵈ⁾/ρ₃)`.
/// A column newly zeroed in `V**` is removed and its `Ψ` column reset.
pub fn update_splits(state: &mut AdmmState, weights: &Weights, config: &SolverConfig, n: usize) {
    let n = n as f64;
    let q = state.v.nrows() as f64;
    let tu = n * config.lambda1 / config.rho[0];
    state.u_split = Mat::from_fn(state.u.nrows(), state.rank(), |i, j| {
        shrink(state.u[(i, j)] + state.dual_u[(i, j)], tu * weights.w_u[(i, j)])
    });
    let tv = n * config.alpha * config.lambda2 / config.rho[1];
    state.v_split = Mat::from_fn(state.v.nrows(), state.rank(), |i, j| {
        shrink(state.v[(i, j)] + state.dual_v[(i, j)], tv * weights.w_v[(i, j)])
    });
    let tg = 2.0 * n * q.sqrt() * (1.0 - config.alpha) * config.lambda2 / config.rho[2];
    for k in 0..state.rank() {
        if !state.active[k] {
            continue;
        }
        let candidate = state.v.column(k) + state.dual_g.column(k);
        let level = (tg * weights.w_d[k]).sqrt();
        if survives(candidate.norm(), level) {
            state.v_group.set_column(k, &candidate);
        } else {
            state.v_group.column_mut(k).fill(0.0);
            state.dual_g.column_mut(k).fill(0.0);
            state.active[k] = false;
        }
    }
}

/// `Ω += U − U*`, `Φ += V − V*`, `Ψ += V − V**` (retained columns).
pub fn update_duals(state: &mut AdmmState) {
    state.dual_u += &state.u - &state.u_split;
    state.dual_v += &state.v - &state.v_split;
    for k in 0..state.rank() {
        if state.active[k] {
            let step = state.v.column(k) - state.v_group.column(k);
            let mut col = state.dual_g.column_mut(k);
            col += step;
        }
    }
}

fn primal_residuals(state: &AdmmState) -> [f64; 3] {
    let mut group = 0.0;
    for k in 0..state.rank() {
        if state.active[k] {
            group += (state.v.column(k) - state.v_group.column(k)).norm_squared();
        }
    }
    [
        (&state.u - &state.u_split).norm(),
        (&state.v - &state.v_split).norm(),
        group.sqrt(),
    ]
}

/// Full scaled augmented Lagrangian at the current state.
pub fn augmented_lagrangian(
    state: &AdmmState,
    problem: &Problem,
    weights: &Weights,
    config: &SolverConfig,
) -> f64 {
    let n = problem.n() as f64;
    let q = problem.q() as f64;
    let l1_u: f64 = state
        .u_split
        .iter()
        .zip(weights.w_u.iter())
        .map(|(x, w)| w * x.abs())
        .sum();
    let l1_v: f64 = state
        .v_split
        .iter()
        .zip(weights.w_v.iter())
        .map(|(x, w)| w * x.abs())
        .sum();
    let groups: f64 = (0..state.rank())
        .filter(|&k| state.active[k] && state.v_group.column(k).iter().any(|&x| x != 0.0))
        .map(|k| weights.w_d[k])
        .sum();
    problem.half_loss(&state.u, &state.d, &state.v)
        + n * config.lambda1 * l1_u
        + n * config.alpha * config.lambda2 * l1_v
        + n * q.sqrt() * (1.0 - config.alpha) * config.lambda2 * groups
        + 0.5 * config.rho[0] * (&state.u - &state.u_split + &state.dual_u).norm_squared()
        + 0.5 * config.rho[1] * (&state.v - &state.v_split + &state.dual_v).norm_squared()
        + 0.5 * config.rho[2] * group_residual(state).norm_squared()
}

/// Retained columns of `(U*, D, V*)`, in original order. Negative `D`
/// entries are made positive by flipping the matching `V*` column.
pub fn extract_rank(state: &AdmmState) -> FactorTriple {
    let keep: Vec<usize> = (0..state.rank())
        .filter(|&k| state.active[k] && state.v_group.column(k).iter().any(|&x| x != 0.0))
        .collect();
    let p = state.u.nrows();
    let q = state.v.nrows();
    let mut u = Mat::zeros(p, keep.len());
    let mut v = Mat::zeros(q, keep.len());
    let mut d = DVector::zeros(keep.len());
    for (j, &k) in keep.iter().enumerate() {
        u.set_column(j, &state.u_split.column(k));
        let sign = if state.d[k] < 0.0 { -1.0 } else { 1.0 };
        d[j] = sign * state.d[k];
        v.set_column(j, &(state.v_split.column(k) * sign));
    }
    FactorTriple { u, d, v }
}

fn check_inputs(problem: &Problem, r: usize, config: &SolverConfig) -> Result<()> {
    config.validate()?;
    let cap = problem.p().min(problem.q());
    if r == 0 || r > cap {
        return Err(Error::InvalidArgument(format!("rank must lie in 1..={cap}, got {r}")));
    }
    Ok(())
}

/// Fit from raw data: builds the problem, initializes, derives adaptive
/// weights from the initializer and runs the ADMM loop.
pub fn fit(x: &Mat, y: &Mat, r: usize, config: &SolverConfig) -> Result<FitResult> {
    let problem = Problem::new(x.clone(), y.clone())?;
    fit_problem(&problem, r, config)
}

pub fn fit_problem(problem: &Problem, r: usize, config: &SolverConfig) -> Result<FitResult> {
    check_inputs(problem, r, config)?;
    if problem.y_norm_sq == 0.0 {
        return Ok(zero_response_fit(problem));
    }
    let init = initialize(problem, r)?;
    let weights = adaptive_weights(&init.factors(), &config.gammas)?;
    fit_from(problem, &init, &weights, config)
}

fn zero_response_fit(problem: &Problem) -> FitResult {
    let (n, q) = (problem.n(), problem.q());
    let score = bic(0.0, -1, n, q);
    FitResult {
        factors: FactorTriple::empty(problem.p(), q),
        sse: 0.0,
        df: -1,
        bic: score.value,
        bic_clamped: score.clamped,
        iterations: 0,
        converged: true,
        stop: StopReason::ZeroResponse,
        primal_residuals: [0.0; 3],
        objective: 0.0,
        diagnostics: FitDiagnostics::default(),
    }
}

/// Run the ADMM loop from a prepared initial state and weights.
pub fn fit_from(
    problem: &Problem,
    init: &AdmmState,
    weights: &Weights,
    config: &SolverConfig,
) -> Result<FitResult> {
    let r = init.rank();
    check_inputs(problem, r, config)?;
    weights.check_shape(problem.p(), problem.q(), r)?;
    let (n, p, q) = (problem.n(), problem.p(), problem.q());
    let gst = GeneralizedStiefel::new(problem.metric.clone());
    let st = Stiefel;
    let tol_u = config.primal_tol.unwrap_or(1e-4 * ((p * r) as f64).sqrt());
    let tol_v = config.primal_tol.unwrap_or(1e-4 * ((q * r) as f64).sqrt());

    let mut state = init.clone();
    state.iteration = 0;
    let mut diag = FitDiagnostics {
        max_u_infeasibility: gst.feasibility(&state.u),
        max_v_infeasibility: st.feasibility(&state.v),
        ..FitDiagnostics::default()
    };
    let mut objective = augmented_lagrangian(&state, problem, weights, config);
    let mut residuals = [0.0; 3];
    let mut stop = StopReason::MaxIterations;
    let mut step_u = config.armijo.initial_step;
    let mut step_v = config.armijo.initial_step;
    let warm = |prev: f64| {
        if config.armijo.warm_start && prev > 0.0 {
            (prev / config.armijo.contraction).min(config.armijo.initial_step)
        } else {
            config.armijo.initial_step
        }
    };

    for s in 0..config.max_iter {
        // U step
        let egrad = euclid_grad_u(&state, problem, config);
        let rgrad = gst.riemannian_grad(&state.u, &egrad);
        let before_u = u_objective(&state, problem, config, &state.u);
        let out = armijo_manifold_step(
            &gst,
            &state.u,
            before_u,
            &rgrad,
            |u| u_objective(&state, problem, config, u),
            &config.armijo,
            warm(step_u),
        );
        diag.u_backtracks += out.backtracks;
        if out.step == 0.0 && rgrad.norm() > 0.0 {
            diag.u_stalls += 1;
        }
        step_u = out.step;
        let after_u = out.value;
        state.u = out.point;

        // V step
        let egrad = euclid_grad_v(&state, problem, config);
        let rgrad = st.riemannian_grad(&state.v, &egrad);
        let before_v = v_objective(&state, problem, config, &state.v);
        let out = armijo_manifold_step(
            &st,
            &state.v,
            before_v,
            &rgrad,
            |v| v_objective(&state, problem, config, v),
            &config.armijo,
            warm(step_v),
        );
        diag.v_backtracks += out.backtracks;
        if out.step == 0.0 && rgrad.norm() > 0.0 {
            diag.v_stalls += 1;
        }
        step_v = out.step;
        let after_v = out.value;
        state.v = out.point;

        state.d = update_d(&state, problem);
        update_splits(&mut state, weights, config, n);
        update_duals(&mut state);
        state.iteration = s + 1;

        let u_feas = gst.feasibility(&state.u);
        let v_feas = st.feasibility(&state.v);
        diag.max_u_infeasibility = diag.max_u_infeasibility.max(u_feas);
        diag.max_v_infeasibility = diag.max_v_infeasibility.max(v_feas);

        residuals = primal_residuals(&state);
        let next = augmented_lagrangian(&state, problem, weights, config);
        if !next.is_finite() || state.d.iter().any(|x| !x.is_finite()) {
            return Err(Error::Divergence { iteration: s + 1 });
        }
        let change = (next - objective).abs() / objective.abs().max(1.0);
        objective = next;

        if config.record_trace {
            diag.trace.push(IterationRecord {
                iteration: s + 1,
                objective,
                u_objective_before: before_u,
                u_objective_after: after_u,
                v_objective_before: before_v,
                v_objective_after: after_v,
                u_step: step_u,
                v_step: step_v,
                residuals,
                u_infeasibility: u_feas,
                v_infeasibility: v_feas,
            });
        }

        if state.active.iter().all(|&a| !a) {
            stop = StopReason::AllColumnsRemoved;
            break;
        }
        if residuals[0] <= tol_u
            && residuals[1] <= tol_v
            && residuals[2] <= tol_v
            && change <= config.objective_tol
        {
            stop = StopReason::Converged;
            break;
        }
    }

    let factors = extract_rank(&state);
    let sse = problem.sse(&factors.coefficient());
    let df = factors.nonzeros() as i64 - 1;
    let score = bic(sse, df, n, q);
    Ok(FitResult {
        factors,
        sse,
        df,
        bic: score.value,
        bic_clamped: score.clamped,
        iterations: state.iteration,
        converged: stop == StopReason::Converged,
        stop,
        primal_residuals: residuals,
        objective,
        diagnostics: diag,
    })
}

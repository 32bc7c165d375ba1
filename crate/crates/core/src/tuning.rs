//! Adaptive weights, BIC and the `(λ₁, λ₂)` grid search.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::par::Execution;
use crate::solver::{fit_from, initialize, FactorTriple, FitResult, Problem, SolverConfig};

/// Lower clamp on `|initial value|` before raising to `-γ`.
pub const WEIGHT_CLAMP: f64 = 1e-8;

/// SSE floor, as a multiple of `nq`, used when the fit is exact.
pub const SSE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightExponents {
    pub gamma_u: f64,
    pub gamma_v: f64,
    pub gamma_d: f64,
}

impl Default for WeightExponents {
    fn default() -> Self {
        Self {
            gamma_u: 1.0,
            gamma_v: 1.0,
            gamma_d: 1.0,
        }
    }
}

impl WeightExponents {
    pub fn validate(&self) -> Result<()> {
        for (name, g) in [
            ("gamma_u", self.gamma_u),
            ("gamma_v", self.gamma_v),
            ("gamma_d", self.gamma_d),
        ] {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {g}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub w_u: Mat,
    pub w_v: Mat,
    pub w_d: DVector<f64>,
    pub gammas: WeightExponents,
}

impl Weights {
    /// All-ones weights of the given shape.
    pub fn uniform(p: usize, q: usize, r: usize) -> Self {
        Self {
            w_u: Mat::from_element(p, r, 1.0),
            w_v: Mat::from_element(q, r, 1.0),
            w_d: DVector::from_element(r, 1.0),
            gammas: WeightExponents::default(),
        }
    }

    pub(crate) fn check_shape(&self, p: usize, q: usize, r: usize) -> Result<()> {
        if self.w_u.shape() != (p, r) || self.w_v.shape() != (q, r) || self.w_d.len() != r {
            return Err(Error::dim(
                "weights",
                format!(
                    "expected {p}x{r}, {q}x{r}, {r}; got {:?}, {:?}, {}",
                    self.w_u.shape(),
                    self.w_v.shape(),
                    self.w_d.len()
                ),
            ));
        }
        let all = self.w_u.iter().chain(self.w_v.iter()).chain(self.w_d.iter());
        if all.copied().any(|w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument("weights must be finite and positive".into()));
        }
        Ok(())
    }
}

fn weight(value: f64, gamma: f64) -> f64 {
    value.abs().max(WEIGHT_CLAMP).powf(-gamma)
}

/// `1/|value|^γ` on `Ũ`, `Ṽ` and `D̃`.
pub fn adaptive_weights(initial: &FactorTriple, gammas: &WeightExponents) -> Result<Weights> {
    gammas.validate()?;
    Ok(Weights {
        w_u: initial.u.map(|x| weight(x, gammas.gamma_u)),
        w_v: initial.v.map(|x| weight(x, gammas.gamma_v)),
        w_d: initial.d.map(|x| weight(x, gammas.gamma_d)),
        gammas: *gammas,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BicScore {
    pub value: f64,
    /// SSE was `≤ 0` and replaced by `1e-12·nq`.
    pub clamped: bool,
}

/// `log(SSE/(nq)) + log(qn)/(nq)·df`.
pub fn bic(sse: f64, df: i64, n: usize, q: usize) -> BicScore {
    bic_real_df(sse, df as f64, n, q)
}

/// [`bic`] with a real-valued `df`.
pub fn bic_real_df(sse: f64, df: f64, n: usize, q: usize) -> BicScore {
    let nq = (n * q) as f64;
    let (sse, clamped) = if sse > 0.0 { (sse, false) } else { (SSE_FLOOR * nq, true) };
    BicScore {
        value: (sse / nq).ln() + nq.ln() / nq * df,
        clamped,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningGrid {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub points_per_axis: usize,
}

impl Default for TuningGrid {
    fn default() -> Self {
        Self {
            lambda_min: 1e-15,
            lambda_max: 1.0,
            points_per_axis: 10,
        }
    }
}

impl TuningGrid {
    pub fn with_points(points_per_axis: usize) -> Self {
        Self {
            points_per_axis,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_min > 0.0 && self.lambda_min < self.lambda_max && self.lambda_max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "grid needs 0 < lambda_min < lambda_max, got [{}, {}]",
                self.lambda_min, self.lambda_max
            )));
        }
        if self.points_per_axis < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 2 points per axis, got {}",
                self.points_per_axis
            )));
        }
        Ok(())
    }

    /// Log-spaced values from `lambda_min` to `lambda_max`, both included.
    pub fn axis(&self) -> Vec<f64> {
        let k = self.points_per_axis;
        let (lo, hi) = (self.lambda_min.log10(), self.lambda_max.log10());
        (0..k)
            .map(|i| match i {
                0 => self.lambda_min,
                _ if i + 1 == k => self.lambda_max,
                _ => 10f64.powf(lo + (hi - lo) * i as f64 / (k - 1) as f64),
            })
            .collect()
    }

    /// Row-major `(λ₁, λ₂)` cells.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        let axis = self.axis();
        axis.iter()
            .flat_map(|&l1| axis.iter().map(move |&l2| (l1, l2)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub lambda1: f64,
    pub lambda2: f64,
    /// `None` when the cell failed; `error` then says why.
    pub bic: Option<f64>,
    pub sse: Option<f64>,
    pub df: Option<i64>,
    pub rank: Option<usize>,
    pub iterations: Option<usize>,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningReport {
    pub cells: Vec<CellRecord>,
    pub best: usize,
    pub best_fit: FitResult,
}

impl TuningReport {
    pub fn best_cell(&self) -> &CellRecord {
        &self.cells[self.best]
    }
}

/// Fit every grid cell from one shared initialization and weight set and
/// keep the BIC minimiser.
///
/// Candidates are all cells that returned a fit, converged or not. Among
/// equal BIC values the cell with the larger `(λ₁, λ₂)` wins.
pub fn grid_search(
    problem: &Problem,
    r: usize,
    grid: &TuningGrid,
    base: &SolverConfig,
    execution: Execution,
) -> Result<TuningReport> {
    grid.validate()?;
    base.validate()?;
    let init = initialize(problem, r)?;
    let weights = adaptive_weights(&init.factors(), &base.gammas)?;
    let cells = grid.cells();
    let fits: Vec<Result<FitResult>> = execution.map(&cells, |_, &(l1, l2)| {
        fit_from(problem, &init, &weights, &base.with_lambdas(l1, l2))
    });

    let mut records = Vec::with_capacity(cells.len());
    let mut best: Option<usize> = None;
    for (i, (&(l1, l2), fit)) in cells.iter().zip(&fits).enumerate() {
        let record = match fit {
            Ok(f) => {
                let better = match best {
                    None => true,
                    Some(b) => {
                        let fb = fits[b].as_ref().expect("best cell holds a fit");
                        f.bic < fb.bic || (f.bic == fb.bic && (l1, l2) > cells[b])
                    }
                };
                if better {
                    best = Some(i);
                }
                CellRecord {
                    lambda1: l1,
                    lambda2: l2,
                    bic: Some(f.bic),
                    sse: Some(f.sse),
                    df: Some(f.df),
                    rank: Some(f.factors.rank()),
                    iterations: Some(f.iterations),
                    converged: f.converged,
                    error: None,
                }
            }
            Err(e) => {
                if !e.is_numerical() {
                    return Err(e.clone());
                }
                CellRecord {
                    lambda1: l1,
                    lambda2: l2,
                    bic: None,
                    sse: None,
                    df: None,
                    rank: None,
                    iterations: None,
                    converged: false,
                    error: Some(e.to_string()),
                }
            }
        };
        records.push(record);
    }
    let Some(best) = best else {
        let first = records[0].error.clone().unwrap_or_default();
        return Err(Error::AllCellsFailed {
            cells: records.len(),
            first,
        });
    };
    let best_fit = fits
        .into_iter()
        .nth(best)
        .expect("index in range")
        .expect("best cell holds a fit");
    Ok(TuningReport {
        cells: records,
        best,
        best_fit,
    })
}

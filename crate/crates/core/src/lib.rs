//! Sparse reduced-rank regression with simultaneous rank and variable
//! selection.
//!
//! The coefficient matrix is parameterised as `C = U D Vᵀ` with `U` on the
//! generalized Stiefel manifold (`Uᵀ (XᵀX/n) U = I`) and `V` on the Stiefel
//! manifold. Elementwise adaptive-lasso penalties on `U` and `V` and a
//! columnwise keep-or-kill penalty on `V` are split off and handled by a
//! manifold ADMM, see [`solver::fit`]. Tuning parameters are chosen by BIC
//! over a log-spaced grid ([`tuning::grid_search`]) and [`simulation`]
//! regenerates the planted-factor Monte Carlo study.

pub mod error;
pub mod linalg;
pub mod manifold;
pub mod par;
pub mod prox;
pub mod simulation;
pub mod solver;
pub mod tuning;

pub use error::{Error, Result};
pub use linalg::Mat;
pub use par::Execution;
pub use solver::{fit, FactorTriple, FitResult, Problem, SolverConfig};
pub use tuning::{grid_search, TuningGrid, TuningReport, Weights};

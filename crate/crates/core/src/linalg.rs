//! Dense linear-algebra primitives.
//!
//! Every decomposition used by the manifold and solver layers lives here:
//! the positive-diagonal thin QR factor, the symmetric square root of the
//! metric `G`, ordered symmetric eigenpairs and a pseudo-inverse solve.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;

/// Relative eigenvalue cutoff for [`pseudo_solve`].
pub const PINV_RELATIVE_CUTOFF: f64 = 1e-12;

/// Q factor of the thin QR decomposition `A = QR`, normalised so that the
/// diagonal of `R` is strictly positive. With that convention the factor is
/// unique for full-rank `A`.
pub fn qf(a: &Mat) -> Result<Mat> {
    let (m, k) = a.shape();
    if m < k {
        return Err(Error::dim("qf", format!("need rows >= cols, got {m}x{k}")));
    }
    if k == 0 {
        return Ok(Mat::zeros(m, 0));
    }
    let scale = a.norm();
    if !scale.is_finite() {
        return Err(Error::InvalidArgument("qf: non-finite entries".into()));
    }
    let qr = a.clone().qr();
    let r = qr.r();
    let mut q = qr.q();
    let tol = (m.max(k) as f64) * f64::EPSILON * scale;
    for j in 0..k {
        let rjj = r[(j, j)];
        if rjj.abs() <= tol || scale == 0.0 {
            return Err(Error::RetractionUndefined { column: j });
        }
        if rjj < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(q)
}

/// `(M + Mᵀ) / 2`.
pub fn sym(m: &Mat) -> Result<Mat> {
    if !m.is_square() {
        return Err(Error::dim(
            "sym",
            format!("matrix must be square, got {}x{}", m.nrows(), m.ncols()),
        ));
    }
    Ok(sym_unchecked(m))
}

pub(crate) fn sym_unchecked(m: &Mat) -> Mat {
    let n = m.nrows();
    Mat::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}

/// Symmetric square root and inverse square root of a (ridged) SPD matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdFactorization {
    g: Mat,
    metric: Mat,
    sqrt: Mat,
    inv_sqrt: Mat,
    inverse: Mat,
    ridge_used: f64,
}

impl SpdFactorization {
    /// The matrix that was factorised, without the ridge.
    pub fn g(&self) -> &Mat {
        &self.g
    }

    /// `G + ridge·I`, the matrix `sqrt` actually squares to.
    pub fn metric(&self) -> &Mat {
        &self.metric
    }

    pub fn sqrt(&self) -> &Mat {
        &self.sqrt
    }

    pub fn inv_sqrt(&self) -> &Mat {
        &self.inv_sqrt
    }

    /// `(G + ridge·I)⁻¹`.
    pub fn inverse(&self) -> &Mat {
        &self.inverse
    }

    pub fn ridge_used(&self) -> f64 {
        self.ridge_used
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }
}

fn check_symmetric(op: &'static str, g: &Mat) -> Result<()> {
    if !g.is_square() {
        return Err(Error::dim(
            op,
            format!("matrix must be square, got {}x{}", g.nrows(), g.ncols()),
        ));
    }
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("{op}: non-finite entries")));
    }
    let asym = (g - g.transpose()).norm();
    if asym > 1e-10 * g.norm().max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "{op}: matrix is not symmetric (asymmetry {asym:e})"
        )));
    }
    Ok(())
}

/// Factorise `G + ridge·I` through one symmetric eigendecomposition.
pub fn spd_factorize(g: &Mat, ridge: f64) -> Result<SpdFactorization> {
    check_symmetric("spd_factorize", g)?;
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "ridge must be finite and >= 0, got {ridge}"
        )));
    }
    let p = g.nrows();
    let metric = sym_unchecked(&(g + Mat::identity(p, p) * ridge));
    let eig = SymmetricEigen::new(metric.clone());
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
    }
    let q = &eig.eigenvectors;
    let spectral = |f: &dyn Fn(f64) -> f64| {
        let mut scaled = q.clone();
        for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
            scaled.column_mut(j).scale_mut(f(lambda));
        }
        sym_unchecked(&(scaled * q.transpose()))
    };
    Ok(SpdFactorization {
        g: g.clone(),
        sqrt: spectral(&f64::sqrt),
        inv_sqrt: spectral(&|l| 1.0 / l.sqrt()),
        inverse: spectral(&|l| 1.0 / l),
        metric,
        ridge_used: ridge,
    })
}

/// Ridge applied to `G = XᵀX/n` when none is requested explicitly: zero for a
/// well-conditioned `G` with `n > p`, otherwise `1e-8·trace(G)/p`.
pub fn default_ridge(g: &Mat, n: usize) -> f64 {
    let p = g.nrows();
    if p == 0 {
        return 0.0;
    }
    let eig = SymmetricEigen::new(sym_unchecked(g));
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if n > p && min > 1e-10 * max {
        0.0
    } else {
        let trace = g.trace();
        let ridge = 1e-8 * trace / p as f64;
        if ridge > 0.0 {
            ridge
        } else {
            1e-8
        }
    }
}

/// Largest `r` eigenpairs of a symmetric matrix, eigenvalues descending.
///
/// Each eigenvector is signed so that its first non-negligible entry is
/// positive.
pub fn top_eigen(m: &Mat, r: usize) -> Result<(DVector<f64>, Mat)> {
    check_symmetric("top_eigen", m)?;
    let q = m.nrows();
    if r > q {
        return Err(Error::dim("top_eigen", format!("r = {r} exceeds order {q}")));
    }
    let eig = SymmetricEigen::new(sym_unchecked(m));
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(r, order.iter().take(r).map(|&i| eig.eigenvalues[i]));
    let mut vectors = Mat::zeros(q, r);
    for (k, &i) in order.iter().take(r).enumerate() {
        let mut col = eig.eigenvectors.column(i).into_owned();
        let amax = col.amax();
        if let Some(first) = col.iter().copied().find(|x| x.abs() > 1e-8 * amax) {
            if first < 0.0 {
                col.neg_mut();
            }
        }
        vectors.set_column(k, &col);
    }
    Ok((values, vectors))
}

/// `G⁺ B` for symmetric positive semidefinite `G`, dropping eigenvalues at or
/// below `1e-12·λ_max`.
pub fn pseudo_solve(g: &Mat, b: &Mat) -> Result<Mat> {
    check_symmetric("pseudo_solve", g)?;
    if g.nrows() != b.nrows() {
        return Err(Error::dim(
            "pseudo_solve",
            format!("G is {0}x{0} but B has {1} rows", g.nrows(), b.nrows()),
        ));
    }
    let eig = SymmetricEigen::new(sym_unchecked(g));
    let lmax = eig.eigenvalues.max();
    let cutoff = PINV_RELATIVE_CUTOFF * lmax;
    let q = &eig.eigenvectors;
    let mut coeffs = q.transpose() * b;
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        let factor = if lmax > 0.0 && lambda > cutoff {
            1.0 / lambda
        } else {
            0.0
        };
        coeffs.row_mut(i).scale_mut(factor);
    }
    Ok(q * coeffs)
}

/// `‖M − I‖_F` for a square matrix.
pub fn identity_residual(m: &Mat) -> f64 {
    let n = m.nrows();
    (m - Mat::identity(n, m.ncols())).norm()
}

/// Frobenius inner product `tr(AᵀB)`.
pub fn frob_inner(a: &Mat, b: &Mat) -> f64 {
    a.dot(b)
}

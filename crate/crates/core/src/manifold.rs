//! Stiefel `St(r, q) = {V : VᵀV = I}` and generalized Stiefel
//! `St_G(r, p) = {U : UᵀGU = I}` geometry.
//!
//! Both manifolds use the QR retraction and the tangent projection
//! `P_X(Z) = Z − X sym(XᵀMZ)` with `M = I` or `M = G`. The generalized
//! manifold carries the metric `⟨A, B⟩ = tr(AᵀGB)`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{identity_residual, qf, sym_unchecked, Mat, SpdFactorization};

/// Membership tolerance for manifold points (Frobenius).
pub const FEASIBILITY_TOL: f64 = 1e-8;

pub trait Manifold {
    /// Projection of an ambient matrix onto the tangent space at `x`.
    fn project(&self, x: &Mat, z: &Mat) -> Mat;

    fn retract(&self, x: &Mat, z: &Mat) -> Result<Mat>;

    /// Riemannian metric at any point (both metrics here are point-independent).
    fn inner(&self, a: &Mat, b: &Mat) -> f64;

    /// Riemannian gradient from the Euclidean gradient of a smooth function.
    fn riemannian_grad(&self, x: &Mat, egrad: &Mat) -> Mat;

    /// `‖XᵀMX − I‖_F`, zero on the manifold.
    fn feasibility(&self, x: &Mat) -> f64;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stiefel;

#[derive(Debug, Clone)]
pub struct GeneralizedStiefel {
    metric: Arc<SpdFactorization>,
}

impl GeneralizedStiefel {
    pub fn new(metric: Arc<SpdFactorization>) -> Self {
        Self { metric }
    }

    pub fn metric(&self) -> &SpdFactorization {
        &self.metric
    }
}

fn check_same_shape(op: &'static str, x: &Mat, z: &Mat) -> Result<()> {
    if x.shape() != z.shape() {
        return Err(Error::dim(
            op,
            format!("point is {:?} but direction is {:?}", x.shape(), z.shape()),
        ));
    }
    Ok(())
}

fn check_metric(op: &'static str, x: &Mat, metric: &SpdFactorization) -> Result<()> {
    if x.nrows() != metric.dim() {
        return Err(Error::dim(
            op,
            format!("point has {} rows but G is {1}x{1}", x.nrows(), metric.dim()),
        ));
    }
    Ok(())
}

/// `Z − V sym(VᵀZ)`.
pub fn st_project(v: &Mat, z: &Mat) -> Result<Mat> {
    check_same_shape("st_project", v, z)?;
    Ok(Stiefel.project(v, z))
}

/// `qf(V + Z)`.
pub fn st_retract(v: &Mat, z: &Mat) -> Result<Mat> {
    check_same_shape("st_retract", v, z)?;
    Stiefel.retract(v, z)
}

/// `Z − U sym(UᵀGZ)`.
pub fn gst_project(u: &Mat, metric: &SpdFactorization, z: &Mat) -> Result<Mat> {
    check_same_shape("gst_project", u, z)?;
    check_metric("gst_project", u, metric)?;
    Ok(gst_project_unchecked(u, metric, z))
}

/// `√G⁻¹ qf(√G (U + Z))`.
pub fn gst_retract(u: &Mat, metric: &SpdFactorization, z: &Mat) -> Result<Mat> {
    check_same_shape("gst_retract", u, z)?;
    check_metric("gst_retract", u, metric)?;
    gst_retract_unchecked(u, metric, z)
}

fn gst_project_unchecked(u: &Mat, metric: &SpdFactorization, z: &Mat) -> Mat {
    let s = sym_unchecked(&(u.transpose() * (metric.metric() * z)));
    z - u * s
}

fn gst_retract_unchecked(u: &Mat, metric: &SpdFactorization, z: &Mat) -> Result<Mat> {
    let q = qf(&(metric.sqrt() * (u + z)))?;
    Ok(metric.inv_sqrt() * q)
}

impl Manifold for Stiefel {
    fn project(&self, x: &Mat, z: &Mat) -> Mat {
        let s = sym_unchecked(&(x.transpose() * z));
        z - x * s
    }

    fn retract(&self, x: &Mat, z: &Mat) -> Result<Mat> {
        qf(&(x + z))
    }

    fn inner(&self, a: &Mat, b: &Mat) -> f64 {
        a.dot(b)
    }

    fn riemannian_grad(&self, x: &Mat, egrad: &Mat) -> Mat {
        self.project(x, egrad)
    }

    fn feasibility(&self, x: &Mat) -> f64 {
        identity_residual(&(x.transpose() * x))
    }
}

impl Manifold for GeneralizedStiefel {
    fn project(&self, x: &Mat, z: &Mat) -> Mat {
        gst_project_unchecked(x, &self.metric, z)
    }

    fn retract(&self, x: &Mat, z: &Mat) -> Result<Mat> {
        gst_retract_unchecked(x, &self.metric, z)
    }

    fn inner(&self, a: &Mat, b: &Mat) -> f64 {
        a.dot(&(self.metric.metric() * b))
    }

    /// `P_U(G⁻¹ ∇f)`: the Euclidean gradient is first converted to the
    /// `G`-metric gradient, then projected.
    fn riemannian_grad(&self, x: &Mat, egrad: &Mat) -> Mat {
        self.project(x, &(self.metric.inverse() * egrad))
    }

    fn feasibility(&self, x: &Mat) -> f64 {
        identity_residual(&(x.transpose() * self.metric.metric() * x))
    }
}

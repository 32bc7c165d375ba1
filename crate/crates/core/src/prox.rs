//! Thresholding operators for the split blocks.
//!
//! Levels arrive fully combined (sample size, penalties, weights and ADMM
//! penalty already folded in); nothing here knows about the model.

use nalgebra::{DVector, DVectorView};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThresholdKind {
    SoftElementwise,
    HardColumn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSpec {
    kind: ThresholdKind,
    level: f64,
}

impl ThresholdSpec {
    pub fn new(kind: ThresholdKind, level: f64) -> Result<Self> {
        check_level(level)?;
        Ok(Self { kind, level })
    }

    pub fn kind(&self) -> ThresholdKind {
        self.kind
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    /// Apply to a vector: elementwise for the soft kind, as one group for
    /// the hard kind.
    pub fn apply(&self, v: DVectorView<'_, f64>) -> DVector<f64> {
        match self.kind {
            ThresholdKind::SoftElementwise => v.map(|x| shrink(x, self.level)),
            ThresholdKind::HardColumn => keep_or_kill(v, self.level),
        }
    }
}

fn check_level(level: f64) -> Result<()> {
    if level >= 0.0 && level.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "threshold level must be finite and >= 0, got {level}"
        )))
    }
}

/// `sign(x)·max(|x| − level, 0)`.
pub fn soft_threshold(x: f64, level: f64) -> Result<f64> {
    check_level(level)?;
    Ok(shrink(x, level))
}

/// Returns `v` unchanged when `‖v‖₂ > level`, the zero vector otherwise.
/// A tie `‖v‖₂ = level` is zeroed.
pub fn hard_threshold_column(v: DVectorView<'_, f64>, level: f64) -> Result<DVector<f64>> {
    check_level(level)?;
    Ok(keep_or_kill(v, level))
}

#[inline]
pub(crate) fn shrink(x: f64, level: f64) -> f64 {
    let mag = x.abs() - level;
    if mag > 0.0 {
        mag.copysign(x)
    } else {
        0.0
    }
}

#[inline]
pub(crate) fn survives(norm: f64, level: f64) -> bool {
    norm > level
}

pub(crate) fn keep_or_kill(v: DVectorView<'_, f64>, level: f64) -> DVector<f64> {
    if survives(v.norm(), level) {
        v.into_owned()
    } else {
        DVector::zeros(v.len())
    }
}

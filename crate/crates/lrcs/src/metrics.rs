//! Recovery-quality metrics.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{orthonormality_error, spectral_norm};

/// Inputs to [`sd2`] must be orthonormal to this tolerance; beyond it the
/// "distance between subspaces" reading of the number breaks down.
pub const ORTHONORMALITY_TOL: f64 = 1e-6;

/// Final recovery errors of a run against a known ground truth.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ErrorSummary {
    /// Subspace distance between the recovered and true bases.
    pub sd2: f64,
    /// `‖X̂ - X*‖_F / ‖X*‖₂` (denominator is the spectral norm).
    pub frob_rel: f64,
    /// `‖X̂ - X*‖_F`.
    pub frob_abs: f64,
}

/// Frobenius recovery error, absolute and relative to `‖X*‖₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrobError {
    pub abs: f64,
    pub rel: f64,
}

/// Subspace distance `‖(I - U₁U₁ᵀ)U₂‖₂`: the largest sine of a principal
/// angle between the column spans. Symmetric when both bases have the same
/// number of columns; always in `[0, 1]` up to roundoff.
///
/// Both inputs must have orthonormal columns (checked to
/// [`ORTHONORMALITY_TOL`]) and matching row dimension.
pub fn sd2(u1: &DMatrix<f64>, u2: &DMatrix<f64>) -> Result<f64> {
    if u1.nrows() != u2.nrows() {
        return Err(Error::invalid(format!(
            "subspace distance needs matching ambient dimension, got {} and {}",
            u1.nrows(),
            u2.nrows()
        )));
    }
    for (name, u) in [("first", u1), ("second", u2)] {
        let err = orthonormality_error(u);
        if !(err <= ORTHONORMALITY_TOL) {
            return Err(Error::invalid(format!(
                "{name} basis is not orthonormal (max |UᵀU - I| = {err:.3e})"
            )));
        }
    }
    // (I - U₁U₁ᵀ)U₂ = U₂ - U₁(U₁ᵀU₂); n x r₂, so the SVD stays cheap.
    let overlap = u1.transpose() * u2;
    let residual = u2 - u1 * overlap;
    Ok(spectral_norm(&residual))
}

/// Frobenius error of `x_hat` against `x_star`, relative part normalized by
/// the spectral norm of `x_star`.
pub fn frob_error(x_hat: &DMatrix<f64>, x_star: &DMatrix<f64>) -> Result<FrobError> {
    if x_hat.shape() != x_star.shape() {
        return Err(Error::invalid(format!(
            "shape mismatch: {:?} vs {:?}",
            x_hat.shape(),
            x_star.shape()
        )));
    }
    let abs = (x_hat - x_star).norm();
    let denom = spectral_norm(x_star);
    if denom == 0.0 {
        return Err(Error::invalid(
            "relative error undefined for a zero reference matrix".to_string(),
        ));
    }
    Ok(FrobError {
        abs,
        rel: abs / denom,
    })
}

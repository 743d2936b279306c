//! Alternating-minimization baseline.
//!
//! Same initialization and coefficient update as the gradient solver, but
//! the basis update solves the full least-squares problem
//! `min_U Σ_k ‖y_k - A_k U b_k‖²` exactly instead of taking one gradient
//! step. With `vec(U)` stacked column-major the normal equations read
//!
//! ```text
//! [ Σ_k (b_k b_kᵀ) ⊗ (A_kᵀ A_k) ] vec(U) = vec( Σ_k A_kᵀ y_k b_kᵀ ),
//! ```
//!
//! an `nr x nr` symmetric positive system. Each iteration is therefore far
//! more expensive than a gradient step (it assembles and factors the
//! Kronecker-sum matrix), which is exactly the trade-off the benchmark and
//! the solver-comparison tests quantify.
//!
//! Normal equations square the conditioning of the underlying design, so
//! the solve refuses to proceed when the assembled system is singular or
//! has a condition number above [`CONDITION_LIMIT`].

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gdmin::{run_with_step, BasisStep, BasisStepOutcome, SolverConfig, SolverState};
use crate::linalg::thin_qr_positive;
use crate::model::{InstanceView, ProblemInstance};
use crate::par::map_indexed;
use crate::report::{RunReport, SolverKind};

/// Largest acceptable condition number of the assembled normal system.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Columns accumulated per parallel task. Fixed (not derived from thread
/// count) so the summation order, and hence every bit of the result, is
/// schedule independent.
const CHUNK: usize = 8;

/// Exact basis update: solve the full least-squares problem for `U` at
/// fixed coefficients and re-orthonormalize by thin QR.
///
/// Requires `m q >= n r` (the system is otherwise underdetermined) and a
/// well-conditioned normal system; rank-deficient coefficients (e.g. any
/// `B` of rank `< r`) make it singular.
pub fn update_u_full_ls(b: &DMatrix<f64>, view: &InstanceView<'_>) -> Result<DMatrix<f64>> {
    let (n, q, m) = (view.n(), view.q(), view.m());
    let r = b.nrows();
    if r == 0 || b.ncols() != q {
        return Err(Error::invalid(format!(
            "coefficients are {}x{}, expected r x {q} with r >= 1",
            b.nrows(),
            b.ncols()
        )));
    }
    let nr = n * r;
    if m * q < nr {
        return Err(Error::config(format!(
            "full basis solve needs m*q >= n*r, got {m}*{q} < {n}*{r}"
        )));
    }

    // Assemble M = Σ (b_k b_kᵀ) ⊗ (A_kᵀ A_k) and R = Σ A_kᵀ y_k b_kᵀ in
    // fixed chunks, folded in ascending order.
    let chunks = q.div_ceil(CHUNK);
    let partials: Vec<(DMatrix<f64>, DMatrix<f64>)> = map_indexed(chunks, |c| {
        let mut normal = DMatrix::zeros(nr, nr);
        let mut rhs = DMatrix::zeros(n, r);
        for k in c * CHUNK..((c + 1) * CHUNK).min(q) {
            let a = view.a(k);
            let bk = b.column(k);
            let gram = a.tr_mul(&a);
            for cc in 0..r {
                for aa in 0..r {
                    let w = bk[aa] * bk[cc];
                    if w == 0.0 {
                        continue;
                    }
                    let (row0, col0) = (aa * n, cc * n);
                    for jj in 0..n {
                        for ii in 0..n {
                            normal[(row0 + ii, col0 + jj)] += w * gram[(ii, jj)];
                        }
                    }
                }
            }
            let aty = a.tr_mul(&view.y(k));
            rhs += aty * bk.transpose();
        }
        (normal, rhs)
    });
    let mut normal = DMatrix::zeros(nr, nr);
    let mut rhs = DMatrix::zeros(n, r);
    for (nm, rh) in partials {
        normal += nm;
        rhs += rh;
    }
    // Exact symmetry (the accumulation is symmetric only up to rounding).
    normal = (&normal + normal.transpose()) * 0.5;

    let eigen = normal.symmetric_eigen();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &l in eigen.eigenvalues.iter() {
        lo = lo.min(l);
        hi = hi.max(l);
    }
    if !(lo > 0.0) {
        return Err(Error::numerical(format!(
            "normal system for the {nr}-dimensional basis is singular \
             (smallest eigenvalue {lo:.3e}); the coefficient matrix is rank deficient"
        )));
    }
    let cond = hi / lo;
    if cond > CONDITION_LIMIT {
        return Err(Error::numerical(format!(
            "normal system for the {nr}-dimensional basis is too ill-conditioned \
             (condition number {cond:.3e} > {CONDITION_LIMIT:.0e})"
        )));
    }

    let rhs_vec = DVector::from_column_slice(rhs.as_slice());
    let mut z = eigen.eigenvectors.tr_mul(&rhs_vec);
    for i in 0..nr {
        z[i] /= eigen.eigenvalues[i];
    }
    let solution = &eigen.eigenvectors * z;
    let u_raw = DMatrix::from_column_slice(n, r, solution.as_slice());
    thin_qr_positive(&u_raw)
}

struct FullLsStep;

impl BasisStep for FullLsStep {
    fn step(
        &mut self,
        _u: &DMatrix<f64>,
        b: &DMatrix<f64>,
        view: &InstanceView<'_>,
    ) -> Result<BasisStepOutcome> {
        Ok(BasisStepOutcome {
            u_next: update_u_full_ls(b, view)?,
            grad_norm: 0.0,
            eta_used: 0.0,
        })
    }
}

/// Run the baseline: identical initialization, stopping rule, and reporting
/// as [`crate::gdmin::run`], with the exact basis solve in place of the
/// gradient step. The step-size fields of the config are ignored.
pub fn run_altmin(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<(SolverState, RunReport)> {
    run_with_step(inst, cfg, SolverKind::AltMin, |_| Box::new(FullLsStep))
}

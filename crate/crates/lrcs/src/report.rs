//! Run reporting types shared by both solvers.

use serde::Serialize;
use std::fmt;
use std::str::FromStr;

use crate::metrics::ErrorSummary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    AltGdMin,
    AltMin,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::AltGdMin => "altgdmin",
            SolverKind::AltMin => "altmin",
        })
    }
}

impl FromStr for SolverKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "altgdmin" => Ok(SolverKind::AltGdMin),
            "altmin" => Ok(SolverKind::AltMin),
            other => Err(crate::Error::config(format!(
                "unknown solver '{other}' (expected altgdmin or altmin)"
            ))),
        }
    }
}

/// Static facts about the instance a run operated on. The truth-derived
/// fields are absent for instances loaded without a ground truth.
#[derive(Debug, Clone, Serialize)]
pub struct InstanceMeta {
    pub n: usize,
    pub q: usize,
    pub r: usize,
    pub m: usize,
    pub sigma_v: f64,
    pub seed: u64,
    pub kappa: Option<f64>,
    pub mu: Option<f64>,
    pub nsr: Option<f64>,
}

/// One solver iteration. Timing fields are `0.0` when timing is disabled
/// (reports must be byte-reproducible in that mode); truth-dependent fields
/// are `None` when no ground truth is attached.
#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    /// 1-based iteration number.
    pub iter: usize,
    /// Subspace distance of the updated basis to the true one.
    pub sd2_to_truth: Option<f64>,
    /// `‖U_{t-1} B_t - X*‖_F / ‖X*‖₂`, the estimate held mid-iteration.
    pub frob_rel_err: Option<f64>,
    /// Frobenius norm of the basis gradient (zero for the baseline solver,
    /// which does not form a gradient).
    pub grad_norm: f64,
    /// Step size applied this iteration (zero for the baseline solver).
    pub eta_used: f64,
    /// Full iteration wall time.
    pub wall_ms: f64,
    /// Portion spent updating the basis.
    pub u_update_ms: f64,
}

/// Complete record of one solver run.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub solver: SolverKind,
    pub meta: InstanceMeta,
    /// Truncation threshold used by the initialization.
    pub alpha: f64,
    pub truncation_fraction: f64,
    pub degenerate_init: bool,
    /// Subspace distance of the starting basis (needs a truth).
    pub init_sd2: Option<f64>,
    pub iterations: usize,
    /// True when the stopping rule fired before the iteration cap.
    pub converged_early: bool,
    /// Times the divergence guard halved the step size.
    pub eta_halvings: usize,
    pub history: Vec<IterationRecord>,
    /// Final errors against the truth (absent without one).
    pub final_errors: Option<ErrorSummary>,
    pub init_ms: f64,
    pub total_ms: f64,
}

//! Main solver: alternating exact coefficient solves with a projected
//! gradient step on the shared basis.
//!
//! Each iteration, given the current orthonormal basis `U`:
//!
//! 1. every column solves its own small least-squares problem
//!    `b_k = argmin ‖y_k - (A_k U) b‖` (QR-based, never normal equations);
//! 2. the basis takes one gradient step on
//!    `f(U, B) = Σ_k ‖y_k - A_k U b_k‖²` with step `η = c / σ̂_max²`
//!    scaled by `1/m`, where `σ̂_max` estimates the top singular value of
//!    the target (see [`SigmaMaxMode`]);
//! 3. the stepped basis is re-orthonormalized by thin QR.
//!
//! The coefficient solve is embarrassingly parallel across columns and the
//! gradient is a sum of per-column contributions; both go through
//! [`crate::par`], and the gradient contributions are reduced in ascending
//! column order, so results are independent of thread count.
//!
//! An optional disjoint-sample mode splits the measurement rows into
//! `2 max_iters + 1` equal windows: one for initialization, then a fresh
//! window for every coefficient solve and every gradient. That is the
//! variant with clean theoretical guarantees (each step sees independent
//! data); the default reuses all rows everywhere, which is what one does in
//! practice.

use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DMatrix, DMatrixView, DVector, DVectorView};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::init::{spectral_init, InitConfig, InitResult};
use crate::linalg::{solve_upper_triangular, spectral_norm, thin_qr_positive};
use crate::metrics::{frob_error, sd2, ErrorSummary};
use crate::model::{incoherence, nsr, InstanceView, ProblemInstance};
use crate::par::{map_indexed, map_indexed_seq, try_map_indexed, try_map_indexed_seq};
use crate::report::{InstanceMeta, IterationRecord, RunReport, SolverKind};

/// How measurement rows are allocated across iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitMode {
    /// Every step uses all rows (default; standard practice).
    None,
    /// Disjoint windows: `m` must be divisible by `2 max_iters + 1`; window
    /// 0 initializes, window `t` solves the coefficients of iteration `t`,
    /// window `max_iters + t` forms its gradient.
    Paper,
}

impl FromStr for SplitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(SplitMode::None),
            "paper" => Ok(SplitMode::Paper),
            other => Err(Error::config(format!(
                "unknown split mode '{other}' (expected none or paper)"
            ))),
        }
    }
}

/// Source of the top-singular-value estimate in the step size
/// `η = eta_scale / σ̂_max²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaMaxMode {
    /// Top singular value of the spectral initialization estimate, fixed for
    /// the whole run.
    FromInit,
    /// Top singular value of the current coefficient matrix, refreshed every
    /// iteration (default). Keeps the whole run invariant under rescaling of
    /// the observations.
    FromB,
    /// True `σ_max` of the ground truth (requires one).
    Oracle,
}

impl FromStr for SigmaMaxMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "from-init" => Ok(SigmaMaxMode::FromInit),
            "from-b" => Ok(SigmaMaxMode::FromB),
            "oracle" => Ok(SigmaMaxMode::Oracle),
            other => Err(Error::config(format!(
                "unknown sigma-max mode '{other}' (expected from-init, from-b, or oracle)"
            ))),
        }
    }
}

/// Solver configuration (shared by the baseline solver, which ignores the
/// step-size fields).
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Target rank.
    pub r: usize,
    /// Step scale `c` in `η = c / σ̂_max²`; must lie in `(0, 0.5]`.
    pub eta_scale: f64,
    /// Iteration cap.
    pub max_iters: usize,
    /// Stopping tolerance: with a truth attached, relative change of the
    /// subspace distance; without one, the projector change
    /// `‖U₊U₊ᵀ - UUᵀ‖₂` between consecutive iterates.
    pub tol: f64,
    pub split: SplitMode,
    pub sigma_max_mode: SigmaMaxMode,
    /// After five consecutive iterations in which the monitored error
    /// (subspace distance, or the objective without a truth) increased,
    /// halve the step size and keep going. Disable to reproduce the plain
    /// fixed-step iteration.
    pub divergence_guard: bool,
    /// Truncation parameters for the initialization; defaults to values
    /// measured from the ground truth, which therefore must be present when
    /// this is `None`.
    pub init: Option<InitConfig>,
    /// Record wall-clock times. Disable for byte-reproducible reports.
    pub record_timing: bool,
}

impl SolverConfig {
    pub fn new(r: usize) -> Self {
        SolverConfig {
            r,
            eta_scale: 0.5,
            max_iters: 100,
            tol: 1e-12,
            split: SplitMode::None,
            sigma_max_mode: SigmaMaxMode::FromB,
            divergence_guard: true,
            init: None,
            record_timing: true,
        }
    }

    pub fn with_eta_scale(mut self, c: f64) -> Self {
        self.eta_scale = c;
        self
    }

    pub fn with_max_iters(mut self, t: usize) -> Self {
        self.max_iters = t;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_split(mut self, split: SplitMode) -> Self {
        self.split = split;
        self
    }

    pub fn with_sigma_max_mode(mut self, mode: SigmaMaxMode) -> Self {
        self.sigma_max_mode = mode;
        self
    }

    pub fn with_divergence_guard(mut self, on: bool) -> Self {
        self.divergence_guard = on;
        self
    }

    pub fn with_init(mut self, init: InitConfig) -> Self {
        self.init = Some(init);
        self
    }

    pub fn with_record_timing(mut self, on: bool) -> Self {
        self.record_timing = on;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.r == 0 {
            return Err(Error::config("rank must be at least 1".to_string()));
        }
        if !(self.eta_scale > 0.0 && self.eta_scale <= 0.5) {
            return Err(Error::config(format!(
                "eta_scale must lie in (0, 0.5], got {}",
                self.eta_scale
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::config("max_iters must be at least 1".to_string()));
        }
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(Error::config(format!(
                "tol must be finite and positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

/// Solver iterate: orthonormal basis, coefficients refit to it, and the
/// per-iteration history.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub u: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub iters: usize,
    pub history: Vec<IterationRecord>,
}

/// Least-squares coefficients of one column against the sketched basis
/// `A_k U`, via thin QR. Returns `(b_k, ‖y_k - A_k U b_k‖²)`.
pub fn column_coefficients(
    u: &DMatrix<f64>,
    a: DMatrixView<'_, f64>,
    y: DVectorView<'_, f64>,
) -> Result<(DVector<f64>, f64)> {
    let r = u.ncols();
    let design = a * u;
    if design.nrows() < r {
        return Err(Error::numerical(format!(
            "least squares underdetermined: {} rows for {r} unknowns",
            design.nrows()
        )));
    }
    let pivot_tol = design.norm() * f64::EPSILON * r as f64;
    let qr = design.clone().qr();
    let rr = qr.r();
    for j in 0..r {
        if !(rr[(j, j)].abs() > pivot_tol) {
            return Err(Error::numerical(format!(
                "rank-deficient least squares (|R[{j},{j}]| = {:.3e} <= {pivot_tol:.3e})",
                rr[(j, j)].abs()
            )));
        }
    }
    let rhs = qr.q().tr_mul(&y);
    let b = solve_upper_triangular(&rr, &rhs)
        .ok_or_else(|| Error::numerical("zero pivot in triangular solve".to_string()))?;
    let residual = &design * &b - y;
    Ok((b, residual.norm_squared()))
}

/// Coefficient update: solve each column's least squares against `A_k U`.
pub fn update_b(u: &DMatrix<f64>, view: &InstanceView<'_>) -> Result<DMatrix<f64>> {
    update_b_with_objective(u, view).map(|(b, _)| b)
}

/// [`update_b`] plus the objective value `Σ_k ‖y_k - A_k U b_k‖²`.
pub fn update_b_with_objective(
    u: &DMatrix<f64>,
    view: &InstanceView<'_>,
) -> Result<(DMatrix<f64>, f64)> {
    check_basis_shape(u, view)?;
    let cols = try_map_indexed(view.q(), |k| solve_column(u, view, k))?;
    Ok(collect_coefficients(view, cols))
}

/// Sequential twin of [`update_b_with_objective`]; bitwise-identical output.
pub fn update_b_with_objective_seq(
    u: &DMatrix<f64>,
    view: &InstanceView<'_>,
) -> Result<(DMatrix<f64>, f64)> {
    check_basis_shape(u, view)?;
    let cols = try_map_indexed_seq(view.q(), |k| solve_column(u, view, k))?;
    Ok(collect_coefficients(view, cols))
}

fn solve_column(
    u: &DMatrix<f64>,
    view: &InstanceView<'_>,
    k: usize,
) -> Result<(DVector<f64>, f64)> {
    column_coefficients(u, view.a(k), view.y(k))
        .map_err(|_| Error::RankDeficientColumn { k, iter: None })
}

fn collect_coefficients(
    view: &InstanceView<'_>,
    cols: Vec<(DVector<f64>, f64)>,
) -> (DMatrix<f64>, f64) {
    let r = cols[0].0.len();
    let mut b = DMatrix::zeros(r, view.q());
    let mut objective = 0.0;
    for (k, (bk, res_sq)) in cols.into_iter().enumerate() {
        b.set_column(k, &bk);
        objective += res_sq;
    }
    (b, objective)
}

fn check_basis_shape(u: &DMatrix<f64>, view: &InstanceView<'_>) -> Result<()> {
    if u.nrows() != view.n() || u.ncols() == 0 {
        return Err(Error::invalid(format!(
            "basis is {}x{}, expected {} rows and at least one column",
            u.nrows(),
            u.ncols(),
            view.n()
        )));
    }
    Ok(())
}

/// Gradient of `f(U, B) = Σ_k ‖y_k - A_k U b_k‖²` with respect to `U` at
/// fixed `B` (up to the conventional factor 2):
/// `Σ_k A_kᵀ (A_k U b_k - y_k) b_kᵀ`.
///
/// Per-column contributions are computed independently and summed in
/// ascending column order, so the result is independent of thread count.
pub fn gradient_u(u: &DMatrix<f64>, b: &DMatrix<f64>, view: &InstanceView<'_>) -> Result<DMatrix<f64>> {
    check_gradient_shapes(u, b, view)?;
    let contributions = map_indexed(view.q(), |k| gradient_column(u, b, view, k));
    Ok(sum_in_order(u.shape(), contributions))
}

/// Sequential twin of [`gradient_u`]; bitwise-identical output.
pub fn gradient_u_seq(
    u: &DMatrix<f64>,
    b: &DMatrix<f64>,
    view: &InstanceView<'_>,
) -> Result<DMatrix<f64>> {
    check_gradient_shapes(u, b, view)?;
    let contributions = map_indexed_seq(view.q(), |k| gradient_column(u, b, view, k));
    Ok(sum_in_order(u.shape(), contributions))
}

fn gradient_column(
    u: &DMatrix<f64>,
    b: &DMatrix<f64>,
    view: &InstanceView<'_>,
    k: usize,
) -> DMatrix<f64> {
    let bk = b.column(k);
    let xk = u * bk;
    let residual = view.a(k) * xk - view.y(k);
    let atr = view.a(k).tr_mul(&residual);
    atr * bk.transpose()
}

fn sum_in_order((rows, cols): (usize, usize), parts: Vec<DMatrix<f64>>) -> DMatrix<f64> {
    let mut total = DMatrix::zeros(rows, cols);
    for p in parts {
        total += p;
    }
    total
}

fn check_gradient_shapes(u: &DMatrix<f64>, b: &DMatrix<f64>, view: &InstanceView<'_>) -> Result<()> {
    if u.nrows() != view.n() || b.nrows() != u.ncols() || b.ncols() != view.q() {
        return Err(Error::invalid(format!(
            "shape mismatch: U is {}x{}, B is {}x{}, instance is n={}, q={}",
            u.nrows(),
            u.ncols(),
            b.nrows(),
            b.ncols(),
            view.n(),
            view.q()
        )));
    }
    Ok(())
}

/// One projected gradient step: `U₊ = qf(U - (η/m) grad)` with the
/// positive-diagonal thin QR. A zero step returns `U` unchanged (bitwise).
pub fn gd_step(u: &DMatrix<f64>, grad: &DMatrix<f64>, eta: f64, m: usize) -> Result<DMatrix<f64>> {
    if grad.shape() != u.shape() {
        return Err(Error::invalid(format!(
            "gradient shape {:?} does not match basis shape {:?}",
            grad.shape(),
            u.shape()
        )));
    }
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::invalid(format!("step size must be finite and >= 0, got {eta}")));
    }
    if m == 0 {
        return Err(Error::invalid("per-step sample count must be positive".to_string()));
    }
    if grad.iter().any(|x| !x.is_finite()) {
        return Err(Error::numerical("gradient has non-finite entries".to_string()));
    }
    let step = u - grad * (eta / m as f64);
    if step == *u {
        return Ok(u.clone());
    }
    thin_qr_positive(&step).map_err(|e| {
        Error::numerical(format!(
            "basis re-orthonormalization failed after a step of norm {:.3e}: {e}",
            (eta / m as f64) * grad.norm()
        ))
    })
}

/// Row-window bookkeeping for the split modes.
pub(crate) struct SplitPlan {
    window: usize,
    max_iters: usize,
    paper: bool,
}

impl SplitPlan {
    pub(crate) fn new(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<Self> {
        match cfg.split {
            SplitMode::None => Ok(SplitPlan {
                window: inst.m(),
                max_iters: cfg.max_iters,
                paper: false,
            }),
            SplitMode::Paper => {
                let sets = 2 * cfg.max_iters + 1;
                if !inst.m().is_multiple_of(sets) {
                    return Err(Error::config(format!(
                        "disjoint splits need m divisible by 2*max_iters + 1 = {sets}, got m = {}",
                        inst.m()
                    )));
                }
                let window = inst.m() / sets;
                if window < cfg.r {
                    return Err(Error::config(format!(
                        "per-split sample count {window} is below the rank {}; \
                         the coefficient solve would be underdetermined",
                        cfg.r
                    )));
                }
                Ok(SplitPlan {
                    window,
                    max_iters: cfg.max_iters,
                    paper: true,
                })
            }
        }
    }

    pub(crate) fn init_view<'a>(&self, inst: &'a ProblemInstance) -> InstanceView<'a> {
        if self.paper {
            inst.row_window(0..self.window).expect("validated window")
        } else {
            inst.full_view()
        }
    }

    /// Rows for the coefficient solve of iteration `t` (1-based).
    pub(crate) fn b_view<'a>(&self, inst: &'a ProblemInstance, t: usize) -> InstanceView<'a> {
        if self.paper {
            debug_assert!((1..=self.max_iters).contains(&t));
            inst.row_window(t * self.window..(t + 1) * self.window)
                .expect("validated window")
        } else {
            inst.full_view()
        }
    }

    /// Rows for the basis update of iteration `t` (1-based).
    pub(crate) fn g_view<'a>(&self, inst: &'a ProblemInstance, t: usize) -> InstanceView<'a> {
        if self.paper {
            let s = self.max_iters + t;
            inst.row_window(s * self.window..(s + 1) * self.window)
                .expect("validated window")
        } else {
            inst.full_view()
        }
    }
}

/// Outcome of one basis update.
pub(crate) struct BasisStepOutcome {
    pub u_next: DMatrix<f64>,
    pub grad_norm: f64,
    pub eta_used: f64,
}

/// Strategy for the per-iteration basis update. Implemented by the gradient
/// step here and by the full least-squares update of the baseline solver.
pub(crate) trait BasisStep {
    fn step(
        &mut self,
        u: &DMatrix<f64>,
        b: &DMatrix<f64>,
        view: &InstanceView<'_>,
    ) -> Result<BasisStepOutcome>;

    /// Called when the monitored error increased five iterations in a row;
    /// return `true` if the strategy adapted (e.g. halved its step).
    fn on_divergence(&mut self) -> bool {
        false
    }
}

struct GradientStep {
    eta_scale: f64,
    shrink: f64,
    mode: SigmaMaxMode,
    sigma_from_init: f64,
    sigma_oracle: Option<f64>,
}

impl BasisStep for GradientStep {
    fn step(
        &mut self,
        u: &DMatrix<f64>,
        b: &DMatrix<f64>,
        view: &InstanceView<'_>,
    ) -> Result<BasisStepOutcome> {
        let grad = gradient_u(u, b, view)?;
        let grad_norm = grad.norm();
        let sigma_hat = match self.mode {
            SigmaMaxMode::FromB => spectral_norm(b),
            SigmaMaxMode::FromInit => self.sigma_from_init,
            SigmaMaxMode::Oracle => self.sigma_oracle.expect("validated before the run"),
        };
        if !(sigma_hat > 0.0) || !sigma_hat.is_finite() {
            return Err(Error::numerical(format!(
                "top-singular-value estimate is {sigma_hat}; cannot form a step size"
            )));
        }
        let eta = self.eta_scale * self.shrink / (sigma_hat * sigma_hat);
        let u_next = gd_step(u, &grad, eta, view.m())?;
        Ok(BasisStepOutcome {
            u_next,
            grad_norm,
            eta_used: eta,
        })
    }

    fn on_divergence(&mut self) -> bool {
        self.shrink *= 0.5;
        true
    }
}

/// Run the gradient solver: truncated spectral initialization, then
/// `max_iters` iterations of coefficient solve + projected gradient step.
pub fn run(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<(SolverState, RunReport)> {
    if cfg.sigma_max_mode == SigmaMaxMode::Oracle && inst.truth.is_none() {
        return Err(Error::config(
            "oracle step-size mode requires an instance with ground truth".to_string(),
        ));
    }
    let sigma_oracle = inst.truth.as_ref().map(|t| t.sigma_max());
    run_with_step(inst, cfg, SolverKind::AltGdMin, |init| {
        Box::new(GradientStep {
            eta_scale: cfg.eta_scale,
            shrink: 1.0,
            mode: cfg.sigma_max_mode,
            sigma_from_init: init.x0_singular_values[0],
            sigma_oracle,
        })
    })
}

fn ms_since(t0: Instant, enabled: bool) -> f64 {
    if enabled {
        t0.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    }
}

fn abort(e: Error, iter: usize, history_len: usize) -> Error {
    let source = match e {
        Error::RankDeficientColumn { k, iter: None } => Error::RankDeficientColumn {
            k,
            iter: Some(iter),
        },
        other => other,
    };
    Error::SolverAborted {
        iter,
        history_len,
        source: Box::new(source),
    }
}

/// Shared driver: initialization, iteration loop, stopping, divergence
/// guard, history recording, and the final coefficient refit.
pub(crate) fn run_with_step(
    inst: &ProblemInstance,
    cfg: &SolverConfig,
    kind: SolverKind,
    make_step: impl FnOnce(&InitResult) -> Box<dyn BasisStep>,
) -> Result<(SolverState, RunReport)> {
    cfg.validate()?;
    let (n, q) = (inst.n(), inst.q());
    if cfg.r > n.min(q) {
        return Err(Error::config(format!(
            "rank {} out of range for a {n}x{q} target",
            cfg.r
        )));
    }
    let plan = SplitPlan::new(inst, cfg)?;
    let timing = cfg.record_timing;
    let truth = inst.truth.as_ref();
    let init_cfg = match (cfg.init, truth) {
        (Some(c), _) => c,
        (None, Some(t)) => InitConfig::from_truth(t),
        (None, None) => {
            return Err(Error::config(
                "initialization parameters (kappa, mu) are required when the instance \
                 carries no ground truth"
                    .to_string(),
            ))
        }
    };

    let total_t0 = Instant::now();
    let init_t0 = Instant::now();
    let init = spectral_init(&plan.init_view(inst), cfg.r, &init_cfg)?;
    let init_ms = ms_since(init_t0, timing);

    let mut stepper = make_step(&init);
    let mut u = init.u0.clone();
    let init_sd2 = truth.map(|t| sd2(&t.u_star, &u)).transpose()?;
    let x_star = truth.map(|t| t.x_star());

    let mut history: Vec<IterationRecord> = Vec::with_capacity(cfg.max_iters);
    let mut prev_monitor = f64::INFINITY;
    let mut worse_streak = 0usize;
    let mut eta_halvings = 0usize;
    let mut prev_sd2 = init_sd2;
    let mut converged_early = false;
    let mut iters = 0usize;

    for t in 1..=cfg.max_iters {
        let iter_t0 = Instant::now();
        let (b, objective) = update_b_with_objective(&u, &plan.b_view(inst, t))
            .map_err(|e| abort(e, t, history.len()))?;
        let frob_now = match &x_star {
            Some(xs) => Some(
                frob_error(&(&u * &b), xs)
                    .map_err(|e| abort(e, t, history.len()))?
                    .rel,
            ),
            None => None,
        };

        let u_t0 = Instant::now();
        let out = stepper
            .step(&u, &b, &plan.g_view(inst, t))
            .map_err(|e| abort(e, t, history.len()))?;
        let u_ms = ms_since(u_t0, timing);

        let sd2_now = truth
            .map(|tr| sd2(&tr.u_star, &out.u_next))
            .transpose()
            .map_err(|e| abort(e, t, history.len()))?;
        let projector_change =
            sd2(&u, &out.u_next).map_err(|e| abort(e, t, history.len()))?;

        let monitor = sd2_now.unwrap_or(objective);
        if cfg.divergence_guard {
            if monitor > prev_monitor {
                worse_streak += 1;
            } else {
                worse_streak = 0;
            }
            if worse_streak >= 5 {
                if stepper.on_divergence() {
                    eta_halvings += 1;
                }
                worse_streak = 0;
            }
        }
        prev_monitor = monitor;

        history.push(IterationRecord {
            iter: t,
            sd2_to_truth: sd2_now,
            frob_rel_err: frob_now,
            grad_norm: out.grad_norm,
            eta_used: out.eta_used,
            wall_ms: ms_since(iter_t0, timing),
            u_update_ms: u_ms,
        });
        u = out.u_next;
        iters = t;

        let stop = match (sd2_now, prev_sd2) {
            (Some(now), Some(prev)) => {
                (now - prev).abs() / now.max(f64::MIN_POSITIVE) < cfg.tol
            }
            _ => projector_change < cfg.tol,
        };
        prev_sd2 = sd2_now;
        if stop {
            converged_early = true;
            break;
        }
    }

    // Refit the coefficients to the final basis so the returned pair is
    // consistent; reuse the last coefficient window in split mode.
    let b_final = update_b(&u, &plan.b_view(inst, iters))
        .map_err(|e| abort(e, iters, history.len()))?;

    let final_errors = match truth {
        Some(t) => {
            let f = frob_error(&(&u * &b_final), &t.x_star())?;
            Some(ErrorSummary {
                sd2: sd2(&t.u_star, &u)?,
                frob_rel: f.rel,
                frob_abs: f.abs,
            })
        }
        None => None,
    };

    let meta = InstanceMeta {
        n,
        q,
        r: cfg.r,
        m: inst.m(),
        sigma_v: inst.sigma_v,
        seed: inst.seed,
        kappa: truth.map(|t| t.kappa()),
        mu: truth.map(|t| incoherence(t).mu),
        nsr: truth.map(|t| nsr(t, inst.sigma_v)),
    };
    let report = RunReport {
        solver: kind,
        meta,
        alpha: init.alpha,
        truncation_fraction: init.truncation_fraction,
        degenerate_init: init.degenerate,
        init_sd2,
        iterations: iters,
        converged_early,
        eta_halvings,
        history: history.clone(),
        final_errors,
        init_ms,
        total_ms: ms_since(total_t0, timing),
    };
    Ok((
        SolverState {
            u,
            b: b_final,
            iters,
            history,
        },
        report,
    ))
}

//! Experiment harness: parameter grids, deterministic per-trial seeds, and
//! CSV reporting.
//!
//! A grid is the cross product of the `n`, `q`, `r`, `m`, and `sigma_v`
//! lists; every cell runs `trials` independent instances. Each trial's seed
//! is mixed from the base seed and the cell parameters (not from the cell's
//! position), so extending a grid never reshuffles the instances of
//! existing cells.
//!
//! Output files (headers pinned as constants):
//!
//! * `results.csv`: one row per trial with final errors and timings;
//! * `history.csv`: one row per iteration of every successful trial,
//!   keyed by the trial seed (`run_id` joins against `results.csv`);
//! * `summary.csv`: one row per cell with success rate and quantiles.
//!
//! Solver failures inside a cell are reported as rows with `status != ok`;
//! only configuration and I/O problems abort the whole experiment. With
//! `timings = off` all wall-clock fields are written as zero and reruns of
//! the same spec produce byte-identical files.
//!
//! Config files are flat `key = value` text: `#` starts a comment, lists
//! are comma separated, later assignments win. Keys: `n`, `q`, `r`, `m`,
//! `sigma_v` (lists); `kappa`, `trials`, `solver`, `eta_scale`,
//! `max_iters`, `tol`, `split`, `sigma_max_mode`, `divergence_guard`,
//! `seed`, `success_tol`, `timings`, `mem_budget_mb`, `out`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::altmin::run_altmin;
use crate::error::{Error, Result};
use crate::gdmin::{run, SigmaMaxMode, SolverConfig, SplitMode};
use crate::model::{generate_ground_truth, measure};
use crate::par::map_indexed;
use crate::report::{RunReport, SolverKind};
use crate::rng::{f64_bits, mix, Tag};

pub const RESULTS_FILE: &str = "results.csv";
pub const HISTORY_FILE: &str = "history.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

pub const RESULTS_HEADER: &str =
    "n,q,r,m,sigma_v,kappa,mu,nsr,trial,seed,solver,status,iters,final_sd2,final_frob_rel,alpha,trunc_frac,init_ms,total_ms";
pub const HISTORY_HEADER: &str = "run_id,iter,sd2,frob_rel,grad_norm,eta,wall_ms";
pub const SUMMARY_HEADER: &str =
    "n,q,r,m,sigma_v,trials,ok,success_rate,sd2_p25,sd2_p50,sd2_p75,frob_rel_p50,iters_p50,total_ms_p50";

/// Parameter lists whose cross product forms the experiment cells.
#[derive(Debug, Clone, Serialize)]
pub struct GridSpec {
    pub n: Vec<usize>,
    pub q: Vec<usize>,
    pub r: Vec<usize>,
    pub m: Vec<usize>,
    pub sigma_v: Vec<f64>,
}

/// One cell of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub n: usize,
    pub q: usize,
    pub r: usize,
    pub m: usize,
    pub sigma_v: f64,
}

/// Full experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub grid: GridSpec,
    /// Condition number of every generated truth.
    pub kappa: f64,
    pub trials: usize,
    pub solver: SolverKind,
    pub eta_scale: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub split: SplitMode,
    pub sigma_max_mode: SigmaMaxMode,
    pub divergence_guard: bool,
    pub base_seed: u64,
    /// A trial counts as a success when its final subspace distance is at
    /// or below this value.
    pub success_tol: f64,
    /// Record wall-clock times; disable for byte-reproducible output.
    pub record_timing: bool,
    /// Upper bound on the estimated working set of a single trial.
    pub mem_budget_bytes: u64,
    pub out_dir: PathBuf,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            grid: GridSpec {
                n: vec![100],
                q: vec![100],
                r: vec![2],
                m: vec![40],
                sigma_v: vec![0.0],
            },
            kappa: 1.5,
            trials: 10,
            solver: SolverKind::AltGdMin,
            eta_scale: 0.5,
            max_iters: 150,
            tol: 1e-12,
            split: SplitMode::None,
            sigma_max_mode: SigmaMaxMode::FromB,
            divergence_guard: true,
            base_seed: 1,
            success_tol: 1e-6,
            record_timing: true,
            mem_budget_bytes: 2 << 30, // 2 GiB
            out_dir: PathBuf::from("lrcs-out"),
        }
    }
}

impl ExperimentSpec {
    /// Apply one `key = value` assignment (config-file grammar).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "n" => self.grid.n = parse_list(value, key)?,
            "q" => self.grid.q = parse_list(value, key)?,
            "r" => self.grid.r = parse_list(value, key)?,
            "m" => self.grid.m = parse_list(value, key)?,
            "sigma_v" => self.grid.sigma_v = parse_list(value, key)?,
            "kappa" => self.kappa = parse_one(value, key)?,
            "trials" => self.trials = parse_one(value, key)?,
            "solver" => self.solver = value.parse()?,
            "eta_scale" => self.eta_scale = parse_one(value, key)?,
            "max_iters" => self.max_iters = parse_one(value, key)?,
            "tol" => self.tol = parse_one(value, key)?,
            "split" => self.split = value.parse()?,
            "sigma_max_mode" => self.sigma_max_mode = value.parse()?,
            "divergence_guard" => self.divergence_guard = parse_switch(value, key)?,
            "seed" => self.base_seed = parse_one(value, key)?,
            "success_tol" => self.success_tol = parse_one(value, key)?,
            "timings" => self.record_timing = parse_switch(value, key)?,
            "mem_budget_mb" => {
                let mb: u64 = parse_one(value, key)?;
                self.mem_budget_bytes = mb << 20;
            }
            "out" => self.out_dir = PathBuf::from(value),
            other => {
                return Err(Error::config(format!("unknown key '{other}'")));
            }
        }
        Ok(())
    }

    /// Cells in deterministic nested order (n, q, r, m, sigma_v).
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &n in &self.grid.n {
            for &q in &self.grid.q {
                for &r in &self.grid.r {
                    for &m in &self.grid.m {
                        for &sigma_v in &self.grid.sigma_v {
                            out.push(Cell { n, q, r, m, sigma_v });
                        }
                    }
                }
            }
        }
        out
    }

    /// Seed of a given trial; depends on the cell parameters and the base
    /// seed only, never on grid layout.
    pub fn trial_seed(&self, cell: &Cell, trial: usize) -> u64 {
        mix(&[
            self.base_seed,
            Tag::Trial as u64,
            cell.n as u64,
            cell.q as u64,
            cell.r as u64,
            cell.m as u64,
            f64_bits(cell.sigma_v),
            trial as u64,
        ])
    }

    fn solver_config(&self, cell: &Cell) -> SolverConfig {
        let mut cfg = SolverConfig::new(cell.r)
            .with_eta_scale(self.eta_scale)
            .with_max_iters(self.max_iters)
            .with_tol(self.tol)
            .with_split(self.split)
            .with_sigma_max_mode(self.sigma_max_mode)
            .with_divergence_guard(self.divergence_guard);
        cfg.record_timing = self.record_timing;
        cfg
    }

    fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if g.n.is_empty() || g.q.is_empty() || g.r.is_empty() || g.m.is_empty() || g.sigma_v.is_empty()
        {
            return Err(Error::config("every grid axis needs at least one value".to_string()));
        }
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1".to_string()));
        }
        if !(self.kappa >= 1.0) || !self.kappa.is_finite() {
            return Err(Error::config(format!(
                "kappa must be finite and >= 1, got {}",
                self.kappa
            )));
        }
        if !(self.success_tol > 0.0) {
            return Err(Error::config(format!(
                "success_tol must be positive, got {}",
                self.success_tol
            )));
        }
        for cell in self.cells() {
            if cell.r == 0 || cell.r > cell.n.min(cell.q) {
                return Err(Error::config(format!(
                    "cell {cell:?}: rank out of range for the matrix size"
                )));
            }
            if cell.r == 1 && self.kappa != 1.0 {
                return Err(Error::config(
                    "rank-1 cells require kappa = 1".to_string(),
                ));
            }
            if cell.m == 0 {
                return Err(Error::config(format!("cell {cell:?}: m must be positive")));
            }
            if !(cell.sigma_v >= 0.0) || !cell.sigma_v.is_finite() {
                return Err(Error::config(format!(
                    "cell {cell:?}: sigma_v must be finite and >= 0"
                )));
            }
            let estimate = estimated_bytes(&cell, self.solver);
            if estimate > self.mem_budget_bytes {
                return Err(Error::config(format!(
                    "cell {cell:?} needs an estimated {estimate} bytes per trial, \
                     above the budget of {} (raise mem_budget_mb or shrink the cell)",
                    self.mem_budget_bytes
                )));
            }
        }
        Ok(())
    }
}

/// Rough per-trial working set: sketches and observations dominate, plus a
/// few dense n x q buffers, plus the normal system for the baseline solver.
fn estimated_bytes(cell: &Cell, solver: SolverKind) -> u64 {
    let (n, q, m, r) = (cell.n as u64, cell.q as u64, cell.m as u64, cell.r as u64);
    let instance = q * (m * n + m) * 8;
    let dense = 4 * n * q * 8;
    let solver_extra = match solver {
        SolverKind::AltMin => 3 * (n * r) * (n * r) * 8,
        SolverKind::AltGdMin => q * n * r * 8,
    };
    instance + dense + solver_extra
}

fn parse_list<T: std::str::FromStr>(value: &str, key: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|item| {
            item.trim()
                .parse::<T>()
                .map_err(|_| Error::config(format!("key '{key}': cannot parse '{}'", item.trim())))
        })
        .collect()
}

fn parse_one<T: std::str::FromStr>(value: &str, key: &str) -> Result<T> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| Error::config(format!("key '{key}': cannot parse '{}'", value.trim())))
}

fn parse_switch(value: &str, key: &str) -> Result<bool> {
    match value {
        "on" | "true" => Ok(true),
        "off" | "false" => Ok(false),
        other => Err(Error::config(format!(
            "key '{key}': expected on/off, got '{other}'"
        ))),
    }
}

/// Parse a flat `key = value` config file.
pub fn parse_config(text: &str) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::config(format!(
                "line {}: expected 'key = value', got '{line}'",
                idx + 1
            )));
        };
        spec.set(key.trim(), value.trim()).map_err(|e| match e {
            Error::Config(msg) => Error::config(format!("line {}: {msg}", idx + 1)),
            other => other,
        })?;
    }
    Ok(spec)
}

/// Outcome of one trial.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub cell: Cell,
    pub trial: usize,
    pub seed: u64,
    /// `"ok"`, or the failure rendered as text.
    pub status: String,
    pub report: Option<RunReport>,
}

impl TrialRecord {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn final_sd2(&self) -> Option<f64> {
        self.report
            .as_ref()
            .and_then(|r| r.final_errors.as_ref())
            .map(|e| e.sd2)
    }
}

/// Per-cell aggregate row.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub cell: Cell,
    pub trials: usize,
    pub ok: usize,
    pub success_rate: f64,
    pub sd2_p25: Option<f64>,
    pub sd2_p50: Option<f64>,
    pub sd2_p75: Option<f64>,
    pub frob_rel_p50: Option<f64>,
    pub iters_p50: Option<f64>,
    pub total_ms_p50: Option<f64>,
}

/// Everything an experiment produced.
#[derive(Debug)]
pub struct ExperimentOutcome {
    pub records: Vec<TrialRecord>,
    pub summary: Vec<SummaryRow>,
    pub failed: usize,
    pub results_path: PathBuf,
    pub history_path: PathBuf,
    pub summary_path: PathBuf,
}

/// Run the full grid and write the three CSVs into `spec.out_dir`.
///
/// Solver failures are recorded per trial; the call itself fails only on
/// configuration or I/O problems.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    spec.validate()?;
    fs::create_dir_all(&spec.out_dir)?;

    let cells = spec.cells();
    let mut tasks: Vec<(Cell, usize)> = Vec::with_capacity(cells.len() * spec.trials);
    for cell in &cells {
        for trial in 0..spec.trials {
            tasks.push((*cell, trial));
        }
    }

    let records: Vec<TrialRecord> = map_indexed(tasks.len(), |i| {
        let (cell, trial) = tasks[i];
        run_trial(spec, &cell, trial)
    });
    let failed = records.iter().filter(|r| !r.is_ok()).count();

    let results_path = spec.out_dir.join(RESULTS_FILE);
    fs::write(&results_path, render_results(&records))?;
    let history_path = spec.out_dir.join(HISTORY_FILE);
    fs::write(&history_path, render_history(&records))?;
    let summary_path = spec.out_dir.join(SUMMARY_FILE);
    let summary = emit_summary(&records, spec.success_tol, &summary_path)?;

    Ok(ExperimentOutcome {
        records,
        summary,
        failed,
        results_path,
        history_path,
        summary_path,
    })
}

fn run_trial(spec: &ExperimentSpec, cell: &Cell, trial: usize) -> TrialRecord {
    let seed = spec.trial_seed(cell, trial);
    let outcome = generate_ground_truth(cell.n, cell.q, cell.r, spec.kappa, seed)
        .and_then(|truth| measure(&truth, cell.m, cell.sigma_v, seed))
        .and_then(|inst| {
            let cfg = spec.solver_config(cell);
            match spec.solver {
                SolverKind::AltGdMin => run(&inst, &cfg),
                SolverKind::AltMin => run_altmin(&inst, &cfg),
            }
        });
    match outcome {
        Ok((_, report)) => TrialRecord {
            cell: *cell,
            trial,
            seed,
            status: "ok".to_string(),
            report: Some(report),
        },
        Err(e) => TrialRecord {
            cell: *cell,
            trial,
            seed,
            status: sanitize(&e.to_string()),
            report: None,
        },
    }
}

/// Render a float for CSV: full-precision scientific notation, identical
/// across runs.
fn sci(x: f64) -> String {
    format!("{x:.9e}")
}

fn opt_sci(x: Option<f64>) -> String {
    x.map(sci).unwrap_or_default()
}

fn msf(x: f64) -> String {
    format!("{x:.3}")
}

fn sanitize(s: &str) -> String {
    s.replace([',', '\n'], ";")
}

fn render_results(records: &[TrialRecord]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for rec in records {
        let c = &rec.cell;
        let (kappa, mu, nsr_v, iters, sd2, frob, alpha, trunc, init_ms, total_ms) = match &rec.report
        {
            Some(rep) => (
                opt_sci(rep.meta.kappa),
                opt_sci(rep.meta.mu),
                opt_sci(rep.meta.nsr),
                rep.iterations.to_string(),
                opt_sci(rep.final_errors.as_ref().map(|e| e.sd2)),
                opt_sci(rep.final_errors.as_ref().map(|e| e.frob_rel)),
                sci(rep.alpha),
                sci(rep.truncation_fraction),
                msf(rep.init_ms),
                msf(rep.total_ms),
            ),
            None => (
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ),
        };
        let solver = rec
            .report
            .as_ref()
            .map(|r| r.solver.to_string())
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{kappa},{mu},{nsr_v},{},{},{solver},{},{iters},{sd2},{frob},{alpha},{trunc},{init_ms},{total_ms}",
            c.n, c.q, c.r, c.m, c.sigma_v, rec.trial, rec.seed, rec.status
        );
    }
    out
}

fn render_history(records: &[TrialRecord]) -> String {
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for rec in records {
        let Some(rep) = &rec.report else { continue };
        for it in &rep.history {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                rec.seed,
                it.iter,
                opt_sci(it.sd2_to_truth),
                opt_sci(it.frob_rel_err),
                sci(it.grad_norm),
                sci(it.eta_used),
                msf(it.wall_ms)
            );
        }
    }
    out
}

/// Linear-interpolation percentile of a sorted, nonempty slice.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let last = sorted.len() - 1;
    let pos = p * last as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Aggregate per cell (in first-seen order) and write `summary.csv`.
pub fn emit_summary(
    records: &[TrialRecord],
    success_tol: f64,
    path: &Path,
) -> Result<Vec<SummaryRow>> {
    let mut groups: Vec<(Cell, Vec<&TrialRecord>)> = Vec::new();
    for rec in records {
        match groups.iter_mut().find(|(c, _)| *c == rec.cell) {
            Some((_, v)) => v.push(rec),
            None => groups.push((rec.cell, vec![rec])),
        }
    }

    let mut rows = Vec::with_capacity(groups.len());
    for (cell, recs) in groups {
        let ok: Vec<&&TrialRecord> = recs.iter().filter(|r| r.is_ok()).collect();
        let successes = ok
            .iter()
            .filter(|r| r.final_sd2().is_some_and(|d| d <= success_tol))
            .count();
        let sorted = |f: &dyn Fn(&TrialRecord) -> f64| -> Vec<f64> {
            let mut v: Vec<f64> = ok.iter().map(|r| f(r)).collect();
            v.sort_by(f64::total_cmp);
            v
        };
        let (sd2_p25, sd2_p50, sd2_p75, frob_rel_p50, iters_p50, total_ms_p50) = if ok.is_empty() {
            (None, None, None, None, None, None)
        } else {
            let sd2s = sorted(&|r| r.final_sd2().unwrap_or(f64::NAN));
            let frobs = sorted(&|r| {
                r.report
                    .as_ref()
                    .and_then(|rep| rep.final_errors.as_ref())
                    .map_or(f64::NAN, |e| e.frob_rel)
            });
            let iters = sorted(&|r| r.report.as_ref().map_or(f64::NAN, |rep| rep.iterations as f64));
            let ms = sorted(&|r| r.report.as_ref().map_or(f64::NAN, |rep| rep.total_ms));
            (
                Some(percentile(&sd2s, 0.25)),
                Some(percentile(&sd2s, 0.50)),
                Some(percentile(&sd2s, 0.75)),
                Some(percentile(&frobs, 0.50)),
                Some(percentile(&iters, 0.50)),
                Some(percentile(&ms, 0.50)),
            )
        };
        rows.push(SummaryRow {
            cell,
            trials: recs.len(),
            ok: ok.len(),
            success_rate: successes as f64 / recs.len() as f64,
            sd2_p25,
            sd2_p50,
            sd2_p75,
            frob_rel_p50,
            iters_p50,
            total_ms_p50,
        });
    }

    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for row in &rows {
        let c = &row.cell;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{:.4},{},{},{},{},{},{}",
            c.n,
            c.q,
            c.r,
            c.m,
            c.sigma_v,
            row.trials,
            row.ok,
            row.success_rate,
            opt_sci(row.sd2_p25),
            opt_sci(row.sd2_p50),
            opt_sci(row.sd2_p75),
            opt_sci(row.frob_rel_p50),
            opt_sci(row.iters_p50),
            row.total_ms_p50.map(msf).unwrap_or_default()
        );
    }
    fs::write(path, out)?;
    Ok(rows)
}

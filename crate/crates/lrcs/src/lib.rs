//! Low-rank matrix recovery from column-wise linear sketches.
//!
//! The observation model: an unknown rank-`r` matrix `X* = U* B*` (`n x q`,
//! `U*` orthonormal `n x r`, `B*` of size `r x q`) is observed through `q`
//! independent sketching matrices `A_k` (`m x n`, i.i.d. standard normal):
//!
//! ```text
//! y_k = A_k x*_k + noise_k,    k = 0..q
//! ```
//!
//! Each column gets its own `m`-dimensional measurement, so the per-column
//! sample count `m` can be far below `n` as long as the total `m q` is a
//! modest multiple of the `n r` degrees of freedom.
//!
//! The crate provides:
//!
//! * [`model`]: ground-truth generation, the measurement operator, and
//!   incoherence/noise diagnostics;
//! * [`init`]: truncated spectral initialization and its expectation
//!   diagnostics (Monte-Carlo verification of the mean of the initialization
//!   matrix);
//! * [`gdmin`]: the main solver, alternating exact per-column least squares
//!   for the coefficients with a projected gradient step on the shared basis;
//! * [`altmin`]: the alternating-minimization baseline that solves the full
//!   `n x r` least-squares problem for the basis at every iteration;
//! * [`metrics`]: subspace distance and relative recovery error;
//! * [`harness`]: deterministic experiment grids with CSV output;
//! * [`io`]: on-disk instance format (`meta.json` plus little-endian `f64`
//!   binaries).
//!
//! Everything is deterministic given a seed: measurement generation and the
//! per-column solver kernels draw from per-column counter-based substreams,
//! so results do not depend on thread count (see [`rng`] and [`par`]).
//!
//! # Example
//!
//! Recover a small synthetic instance and inspect the run:
//!
//! ```
//! use lrcs::gdmin::{run, SolverConfig};
//! use lrcs::model::{generate_ground_truth, measure};
//!
//! let truth = generate_ground_truth(24, 20, 2, 1.2, 7)?;
//! let instance = measure(&truth, 24, 0.0, 7)?;
//! let (state, report) = run(&instance, &SolverConfig::new(2).with_max_iters(60))?;
//!
//! assert_eq!(state.u.shape(), (24, 2));
//! let errors = report.final_errors.expect("instance carries its truth");
//! assert!(errors.sd2 < 1e-4);
//! # Ok::<(), lrcs::Error>(())
//! ```

// Validation guards are written as negated comparisons (`!(x > 0.0)`) so
// that NaN fails them; the direct comparison would wave NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod altmin;
pub mod error;
pub mod gdmin;
pub mod harness;
pub mod init;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod par;
pub mod report;
pub mod rng;

pub use error::{Error, Result};

//! Problem model: ground truth, measurement operator, and diagnostics.
//!
//! A problem instance consists of `q` sketching matrices `A_k` (`m x n`) and
//! observations `y_k = A_k x*_k + sigma_v * noise_k`, where `X* = U* B*` has
//! rank `r`. Generation is fully deterministic: every column draws its
//! sketch and its noise from separate substreams of the instance seed, so
//! the same seed reproduces the same instance bit-for-bit no matter how the
//! work is scheduled.

use std::ops::Range;

use nalgebra::{DMatrix, DMatrixView, DVector, DVectorView};
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{orthonormality_error, thin_qr_positive};
use crate::par::map_indexed;
use crate::rng::{stream, Tag};

/// Rank-`r` ground truth `X* = U* diag(σ*) V*ᵀ = U* B*`.
///
/// Invariants (validated by [`GroundTruth::new`]):
/// * `u_star` is `n x r` with orthonormal columns (within `1e-10`);
/// * `v_star` is `q x r` with orthonormal columns (within `1e-10`);
/// * `sigma_star` is positive and nonincreasing;
/// * `b_star` equals `diag(sigma_star) * v_starᵀ` (within `1e-12`).
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub u_star: DMatrix<f64>,
    pub sigma_star: DVector<f64>,
    pub v_star: DMatrix<f64>,
    pub b_star: DMatrix<f64>,
}

impl GroundTruth {
    pub fn new(
        u_star: DMatrix<f64>,
        sigma_star: DVector<f64>,
        v_star: DMatrix<f64>,
    ) -> Result<Self> {
        let r = sigma_star.len();
        if u_star.ncols() != r || v_star.ncols() != r {
            return Err(Error::invalid(format!(
                "factor ranks disagree: U has {}, V has {}, sigma has {}",
                u_star.ncols(),
                v_star.ncols(),
                r
            )));
        }
        if r == 0 {
            return Err(Error::invalid("rank must be at least 1".to_string()));
        }
        for (name, f) in [("U*", &u_star), ("V*", &v_star)] {
            let err = orthonormality_error(f);
            if !(err <= 1e-10) {
                return Err(Error::invalid(format!(
                    "{name} is not orthonormal (max |FᵀF - I| = {err:.3e})"
                )));
            }
        }
        for i in 0..r {
            let s = sigma_star[i];
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::invalid(format!("sigma[{i}] = {s} is not positive")));
            }
            if i > 0 && sigma_star[i] > sigma_star[i - 1] {
                return Err(Error::invalid("singular values must be nonincreasing".to_string()));
            }
        }
        let b_star = DMatrix::from_diagonal(&sigma_star) * v_star.transpose();
        Ok(GroundTruth {
            u_star,
            sigma_star,
            v_star,
            b_star,
        })
    }

    pub fn n(&self) -> usize {
        self.u_star.nrows()
    }

    pub fn q(&self) -> usize {
        self.v_star.nrows()
    }

    pub fn r(&self) -> usize {
        self.sigma_star.len()
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_star[0]
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_star[self.sigma_star.len() - 1]
    }

    pub fn kappa(&self) -> f64 {
        self.sigma_max() / self.sigma_min()
    }

    /// Dense `X* = U* B*`.
    pub fn x_star(&self) -> DMatrix<f64> {
        &self.u_star * &self.b_star
    }

    /// Column `x*_k = U* b*_k`.
    pub fn column(&self, k: usize) -> DVector<f64> {
        &self.u_star * self.b_star.column(k)
    }
}

/// Measured column-norm spread of the coefficient matrix.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IncoherenceReport {
    /// Smallest `mu` with `max_k ‖b*_k‖ = mu * sqrt(r/q) * sigma_max`.
    /// Near 1 when the energy of `X*` is spread evenly across columns.
    pub mu: f64,
    /// Condition number `sigma_max / sigma_min`.
    pub kappa: f64,
    /// `max_k ‖b*_k‖`.
    pub max_col_norm: f64,
}

impl IncoherenceReport {
    /// Whether the measured spread satisfies a configured bound.
    pub fn within(&self, mu_bound: f64) -> bool {
        self.mu <= mu_bound
    }
}

/// Measure the column-norm spread of the truth.
pub fn incoherence(truth: &GroundTruth) -> IncoherenceReport {
    let max_col_norm = (0..truth.q())
        .map(|k| truth.b_star.column(k).norm())
        .fold(0.0_f64, f64::max);
    let scale = (truth.r() as f64 / truth.q() as f64).sqrt() * truth.sigma_max();
    IncoherenceReport {
        mu: max_col_norm / scale,
        kappa: truth.kappa(),
        max_col_norm,
    }
}

/// Noise-to-signal ratio `q * sigma_v^2 / sigma_min^2`.
pub fn nsr(truth: &GroundTruth, sigma_v: f64) -> f64 {
    truth.q() as f64 * sigma_v * sigma_v / (truth.sigma_min() * truth.sigma_min())
}

/// Generate a random rank-`r` truth with condition number exactly
/// `kappa_target`: orthonormalized Gaussian factors and singular values
/// log-linearly interpolated from `kappa_target` down to `1`.
pub fn generate_ground_truth(
    n: usize,
    q: usize,
    r: usize,
    kappa_target: f64,
    seed: u64,
) -> Result<GroundTruth> {
    if r == 0 || r > n.min(q) {
        return Err(Error::invalid(format!(
            "rank {r} out of range for a {n}x{q} matrix"
        )));
    }
    if !(kappa_target >= 1.0) || !kappa_target.is_finite() {
        return Err(Error::invalid(format!(
            "condition number target must be finite and >= 1, got {kappa_target}"
        )));
    }
    if r == 1 && kappa_target != 1.0 {
        return Err(Error::invalid(
            "a rank-1 matrix has exactly one singular value; kappa_target must be 1".to_string(),
        ));
    }
    let sigma_star = DVector::from_fn(r, |i, _| {
        if r == 1 {
            1.0
        } else {
            (kappa_target.ln() * (r - 1 - i) as f64 / (r - 1) as f64).exp()
        }
    });
    let u_star = thin_qr_positive(&gaussian_matrix(n, r, stream(seed, Tag::BasisFactor, 0)))?;
    let v_star = thin_qr_positive(&gaussian_matrix(q, r, stream(seed, Tag::CoefficientFactor, 0)))?;
    GroundTruth::new(u_star, sigma_star, v_star)
}

fn gaussian_matrix(rows: usize, cols: usize, mut rng: impl rand::Rng) -> DMatrix<f64> {
    // from_iterator fills column-major; the fill order is part of the
    // reproducibility contract.
    DMatrix::from_iterator(
        rows,
        cols,
        (0..rows * cols).map(|_| StandardNormal.sample(&mut rng)),
    )
}

/// One problem instance: sketches, observations, and (when synthetic) the
/// truth they were measured from.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub truth: Option<GroundTruth>,
    sketches: Vec<DMatrix<f64>>,
    observations: Vec<DVector<f64>>,
    pub sigma_v: f64,
    pub seed: u64,
}

impl ProblemInstance {
    /// Assemble an instance from parts, validating shapes. `truth`, when
    /// present, must match the sketch dimensions.
    pub fn from_parts(
        truth: Option<GroundTruth>,
        sketches: Vec<DMatrix<f64>>,
        observations: Vec<DVector<f64>>,
        sigma_v: f64,
        seed: u64,
    ) -> Result<Self> {
        if sketches.is_empty() || sketches.len() != observations.len() {
            return Err(Error::invalid(format!(
                "need equal nonzero counts of sketches and observations, got {} and {}",
                sketches.len(),
                observations.len()
            )));
        }
        let (m, n) = sketches[0].shape();
        if m == 0 || n == 0 {
            return Err(Error::invalid("sketches must be nonempty".to_string()));
        }
        for (k, a) in sketches.iter().enumerate() {
            if a.shape() != (m, n) {
                return Err(Error::invalid(format!(
                    "sketch {k} has shape {:?}, expected ({m}, {n})",
                    a.shape()
                )));
            }
            if observations[k].len() != m {
                return Err(Error::invalid(format!(
                    "observation {k} has length {}, expected {m}",
                    observations[k].len()
                )));
            }
        }
        if let Some(t) = &truth {
            if t.n() != n || t.q() != sketches.len() {
                return Err(Error::invalid(format!(
                    "truth is {}x{} but measurements are for a {n}x{} matrix",
                    t.n(),
                    t.q(),
                    sketches.len()
                )));
            }
        }
        if !(sigma_v >= 0.0) || !sigma_v.is_finite() {
            return Err(Error::invalid(format!(
                "noise level must be finite and >= 0, got {sigma_v}"
            )));
        }
        Ok(ProblemInstance {
            truth,
            sketches,
            observations,
            sigma_v,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.sketches[0].ncols()
    }

    pub fn q(&self) -> usize {
        self.sketches.len()
    }

    pub fn m(&self) -> usize {
        self.sketches[0].nrows()
    }

    pub fn sketch(&self, k: usize) -> &DMatrix<f64> {
        &self.sketches[k]
    }

    pub fn observation(&self, k: usize) -> &DVector<f64> {
        &self.observations[k]
    }

    /// View of all `m` measurement rows.
    pub fn full_view(&self) -> InstanceView<'_> {
        InstanceView {
            inst: self,
            rows: 0..self.m(),
        }
    }

    /// View of a contiguous window of measurement rows (used for disjoint
    /// sample splits).
    pub fn row_window(&self, rows: Range<usize>) -> Result<InstanceView<'_>> {
        if rows.start >= rows.end || rows.end > self.m() {
            return Err(Error::invalid(format!(
                "row window {rows:?} out of range for m = {}",
                self.m()
            )));
        }
        Ok(InstanceView { inst: self, rows })
    }
}

/// Borrowed view of an instance restricted to a window of measurement rows.
/// All solver kernels operate on views, so sample splitting is zero-copy.
#[derive(Clone)]
pub struct InstanceView<'a> {
    inst: &'a ProblemInstance,
    rows: Range<usize>,
}

impl<'a> InstanceView<'a> {
    pub fn n(&self) -> usize {
        self.inst.n()
    }

    pub fn q(&self) -> usize {
        self.inst.q()
    }

    /// Rows in this view (the effective per-column sample count).
    pub fn m(&self) -> usize {
        self.rows.end - self.rows.start
    }

    pub fn a(&self, k: usize) -> DMatrixView<'a, f64> {
        self.inst.sketches[k].rows_range(self.rows.clone())
    }

    pub fn y(&self, k: usize) -> DVectorView<'a, f64> {
        self.inst.observations[k].rows_range(self.rows.clone())
    }

    pub fn sigma_v(&self) -> f64 {
        self.inst.sigma_v
    }

    pub fn truth(&self) -> Option<&'a GroundTruth> {
        self.inst.truth.as_ref()
    }
}

/// Measure a truth: `q` fresh Gaussian sketches of `m` rows each, plus
/// `N(0, sigma_v^2)` observation noise. Column `k` draws its sketch from
/// substream `(seed, SketchColumn, k)` and its noise from
/// `(seed, NoiseColumn, k)`, so regenerating any column in isolation (or in
/// parallel) yields identical bytes.
pub fn measure(
    truth: &GroundTruth,
    m: usize,
    sigma_v: f64,
    seed: u64,
) -> Result<ProblemInstance> {
    if m == 0 {
        return Err(Error::invalid("need at least one measurement row".to_string()));
    }
    if !(sigma_v >= 0.0) || !sigma_v.is_finite() {
        return Err(Error::invalid(format!(
            "noise level must be finite and >= 0, got {sigma_v}"
        )));
    }
    let n = truth.n();
    let q = truth.q();
    let columns: Vec<(DMatrix<f64>, DVector<f64>)> = map_indexed(q, |k| {
        let a = gaussian_matrix(m, n, stream(seed, Tag::SketchColumn, k as u64));
        let x_k = truth.column(k);
        let mut y = &a * x_k;
        if sigma_v > 0.0 {
            let mut noise_rng = stream(seed, Tag::NoiseColumn, k as u64);
            for i in 0..m {
                let e: f64 = StandardNormal.sample(&mut noise_rng);
                y[i] += sigma_v * e;
            }
        }
        (a, y)
    });
    let (sketches, observations) = columns.into_iter().unzip();
    ProblemInstance::from_parts(Some(truth.clone()), sketches, observations, sigma_v, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn generated_truth_has_exact_spectrum() {
        let t = generate_ground_truth(30, 20, 4, 5.0, 1).unwrap();
        assert_eq!(t.n(), 30);
        assert_eq!(t.q(), 20);
        assert_eq!(t.r(), 4);
        assert_abs_diff_eq!(t.kappa(), 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.sigma_min(), 1.0, epsilon = 1e-12);
        // Log-linear interpolation: ratios of consecutive values are equal.
        let ratio = t.sigma_star[0] / t.sigma_star[1];
        for i in 1..3 {
            assert_abs_diff_eq!(t.sigma_star[i] / t.sigma_star[i + 1], ratio, epsilon = 1e-12);
        }
        // The singular values of the assembled X* match sigma_star.
        let sv = t.x_star().svd(false, false).singular_values;
        for i in 0..4 {
            assert_abs_diff_eq!(sv[i], t.sigma_star[i], epsilon = 1e-10);
        }
        assert!(orthonormality_error(&t.u_star) < 1e-12);
        assert!(orthonormality_error(&t.v_star) < 1e-12);
        assert!((&t.b_star - DMatrix::from_diagonal(&t.sigma_star) * t.v_star.transpose())
            .abs()
            .max()
            < 1e-12);
    }

    #[test]
    fn unit_condition_number_gives_flat_spectrum() {
        let t = generate_ground_truth(4, 4, 4, 1.0, 2).unwrap();
        for i in 0..4 {
            assert_eq!(t.sigma_star[i], 1.0);
        }
    }

    #[test]
    fn generation_is_deterministic_and_seed_sensitive() {
        let a = generate_ground_truth(10, 8, 2, 3.0, 7).unwrap();
        let b = generate_ground_truth(10, 8, 2, 3.0, 7).unwrap();
        let c = generate_ground_truth(10, 8, 2, 3.0, 8).unwrap();
        assert_eq!(a.u_star, b.u_star);
        assert_eq!(a.v_star, b.v_star);
        assert_ne!(a.u_star, c.u_star);
    }

    #[test]
    fn generation_rejects_bad_parameters() {
        assert!(generate_ground_truth(10, 8, 0, 1.0, 0).is_err());
        assert!(generate_ground_truth(10, 8, 9, 1.0, 0).is_err());
        assert!(generate_ground_truth(10, 8, 2, 0.5, 0).is_err());
        assert!(generate_ground_truth(10, 8, 2, f64::NAN, 0).is_err());
        assert!(generate_ground_truth(10, 8, 1, 2.0, 0).is_err());
        assert!(generate_ground_truth(10, 8, 1, 1.0, 0).is_ok());
    }

    #[test]
    fn incoherence_matches_hand_computed_case() {
        // r = 1, sigma = (2), v = e1 in dimension 2:
        // B* = [2, 0], max column norm 2, mu = 2 / (sqrt(1/2) * 2) = sqrt(2).
        let u = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let v = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let t = GroundTruth::new(u, DVector::from_column_slice(&[2.0]), v).unwrap();
        let rep = incoherence(&t);
        assert_abs_diff_eq!(rep.max_col_norm, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rep.mu, 2.0_f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(rep.kappa, 1.0, epsilon = 1e-15);
        assert!(rep.within(1.5));
        assert!(!rep.within(1.4));
    }

    #[test]
    fn nsr_matches_definition() {
        let t = generate_ground_truth(8, 4, 2, 2.0, 3).unwrap();
        // sigma_min = 1, q = 4, sigma_v = 0.5 => 4 * 0.25 / 1 = 1.
        assert_abs_diff_eq!(nsr(&t, 0.5), 1.0, epsilon = 1e-12);
        assert_eq!(nsr(&t, 0.0), 0.0);
    }

    #[test]
    fn truth_constructor_rejects_invalid_factors() {
        let t = generate_ground_truth(6, 5, 2, 2.0, 4).unwrap();
        // Non-orthonormal U.
        assert!(GroundTruth::new(&t.u_star * 2.0, t.sigma_star.clone(), t.v_star.clone()).is_err());
        // Increasing singular values.
        assert!(GroundTruth::new(
            t.u_star.clone(),
            DVector::from_column_slice(&[1.0, 2.0]),
            t.v_star.clone()
        )
        .is_err());
        // Nonpositive singular value.
        assert!(GroundTruth::new(
            t.u_star.clone(),
            DVector::from_column_slice(&[1.0, 0.0]),
            t.v_star.clone()
        )
        .is_err());
    }

    #[test]
    fn noise_free_measurements_are_exact_sketches() {
        let t = generate_ground_truth(12, 6, 2, 2.0, 5).unwrap();
        let inst = measure(&t, 9, 0.0, 11).unwrap();
        assert_eq!((inst.m(), inst.n(), inst.q()), (9, 12, 6));
        for k in 0..6 {
            let expect = inst.sketch(k) * t.column(k);
            assert_abs_diff_eq!(inst.observation(k), &expect, epsilon = 1e-13);
        }
    }

    #[test]
    fn measurement_noise_scales_linearly_with_sigma_v() {
        // Same seed => same noise stream, so residuals scale exactly.
        let t = generate_ground_truth(10, 5, 2, 2.0, 6).unwrap();
        let i1 = measure(&t, 7, 1.0, 13).unwrap();
        let i2 = measure(&t, 7, 2.0, 13).unwrap();
        for k in 0..5 {
            let clean = i1.sketch(k) * t.column(k);
            let r1 = i1.observation(k) - &clean;
            let r2 = i2.observation(k) - &clean;
            assert!(r1.norm() > 0.0);
            assert_abs_diff_eq!(r2, &(&r1 * 2.0), epsilon = 1e-12);
        }
    }

    #[test]
    fn measurement_is_deterministic_per_column() {
        let t = generate_ground_truth(8, 4, 2, 1.5, 9).unwrap();
        let a = measure(&t, 5, 0.3, 21).unwrap();
        let b = measure(&t, 5, 0.3, 21).unwrap();
        for k in 0..4 {
            assert_eq!(a.sketch(k), b.sketch(k));
            assert_eq!(a.observation(k), b.observation(k));
        }
        assert_ne!(a.sketch(0), a.sketch(1));
    }

    #[test]
    fn row_window_bounds_are_checked() {
        let t = generate_ground_truth(8, 4, 2, 1.5, 9).unwrap();
        let inst = measure(&t, 6, 0.0, 1).unwrap();
        assert!(inst.row_window(0..6).is_ok());
        assert!(inst.row_window(2..2).is_err());
        assert!(inst.row_window(4..7).is_err());
        let v = inst.row_window(2..5).unwrap();
        assert_eq!(v.m(), 3);
        assert_eq!(v.a(1).nrows(), 3);
        assert_eq!(v.a(1).row(0), inst.sketch(1).row(2));
        assert_eq!(v.y(3)[0], inst.observation(3)[2]);
    }

    #[test]
    fn from_parts_rejects_mismatched_shapes() {
        let t = generate_ground_truth(8, 4, 2, 1.5, 9).unwrap();
        let inst = measure(&t, 5, 0.0, 2).unwrap();
        let sketches: Vec<_> = (0..4).map(|k| inst.sketch(k).clone()).collect();
        let mut obs: Vec<_> = (0..4).map(|k| inst.observation(k).clone()).collect();
        obs[2] = DVector::zeros(4); // wrong length
        assert!(ProblemInstance::from_parts(None, sketches.clone(), obs, 0.0, 0).is_err());
        // Truth dimension mismatch.
        let small = generate_ground_truth(7, 4, 2, 1.5, 9).unwrap();
        let obs: Vec<_> = (0..4).map(|k| inst.observation(k).clone()).collect();
        assert!(ProblemInstance::from_parts(Some(small), sketches, obs, 0.0, 0).is_err());
    }
}

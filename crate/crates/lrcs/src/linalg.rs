//! Small dense-linear-algebra helpers shared by the solvers.
//!
//! Conventions fixed here so that runs are reproducible across code paths:
//!
//! * thin QR always returns the `R` factor with a strictly positive
//!   diagonal, which makes the `Q` factor unique;
//! * singular vectors are sign-normalized so that the entry of largest
//!   magnitude in each vector is nonnegative (ties broken by lowest index,
//!   which is what `argmax` over a forward scan gives).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Thin QR of a tall matrix with the positive-diagonal convention.
///
/// Returns the `nrows x ncols` orthonormal factor. Fails if the input is
/// wider than tall or numerically rank deficient (a diagonal entry of `R`
/// is zero, i.e. the columns do not span an `ncols`-dimensional space).
pub fn thin_qr_positive(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (rows, cols) = m.shape();
    if rows < cols {
        return Err(Error::invalid(format!(
            "thin QR needs a tall matrix, got {rows}x{cols}"
        )));
    }
    let qr = m.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    // Rank test relative to the largest diagonal entry of R; a duplicated
    // column shows up as a diagonal at roundoff level, not an exact zero.
    let scale = (0..cols).fold(0.0_f64, |acc, j| acc.max(r[(j, j)].abs()));
    let tol = scale * f64::EPSILON * rows.max(cols) as f64;
    for j in 0..cols {
        let d = r[(j, j)];
        if !d.is_finite() || d.abs() <= tol {
            return Err(Error::numerical(format!(
                "QR breakdown: R[{j},{j}] = {d} for a {rows}x{cols} input (column norm {:.3e})",
                m.column(j).norm()
            )));
        }
        if d < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(q)
}

/// `max |UᵀU - I|` entrywise; zero for an exactly orthonormal basis.
pub fn orthonormality_error(u: &DMatrix<f64>) -> f64 {
    let r = u.ncols();
    let mut gram = u.transpose() * u;
    for j in 0..r {
        gram[(j, j)] -= 1.0;
    }
    gram.iter().fold(0.0_f64, |acc, &x| acc.max(x.abs()))
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values()[0]
}

/// Flip each column so its largest-magnitude entry is nonnegative.
/// Ties on magnitude resolve to the lowest row index.
pub fn normalize_column_signs(m: &mut DMatrix<f64>) {
    for j in 0..m.ncols() {
        let mut best = 0usize;
        let mut best_abs = 0.0f64;
        for i in 0..m.nrows() {
            let a = m[(i, j)].abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if m[(best, j)] < 0.0 {
            m.column_mut(j).neg_mut();
        }
    }
}

/// Extend `kept` orthonormal columns to `r` columns by orthogonalizing
/// canonical basis vectors against the current set (deterministic
/// Gram-Schmidt completion). `kept` may be empty.
pub fn orthonormal_completion(kept: &[DVector<f64>], n: usize, r: usize) -> Result<DMatrix<f64>> {
    if r > n {
        return Err(Error::invalid(format!(
            "cannot build {r} orthonormal columns in dimension {n}"
        )));
    }
    let mut cols: Vec<DVector<f64>> = kept.to_vec();
    let mut e = 0usize;
    while cols.len() < r {
        if e >= n {
            return Err(Error::numerical(
                "orthonormal completion exhausted the canonical basis".to_string(),
            ));
        }
        let mut v = DVector::zeros(n);
        v[e] = 1.0;
        e += 1;
        // Two Gram-Schmidt passes keep orthogonality near machine precision.
        for _ in 0..2 {
            for c in &cols {
                let proj = c.dot(&v);
                v.axpy(-proj, c, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 0.5 {
            // A canonical vector nearly inside the current span gives a tiny
            // remainder; skip it, a later one is guaranteed to work.
            v /= norm;
            cols.push(v);
        }
    }
    Ok(DMatrix::from_columns(&cols))
}

/// Back-substitution solve of `R x = b` for upper-triangular `R`,
/// failing loudly on a zero pivot instead of returning garbage.
pub fn solve_upper_triangular(r: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let n = r.ncols();
    debug_assert_eq!(r.nrows(), n);
    debug_assert_eq!(b.len(), n);
    let mut x = b.clone();
    for j in (0..n).rev() {
        let d = r[(j, j)];
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        x[j] /= d;
        let xj = x[j];
        for i in 0..j {
            x[i] -= r[(i, j)] * xj;
        }
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn thin_qr_is_orthonormal_with_positive_diagonal() {
        let m = gaussian(30, 4, 1);
        let q = thin_qr_positive(&m).unwrap();
        assert_eq!(q.shape(), (30, 4));
        assert!(orthonormality_error(&q) < 1e-12);
        // Reconstructed R = QᵀM must have a positive diagonal.
        let r = q.transpose() * &m;
        for j in 0..4 {
            assert!(r[(j, j)] > 0.0);
        }
    }

    #[test]
    fn thin_qr_of_orthonormal_input_is_identity_map() {
        let q0 = thin_qr_positive(&gaussian(20, 3, 2)).unwrap();
        let q1 = thin_qr_positive(&q0).unwrap();
        assert_abs_diff_eq!(q1, q0, epsilon = 1e-13);
    }

    #[test]
    fn thin_qr_rejects_rank_deficient_input() {
        let mut m = gaussian(10, 3, 3);
        let c = m.column(0).into_owned();
        m.set_column(2, &c); // duplicate column => rank 2
        assert!(thin_qr_positive(&m).is_err());
    }

    #[test]
    fn thin_qr_rejects_wide_input() {
        assert!(thin_qr_positive(&gaussian(2, 5, 4)).is_err());
    }

    #[test]
    fn spectral_norm_matches_known_case() {
        // diag(3, 1) embedded in a rectangle.
        let mut m = DMatrix::zeros(4, 2);
        m[(0, 0)] = 3.0;
        m[(1, 1)] = 1.0;
        assert_abs_diff_eq!(spectral_norm(&m), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn sign_normalization_flips_only_negative_leaders() {
        let mut m = DMatrix::from_column_slice(3, 2, &[-2.0, 1.0, 0.0, 0.5, 3.0, -1.0]);
        normalize_column_signs(&mut m);
        assert_eq!(m[(0, 0)], 2.0); // flipped
        assert_eq!(m[(1, 0)], -1.0);
        assert_eq!(m[(1, 1)], 3.0); // untouched
    }

    #[test]
    fn completion_from_empty_is_canonical() {
        let u = orthonormal_completion(&[], 5, 3).unwrap();
        assert_eq!(u, DMatrix::identity(5, 3));
    }

    #[test]
    fn completion_extends_partial_basis() {
        let q = thin_qr_positive(&gaussian(8, 2, 5)).unwrap();
        let kept: Vec<DVector<f64>> = q.column_iter().map(|c| c.into_owned()).collect();
        let u = orthonormal_completion(&kept, 8, 5).unwrap();
        assert_eq!(u.shape(), (8, 5));
        assert!(orthonormality_error(&u) < 1e-12);
        // The first two columns are untouched.
        assert_eq!(u.columns(0, 2), q.columns(0, 2));
    }

    #[test]
    fn upper_triangular_solve_matches_dense_solve() {
        let m = gaussian(6, 6, 6);
        let r = m.qr().r();
        let b = DVector::from_fn(6, |i, _| (i as f64) - 2.5);
        let x = solve_upper_triangular(&r, &b).unwrap();
        assert_abs_diff_eq!(&r * &x, b, epsilon = 1e-10);
    }

    #[test]
    fn upper_triangular_solve_reports_zero_pivot() {
        let mut r = DMatrix::identity(3, 3);
        r[(1, 1)] = 0.0;
        assert!(solve_upper_triangular(&r, &DVector::from_element(3, 1.0)).is_none());
    }
}

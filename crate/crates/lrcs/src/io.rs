//! On-disk instance format.
//!
//! An instance directory contains:
//!
//! * `meta.json`: dimensions, noise level, seed, and (for synthetic
//!   instances) the truth spectrum and diagnostics;
//! * `A_<k>.bin`: sketch `k`, `m x n` little-endian `f64`, column-major;
//! * `y_<k>.bin`: observation `k`, `m` little-endian `f64`;
//! * `Ustar.bin` / `Bstar.bin` (synthetic only): the true factors,
//!   `n x r` and `r x q`, same encoding.
//!
//! `meta.json` carries `sigma_star` so the truth can be reconstructed
//! exactly: `V* = B*ᵀ diag(1/σ*)`. A save/load round trip preserves every
//! byte of the matrices.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{incoherence, nsr, GroundTruth, ProblemInstance};

pub const META_FILE: &str = "meta.json";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    schema_version: u32,
    n: usize,
    q: usize,
    m: usize,
    sigma_v: f64,
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nsr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma_star: Option<Vec<f64>>,
}

fn write_matrix(path: &Path, data: &[f64]) -> Result<()> {
    let mut bytes = Vec::with_capacity(data.len() * 8);
    for &x in data {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

fn read_matrix(path: &Path, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
    let bytes = fs::read(path)?;
    let expected = rows * cols * 8;
    if bytes.len() != expected {
        return Err(Error::invalid(format!(
            "{}: expected {expected} bytes for a {rows}x{cols} f64 matrix, found {}",
            path.display(),
            bytes.len()
        )));
    }
    let data: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(DMatrix::from_column_slice(rows, cols, &data))
}

/// Write an instance (and its truth, if any) to `dir`, creating it.
pub fn save_instance(dir: &Path, inst: &ProblemInstance) -> Result<()> {
    fs::create_dir_all(dir)?;
    let truth = inst.truth.as_ref();
    let meta = Meta {
        schema_version: SCHEMA_VERSION,
        n: inst.n(),
        q: inst.q(),
        m: inst.m(),
        sigma_v: inst.sigma_v,
        seed: inst.seed,
        r: truth.map(|t| t.r()),
        kappa: truth.map(|t| t.kappa()),
        mu: truth.map(|t| incoherence(t).mu),
        nsr: truth.map(|t| nsr(t, inst.sigma_v)),
        sigma_star: truth.map(|t| t.sigma_star.iter().copied().collect()),
    };
    fs::write(
        dir.join(META_FILE),
        serde_json::to_string_pretty(&meta)? + "\n",
    )?;
    for k in 0..inst.q() {
        write_matrix(&dir.join(format!("A_{k}.bin")), inst.sketch(k).as_slice())?;
        write_matrix(&dir.join(format!("y_{k}.bin")), inst.observation(k).as_slice())?;
    }
    if let Some(t) = truth {
        write_matrix(&dir.join("Ustar.bin"), t.u_star.as_slice())?;
        write_matrix(&dir.join("Bstar.bin"), t.b_star.as_slice())?;
    }
    Ok(())
}

/// Load an instance written by [`save_instance`].
pub fn load_instance(dir: &Path) -> Result<ProblemInstance> {
    let meta: Meta = serde_json::from_str(&fs::read_to_string(dir.join(META_FILE))?)?;
    if meta.schema_version != SCHEMA_VERSION {
        return Err(Error::invalid(format!(
            "unsupported schema version {} (this build reads {SCHEMA_VERSION})",
            meta.schema_version
        )));
    }
    if meta.n == 0 || meta.q == 0 || meta.m == 0 {
        return Err(Error::invalid("metadata declares an empty instance".to_string()));
    }
    let mut sketches = Vec::with_capacity(meta.q);
    let mut observations = Vec::with_capacity(meta.q);
    for k in 0..meta.q {
        sketches.push(read_matrix(&dir.join(format!("A_{k}.bin")), meta.m, meta.n)?);
        let y = read_matrix(&dir.join(format!("y_{k}.bin")), meta.m, 1)?;
        observations.push(DVector::from_column_slice(y.as_slice()));
    }
    let truth = match (meta.r, meta.sigma_star) {
        (Some(r), Some(sigma)) => {
            if sigma.len() != r {
                return Err(Error::invalid(format!(
                    "metadata rank {r} disagrees with {} stored singular values",
                    sigma.len()
                )));
            }
            let u_star = read_matrix(&dir.join("Ustar.bin"), meta.n, r)?;
            let b_star = read_matrix(&dir.join("Bstar.bin"), r, meta.q)?;
            let sigma_star = DVector::from_column_slice(&sigma);
            let v_star = b_star.transpose() * DMatrix::from_diagonal(&sigma_star.map(|s| 1.0 / s));
            let mut truth = GroundTruth::new(u_star, sigma_star, v_star)?;
            // Keep the stored coefficient bytes rather than the (up to one
            // ulp different) recomputed diag(σ)V*ᵀ so round trips are exact.
            let drift = (&truth.b_star - &b_star).abs().max();
            if drift > 1e-12 * truth.sigma_max() {
                return Err(Error::invalid(format!(
                    "stored B* is inconsistent with sigma_star (max drift {drift:.3e})"
                )));
            }
            truth.b_star = b_star;
            Some(truth)
        }
        (None, None) => None,
        _ => {
            return Err(Error::invalid(
                "metadata must carry both r and sigma_star, or neither".to_string(),
            ))
        }
    };
    ProblemInstance::from_parts(truth, sketches, observations, meta.sigma_v, meta.seed)
}

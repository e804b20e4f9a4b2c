//! Dense symmetric eigen helpers.
//!
//! Problems in this crate live in dimension d <= 64, so a full symmetric
//! eigendecomposition is the right tool; no iterative solver is used.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::ParamVector;

/// Maximum entrywise asymmetry tolerated before a matrix is rejected.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Symmetrize as (H + H^T)/2.
pub fn symmetrize(h: &DMatrix<f64>) -> DMatrix<f64> {
    (h + h.transpose()) * 0.5
}

fn max_asymmetry(h: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..h.nrows() {
        for j in (i + 1)..h.ncols() {
            worst = worst.max((h[(i, j)] - h[(j, i)]).abs());
        }
    }
    worst
}

/// Canonical eigenvector orientation: first coordinate with magnitude above
/// 1e-12 is made positive. Keeps downstream tie-breaks deterministic.
pub fn orient(mut v: DVector<f64>) -> DVector<f64> {
    for x in v.iter() {
        if x.abs() > 1e-12 {
            if *x < 0.0 {
                v.neg_mut();
            }
            break;
        }
    }
    v
}

/// Algebraically smallest eigenvalue of a symmetric matrix together with a
/// unit eigenvector in canonical orientation.
pub fn smallest_eigenpair(h: &DMatrix<f64>) -> Result<(f64, ParamVector)> {
    if h.nrows() != h.ncols() {
        return Err(Error::usage(format!(
            "eigen: matrix must be square, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    if h.iter().any(|x| !x.is_finite()) {
        return Err(Error::usage("eigen: non-finite matrix entry"));
    }
    let asym = max_asymmetry(h);
    if asym > SYMMETRY_TOL {
        return Err(Error::usage(format!(
            "eigen: matrix asymmetry {asym:.3e} exceeds {SYMMETRY_TOL:.1e}"
        )));
    }
    let sym = symmetrize(h);
    let eig = sym.clone().symmetric_eigen();
    let mut idx = 0;
    let mut best = eig.eigenvalues[0];
    for (i, &ev) in eig.eigenvalues.iter().enumerate() {
        if ev < best {
            best = ev;
            idx = i;
        }
    }
    let mut v: DVector<f64> = eig.eigenvectors.column(idx).into_owned();
    let norm = v.norm();
    if norm <= 0.0 {
        return Err(Error::Internal("eigen: zero eigenvector".into()));
    }
    v /= norm;
    Ok((best, ParamVector::from_dvector(orient(v))))
}

/// Spectral norm of a symmetric matrix (largest absolute eigenvalue).
pub fn spectral_norm_sym(h: &DMatrix<f64>) -> f64 {
    let sym = symmetrize(h);
    sym.symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, &ev| acc.max(ev.abs()))
}

/// Largest eigenvalue of a symmetric matrix.
pub fn largest_eigenvalue_sym(h: &DMatrix<f64>) -> f64 {
    let sym = symmetrize(h);
    sym.symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::NEG_INFINITY, |acc, &ev| acc.max(ev))
}

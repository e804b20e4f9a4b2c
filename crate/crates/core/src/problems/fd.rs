//! Central finite differences used to validate the hand-coded oracles.

use nalgebra::{DMatrix, DVector};

use crate::dataset::Sample;
use crate::geometry::ParamVector;
use crate::problems::ProblemSpec;

/// Central-difference gradient of the per-sample loss.
pub fn fd_sample_grad(spec: &ProblemSpec, w: &ParamVector, z: &Sample, h: f64) -> DVector<f64> {
    let dim = spec.dim();
    let mut out = DVector::zeros(dim);
    let mut wp = w.as_dvector().clone();
    for i in 0..dim {
        let orig = wp[i];
        wp[i] = orig + h;
        let fp = spec.family().sample_loss(&wp, z);
        wp[i] = orig - h;
        let fm = spec.family().sample_loss(&wp, z);
        wp[i] = orig;
        out[i] = (fp - fm) / (2.0 * h);
    }
    out
}

/// Central-difference Hessian: differences of the analytic gradient.
pub fn fd_sample_hess(spec: &ProblemSpec, w: &ParamVector, z: &Sample, h: f64) -> DMatrix<f64> {
    let dim = spec.dim();
    let mut out = DMatrix::zeros(dim, dim);
    let mut wp = w.as_dvector().clone();
    let mut gp = DVector::zeros(dim);
    let mut gm = DVector::zeros(dim);
    for i in 0..dim {
        let orig = wp[i];
        wp[i] = orig + h;
        spec.family().sample_grad_into(&wp, z, &mut gp);
        wp[i] = orig - h;
        spec.family().sample_grad_into(&wp, z, &mut gm);
        wp[i] = orig;
        for j in 0..dim {
            out[(i, j)] = (gp[j] - gm[j]) / (2.0 * h);
        }
    }
    // enforce symmetry of the numerical estimate
    crate::linalg::symmetrize(&out)
}

/// Relative error with an absolute floor for near-zero references.
pub fn relative_error(measured: f64, reference: f64) -> f64 {
    (measured - reference).abs() / reference.abs().max(1.0)
}

/// Check the gradient oracle at `points` random interior points; returns the
/// worst relative error.
pub fn check_gradients(spec: &ProblemSpec, seed: u64, points: usize) -> f64 {
    let mut stream = crate::rng::stream(seed);
    let data = spec.sample_dataset(crate::rng::derive_seed(seed, &[1]), points.max(4));
    let mut worst = 0.0f64;
    for (i, z) in data.iter().enumerate().take(points) {
        let w = ParamVector::from_dvector(crate::rng::uniform_ball(
            &mut stream,
            spec.domain().center().as_dvector(),
            0.9 * spec.domain().radius(),
        ));
        let analytic = spec.sample_grad(&w, z);
        let numeric = fd_sample_grad(spec, &w, z, 1e-6);
        let scale = analytic.norm().max(1.0);
        let err = (analytic.as_dvector() - &numeric).norm() / scale;
        worst = worst.max(err);
        let _ = i;
    }
    worst
}

/// Check the Hessian oracle; returns worst relative error in spectral norm.
pub fn check_hessians(spec: &ProblemSpec, seed: u64, points: usize) -> f64 {
    let mut stream = crate::rng::stream(seed.wrapping_add(1));
    let data = spec.sample_dataset(crate::rng::derive_seed(seed, &[2]), points.max(4));
    let mut worst = 0.0f64;
    for z in data.iter().take(points) {
        let w = ParamVector::from_dvector(crate::rng::uniform_ball(
            &mut stream,
            spec.domain().center().as_dvector(),
            0.9 * spec.domain().radius(),
        ));
        let analytic = spec.sample_hess(&w, z);
        let numeric = fd_sample_hess(spec, &w, z, 1e-5);
        let scale = crate::linalg::spectral_norm_sym(&analytic).max(1.0);
        let err = crate::linalg::spectral_norm_sym(&(&analytic - &numeric)) / scale;
        worst = worst.max(err);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_double_well, make_quadratic_mean};

    #[test]
    fn quadratic_oracles_match_differences() {
        let spec = make_quadratic_mean(3, ParamVector::zeros(3), 1.0).unwrap();
        assert!(check_gradients(&spec, 10, 20) < 1e-5);
        assert!(check_hessians(&spec, 10, 20) < 1e-4);
    }

    #[test]
    fn double_well_oracles_match_differences() {
        let spec = make_double_well(2, 0.5, 0.05, 0.05, 3).unwrap();
        assert!(check_gradients(&spec, 11, 20) < 1e-5);
        assert!(check_hessians(&spec, 11, 20) < 1e-4);
    }
}

//! Numerical certification of the smoothness/landscape constants on a grid.
//!
//! Sups are taken over a grid of the domain crossed with support probes and
//! inflated by 5%; floors (lambda, alpha, beta) are deflated by 5%. The
//! resulting bundle records the grid it was computed on.

use nalgebra::{DMatrix, DVector};

use crate::constants::{ConstantsBundle, GridInfo};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::geometry::ParamVector;
use crate::linalg;
use crate::problems::{PopulationMode, ProblemSpec};
use crate::rng;

const GRID_CAP: usize = 10_000_000;
const SCAN_CAP: usize = 20_000;
const GRAD_PROBES: usize = 32;
const HESS_PROBES: usize = 12;
const PAIR_PROBES: usize = 8;
const MC_SCAN_SUBSAMPLE: usize = 256;
const INFLATE: f64 = 1.05;
const DEFLATE: f64 = 0.95;

/// Points of the axis-aligned grid that fall inside the domain ball.
fn interior_grid(spec: &ProblemSpec, resolution: f64) -> Result<Vec<DVector<f64>>> {
    let dim = spec.dim();
    let r = spec.domain().radius();
    let c = spec.domain().center().as_dvector();
    let pts_per_dim = (spec.domain().diameter() / resolution).floor() as usize + 1;
    let cube: f64 = (pts_per_dim as f64).powi(dim as i32);
    if cube > GRID_CAP as f64 {
        return Err(Error::usage(format!(
            "certify: grid of {pts_per_dim}^{dim} = {cube:.3e} points exceeds cap {GRID_CAP}; \
             use a coarser grid_resolution"
        )));
    }
    let mut points = Vec::new();
    let mut idx = vec![0usize; dim];
    loop {
        let w = DVector::from_fn(dim, |i, _| {
            c[i] - r + idx[i] as f64 * resolution
        });
        if (&w - c).norm() <= r {
            points.push(w);
        }
        // advance multi-index
        let mut carry = 0;
        loop {
            idx[carry] += 1;
            if idx[carry] < pts_per_dim {
                break;
            }
            idx[carry] = 0;
            carry += 1;
            if carry == dim {
                return Ok(points);
            }
        }
    }
}

/// Deterministic points on the boundary sphere, density tied to resolution.
fn boundary_grid(spec: &ProblemSpec, resolution: f64) -> Vec<DVector<f64>> {
    let dim = spec.dim();
    let r = spec.domain().radius();
    let c = spec.domain().center().as_dvector();
    let mut points = Vec::new();
    match dim {
        1 => {
            points.push(DVector::from_vec(vec![c[0] - r]));
            points.push(DVector::from_vec(vec![c[0] + r]));
        }
        2 => {
            let count = ((std::f64::consts::TAU * r / resolution).ceil() as usize)
                .clamp(16, SCAN_CAP);
            for k in 0..count {
                let phi = std::f64::consts::TAU * k as f64 / count as f64;
                points.push(DVector::from_vec(vec![
                    c[0] + r * phi.cos(),
                    c[1] + r * phi.sin(),
                ]));
            }
        }
        3 => {
            // Fibonacci sphere
            let count = ((4.0 * std::f64::consts::PI * r * r / (resolution * resolution)).ceil()
                as usize)
                .clamp(64, SCAN_CAP);
            let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
            for k in 0..count {
                let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                let rho = (1.0 - z * z).sqrt();
                let phi = std::f64::consts::TAU * (k as f64 / golden).fract();
                points.push(DVector::from_vec(vec![
                    c[0] + r * rho * phi.cos(),
                    c[1] + r * rho * phi.sin(),
                    c[2] + r * z,
                ]));
            }
        }
        _ => {
            // axis points plus seeded directions
            for i in 0..dim {
                for sign in [-1.0, 1.0] {
                    let mut w = c.clone();
                    w[i] += sign * r;
                    points.push(w);
                }
            }
            let mut stream = rng::stream(0x5EED_B0DA);
            while points.len() < 4096 {
                points.push(c + rng::unit_sphere(&mut stream, dim) * r);
            }
        }
    }
    points
}

/// Population view used by the alpha/beta scans; for Monte-Carlo oracles the
/// frozen held-out set is subsampled to keep the grid scan affordable.
struct PopulationView<'a> {
    spec: &'a ProblemSpec,
    subsample: Option<Dataset>,
}

impl<'a> PopulationView<'a> {
    fn new(spec: &'a ProblemSpec) -> Self {
        let subsample = match spec.population().mode {
            PopulationMode::Analytic => None,
            PopulationMode::MonteCarlo { .. } => {
                let heldout = spec
                    .population()
                    .heldout_data()
                    .expect("MC oracle has frozen heldout");
                let take = heldout.len().min(MC_SCAN_SUBSAMPLE);
                Some(Dataset::new(heldout.samples()[..take].to_vec()).unwrap())
            }
        };
        PopulationView { spec, subsample }
    }

    fn grad_norm(&self, w: &ParamVector) -> f64 {
        match &self.subsample {
            None => self.spec.population_grad(w).norm(),
            Some(sub) => self.spec.empirical(sub).grad_norm(w),
        }
    }

    fn grad(&self, w: &ParamVector) -> ParamVector {
        match &self.subsample {
            None => self.spec.population_grad(w),
            Some(sub) => self.spec.empirical(sub).grad(w),
        }
    }

    fn sigma_min(&self, w: &ParamVector) -> f64 {
        let h = match &self.subsample {
            None => self.spec.population_hess(w),
            Some(sub) => self.spec.empirical(sub).hess(w),
        };
        linalg::smallest_eigenpair(&h).map(|(ev, _)| ev).unwrap_or(f64::NAN)
    }
}

pub fn certify_constants(spec: &ProblemSpec, grid_resolution: f64) -> Result<ConstantsBundle> {
    if !(grid_resolution > 0.0) {
        return Err(Error::usage("certify: grid_resolution must be positive"));
    }
    let dim = spec.dim();
    let interior = interior_grid(spec, grid_resolution)?;
    let boundary = boundary_grid(spec, grid_resolution);
    let probe_seed = rng::derive_seed(0xCE47, &[dim as u64]);
    let probes = spec.family().support_probes(probe_seed, GRAD_PROBES);
    let hess_probes = &probes[..probes.len().min(HESS_PROBES)];
    let pair_probes = &probes[..probes.len().min(PAIR_PROBES)];

    let mut l0 = 0.0f64;
    let mut l1 = 0.0f64;
    let mut loss_max = 0.0f64;
    let mut loss_min = f64::INFINITY;

    let mut grad_buf = DVector::zeros(dim);
    let mut hess_buf = DMatrix::zeros(dim, dim);

    let all_points = interior.iter().chain(boundary.iter());
    for w in all_points {
        for z in &probes {
            let f = spec.family().sample_loss(w, z);
            loss_max = loss_max.max(f);
            loss_min = loss_min.min(f);
            spec.family().sample_grad_into(w, z, &mut grad_buf);
            l0 = l0.max(grad_buf.norm());
        }
        for z in hess_probes {
            spec.family().sample_hess_into(w, z, &mut hess_buf);
            l1 = l1.max(linalg::spectral_norm_sym(&hess_buf));
        }
    }
    if loss_min < -1e-9 {
        return Err(Error::Certification(format!(
            "negative loss {loss_min:.3e} observed on the grid"
        )));
    }

    // Hessian Lipschitz constant from difference quotients along grid axes.
    let mut l2 = 0.0f64;
    let mut hess_buf2 = DMatrix::zeros(dim, dim);
    // stride the pair scan so it stays within the point cap
    let stride = (interior.len() / SCAN_CAP).max(1);
    for w in interior.iter().step_by(stride) {
        for axis in 0..dim {
            let mut w2 = w.clone();
            w2[axis] += grid_resolution;
            if (&w2 - spec.domain().center().as_dvector()).norm() > spec.domain().radius() {
                continue;
            }
            for z in pair_probes {
                spec.family().sample_hess_into(w, z, &mut hess_buf);
                spec.family().sample_hess_into(&w2, z, &mut hess_buf2);
                let quot =
                    linalg::spectral_norm_sym(&(&hess_buf - &hess_buf2)) / grid_resolution;
                l2 = l2.max(quot);
            }
        }
    }

    // Hessian floor at the listed population minima, deflated.
    let mut lambda = f64::INFINITY;
    for m in spec.population().local_minima() {
        let h = spec.population_hess(m);
        let (sigma_min, _) = linalg::smallest_eigenpair(&h)?;
        lambda = lambda.min(sigma_min);
    }
    if !(lambda > 0.0) {
        return Err(Error::Certification(format!(
            "Hessian floor at population minima is {lambda:.3e}; non-degenerate minima required"
        )));
    }
    let lambda_cert = DEFLATE * lambda;

    // Strict-saddle threshold: the curvature dichotomy |sigma_min| >= lambda/2
    // must hold wherever the population gradient is below alpha. alpha is the
    // largest such threshold observed on the grid, deflated.
    let view = PopulationView::new(spec);
    let dichotomy_level = lambda_cert / 2.0;
    let scan_stride = (interior.len() / SCAN_CAP).max(1);
    let mut field = Vec::new();
    for w in interior.iter().step_by(scan_stride) {
        let p = ParamVector::from_dvector(w.clone());
        field.push((view.grad_norm(&p), view.sigma_min(&p), w.clone()));
    }
    let boundary_grads: Vec<f64> = boundary
        .iter()
        .map(|w| view.grad_norm(&ParamVector::from_dvector(w.clone())))
        .collect();
    let alpha_cert = alpha_from_field(&field, &boundary_grads, dichotomy_level)?;

    // Boundary inner-product floor minus the worst-case empirical deviation.
    let mut boundary_inner = f64::INFINITY;
    for w in &boundary {
        let p = ParamVector::from_dvector(w.clone());
        let g = view.grad(&p);
        let outward = (w - spec.domain().center().as_dvector()) / spec.domain().radius();
        boundary_inner = boundary_inner.min(g.as_dvector().dot(&outward));
    }
    let beta_raw = DEFLATE * (boundary_inner - spec.worst_grad_deviation());
    let l1_cert = INFLATE * l1;
    let beta = if beta_raw > 0.0 {
        Some(beta_raw.min(DEFLATE * l1_cert))
    } else {
        None
    };

    let bundle = ConstantsBundle::new(
        INFLATE * l0,
        l1_cert,
        INFLATE * l2,
        lambda_cert.min(l1_cert),
        alpha_cert,
        beta,
        INFLATE * loss_max,
        spec.domain().diameter(),
        spec.population().local_minima().len(),
    )?;
    Ok(bundle.with_grid(GridInfo {
        resolution: grid_resolution,
        interior_points: interior.len(),
        boundary_points: boundary.len(),
        support_probes: probes.len(),
    }))
}

/// Largest gradient threshold compatible with the curvature dichotomy on a
/// scanned field of (grad_norm, sigma_min, point) triples.
pub(crate) fn alpha_from_field(
    field: &[(f64, f64, DVector<f64>)],
    boundary_grads: &[f64],
    dichotomy_level: f64,
) -> Result<f64> {
    let mut alpha = f64::INFINITY;
    for (grad, sigma, w) in field {
        if sigma.abs() < dichotomy_level {
            if *grad <= 1e-9 {
                return Err(Error::Certification(format!(
                    "strict-saddle assumption violated at {:?}: gradient {grad:.3e} with \
                     |sigma_min| = {:.3e} below dichotomy level {dichotomy_level:.3e}",
                    w.as_slice(),
                    sigma.abs()
                )));
            }
            alpha = alpha.min(*grad);
        }
    }
    for g in boundary_grads {
        alpha = alpha.min(*g);
    }
    if !alpha.is_finite() {
        return Err(Error::Certification(
            "alpha scan saw no boundary points".into(),
        ));
    }
    Ok(DEFLATE * alpha)
}

/// Pairwise-distance check of the listed population minima against the
/// separation implied by a Hessian floor lambda and Hessian Lipschitz L2.
#[derive(Debug, Clone)]
pub struct SeparationReport {
    pub distances: Vec<(usize, usize, f64)>,
    pub bound: f64,
    pub pass: bool,
}

pub fn validate_minima_separation(spec: &ProblemSpec) -> SeparationReport {
    let c = spec.constants();
    let minima = spec.population().local_minima();
    let bound = if c.l2 > 0.0 { 4.0 * c.lambda / c.l2 } else { 0.0 };
    let mut distances = Vec::new();
    let mut pass = true;
    for i in 0..minima.len() {
        for j in (i + 1)..minima.len() {
            let d = minima[i].distance(&minima[j]);
            if d < bound {
                pass = false;
            }
            distances.push((i, j, d));
        }
    }
    SeparationReport {
        distances,
        bound,
        pass,
    }
}

//! Empirical-risk landscape probes: locating trapped empirical minima,
//! censusing all minima by multistart descent, curvature field maps, and the
//! gradient-distance error bound.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::geometry::{BallDomain, ParamVector};
use crate::linalg;
use crate::optimizers::check_sosp;
use crate::problems::ProblemSpec;
use crate::rng;

/// Convergence tolerance on the projected-gradient step norm.
const STEP_TOL: f64 = 1e-10;
/// Membership tolerances for the minima census.
const CENSUS_GRAD_TOL: f64 = 1e-7;
const CENSUS_CURV_TOL: f64 = 1e-7;

/// Result of the trapped-minimum search around one population minimum.
#[derive(Debug, Clone)]
pub struct LocatedMin {
    pub point: ParamVector,
    /// Interior of the search ball, hence a genuine local minimum of the
    /// empirical risk.
    pub interior: bool,
    pub steps: usize,
    pub grad_norm: f64,
}

/// Search ball radius around a population minimum: lambda / (4 L2), or the
/// whole domain when L2 = 0.
pub fn concentration_radius(spec: &ProblemSpec) -> f64 {
    let c = spec.constants();
    if c.l2 > 0.0 {
        c.lambda / (4.0 * c.l2)
    } else {
        f64::INFINITY
    }
}

/// Minimize the empirical risk over the closed ball around population
/// minimum k by projected gradient descent from the minimum itself.
pub fn locate_empirical_min_near(
    spec: &ProblemSpec,
    data: &Dataset,
    k: usize,
) -> Result<LocatedMin> {
    let minima = spec.population().local_minima();
    if k >= minima.len() {
        return Err(Error::usage(format!(
            "locate_empirical_min_near: index {k} out of range for K = {}",
            minima.len()
        )));
    }
    let center = minima[k].clone();
    let radius = concentration_radius(spec);
    let ball = if radius.is_finite() {
        BallDomain::new(center.clone(), radius)?
    } else {
        spec.domain().clone()
    };
    let emp = spec.empirical(data);
    let step = 1.0 / spec.constants().l1;
    let mut w = center;
    let mut grad = DVector::zeros(spec.dim());
    let cap = 100_000;
    for iter in 0..cap {
        emp.grad_into(&w, &mut grad);
        let candidate = ParamVector::from_dvector(w.as_dvector() - &grad * step);
        let next = ball.project(&candidate)?;
        let moved = next.distance(&w);
        w = next;
        if moved <= STEP_TOL {
            let grad_norm = emp.grad_norm(&w);
            let interior = ball.boundary_gap(&w) > 1e-9;
            return Ok(LocatedMin {
                point: w,
                interior,
                steps: iter + 1,
                grad_norm,
            });
        }
    }
    Err(Error::NoConvergence(format!(
        "locate_empirical_min_near: step cap {cap} reached, last gradient norm {:.3e}",
        emp.grad_norm(&w)
    )))
}

/// Census of all empirical local minima found by multistart projected
/// descent.
#[derive(Debug, Clone)]
pub struct MinimaCensus {
    /// Deduplicated interior second-order stationary points, sorted by
    /// empirical risk then lexicographic position.
    pub found_minima: Vec<ParamVector>,
    pub found_risks: Vec<f64>,
    /// Per population minimum k: (census index, distance) of its match.
    pub matched: Vec<Option<(usize, f64)>>,
    /// Census indices not matched to any population minimum.
    pub unmatched_found: Vec<usize>,
    pub starts_used: usize,
    pub unconverged: usize,
    pub pass: bool,
    pub warning: Option<String>,
}

/// Default dedup radius: min(lambda / 8 L2, 0.05 D) - half the concentration
/// radius, well below the minima separation.
pub fn default_merge_radius(spec: &ProblemSpec) -> f64 {
    let c = spec.constants();
    let half_conc = if c.l2 > 0.0 {
        c.lambda / (8.0 * c.l2)
    } else {
        f64::INFINITY
    };
    half_conc.min(0.05 * c.diameter)
}

/// Halton low-discrepancy sequence point in [0, 1)^dim (bases 2, 3, 5).
fn halton_point(index: usize, dim: usize) -> Vec<f64> {
    const BASES: [usize; 3] = [2, 3, 5];
    (0..dim)
        .map(|axis| {
            let base = BASES[axis % BASES.len()];
            let mut f = 1.0;
            let mut r = 0.0;
            let mut i = index + 1;
            while i > 0 {
                f /= base as f64;
                r += f * (i % base) as f64;
                i /= base;
            }
            r
        })
        .collect()
}

/// Multistart descent census. Starts are Halton points filtered to the
/// domain ball; boundary terminals are excluded (interior minima only).
/// `_seed` is part of the call contract but unused: the low-discrepancy
/// start set is deterministic by construction.
pub fn minima_census(
    spec: &ProblemSpec,
    data: &Dataset,
    starts: usize,
    merge_radius: f64,
    _seed: u64,
) -> Result<MinimaCensus> {
    let dim = spec.dim();
    if dim > 3 {
        return Err(Error::usage(
            "minima_census: exhaustive multistart is honest only for d <= 3",
        ));
    }
    if starts < 200 {
        return Err(Error::usage("minima_census: starts >= 200 required"));
    }
    let domain = spec.domain();
    let r = domain.radius();
    let c0 = domain.center().as_dvector();

    let mut start_points = Vec::with_capacity(starts);
    let mut halton_idx = 0;
    while start_points.len() < starts {
        let h = halton_point(halton_idx, dim);
        halton_idx += 1;
        let w = DVector::from_fn(dim, |i, _| c0[i] - r + 2.0 * r * h[i]);
        if (&w - c0).norm() <= r {
            start_points.push(ParamVector::from_dvector(w));
        }
    }

    let step = 1.0 / spec.constants().l1;
    let cap = 20_000;
    let shared_emp = spec.empirical(data);
    let results: Vec<Option<ParamVector>> = start_points
        .par_iter()
        .map(|w0| {
            let emp = &shared_emp;
            let mut w = w0.clone();
            let mut grad = DVector::zeros(dim);
            for _ in 0..cap {
                emp.grad_into(&w, &mut grad);
                let candidate = ParamVector::from_dvector(w.as_dvector() - &grad * step);
                let next = match domain.project(&candidate) {
                    Ok(p) => p,
                    Err(_) => return None,
                };
                let moved = next.distance(&w);
                w = next;
                if moved <= STEP_TOL {
                    return Some(w);
                }
            }
            None
        })
        .collect();

    let unconverged = results.iter().filter(|r| r.is_none()).count();
    let emp = spec.empirical(data);
    // filter to interior second-order stationary points
    let mut candidates: Vec<(f64, ParamVector)> = Vec::new();
    for w in results.into_iter().flatten() {
        if domain.boundary_gap(&w) <= 1e-8 {
            continue;
        }
        let (is_sosp, _) = check_sosp(spec, data, &w, CENSUS_GRAD_TOL, CENSUS_CURV_TOL)?;
        if is_sosp {
            candidates.push((emp.risk(&w), w));
        }
    }
    // deterministic order: by risk, then lexicographic coordinates
    candidates.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then_with(|| a.1.as_slice().partial_cmp(b.1.as_slice()).unwrap())
    });
    // dedup within merge_radius, keeping the lower-risk representative
    let mut found: Vec<(f64, ParamVector)> = Vec::new();
    for (risk, w) in candidates {
        if found.iter().all(|(_, kept)| kept.distance(&w) >= merge_radius) {
            found.push((risk, w));
        }
    }

    // match each found minimum to its nearest population minimum
    let pop_minima = spec.population().local_minima();
    let radius_limit = if spec.constants().l2 > 0.0 {
        concentration_radius(spec)
    } else {
        0.1 * spec.constants().diameter
    };
    let mut matched: Vec<Option<(usize, f64)>> = vec![None; pop_minima.len()];
    let mut unmatched_found = Vec::new();
    for (fi, (_, w)) in found.iter().enumerate() {
        let (k_best, dist) = pop_minima
            .iter()
            .enumerate()
            .map(|(k, m)| (k, w.distance(m)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .expect("at least one population minimum");
        if dist <= radius_limit && matched[k_best].is_none() {
            matched[k_best] = Some((fi, dist));
        } else {
            unmatched_found.push(fi);
        }
    }
    let pass = found.len() == pop_minima.len()
        && matched.iter().all(|m| m.is_some())
        && unmatched_found.is_empty();
    let warning = if unconverged * 20 > starts {
        Some(format!(
            "{unconverged}/{starts} multistart descents failed to converge"
        ))
    } else {
        None
    };
    let (found_risks, found_minima) = found.into_iter().unzip();
    Ok(MinimaCensus {
        found_minima,
        found_risks,
        matched,
        unmatched_found,
        starts_used: starts,
        unconverged,
        pass,
        warning,
    })
}

/// Gradient-distance error bound check around the census minima.
///
/// Two candidate factors on the gradient norm are tracked: 2/lambda, which
/// is what lambda/2-strong convexity near the minima actually yields, and a
/// lambda/4 variant that sometimes gets quoted for this inequality. The
/// 2/lambda form is asserted; violations of the lambda/4 form are counted
/// and reported but not asserted.
#[derive(Debug, Clone)]
pub struct ErrorBoundReport {
    pub samples: usize,
    pub proof_violations: usize,
    pub statement_violations: usize,
    /// max over qualifying probes of distance / ((2/lambda) grad norm).
    pub max_proof_ratio: f64,
}

pub fn error_bound_check(
    spec: &ProblemSpec,
    data: &Dataset,
    census: &MinimaCensus,
    probes: usize,
    seed: u64,
) -> Result<ErrorBoundReport> {
    if !census.pass {
        return Err(Error::usage("error_bound_check: census must have passed"));
    }
    let c = spec.constants();
    let grad_limit = c.alpha * c.alpha / (2.0 * c.l0);
    let curv_floor = -c.lambda / 2.0;
    // qualifying probes cluster in tiny balls around the minima where the
    // gradient stays below alpha^2 / (2 L0); sample radii accordingly
    let sample_radius = (2.0 * grad_limit / c.lambda).min(spec.domain().radius());
    let emp = spec.empirical(data);
    let mut stream = rng::stream(seed);
    let mut samples = 0;
    let mut proof_violations = 0;
    let mut statement_violations = 0;
    let mut max_proof_ratio = 0.0f64;
    let max_attempts = probes.saturating_mul(50);
    let mut attempts = 0;
    while samples < probes && attempts < max_attempts {
        attempts += 1;
        let anchor = &census.found_minima[attempts % census.found_minima.len()];
        let w = ParamVector::from_dvector(rng::uniform_ball(
            &mut stream,
            anchor.as_dvector(),
            sample_radius,
        ));
        if !spec.domain().contains(&w) {
            continue;
        }
        let grad_norm = emp.grad_norm(&w);
        if grad_norm >= grad_limit {
            continue;
        }
        let hess = emp.hess(&w);
        let (sigma_min, _) = linalg::smallest_eigenpair(&hess)?;
        if sigma_min <= curv_floor {
            continue;
        }
        samples += 1;
        let dist = census
            .found_minima
            .iter()
            .map(|m| w.distance(m))
            .fold(f64::INFINITY, f64::min);
        let proof_bound = 2.0 / c.lambda * grad_norm;
        let statement_bound = c.lambda * grad_norm / 4.0;
        if dist > proof_bound + 1e-12 {
            proof_violations += 1;
        }
        if dist > statement_bound + 1e-12 {
            statement_violations += 1;
        }
        if proof_bound > 0.0 {
            max_proof_ratio = max_proof_ratio.max(dist / proof_bound);
        }
    }
    Ok(ErrorBoundReport {
        samples,
        proof_violations,
        statement_violations,
        max_proof_ratio,
    })
}

/// Dense (gradient norm, smallest Hessian eigenvalue) field over a grid.
#[derive(Debug, Clone)]
pub struct FieldRow {
    pub point: Vec<f64>,
    pub grad_norm: f64,
    pub sigma_min: f64,
}

#[derive(Debug, Clone)]
pub struct FieldReport {
    pub rows: Vec<FieldRow>,
    /// Row indices violating the curvature dichotomy at (alpha, lambda/2)
    /// with 5% slack.
    pub violations: Vec<usize>,
    pub pass: bool,
}

/// Evaluate the field on the population risk (`data = None`) or an empirical
/// risk (`data = Some(S)`). The dichotomy threshold is lambda/2: the level at
/// which near-stationary population curvature separates minima from saddles
/// once empirical deviations up to lambda/4 are allowed for.
pub fn min_eig_field(
    spec: &ProblemSpec,
    data: Option<&Dataset>,
    grid_resolution: f64,
) -> Result<FieldReport> {
    let dim = spec.dim();
    if dim > 3 {
        return Err(Error::usage("min_eig_field: d <= 3 required"));
    }
    if !(grid_resolution > 0.0) {
        return Err(Error::usage("min_eig_field: positive resolution required"));
    }
    let c = spec.constants();
    let domain = spec.domain();
    let r = domain.radius();
    let center = domain.center().as_dvector();
    let pts = (domain.diameter() / grid_resolution).floor() as usize + 1;
    let emp = data.map(|d| spec.empirical(d));

    let mut rows = Vec::new();
    let mut idx = vec![0usize; dim];
    'outer: loop {
        let w = DVector::from_fn(dim, |i, _| center[i] - r + idx[i] as f64 * grid_resolution);
        if (&w - center).norm() <= r {
            let p = ParamVector::from_dvector(w.clone());
            let (grad_norm, hess) = match &emp {
                Some(e) => (e.grad_norm(&p), e.hess(&p)),
                None => (spec.population_grad(&p).norm(), spec.population_hess(&p)),
            };
            let (sigma_min, _) = linalg::smallest_eigenpair(&hess)?;
            rows.push(FieldRow {
                point: w.as_slice().to_vec(),
                grad_norm,
                sigma_min,
            });
        }
        let mut carry = 0;
        loop {
            idx[carry] += 1;
            if idx[carry] < pts {
                break;
            }
            idx[carry] = 0;
            carry += 1;
            if carry == dim {
                break 'outer;
            }
        }
    }

    let threshold = 0.95 * (c.lambda / 2.0);
    let violations: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter(|(_, row)| row.grad_norm <= c.alpha && row.sigma_min.abs() < threshold)
        .map(|(i, _)| i)
        .collect();
    let pass = violations.is_empty();
    Ok(FieldReport {
        rows,
        violations,
        pass,
    })
}

/// Empirical-risk gap between the census minimum nearest to w and the best
/// census minimum.
pub fn opt_gap_to_global(
    spec: &ProblemSpec,
    data: &Dataset,
    w: &ParamVector,
    census: &MinimaCensus,
) -> Result<f64> {
    if census.found_minima.is_empty() {
        return Err(Error::usage("opt_gap_to_global: empty census"));
    }
    let emp = spec.empirical(data);
    let nearest = census
        .found_minima
        .iter()
        .min_by(|a, b| w.distance(a).partial_cmp(&w.distance(b)).unwrap())
        .unwrap();
    let best = census
        .found_risks
        .iter()
        .fold(f64::INFINITY, |acc, &v| acc.min(v));
    Ok((emp.risk(nearest) - best).max(0.0))
}

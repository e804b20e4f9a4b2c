//! Saddle-escaping projected gradient descent on the unit ball.
//!
//! Branch structure per step at w with empirical gradient g and tolerance
//! eps:
//!   ||g|| >= eps, ||w|| = 1 (within 1e-10)  ->  w' = (1 - beta/L1) w
//!   ||g|| >= eps, interior                  ->  w' = project(w - g/L1)
//!   ||g|| <  eps, sigma_min <= -eps^(1/3)   ->  negative-curvature step
//!   otherwise                               ->  halt: second-order stationary
//!
//! The negative-curvature step moves to w' = sigma u + (1 - sigma) w with
//! sigma = 3 L1 eps^(1/3) / (2 beta L2) and u = w +- (beta / 2 L1) v along
//! the smallest-eigenvalue direction v, the sign chosen to stay inside the
//! ball (canonical orientation first).

use nalgebra::{DMatrix, DVector};

use crate::constants::ConstantsBundle;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::geometry::ParamVector;
use crate::linalg;
use crate::problems::ProblemSpec;

use super::{Trace, TracePoint};

const BOUNDARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HaltReason {
    SospFound,
    StepCap,
}

#[derive(Debug, Clone)]
pub struct PgdConfig {
    pub epsilon: f64,
    pub constants: ConstantsBundle,
    pub max_steps: usize,
    pub record_stride: usize,
}

impl PgdConfig {
    /// Validates the tolerance against the admissible range
    /// eps <= min{ 8 beta^3 L2^3 / 27 L1^3, 27 / (64^3 L2^3), beta / 2 }.
    pub fn new(epsilon: f64, constants: ConstantsBundle) -> Result<Self> {
        let cap = Self::max_admissible_epsilon(&constants)?;
        if !(epsilon > 0.0) {
            return Err(Error::usage("PgdConfig: epsilon must be > 0"));
        }
        if epsilon > cap {
            return Err(Error::usage(format!(
                "PgdConfig: epsilon {epsilon:.3e} exceeds admissible cap {cap:.3e}"
            )));
        }
        Ok(PgdConfig {
            epsilon,
            constants,
            max_steps: 1_000_000,
            record_stride: 1,
        })
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn with_record_stride(mut self, record_stride: usize) -> Self {
        self.record_stride = record_stride.max(1);
        self
    }

    pub fn max_admissible_epsilon(constants: &ConstantsBundle) -> Result<f64> {
        let beta = constants.beta_required()?;
        if constants.l2 <= 0.0 {
            return Err(Error::usage(
                "PgdConfig: L2 > 0 required (the curvature step degenerates otherwise)",
            ));
        }
        let c1 = 8.0 * beta.powi(3) * constants.l2.powi(3) / (27.0 * constants.l1.powi(3));
        let c2 = 27.0 / (64f64.powi(3) * constants.l2.powi(3));
        let c3 = beta / 2.0;
        Ok(c1.min(c2).min(c3))
    }
}

/// Second-order stationarity measurements at a point.
#[derive(Debug, Clone, Copy)]
pub struct SospMeasurements {
    pub grad_norm: f64,
    pub sigma_min: f64,
}

/// True iff ||grad R_S(w)|| <= eps and sigma_min(hess R_S(w)) >= -gamma.
pub fn check_sosp(
    spec: &ProblemSpec,
    data: &Dataset,
    w: &ParamVector,
    eps: f64,
    gamma: f64,
) -> Result<(bool, SospMeasurements)> {
    if !spec.domain().contains(w) {
        return Err(Error::usage("check_sosp: w outside the domain"));
    }
    let emp = spec.empirical(data);
    let grad_norm = emp.grad_norm(w);
    let hess = emp.hess(w);
    let (sigma_min, _) = linalg::smallest_eigenpair(&hess)?;
    Ok((
        grad_norm <= eps && sigma_min >= -gamma,
        SospMeasurements {
            grad_norm,
            sigma_min,
        },
    ))
}

/// The exploratory point u of the negative-curvature branch: a step of
/// beta / (2 L1) along the smallest-eigenvalue direction of H, oriented to
/// stay inside the unit ball.
pub fn negative_curvature_step(
    w: &ParamVector,
    hess: &DMatrix<f64>,
    constants: &ConstantsBundle,
    epsilon: f64,
) -> Result<ParamVector> {
    let beta = constants.beta_required()?;
    let (sigma_min, v) = linalg::smallest_eigenpair(hess)?;
    if sigma_min > -epsilon.cbrt() {
        return Err(Error::usage(format!(
            "negative_curvature_step: sigma_min {sigma_min:.3e} above -eps^(1/3)"
        )));
    }
    let scale = beta / (2.0 * constants.l1);
    for dir in [1.0, -1.0] {
        let u = ParamVector::from_dvector(w.as_dvector() + v.as_dvector() * (dir * scale));
        if u.norm() <= 1.0 + 1e-12 {
            return Ok(u);
        }
    }
    // contradicts the distance-to-boundary argument; certified constants are
    // inconsistent with this landscape
    Err(Error::Internal(format!(
        "negative_curvature_step: neither sign of the eigenvector step stays in the ball \
         (||w|| = {}, step = {scale:.3e})",
        w.norm()
    )))
}

/// Run the saddle-escaping optimizer until it either certifies an
/// (eps, eps^(1/3)) second-order stationary point or hits the step cap.
pub fn run_pgd_sosp(
    spec: &ProblemSpec,
    data: &Dataset,
    w0: &ParamVector,
    config: &PgdConfig,
) -> Result<(Trace, HaltReason)> {
    let domain = spec.domain();
    if (domain.radius() - 1.0).abs() > 1e-12 || domain.center().norm() > 1e-12 {
        return Err(Error::usage(
            "run_pgd_sosp: the algorithm is defined on the unit ball at the origin",
        ));
    }
    if !domain.contains(w0) {
        return Err(Error::usage("run_pgd_sosp: w0 outside the domain"));
    }
    let c = &config.constants;
    let beta = c.beta_required()?;
    let eps = config.epsilon;
    let curvature_floor = -eps.cbrt();
    let mixing = 3.0 * c.l1 * eps.cbrt() / (2.0 * beta * c.l2);
    debug_assert!(mixing <= 1.0 + 1e-12, "admissible eps keeps sigma <= 1");

    let emp = spec.empirical(data);
    let mut w = w0.clone();
    let mut grad = DVector::zeros(spec.dim());
    let mut points = Vec::new();
    let mut halt = HaltReason::StepCap;
    let mut steps_taken = 0;

    for step in 0..=config.max_steps {
        emp.grad_into(&w, &mut grad);
        let grad_norm = grad.norm();
        if !grad_norm.is_finite() {
            return Err(Error::Diverged(format!(
                "run_pgd_sosp: non-finite gradient at step {step}"
            )));
        }
        let record = step % config.record_stride == 0;
        if record {
            points.push(TracePoint {
                step,
                iterate: w.clone(),
                emp_risk: emp.risk(&w),
                grad_norm,
            });
        }
        if step == config.max_steps {
            steps_taken = step;
            break;
        }
        if grad_norm >= eps {
            if w.norm() >= 1.0 - BOUNDARY_TOL {
                // boundary shrink
                w = ParamVector::from_dvector(w.as_dvector() * (1.0 - beta / c.l1));
            } else {
                let candidate =
                    ParamVector::from_dvector(w.as_dvector() - &grad * (1.0 / c.l1));
                w = domain.project(&candidate)?;
            }
        } else {
            let hess = emp.hess(&w);
            let (sigma_min, _) = linalg::smallest_eigenpair(&hess)?;
            if sigma_min <= curvature_floor {
                let u = negative_curvature_step(&w, &hess, c, eps)?;
                w = ParamVector::from_dvector(
                    u.as_dvector() * mixing + w.as_dvector() * (1.0 - mixing),
                );
            } else {
                halt = HaltReason::SospFound;
                steps_taken = step;
                if !record {
                    points.push(TracePoint {
                        step,
                        iterate: w.clone(),
                        emp_risk: emp.risk(&w),
                        grad_norm,
                    });
                }
                break;
            }
        }
    }

    // ensure the terminal state is recorded
    if points.last().map(|p| p.step) != Some(steps_taken) {
        emp.grad_into(&w, &mut grad);
        points.push(TracePoint {
            step: steps_taken,
            iterate: w.clone(),
            emp_risk: emp.risk(&w),
            grad_norm: grad.norm(),
        });
    }
    Ok((
        Trace {
            terminal: w,
            step_count: steps_taken,
            points,
            rng_seed: 0,
        },
        halt,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::make_double_well;

    fn well() -> ProblemSpec {
        let spec = make_double_well(2, 0.5, 0.02, 0.02, 13).unwrap();
        let cert = crate::problems::certify_constants(&spec, 0.02).unwrap();
        spec.with_constants(cert).unwrap()
    }

    fn config_for(spec: &ProblemSpec) -> PgdConfig {
        let eps = PgdConfig::max_admissible_epsilon(spec.constants()).unwrap();
        PgdConfig::new(eps, spec.constants().clone()).unwrap()
    }

    #[test]
    fn inadmissible_epsilon_is_rejected() {
        let spec = well();
        let cap = PgdConfig::max_admissible_epsilon(spec.constants()).unwrap();
        assert!(PgdConfig::new(cap * 1.5, spec.constants().clone()).is_err());
        assert!(PgdConfig::new(0.0, spec.constants().clone()).is_err());
    }

    #[test]
    fn escapes_the_central_saddle() {
        let spec = well();
        let data = spec.sample_dataset(41, 400);
        let config = config_for(&spec);
        let w0 = ParamVector::zeros(2);
        let (trace, halt) = run_pgd_sosp(&spec, &data, &w0, &config).unwrap();
        assert_eq!(halt, HaltReason::SospFound);
        let (ok, m) = check_sosp(
            &spec,
            &data,
            &trace.terminal,
            config.epsilon,
            config.epsilon.cbrt(),
        )
        .unwrap();
        assert!(ok, "terminal grad {} sigma {}", m.grad_norm, m.sigma_min);
        // lands near one of the four wells
        let nearest = spec
            .population()
            .local_minima()
            .iter()
            .map(|m| trace.terminal.distance(m))
            .fold(f64::INFINITY, f64::min);
        assert!(nearest < 0.05, "terminal {nearest} from nearest minimum");
    }

    #[test]
    fn sosp_start_halts_immediately() {
        let spec = well();
        let data = spec.sample_dataset(42, 400);
        let config = config_for(&spec);
        // converge first, then restart from the terminal
        let far = ParamVector::new(vec![0.4, 0.4]).unwrap();
        let (t1, _) = run_pgd_sosp(&spec, &data, &far, &config).unwrap();
        let (t2, halt) = run_pgd_sosp(&spec, &data, &t1.terminal, &config).unwrap();
        assert_eq!(halt, HaltReason::SospFound);
        assert!(t2.step_count <= 1);
    }

    #[test]
    fn step_cap_is_reported() {
        let spec = well();
        let data = spec.sample_dataset(43, 400);
        let config = config_for(&spec).with_max_steps(2);
        let w0 = ParamVector::new(vec![0.9, 0.1]).unwrap();
        let (_, halt) = run_pgd_sosp(&spec, &data, &w0, &config).unwrap();
        assert_eq!(halt, HaltReason::StepCap);
    }

    #[test]
    fn negative_curvature_step_matches_eigen_direction() {
        let spec = well();
        let c = spec.constants();
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 2.0]));
        let w = ParamVector::zeros(2);
        let u = negative_curvature_step(&w, &h, c, 1e-4).unwrap();
        let beta = c.beta.unwrap();
        let scale = beta / (2.0 * c.l1);
        assert!((u[0].abs() - scale).abs() < 1e-12);
        assert!(u[1].abs() < 1e-12);
        // canonical orientation: positive first coordinate when feasible
        assert!(u[0] > 0.0);
        // quadratic decrease value
        let delta = u.as_dvector() - w.as_dvector();
        let quad = (delta.transpose() * &h * &delta)[(0, 0)];
        assert!((quad + scale * scale).abs() < 1e-12);
    }

    #[test]
    fn curvature_step_requires_negative_curvature() {
        let spec = well();
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        let w = ParamVector::zeros(2);
        assert!(negative_curvature_step(&w, &h, spec.constants(), 1e-4).is_err());
    }

    #[test]
    fn saddle_step_quadratic_decrease_matches_eigenvalue() {
        // at the central stationary point the curvature step moves along the
        // most negative axis and its quadratic form equals (beta/2L1)^2 sigma_min
        let spec = well();
        let data = spec.sample_dataset(51, 400);
        let emp = spec.empirical(&data);
        let w = ParamVector::zeros(2);
        let hess = emp.hess(&w);
        let c = spec.constants();
        let eps = PgdConfig::max_admissible_epsilon(c).unwrap();
        let (sigma_min, _) = crate::linalg::smallest_eigenpair(&hess).unwrap();
        let u = negative_curvature_step(&w, &hess, c, eps).unwrap();
        let delta = u.as_dvector() - w.as_dvector();
        let quad = (delta.transpose() * &hess * &delta)[(0, 0)];
        let scale = c.beta.unwrap() / (2.0 * c.l1);
        assert!(
            (quad - scale * scale * sigma_min).abs() <= 1e-10,
            "quad {quad} vs {}",
            scale * scale * sigma_min
        );
        // and it meets the required decrease level of the curvature branch
        assert!(quad <= -c.beta.unwrap().powi(2) * eps.cbrt() / (8.0 * c.l1));
    }

    #[test]
    fn two_step_sufficient_decrease() {
        let spec = well();
        let data = spec.sample_dataset(52, 400);
        let c = spec.constants();
        let eps = PgdConfig::max_admissible_epsilon(c).unwrap();
        let config = PgdConfig::new(eps, c.clone()).unwrap();
        let floor = (eps * eps / (2.0 * c.l1)).min(9.0 * eps / (256.0 * c.l2 * c.l2));
        let mut stream = crate::rng::stream(4);
        for _ in 0..10 {
            let w0 = ParamVector::from_dvector(crate::rng::uniform_ball(
                &mut stream,
                spec.domain().center().as_dvector(),
                0.99,
            ));
            let (trace, halt) = run_pgd_sosp(&spec, &data, &w0, &config).unwrap();
            assert_eq!(halt, HaltReason::SospFound);
            let risks = trace.risks();
            // every pair of consecutive non-halting steps loses at least the
            // per-phase floor
            for k in 0..risks.len().saturating_sub(3) {
                let drop = risks[k] - risks[k + 2];
                assert!(
                    drop >= floor - 1e-9,
                    "steps {k}..{}: decrease {drop} below floor {floor}",
                    k + 2
                );
            }
        }
    }

    #[test]
    fn sosp_check_measures_gradient_and_curvature() {
        // zero-noise landscape: the center has sigma_min = -a^2 = -0.25
        let spec = crate::problems::make_double_well(2, 0.5, 0.0, 0.0, 9).unwrap();
        let data = spec.sample_dataset(53, 10);
        let center = ParamVector::zeros(2);
        let (ok_tight, m) = check_sosp(&spec, &data, &center, 1e-6, 0.2).unwrap();
        assert!(!ok_tight, "center passes despite sigma_min {}", m.sigma_min);
        assert!((m.sigma_min + 0.25).abs() < 1e-12);
        let (ok_loose, _) = check_sosp(&spec, &data, &center, 1e-6, 0.3).unwrap();
        assert!(ok_loose);
        // an exact empirical minimum of the convex problem passes at any level
        let quad = crate::problems::make_quadratic_mean(2, ParamVector::zeros(2), 1.0).unwrap();
        let qdata = quad.sample_dataset(54, 40);
        let mean = quad.empirical(&qdata).quadratic_mean_point().unwrap();
        let (ok, m) = check_sosp(&quad, &qdata, &mean, 1e-9, 0.0).unwrap();
        assert!(ok, "grad {} sigma {}", m.grad_norm, m.sigma_min);
    }
}

//! Projected gradient descent on the empirical risk with the fixed step 1/L1.

use nalgebra::DVector;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::geometry::ParamVector;
use crate::problems::ProblemSpec;

use super::{Trace, TracePoint};

/// Full-gradient descent: w_{t+1} = project(w_t - (1/L1) grad R_S(w_t)),
/// recording every step.
pub fn run_gd(spec: &ProblemSpec, data: &Dataset, w0: &ParamVector, steps: usize) -> Result<Trace> {
    run_gd_strided(spec, data, w0, steps, 1)
}

/// As `run_gd` but recording only every `record_stride`-th step (step 0 and
/// the terminal are always recorded).
pub fn run_gd_strided(
    spec: &ProblemSpec,
    data: &Dataset,
    w0: &ParamVector,
    steps: usize,
    record_stride: usize,
) -> Result<Trace> {
    if steps == 0 {
        return Err(Error::usage("run_gd: steps >= 1 required"));
    }
    if !spec.domain().contains(w0) {
        return Err(Error::usage("run_gd: w0 outside the domain"));
    }
    let stride = record_stride.max(1);
    let emp = spec.empirical(data);
    let step_size = 1.0 / spec.constants().l1;
    let mut w = w0.clone();
    let mut grad = DVector::zeros(spec.dim());
    let mut points = Vec::with_capacity(steps / stride + 2);
    let mut prev_risk = f64::INFINITY;
    for step in 0..=steps {
        emp.grad_into(&w, &mut grad);
        let grad_norm = grad.norm();
        if !grad_norm.is_finite() {
            return Err(Error::Diverged(format!(
                "run_gd: non-finite gradient at step {step}"
            )));
        }
        let risk = emp.risk(&w);
        debug_assert!(
            risk <= prev_risk + 1e-9 * prev_risk.abs().max(1.0),
            "descent violated at step {step}: {risk} > {prev_risk}"
        );
        prev_risk = risk;
        if step % stride == 0 || step == steps {
            points.push(TracePoint {
                step,
                iterate: w.clone(),
                emp_risk: risk,
                grad_norm,
            });
        }
        if step == steps {
            break;
        }
        let candidate = ParamVector::from_dvector(w.as_dvector() - &grad * step_size);
        w = spec.domain().project(&candidate)?;
    }
    Ok(Trace {
        terminal: w,
        step_count: steps,
        points,
        rng_seed: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::make_quadratic_mean;

    fn quad() -> ProblemSpec {
        make_quadratic_mean(2, ParamVector::zeros(2), 1.0).unwrap()
    }

    #[test]
    fn converges_to_sample_mean() {
        let spec = quad();
        let data = spec.sample_dataset(8, 50);
        let mean = spec.empirical(&data).quadratic_mean_point().unwrap();
        let w0 = ParamVector::new(vec![1.5, -0.5]).unwrap();
        let trace = run_gd(&spec, &data, &w0, 800).unwrap();
        assert!(trace.terminal.distance(&mean) <= 1e-8);
    }

    #[test]
    fn mean_is_a_fixed_point() {
        let spec = quad();
        let data = spec.sample_dataset(9, 20);
        let mean = spec.empirical(&data).quadratic_mean_point().unwrap();
        let trace = run_gd(&spec, &data, &mean, 1).unwrap();
        // with the 5%-inflated L1 the step is a contraction around the mean,
        // and at the mean itself the gradient vanishes
        assert!(trace.terminal.distance(&mean) <= 1e-14);
    }

    #[test]
    fn risks_are_non_increasing() {
        let spec = quad();
        let data = spec.sample_dataset(10, 30);
        let w0 = ParamVector::new(vec![0.0, 1.9]).unwrap();
        let trace = run_gd(&spec, &data, &w0, 100).unwrap();
        let risks = trace.risks();
        for pair in risks.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12);
        }
    }

    #[test]
    fn iterates_stay_in_domain() {
        let spec = quad();
        let data = spec.sample_dataset(11, 30);
        let w0 = ParamVector::new(vec![1.99, 0.0]).unwrap();
        let trace = run_gd(&spec, &data, &w0, 50).unwrap();
        for p in &trace.points {
            assert!(spec.domain().contains(&p.iterate));
        }
    }

    #[test]
    fn stride_keeps_endpoints() {
        let spec = quad();
        let data = spec.sample_dataset(12, 10);
        let w0 = ParamVector::zeros(2);
        let trace = run_gd_strided(&spec, &data, &w0, 10, 4).unwrap();
        assert_eq!(trace.points.first().unwrap().step, 0);
        assert_eq!(trace.points.last().unwrap().step, 10);
    }

    #[test]
    fn recorded_risks_recompute_from_iterates() {
        let spec = quad();
        let data = spec.sample_dataset(13, 25);
        let w0 = ParamVector::new(vec![1.2, -0.7]).unwrap();
        let trace = run_gd(&spec, &data, &w0, 40).unwrap();
        for p in trace.points.iter().step_by(7) {
            assert_eq!(p.emp_risk, spec.empirical_risk(&p.iterate, &data));
        }
    }

    #[test]
    fn distance_from_energy_holds_pointwise() {
        // local strong convexity always holds on this problem, so every
        // iterate satisfies ||w_t - w*_S|| <= (2 sqrt(2)/sqrt(lambda)) sqrt(gap)
        let spec = quad();
        let lambda = spec.constants().lambda;
        for seed in 0..20u64 {
            let data = spec.sample_dataset(100 + seed, 60);
            let emp = spec.empirical(&data);
            let w_star = emp.quadratic_mean_point().unwrap();
            let min_risk = emp.risk(&w_star);
            let w0 = ParamVector::new(vec![-1.8, 0.3]).unwrap();
            let trace = run_gd(&spec, &data, &w0, 50).unwrap();
            for p in &trace.points {
                let gap = (p.emp_risk - min_risk).max(0.0);
                let dist = p.iterate.distance(&w_star);
                assert!(
                    dist <= 2.0 * 2.0f64.sqrt() / lambda.sqrt() * gap.sqrt() + 1e-12,
                    "seed {seed} step {}: dist {dist} vs energy radius",
                    p.step
                );
            }
        }
    }
}

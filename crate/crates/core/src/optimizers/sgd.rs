//! Projected stochastic gradient descent with the decaying schedule
//! eta_t = D / (L1 sqrt(t + 1)) and indices sampled uniformly with
//! replacement from a seeded stream.

use nalgebra::DVector;
use rand::Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::geometry::ParamVector;
use crate::problems::ProblemSpec;
use crate::rng;

use super::{Trace, TracePoint};

pub fn run_sgd(
    spec: &ProblemSpec,
    data: &Dataset,
    w0: &ParamVector,
    steps: usize,
    seed: u64,
) -> Result<Trace> {
    run_sgd_strided(spec, data, w0, steps, seed, 1)
}

pub fn run_sgd_strided(
    spec: &ProblemSpec,
    data: &Dataset,
    w0: &ParamVector,
    steps: usize,
    seed: u64,
    record_stride: usize,
) -> Result<Trace> {
    if !spec.domain().contains(w0) {
        return Err(Error::usage("run_sgd: w0 outside the domain"));
    }
    let stride = record_stride.max(1);
    let emp = spec.empirical(data);
    let n = data.len();
    let c = spec.constants();
    let mut stream = rng::stream(seed);
    let mut w = w0.clone();
    let mut grad = DVector::zeros(spec.dim());
    let mut points = Vec::with_capacity(steps / stride + 2);
    for step in 0..=steps {
        if step % stride == 0 || step == steps {
            emp.grad_into(&w, &mut grad);
            points.push(TracePoint {
                step,
                iterate: w.clone(),
                emp_risk: emp.risk(&w),
                grad_norm: grad.norm(),
            });
        }
        if step == steps {
            break;
        }
        // the index stream advances once per step regardless of recording
        let idx = stream.gen_range(0..n);
        spec.family()
            .sample_grad_into(w.as_dvector(), data.get(idx), &mut grad);
        if grad.iter().any(|x| !x.is_finite()) {
            return Err(Error::Diverged(format!(
                "run_sgd: non-finite sample gradient at step {step}"
            )));
        }
        let eta = c.diameter / (c.l1 * ((step + 1) as f64).sqrt());
        let candidate = ParamVector::from_dvector(w.as_dvector() - &grad * eta);
        w = spec.domain().project(&candidate)?;
    }
    Ok(Trace {
        terminal: w,
        step_count: steps,
        points,
        rng_seed: seed,
    })
}

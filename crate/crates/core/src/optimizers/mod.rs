//! The three optimization procedures studied by the crate, plus
//! second-order stationarity checking.

mod gd;
mod pgd;
mod sgd;

pub use gd::{run_gd, run_gd_strided};
pub use pgd::{
    check_sosp, negative_curvature_step, run_pgd_sosp, HaltReason, PgdConfig, SospMeasurements,
};
pub use sgd::{run_sgd, run_sgd_strided};

use crate::geometry::ParamVector;

/// One recorded step of an optimizer run.
#[derive(Debug, Clone)]
pub struct TracePoint {
    pub step: usize,
    pub iterate: ParamVector,
    pub emp_risk: f64,
    pub grad_norm: f64,
}

/// Recorded trajectory. Points may be thinned by a stride but always include
/// step 0 and the terminal step.
#[derive(Debug, Clone)]
pub struct Trace {
    pub points: Vec<TracePoint>,
    pub step_count: usize,
    pub terminal: ParamVector,
    pub rng_seed: u64,
}

impl Trace {
    pub fn terminal_risk(&self) -> f64 {
        self.points.last().map(|p| p.emp_risk).unwrap_or(f64::NAN)
    }

    pub fn risks(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.emp_risk).collect()
    }

    pub fn grad_norms(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.grad_norm).collect()
    }
}

//! The per-problem constants bundle consumed by every bound calculator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Description of the grid a numerical certification ran on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridInfo {
    pub resolution: f64,
    pub interior_points: usize,
    pub boundary_points: usize,
    pub support_probes: usize,
}

/// Smoothness / landscape constants of one problem, either set analytically
/// at construction or certified numerically on a grid.
///
/// * `l0`, `l1`, `l2` — Lipschitz constants of loss, gradient, and Hessian;
/// * `lambda` — Hessian floor at population local minima;
/// * `alpha` — gradient threshold below which curvature is dichotomous;
/// * `beta` — inner product floor `<grad, w>` on the domain boundary, set
///   only when positive (it gates the second-order optimizer);
/// * `loss_bound` — uniform upper bound M on the per-sample loss;
/// * `diameter` — domain diameter D;
/// * `minima_count` — number K of population local minima.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstantsBundle {
    pub l0: f64,
    pub l1: f64,
    pub l2: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub loss_bound: f64,
    pub diameter: f64,
    pub minima_count: usize,
    pub grid: Option<GridInfo>,
}

impl ConstantsBundle {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        l0: f64,
        l1: f64,
        l2: f64,
        lambda: f64,
        alpha: f64,
        beta: Option<f64>,
        loss_bound: f64,
        diameter: f64,
        minima_count: usize,
    ) -> Result<Self> {
        let bundle = ConstantsBundle {
            l0,
            l1,
            l2,
            lambda,
            alpha,
            beta,
            loss_bound,
            diameter,
            minima_count,
            grid: None,
        };
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("l0", self.l0),
            ("l1", self.l1),
            ("l2", self.l2),
            ("loss_bound", self.loss_bound),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::usage(format!(
                    "ConstantsBundle: {name} must be finite and >= 0, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("lambda", self.lambda),
            ("alpha", self.alpha),
            ("diameter", self.diameter),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::usage(format!(
                    "ConstantsBundle: {name} must be positive, got {v}"
                )));
            }
        }
        if self.lambda > self.l1 + 1e-12 {
            return Err(Error::usage(format!(
                "ConstantsBundle: lambda {} exceeds gradient Lipschitz constant {}",
                self.lambda, self.l1
            )));
        }
        if let Some(beta) = self.beta {
            if !(beta > 0.0) || beta >= self.l1 {
                return Err(Error::usage(format!(
                    "ConstantsBundle: beta must satisfy 0 < beta < l1, got {beta} vs {}",
                    self.l1
                )));
            }
        }
        if self.minima_count == 0 {
            return Err(Error::usage("ConstantsBundle: minima_count must be >= 1"));
        }
        Ok(())
    }

    pub fn with_grid(mut self, grid: GridInfo) -> Self {
        self.grid = Some(grid);
        self
    }

    /// Beta or a usage error for callers that require the boundary floor.
    pub fn beta_required(&self) -> Result<f64> {
        self.beta
            .ok_or_else(|| Error::usage("this operation requires a certified beta > 0"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_valid_bundle() {
        let b = ConstantsBundle::new(1.0, 1.0, 0.0, 1.0, 0.5, None, 2.0, 4.0, 1).unwrap();
        assert!(b.beta_required().is_err());
    }

    #[test]
    fn rejects_lambda_above_l1() {
        assert!(ConstantsBundle::new(1.0, 1.0, 0.0, 1.5, 0.5, None, 2.0, 4.0, 1).is_err());
    }

    #[test]
    fn rejects_beta_at_or_above_l1() {
        assert!(ConstantsBundle::new(1.0, 1.0, 0.0, 1.0, 0.5, Some(1.0), 2.0, 4.0, 1).is_err());
        assert!(ConstantsBundle::new(1.0, 1.0, 0.0, 1.0, 0.5, Some(0.5), 2.0, 4.0, 1).is_ok());
    }
}

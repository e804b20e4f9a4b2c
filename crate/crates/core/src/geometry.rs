//! Parameter-space primitives: dense parameter vectors and the l2-ball
//! domains every problem in this crate is constrained to.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in parameter space. Entries are finite by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector(DVector<f64>);

impl ParamVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::usage("ParamVector: dimension must be >= 1"));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::usage("ParamVector: non-finite entry"));
        }
        Ok(ParamVector(DVector::from_vec(entries)))
    }

    pub fn zeros(dim: usize) -> Self {
        ParamVector(DVector::zeros(dim))
    }

    /// Wrap an existing vector; debug-checks finiteness.
    pub fn from_dvector(v: DVector<f64>) -> Self {
        debug_assert!(v.iter().all(|x| x.is_finite()), "non-finite ParamVector");
        ParamVector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn dot(&self, other: &ParamVector) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn distance(&self, other: &ParamVector) -> f64 {
        (&self.0 - &other.0).norm()
    }

    pub fn as_dvector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_dvector(self) -> DVector<f64> {
        self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl std::ops::Index<usize> for ParamVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<DVector<f64>> for ParamVector {
    fn from(v: DVector<f64>) -> Self {
        ParamVector::from_dvector(v)
    }
}

/// Closed l2-ball `{ w : ||w - center|| <= radius }` used as the parameter
/// domain. The diameter `2 * radius` is the constant `D` fed to the bound
/// calculators.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BallDomain {
    center: ParamVector,
    radius: f64,
}

impl BallDomain {
    pub fn new(center: ParamVector, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::usage(format!(
                "BallDomain: radius must be positive and finite, got {radius}"
            )));
        }
        Ok(BallDomain { center, radius })
    }

    /// Ball of `radius` around the origin.
    pub fn centered(dim: usize, radius: f64) -> Result<Self> {
        BallDomain::new(ParamVector::zeros(dim), radius)
    }

    pub fn center(&self) -> &ParamVector {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    pub fn contains(&self, w: &ParamVector) -> bool {
        w.distance(&self.center) <= self.radius * (1.0 + 1e-12) + 1e-15
    }

    /// Euclidean projection onto the ball: identity inside, radial scaling
    /// outside. Idempotent bit-for-bit because the scaling formula returns
    /// interior points unchanged.
    pub fn project(&self, v: &ParamVector) -> Result<ParamVector> {
        if v.dim() != self.dim() {
            return Err(Error::usage(format!(
                "project: dimension mismatch ({} vs {})",
                v.dim(),
                self.dim()
            )));
        }
        if !v.is_finite() {
            return Err(Error::usage("project: non-finite input"));
        }
        let delta = v.as_dvector() - self.center.as_dvector();
        let dist = delta.norm();
        // the ulp allowance keeps reprojection of a just-projected point a
        // no-op, making the operation bit-stable
        if dist <= self.radius * (1.0 + 16.0 * f64::EPSILON) {
            return Ok(v.clone());
        }
        let scaled = self.center.as_dvector() + delta * (self.radius / dist);
        Ok(ParamVector::from_dvector(scaled))
    }

    /// Distance from `w` to the boundary sphere (negative outside).
    pub fn boundary_gap(&self, w: &ParamVector) -> f64 {
        self.radius - w.distance(&self.center)
    }
}

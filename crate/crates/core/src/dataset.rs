//! Training sets and the one-sample substitution operation the stability
//! experiments are built on.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single observation. Each problem family consumes exactly one variant;
/// datasets never mix variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Sample {
    /// Point in the noise ball of the quadratic problem.
    Point(DVector<f64>),
    /// Double-well noise: linear tilt strength, tilt direction on the unit
    /// sphere, and curvature scale multiplying the fixed matrix.
    WellNoise {
        tilt: f64,
        dir: DVector<f64>,
        curv: f64,
    },
    /// Labelled feature vector for the logistic problem.
    Labelled { x: DVector<f64>, class: usize },
}

/// Ordered training set. Order is significant: index `i` identifies the
/// substitution slot for paired stability runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    samples: Vec<Sample>,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::usage("Dataset: need at least one sample"));
        }
        Ok(Dataset { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, i: usize) -> &Sample {
        &self.samples[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Sample> {
        self.samples.iter()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    /// New dataset equal to `self` except at `index`. The input is unchanged.
    pub fn substitute(&self, index: usize, z_prime: Sample) -> Result<Dataset> {
        if index >= self.samples.len() {
            return Err(Error::usage(format!(
                "substitute: index {index} out of range for n = {}",
                self.samples.len()
            )));
        }
        let mut samples = self.samples.clone();
        samples[index] = z_prime;
        Ok(Dataset { samples })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64) -> Sample {
        Sample::Point(DVector::from_vec(vec![x]))
    }

    #[test]
    fn positional_replacement() {
        let s = Dataset::new(vec![pt(1.0), pt(2.0), pt(3.0)]).unwrap();
        let s2 = s.substitute(1, pt(9.0)).unwrap();
        assert_eq!(s2.get(0), &pt(1.0));
        assert_eq!(s2.get(1), &pt(9.0));
        assert_eq!(s2.get(2), &pt(3.0));
        // input unchanged
        assert_eq!(s.get(1), &pt(2.0));
        assert_eq!(s2.len(), s.len());
    }

    #[test]
    fn self_substitution_is_identity() {
        let s = Dataset::new(vec![pt(4.0)]).unwrap();
        let s2 = s.substitute(0, pt(4.0)).unwrap();
        assert_eq!(s, s2);
    }

    #[test]
    fn substituting_back_restores_original() {
        let s = Dataset::new(vec![pt(1.0), pt(2.0)]).unwrap();
        let original = s.get(0).clone();
        let s2 = s.substitute(0, pt(7.0)).unwrap();
        let s3 = s2.substitute(0, original).unwrap();
        assert_eq!(s, s3);
    }

    #[test]
    fn rejects_out_of_range_and_empty() {
        let s = Dataset::new(vec![pt(1.0)]).unwrap();
        assert!(s.substitute(1, pt(0.0)).is_err());
        assert!(Dataset::new(vec![]).is_err());
    }
}

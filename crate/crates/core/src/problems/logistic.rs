//! Multi-class logistic regression on synthetic Gaussian blobs.
//!
//! A linear model, cross-entropy loss, and a small ridge term; the ridge
//! removes the softmax shift degeneracy so the minimum is non-degenerate as
//! the rest of the crate assumes. Feature noise is truncated at three
//! standard deviations so the sample support (and with it L0, L1, M) stays
//! bounded. The population oracle is Monte-Carlo: a held-out sample frozen at
//! construction.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::dataset::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::rng;

const RIDGE: f64 = 0.05;
const BLOB_RADIUS: f64 = 2.0;
const FEATURE_SIGMA: f64 = 0.6;
const DOMAIN_RADIUS: f64 = 3.0;

#[derive(Debug, Clone)]
pub struct LogisticBlobs {
    classes: usize,
    feature_dim: usize,
    means: Vec<DVector<f64>>,
    seed: u64,
}

impl LogisticBlobs {
    pub fn new(classes: usize, feature_dim: usize, seed: u64) -> Result<Self> {
        if classes < 2 {
            return Err(Error::usage("logistic_blobs: need classes >= 2"));
        }
        if feature_dim < classes {
            return Err(Error::usage("logistic_blobs: need d >= classes"));
        }
        let mut stream = rng::stream(rng::derive_seed(seed, &[0xC1]));
        let means = (0..classes)
            .map(|_| rng::unit_sphere(&mut stream, feature_dim) * BLOB_RADIUS)
            .collect();
        Ok(LogisticBlobs {
            classes,
            feature_dim,
            means,
            seed,
        })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    /// Flattened parameter dimension: one weight row per class.
    pub fn dim(&self) -> usize {
        self.classes * self.feature_dim
    }

    pub fn domain_radius(&self) -> f64 {
        DOMAIN_RADIUS
    }

    pub fn ridge(&self) -> f64 {
        RIDGE
    }

    pub fn max_feature_norm(&self) -> f64 {
        BLOB_RADIUS + 3.0 * FEATURE_SIGMA
    }

    /// Crude gradient-smoothness bound used to pick step sizes before any
    /// numerical certification has run.
    pub fn rough_l1(&self) -> f64 {
        0.5 * self.max_feature_norm().powi(2) + RIDGE
    }

    fn labelled(z: &Sample) -> (&DVector<f64>, usize) {
        match z {
            Sample::Labelled { x, class } => (x, *class),
            _ => panic!("logistic_blobs: wrong sample variant"),
        }
    }

    /// Scores s = W x for flattened w (row-major blocks of length d).
    fn scores(&self, w: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.classes, |k, _| {
            let mut s = 0.0;
            for j in 0..self.feature_dim {
                s += w[k * self.feature_dim + j] * x[j];
            }
            s
        })
    }

    fn softmax(scores: &DVector<f64>) -> DVector<f64> {
        let m = scores.max();
        let exps = scores.map(|s| (s - m).exp());
        let sum: f64 = exps.iter().sum();
        exps / sum
    }

    pub fn sample_loss(&self, w: &DVector<f64>, z: &Sample) -> f64 {
        let (x, y) = Self::labelled(z);
        let scores = self.scores(w, x);
        let m = scores.max();
        let lse = m + scores.iter().map(|s| (s - m).exp()).sum::<f64>().ln();
        lse - scores[y] + 0.5 * RIDGE * w.norm_squared()
    }

    pub fn sample_grad_into(&self, w: &DVector<f64>, z: &Sample, out: &mut DVector<f64>) {
        let (x, y) = Self::labelled(z);
        let probs = Self::softmax(&self.scores(w, x));
        for k in 0..self.classes {
            let coeff = probs[k] - if k == y { 1.0 } else { 0.0 };
            for j in 0..self.feature_dim {
                out[k * self.feature_dim + j] = coeff * x[j] + RIDGE * w[k * self.feature_dim + j];
            }
        }
    }

    pub fn sample_hess_into(&self, w: &DVector<f64>, z: &Sample, out: &mut DMatrix<f64>) {
        let (x, _) = Self::labelled(z);
        let probs = Self::softmax(&self.scores(w, x));
        let d = self.feature_dim;
        for k in 0..self.classes {
            for l in 0..self.classes {
                let coeff = if k == l {
                    probs[k] * (1.0 - probs[k])
                } else {
                    -probs[k] * probs[l]
                };
                for i in 0..d {
                    for j in 0..d {
                        out[(k * d + i, l * d + j)] = coeff * x[i] * x[j];
                    }
                }
            }
        }
        for i in 0..self.dim() {
            out[(i, i)] += RIDGE;
        }
    }

    fn draw_sample(&self, stream: &mut rand_chacha::ChaCha8Rng) -> Sample {
        let class = stream.gen_range(0..self.classes);
        // truncated Gaussian noise: resample outside three sigmas
        let noise = loop {
            let g = rng::normal_vector(stream, self.feature_dim) * FEATURE_SIGMA;
            if g.norm() <= 3.0 * FEATURE_SIGMA {
                break g;
            }
        };
        Sample::Labelled {
            x: &self.means[class] + noise,
            class,
        }
    }

    pub fn sample_dataset(&self, seed: u64, n: usize) -> Dataset {
        let mut stream = rng::stream(seed);
        let samples = (0..n).map(|_| self.draw_sample(&mut stream)).collect();
        Dataset::new(samples).expect("n >= 1")
    }

    pub fn support_probes(&self, seed: u64, count: usize) -> Vec<Sample> {
        let mut probes: Vec<Sample> = (0..self.classes)
            .map(|class| Sample::Labelled {
                x: self.means[class].clone(),
                class,
            })
            .collect();
        let mut stream = rng::stream(seed);
        while probes.len() < count {
            probes.push(self.draw_sample(&mut stream));
        }
        probes
    }

    /// Held-out sample for the frozen Monte-Carlo population oracle.
    pub fn heldout_seed(&self) -> u64 {
        rng::derive_seed(self.seed, &[0x9E1D])
    }

    pub fn worst_grad_deviation(&self) -> f64 {
        // || (p - e_y) (x) x || <= sqrt(2) max||x||, doubled for the mean shift
        2.0 * std::f64::consts::SQRT_2 * self.max_feature_norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_at_zero_is_log_classes() {
        let p = LogisticBlobs::new(3, 3, 5).unwrap();
        let w = DVector::zeros(p.dim());
        let data = p.sample_dataset(1, 32);
        for z in data.iter() {
            assert!((p.sample_loss(&w, z) - 3.0f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn features_are_truncated() {
        let p = LogisticBlobs::new(2, 2, 9).unwrap();
        let data = p.sample_dataset(3, 500);
        for z in data.iter() {
            let (x, class) = match z {
                Sample::Labelled { x, class } => (x, *class),
                _ => unreachable!(),
            };
            assert!((x - &p.means[class]).norm() <= 3.0 * FEATURE_SIGMA + 1e-12);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(LogisticBlobs::new(1, 3, 0).is_err());
        assert!(LogisticBlobs::new(3, 2, 0).is_err());
    }

    #[test]
    fn gradient_blocks_sum_against_probabilities() {
        let p = LogisticBlobs::new(2, 2, 4);
        let p = p.unwrap();
        let data = p.sample_dataset(8, 4);
        let mut stream = rng::stream(2);
        let w = rng::uniform_ball(&mut stream, &DVector::zeros(p.dim()), 1.0);
        let mut g = DVector::zeros(p.dim());
        p.sample_grad_into(&w, data.get(0), &mut g);
        assert!(g.iter().all(|v| v.is_finite()));
    }
}

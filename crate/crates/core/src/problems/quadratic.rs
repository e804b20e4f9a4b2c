//! Quadratic location problem: f(w, z) = 0.5 ||w - z||^2 with z uniform on a
//! ball. Convex, identity Hessian everywhere, closed-form population risk and
//! empirical minimum; the main convex test bed.

use nalgebra::{DMatrix, DVector};

use crate::dataset::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::geometry::ParamVector;
use crate::rng;

#[derive(Debug, Clone)]
pub struct QuadraticMean {
    dim: usize,
    mu: DVector<f64>,
    noise_radius: f64,
}

impl QuadraticMean {
    pub fn new(dim: usize, mu: ParamVector, noise_radius: f64) -> Result<Self> {
        if mu.dim() != dim {
            return Err(Error::usage("quadratic_mean: mu dimension mismatch"));
        }
        if !(noise_radius > 0.0) {
            return Err(Error::usage("quadratic_mean: noise_radius must be > 0"));
        }
        if mu.norm() > noise_radius {
            return Err(Error::usage(
                "quadratic_mean: require ||mu|| <= noise_radius so the noise ball stays in the domain",
            ));
        }
        Ok(QuadraticMean {
            dim,
            mu: mu.into_dvector(),
            noise_radius,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn noise_radius(&self) -> f64 {
        self.noise_radius
    }

    /// Domain radius: twice the noise radius, centered at the origin.
    pub fn domain_radius(&self) -> f64 {
        2.0 * self.noise_radius
    }

    /// E ||z - mu||^2 for z uniform on the noise ball: r^2 d/(d+2).
    pub fn noise_second_moment(&self) -> f64 {
        self.noise_radius * self.noise_radius * self.dim as f64 / (self.dim as f64 + 2.0)
    }

    fn point(z: &Sample) -> &DVector<f64> {
        match z {
            Sample::Point(p) => p,
            _ => panic!("quadratic_mean: wrong sample variant"),
        }
    }

    pub fn sample_loss(&self, w: &DVector<f64>, z: &Sample) -> f64 {
        0.5 * (w - Self::point(z)).norm_squared()
    }

    pub fn sample_grad_into(&self, w: &DVector<f64>, z: &Sample, out: &mut DVector<f64>) {
        let p = Self::point(z);
        for i in 0..self.dim {
            out[i] = w[i] - p[i];
        }
    }

    pub fn sample_hess_into(&self, _w: &DVector<f64>, _z: &Sample, out: &mut DMatrix<f64>) {
        out.fill(0.0);
        out.fill_diagonal(1.0);
    }

    pub fn pop_risk(&self, w: &DVector<f64>) -> f64 {
        0.5 * (w - &self.mu).norm_squared() + 0.5 * self.noise_second_moment()
    }

    pub fn pop_grad_into(&self, w: &DVector<f64>, out: &mut DVector<f64>) {
        for i in 0..self.dim {
            out[i] = w[i] - self.mu[i];
        }
    }

    pub fn pop_hess_into(&self, _w: &DVector<f64>, out: &mut DMatrix<f64>) {
        out.fill(0.0);
        out.fill_diagonal(1.0);
    }

    pub fn sample_dataset(&self, seed: u64, n: usize) -> Dataset {
        let mut stream = rng::stream(seed);
        let samples = (0..n)
            .map(|_| Sample::Point(rng::uniform_ball(&mut stream, &self.mu, self.noise_radius)))
            .collect();
        Dataset::new(samples).expect("n >= 1")
    }

    /// Support probes for certification: axis extremes of the noise ball plus
    /// seeded draws.
    pub fn support_probes(&self, seed: u64, count: usize) -> Vec<Sample> {
        let mut probes = Vec::new();
        for i in 0..self.dim {
            for sign in [-1.0, 1.0] {
                let mut p = self.mu.clone();
                p[i] += sign * self.noise_radius;
                probes.push(Sample::Point(p));
            }
        }
        let mut stream = rng::stream(seed);
        while probes.len() < count {
            probes.push(Sample::Point(rng::uniform_ball(
                &mut stream,
                &self.mu,
                self.noise_radius,
            )));
        }
        probes
    }

    /// sup over w, z of ||grad f(w, z) - grad R(w)|| = sup ||mu - z||.
    pub fn worst_grad_deviation(&self) -> f64 {
        self.noise_radius
    }

    /// Analytic constants: L1 = 1, L2 = 0, lambda = 1, L0 = sup ||w - z||,
    /// M = 0.5 L0^2, unique minimum at mu.
    pub fn analytic_l0(&self) -> f64 {
        // max over w in ball(0, 2r), z in ball(mu, r)
        self.domain_radius() + self.mu.norm() + self.noise_radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_risk_at_center_matches_second_moment() {
        let q = QuadraticMean::new(2, ParamVector::zeros(2), 1.0).unwrap();
        // 0.5 * d/(d+2) = 0.25 for d = 2
        assert!((q.pop_risk(&DVector::zeros(2)) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn population_gradient_vanishes_at_mu() {
        let mu = ParamVector::new(vec![0.3, -0.2]).unwrap();
        let q = QuadraticMean::new(2, mu.clone(), 1.0).unwrap();
        let mut g = DVector::zeros(2);
        q.pop_grad_into(mu.as_dvector(), &mut g);
        assert!(g.norm() < 1e-15);
    }

    #[test]
    fn rejects_mu_outside_noise_ball() {
        let mu = ParamVector::new(vec![2.0, 0.0]).unwrap();
        assert!(QuadraticMean::new(2, mu, 1.0).is_err());
    }

    #[test]
    fn samples_live_in_noise_ball() {
        let q = QuadraticMean::new(3, ParamVector::zeros(3), 0.7).unwrap();
        let data = q.sample_dataset(11, 100);
        for z in data.iter() {
            match z {
                Sample::Point(p) => assert!(p.norm() <= 0.7 + 1e-12),
                _ => unreachable!(),
            }
        }
    }
}

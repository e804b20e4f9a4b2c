//! Separable double-well landscape with sample noise:
//!
//!   f(w, z) = sum_i (w_i^2 - a^2)^2 / 4 + t(z) <u(z), w> + s(z) w'Bw / 2 + c0
//!
//! with z = (t, u, s), t uniform on [-noise_scale, noise_scale], u uniform on
//! the unit sphere, s uniform on [-curvature_noise, curvature_noise], and B a
//! fixed symmetric matrix of unit spectral norm drawn once from the seed.
//! E[t u] = 0 and E[s] = 0, so the population risk is the clean quartic
//! sum_i (w_i^2 - a^2)^2 / 4 + c0 with 2^d minima at the sign patterns
//! (+-a, ..., +-a), while the empirical gradient and Hessian are genuinely
//! random. Domain: the unit ball.

use nalgebra::{DMatrix, DVector};

use crate::dataset::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::linalg;
use crate::rng;

#[derive(Debug, Clone)]
pub struct DoubleWell {
    dim: usize,
    well_radius: f64,
    noise_scale: f64,
    curvature_noise: f64,
    curvature_matrix: DMatrix<f64>,
    offset: f64,
    seed: u64,
}

impl DoubleWell {
    pub fn new(
        dim: usize,
        well_radius: f64,
        noise_scale: f64,
        curvature_noise: f64,
        seed: u64,
    ) -> Result<Self> {
        if dim == 0 || dim > 3 {
            return Err(Error::usage(
                "double_well: dimension must be in 1..=3 (minima census regime)",
            ));
        }
        if !(well_radius > 0.0 && well_radius <= 0.5) {
            return Err(Error::usage(
                "double_well: well_radius must satisfy 0 < a <= 0.5",
            ));
        }
        if noise_scale < 0.0 || curvature_noise < 0.0 {
            return Err(Error::usage("double_well: noise scales must be >= 0"));
        }
        let curvature_matrix = Self::draw_curvature_matrix(dim, seed);
        let offset = Self::nonneg_offset(dim, well_radius, noise_scale, curvature_noise);
        let well = DoubleWell {
            dim,
            well_radius,
            noise_scale,
            curvature_noise,
            curvature_matrix,
            offset,
            seed,
        };
        let beta = well.analytic_beta();
        if beta <= 0.0 {
            return Err(Error::Construction(format!(
                "double_well: certified boundary floor beta = {beta:.4} <= 0; \
                 reduce noise_scale/curvature_noise or well_radius"
            )));
        }
        Ok(well)
    }

    fn draw_curvature_matrix(dim: usize, seed: u64) -> DMatrix<f64> {
        if dim == 1 {
            return DMatrix::from_element(1, 1, 1.0);
        }
        let mut stream = rng::stream(rng::derive_seed(seed, &[0xB]));
        let raw = DMatrix::from_fn(dim, dim, |_, _| rng::standard_normal(&mut stream));
        let sym = linalg::symmetrize(&raw);
        let norm = linalg::spectral_norm_sym(&sym);
        sym / norm
    }

    /// Smallest constant making f >= 0 on domain x support, via the radial
    /// lower envelope min_{||w|| = rho} q(w) = (d/4)(rho^2/d - a^2)^2 minus
    /// the worst noise terms.
    fn nonneg_offset(dim: usize, a: f64, tau_t: f64, tau_s: f64) -> f64 {
        let d = dim as f64;
        let mut worst = 0.0f64;
        let steps = 100_000;
        for k in 0..=steps {
            let rho = k as f64 / steps as f64;
            let q_min = 0.25 * d * (rho * rho / d - a * a).powi(2);
            let g = q_min - tau_t * rho - 0.5 * tau_s * rho * rho;
            worst = worst.min(g);
        }
        -worst
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn well_radius(&self) -> f64 {
        self.well_radius
    }

    pub fn noise_scale(&self) -> f64 {
        self.noise_scale
    }

    pub fn curvature_noise(&self) -> f64 {
        self.curvature_noise
    }

    pub fn curvature_matrix(&self) -> &DMatrix<f64> {
        &self.curvature_matrix
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn noise(z: &Sample) -> (f64, &DVector<f64>, f64) {
        match z {
            Sample::WellNoise { tilt, dir, curv } => (*tilt, dir, *curv),
            _ => panic!("double_well: wrong sample variant"),
        }
    }

    /// Clean quartic part (population risk minus offset).
    pub fn quartic(&self, w: &DVector<f64>) -> f64 {
        let a2 = self.well_radius * self.well_radius;
        w.iter().map(|&x| 0.25 * (x * x - a2).powi(2)).sum()
    }

    fn quartic_grad_into(&self, w: &DVector<f64>, out: &mut DVector<f64>) {
        let a2 = self.well_radius * self.well_radius;
        for i in 0..self.dim {
            out[i] = w[i] * (w[i] * w[i] - a2);
        }
    }

    fn quartic_hess_into(&self, w: &DVector<f64>, out: &mut DMatrix<f64>) {
        let a2 = self.well_radius * self.well_radius;
        out.fill(0.0);
        for i in 0..self.dim {
            out[(i, i)] = 3.0 * w[i] * w[i] - a2;
        }
    }

    pub fn sample_loss(&self, w: &DVector<f64>, z: &Sample) -> f64 {
        let (t, u, s) = Self::noise(z);
        let mut tilt_dot = 0.0;
        for i in 0..self.dim {
            tilt_dot += (t * u[i]) * w[i];
        }
        let quad = 0.5 * s * (w.transpose() * &self.curvature_matrix * w)[(0, 0)];
        self.quartic(w) + tilt_dot + quad + self.offset
    }

    pub fn sample_grad_into(&self, w: &DVector<f64>, z: &Sample, out: &mut DVector<f64>) {
        let (t, u, s) = Self::noise(z);
        self.quartic_grad_into(w, out);
        let bw = &self.curvature_matrix * w;
        for i in 0..self.dim {
            out[i] += t * u[i] + s * bw[i];
        }
    }

    pub fn sample_hess_into(&self, w: &DVector<f64>, z: &Sample, out: &mut DMatrix<f64>) {
        let (_, _, s) = Self::noise(z);
        self.quartic_hess_into(w, out);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(i, j)] += s * self.curvature_matrix[(i, j)];
            }
        }
    }

    pub fn pop_risk(&self, w: &DVector<f64>) -> f64 {
        self.quartic(w) + self.offset
    }

    pub fn pop_grad_into(&self, w: &DVector<f64>, out: &mut DVector<f64>) {
        self.quartic_grad_into(w, out);
    }

    pub fn pop_hess_into(&self, w: &DVector<f64>, out: &mut DMatrix<f64>) {
        self.quartic_hess_into(w, out);
    }

    /// All 2^d sign-pattern minima (+-a, ..., +-a) in lexicographic order.
    pub fn minima(&self) -> Vec<DVector<f64>> {
        let a = self.well_radius;
        let count = 1usize << self.dim;
        (0..count)
            .map(|mask| {
                DVector::from_fn(self.dim, |i, _| {
                    if mask >> i & 1 == 1 {
                        a
                    } else {
                        -a
                    }
                })
            })
            .collect()
    }

    pub fn sample_dataset(&self, seed: u64, n: usize) -> Dataset {
        let mut stream = rng::stream(seed);
        let samples = (0..n)
            .map(|_| {
                use rand::Rng;
                let tilt = (stream.gen::<f64>() * 2.0 - 1.0) * self.noise_scale;
                let dir = rng::unit_sphere(&mut stream, self.dim);
                let curv = (stream.gen::<f64>() * 2.0 - 1.0) * self.curvature_noise;
                Sample::WellNoise { tilt, dir, curv }
            })
            .collect();
        Dataset::new(samples).expect("n >= 1")
    }

    pub fn support_probes(&self, seed: u64, count: usize) -> Vec<Sample> {
        let mut probes = Vec::new();
        for i in 0..self.dim {
            for t_sign in [-1.0, 1.0] {
                for s_sign in [-1.0, 1.0] {
                    let mut dir = DVector::zeros(self.dim);
                    dir[i] = 1.0;
                    probes.push(Sample::WellNoise {
                        tilt: t_sign * self.noise_scale,
                        dir,
                        curv: s_sign * self.curvature_noise,
                    });
                }
            }
        }
        let mut stream = rng::stream(seed);
        while probes.len() < count {
            use rand::Rng;
            let tilt = (stream.gen::<f64>() * 2.0 - 1.0) * self.noise_scale;
            let dir = rng::unit_sphere(&mut stream, self.dim);
            let curv = (stream.gen::<f64>() * 2.0 - 1.0) * self.curvature_noise;
            probes.push(Sample::WellNoise { tilt, dir, curv });
        }
        probes
    }

    /// sup over w in the ball, z of ||grad f(w,z) - grad R(w)||
    /// = sup ||t u + s B w|| <= noise_scale + curvature_noise.
    pub fn worst_grad_deviation(&self) -> f64 {
        self.noise_scale + self.curvature_noise
    }

    // Analytic constants over the unit ball (see module tests for the grid
    // cross-checks).

    pub fn analytic_l0(&self) -> f64 {
        let a2 = self.well_radius * self.well_radius;
        (1.0 - a2) + self.noise_scale + self.curvature_noise
    }

    pub fn analytic_l1(&self) -> f64 {
        let a2 = self.well_radius * self.well_radius;
        (3.0 - a2) + self.curvature_noise
    }

    pub fn analytic_l2(&self) -> f64 {
        6.0
    }

    pub fn analytic_loss_bound(&self) -> f64 {
        let a2 = self.well_radius * self.well_radius;
        let d = self.dim as f64;
        let q_max = 0.25 * ((1.0 - a2).powi(2) + (d - 1.0) * a2 * a2);
        q_max + self.noise_scale + 0.5 * self.curvature_noise + self.offset
    }

    /// Hessian floor at the minima, deflated 5%.
    pub fn analytic_lambda(&self) -> f64 {
        0.95 * 2.0 * self.well_radius * self.well_radius
    }

    /// Boundary floor of <grad R_S(w), w> on the unit sphere minus the
    /// worst-case empirical deviation, deflated 5%.
    pub fn analytic_beta(&self) -> f64 {
        let a2 = self.well_radius * self.well_radius;
        let pop = 1.0 / self.dim as f64 - a2;
        0.95 * (pop - self.worst_grad_deviation())
    }

    /// Largest gradient threshold under which the population curvature
    /// dichotomy at level lambda/2 holds: min gradient norm over the band
    /// where some coordinate has |3 w_i^2 - a^2| < lambda/2.
    pub fn analytic_alpha(&self) -> f64 {
        let a2 = self.well_radius * self.well_radius;
        let t = self.analytic_lambda() / 2.0;
        debug_assert!(t < a2, "dichotomy level must stay below the saddle curvature");
        let x_lo = ((a2 - t) / 3.0).sqrt();
        let x_hi = ((a2 + t) / 3.0).sqrt();
        let g = |x: f64| (x * (x * x - a2)).abs();
        let band_min = g(x_lo).min(g(x_hi));
        let boundary_min = (1.0 / self.dim as f64 - a2).abs();
        0.95 * band_min.min(boundary_min)
    }
}

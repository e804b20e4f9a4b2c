//! Synthetic problem families with per-sample oracles, analytic or frozen
//! Monte-Carlo population oracles, dataset sampling, and numerical
//! certification of the smoothness/landscape constants.

mod certify;
mod double_well;
pub mod fd;
mod logistic;
mod quadratic;

pub use certify::{certify_constants, validate_minima_separation, SeparationReport};
pub use double_well::DoubleWell;
pub use logistic::LogisticBlobs;
pub use quadratic::QuadraticMean;

use nalgebra::{DMatrix, DVector};

use crate::constants::ConstantsBundle;
use crate::dataset::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::geometry::{BallDomain, ParamVector};
use crate::stats;

/// The problem families known to the crate.
#[derive(Debug, Clone)]
pub enum Family {
    QuadraticMean(QuadraticMean),
    DoubleWell(DoubleWell),
    LogisticBlobs(LogisticBlobs),
}

impl Family {
    pub fn dim(&self) -> usize {
        match self {
            Family::QuadraticMean(f) => f.dim(),
            Family::DoubleWell(f) => f.dim(),
            Family::LogisticBlobs(f) => f.dim(),
        }
    }

    pub fn is_convex(&self) -> bool {
        !matches!(self, Family::DoubleWell(_))
    }

    pub fn sample_loss(&self, w: &DVector<f64>, z: &Sample) -> f64 {
        match self {
            Family::QuadraticMean(f) => f.sample_loss(w, z),
            Family::DoubleWell(f) => f.sample_loss(w, z),
            Family::LogisticBlobs(f) => f.sample_loss(w, z),
        }
    }

    pub fn sample_grad_into(&self, w: &DVector<f64>, z: &Sample, out: &mut DVector<f64>) {
        match self {
            Family::QuadraticMean(f) => f.sample_grad_into(w, z, out),
            Family::DoubleWell(f) => f.sample_grad_into(w, z, out),
            Family::LogisticBlobs(f) => f.sample_grad_into(w, z, out),
        }
    }

    pub fn sample_hess_into(&self, w: &DVector<f64>, z: &Sample, out: &mut DMatrix<f64>) {
        match self {
            Family::QuadraticMean(f) => f.sample_hess_into(w, z, out),
            Family::DoubleWell(f) => f.sample_hess_into(w, z, out),
            Family::LogisticBlobs(f) => f.sample_hess_into(w, z, out),
        }
    }

    fn analytic_risk(&self, w: &DVector<f64>) -> f64 {
        match self {
            Family::QuadraticMean(f) => f.pop_risk(w),
            Family::DoubleWell(f) => f.pop_risk(w),
            Family::LogisticBlobs(_) => unreachable!("logistic population is Monte-Carlo"),
        }
    }

    fn analytic_grad_into(&self, w: &DVector<f64>, out: &mut DVector<f64>) {
        match self {
            Family::QuadraticMean(f) => f.pop_grad_into(w, out),
            Family::DoubleWell(f) => f.pop_grad_into(w, out),
            Family::LogisticBlobs(_) => unreachable!("logistic population is Monte-Carlo"),
        }
    }

    fn analytic_hess_into(&self, w: &DVector<f64>, out: &mut DMatrix<f64>) {
        match self {
            Family::QuadraticMean(f) => f.pop_hess_into(w, out),
            Family::DoubleWell(f) => f.pop_hess_into(w, out),
            Family::LogisticBlobs(_) => unreachable!("logistic population is Monte-Carlo"),
        }
    }

    pub fn sample_dataset(&self, seed: u64, n: usize) -> Dataset {
        match self {
            Family::QuadraticMean(f) => f.sample_dataset(seed, n),
            Family::DoubleWell(f) => f.sample_dataset(seed, n),
            Family::LogisticBlobs(f) => f.sample_dataset(seed, n),
        }
    }

    pub fn support_probes(&self, seed: u64, count: usize) -> Vec<Sample> {
        match self {
            Family::QuadraticMean(f) => f.support_probes(seed, count),
            Family::DoubleWell(f) => f.support_probes(seed, count),
            Family::LogisticBlobs(f) => f.support_probes(seed, count),
        }
    }

    pub fn worst_grad_deviation(&self) -> f64 {
        match self {
            Family::QuadraticMean(f) => f.worst_grad_deviation(),
            Family::DoubleWell(f) => f.worst_grad_deviation(),
            Family::LogisticBlobs(f) => f.worst_grad_deviation(),
        }
    }
}

/// How population quantities are computed.
#[derive(Debug, Clone)]
pub enum PopulationMode {
    Analytic,
    /// Frozen held-out sample drawn once at construction; all downstream
    /// measurements share the same estimate.
    MonteCarlo { sample_count: usize, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct PopulationOracle {
    pub mode: PopulationMode,
    minima: Vec<ParamVector>,
    global_min_index: usize,
    heldout: Option<Dataset>,
}

impl PopulationOracle {
    pub fn analytic(minima: Vec<ParamVector>, global_min_index: usize) -> Self {
        PopulationOracle {
            mode: PopulationMode::Analytic,
            minima,
            global_min_index,
            heldout: None,
        }
    }

    pub fn local_minima(&self) -> &[ParamVector] {
        &self.minima
    }

    pub fn global_min_index(&self) -> usize {
        self.global_min_index
    }

    pub fn global_minimum(&self) -> &ParamVector {
        &self.minima[self.global_min_index]
    }

    /// Frozen held-out sample backing a Monte-Carlo oracle.
    pub fn heldout_data(&self) -> Option<&Dataset> {
        self.heldout.as_ref()
    }
}

/// A problem instance: family, domain, population oracle, and constants.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    name: String,
    domain: BallDomain,
    family: Family,
    population: PopulationOracle,
    constants: ConstantsBundle,
}

impl ProblemSpec {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &BallDomain {
        &self.domain
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn population(&self) -> &PopulationOracle {
        &self.population
    }

    pub fn constants(&self) -> &ConstantsBundle {
        &self.constants
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    pub fn is_convex(&self) -> bool {
        self.family.is_convex()
    }

    /// Replace the constants bundle (e.g. after a fresh certification).
    pub fn with_constants(mut self, constants: ConstantsBundle) -> Result<Self> {
        constants.validate()?;
        self.constants = constants;
        Ok(self)
    }

    pub fn sample_loss(&self, w: &ParamVector, z: &Sample) -> f64 {
        self.family.sample_loss(w.as_dvector(), z)
    }

    pub fn sample_grad(&self, w: &ParamVector, z: &Sample) -> ParamVector {
        let mut out = DVector::zeros(self.dim());
        self.family.sample_grad_into(w.as_dvector(), z, &mut out);
        ParamVector::from_dvector(out)
    }

    pub fn sample_hess(&self, w: &ParamVector, z: &Sample) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        self.family.sample_hess_into(w.as_dvector(), z, &mut out);
        out
    }

    pub fn sample_dataset(&self, seed: u64, n: usize) -> Dataset {
        self.family.sample_dataset(seed, n)
    }

    /// Bind a dataset, computing its sufficient statistics once.
    pub fn empirical<'a>(&'a self, data: &'a Dataset) -> EmpiricalRisk<'a> {
        EmpiricalRisk::new(self, data)
    }

    /// (1/n) sum of per-sample losses.
    pub fn empirical_risk(&self, w: &ParamVector, data: &Dataset) -> f64 {
        self.empirical(data).risk(w)
    }

    pub fn empirical_grad(&self, w: &ParamVector, data: &Dataset) -> ParamVector {
        self.empirical(data).grad(w)
    }

    pub fn empirical_hess(&self, w: &ParamVector, data: &Dataset) -> DMatrix<f64> {
        self.empirical(data).hess(w)
    }

    pub fn population_risk(&self, w: &ParamVector) -> f64 {
        match self.population.mode {
            PopulationMode::Analytic => self.family.analytic_risk(w.as_dvector()),
            PopulationMode::MonteCarlo { .. } => {
                let heldout = self.population.heldout.as_ref().expect("frozen heldout");
                self.empirical(heldout).risk(w)
            }
        }
    }

    pub fn population_grad(&self, w: &ParamVector) -> ParamVector {
        match self.population.mode {
            PopulationMode::Analytic => {
                let mut out = DVector::zeros(self.dim());
                self.family.analytic_grad_into(w.as_dvector(), &mut out);
                ParamVector::from_dvector(out)
            }
            PopulationMode::MonteCarlo { .. } => {
                let heldout = self.population.heldout.as_ref().expect("frozen heldout");
                self.empirical(heldout).grad(w)
            }
        }
    }

    pub fn population_hess(&self, w: &ParamVector) -> DMatrix<f64> {
        match self.population.mode {
            PopulationMode::Analytic => {
                let mut out = DMatrix::zeros(self.dim(), self.dim());
                self.family.analytic_hess_into(w.as_dvector(), &mut out);
                out
            }
            PopulationMode::MonteCarlo { .. } => {
                let heldout = self.population.heldout.as_ref().expect("frozen heldout");
                self.empirical(heldout).hess(w)
            }
        }
    }

    /// Fresh Monte-Carlo estimate of the population risk with its standard
    /// error, independent of the frozen oracle.
    pub fn mc_population_risk(&self, w: &ParamVector, sample_count: usize, seed: u64) -> (f64, f64) {
        let data = self.sample_dataset(seed, sample_count);
        let losses: Vec<f64> = data.iter().map(|z| self.sample_loss(w, z)).collect();
        stats::mean_and_se(&losses)
    }

    pub fn worst_grad_deviation(&self) -> f64 {
        self.family.worst_grad_deviation()
    }

    /// Construction-time sanity check of the minima list against the oracle.
    fn validate_population(&self) -> Result<()> {
        for (k, m) in self.population.minima.iter().enumerate() {
            if matches!(self.population.mode, PopulationMode::Analytic) {
                let g = self.population_grad(m).norm();
                if g > 1e-8 {
                    return Err(Error::Construction(format!(
                        "population minimum {k} has gradient norm {g:.3e}"
                    )));
                }
            }
            let h = self.population_hess(m);
            let (sigma_min, _) = crate::linalg::smallest_eigenpair(&h)?;
            if sigma_min < self.constants.lambda - 1e-8 {
                return Err(Error::Construction(format!(
                    "population minimum {k} has Hessian floor {sigma_min:.6} < lambda {}",
                    self.constants.lambda
                )));
            }
        }
        let risks: Vec<f64> = self
            .population
            .minima
            .iter()
            .map(|m| self.population_risk(m))
            .collect();
        let best = risks
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        if risks[best] < risks[self.population.global_min_index] - 1e-12 {
            return Err(Error::Construction(
                "global_min_index does not point at the smallest population risk".into(),
            ));
        }
        Ok(())
    }
}

/// A problem bound to one dataset. Sufficient statistics of the dataset are
/// computed once so iterative optimizers pay O(d) or O(d^2) per step instead
/// of O(n d).
pub struct EmpiricalRisk<'a> {
    spec: &'a ProblemSpec,
    data: &'a Dataset,
    cache: Cache,
}

enum Cache {
    /// Quadratic: mean of the sample points and mean squared deviation.
    Quadratic { mean: DVector<f64>, avg_sq_dev: f64 },
    /// Double well: mean tilt vector and mean curvature scale.
    Well {
        tilt_mean: DVector<f64>,
        curv_mean: f64,
    },
    /// No sufficient statistics; evaluate by summing over samples.
    PerSample,
}

impl<'a> EmpiricalRisk<'a> {
    fn new(spec: &'a ProblemSpec, data: &'a Dataset) -> Self {
        let cache = match &spec.family {
            Family::QuadraticMean(_) => {
                let dim = spec.dim();
                let mut mean = DVector::zeros(dim);
                for z in data.iter() {
                    match z {
                        Sample::Point(p) => mean += p,
                        _ => panic!("quadratic_mean: wrong sample variant"),
                    }
                }
                mean /= data.len() as f64;
                let mut avg_sq_dev = 0.0;
                for z in data.iter() {
                    if let Sample::Point(p) = z {
                        avg_sq_dev += (p - &mean).norm_squared();
                    }
                }
                avg_sq_dev /= data.len() as f64;
                Cache::Quadratic { mean, avg_sq_dev }
            }
            Family::DoubleWell(_) => {
                let dim = spec.dim();
                let mut tilt_mean = DVector::zeros(dim);
                let mut curv_mean = 0.0;
                for z in data.iter() {
                    match z {
                        Sample::WellNoise { tilt, dir, curv } => {
                            for i in 0..dim {
                                tilt_mean[i] += tilt * dir[i];
                            }
                            curv_mean += curv;
                        }
                        _ => panic!("double_well: wrong sample variant"),
                    }
                }
                tilt_mean /= data.len() as f64;
                curv_mean /= data.len() as f64;
                Cache::Well {
                    tilt_mean,
                    curv_mean,
                }
            }
            Family::LogisticBlobs(_) => Cache::PerSample,
        };
        EmpiricalRisk { spec, data, cache }
    }

    pub fn n(&self) -> usize {
        self.data.len()
    }

    pub fn dataset(&self) -> &Dataset {
        self.data
    }

    /// Empirical mean of the quadratic problem's samples (its unconstrained
    /// minimizer).
    pub fn quadratic_mean_point(&self) -> Option<ParamVector> {
        match &self.cache {
            Cache::Quadratic { mean, .. } => Some(ParamVector::from_dvector(mean.clone())),
            _ => None,
        }
    }

    pub fn risk(&self, w: &ParamVector) -> f64 {
        let wv = w.as_dvector();
        match (&self.cache, &self.spec.family) {
            (Cache::Quadratic { mean, avg_sq_dev }, _) => {
                0.5 * (wv - mean).norm_squared() + 0.5 * avg_sq_dev
            }
            (
                Cache::Well {
                    tilt_mean,
                    curv_mean,
                },
                Family::DoubleWell(f),
            ) => {
                let quad = 0.5 * curv_mean * (wv.transpose() * f.curvature_matrix() * wv)[(0, 0)];
                f.quartic(wv) + tilt_mean.dot(wv) + quad + f.offset()
            }
            (Cache::PerSample, fam) => {
                let sum: f64 = self.data.iter().map(|z| fam.sample_loss(wv, z)).sum();
                sum / self.data.len() as f64
            }
            _ => unreachable!(),
        }
    }

    pub fn grad_into(&self, w: &ParamVector, out: &mut DVector<f64>) {
        let wv = w.as_dvector();
        let dim = self.spec.dim();
        match (&self.cache, &self.spec.family) {
            (Cache::Quadratic { mean, .. }, _) => {
                for i in 0..dim {
                    out[i] = wv[i] - mean[i];
                }
            }
            (
                Cache::Well {
                    tilt_mean,
                    curv_mean,
                },
                Family::DoubleWell(f),
            ) => {
                let a2 = f.well_radius() * f.well_radius();
                let bw = f.curvature_matrix() * wv;
                for i in 0..dim {
                    out[i] = wv[i] * (wv[i] * wv[i] - a2) + tilt_mean[i] + curv_mean * bw[i];
                }
            }
            (Cache::PerSample, fam) => {
                out.fill(0.0);
                let mut tmp = DVector::zeros(dim);
                for z in self.data.iter() {
                    fam.sample_grad_into(wv, z, &mut tmp);
                    *out += &tmp;
                }
                *out /= self.data.len() as f64;
            }
            _ => unreachable!(),
        }
    }

    pub fn grad(&self, w: &ParamVector) -> ParamVector {
        let mut out = DVector::zeros(self.spec.dim());
        self.grad_into(w, &mut out);
        ParamVector::from_dvector(out)
    }

    pub fn grad_norm(&self, w: &ParamVector) -> f64 {
        let mut out = DVector::zeros(self.spec.dim());
        self.grad_into(w, &mut out);
        out.norm()
    }

    pub fn hess_into(&self, w: &ParamVector, out: &mut DMatrix<f64>) {
        let wv = w.as_dvector();
        let dim = self.spec.dim();
        match (&self.cache, &self.spec.family) {
            (Cache::Quadratic { .. }, _) => {
                out.fill(0.0);
                out.fill_diagonal(1.0);
            }
            (Cache::Well { curv_mean, .. }, Family::DoubleWell(f)) => {
                let a2 = f.well_radius() * f.well_radius();
                out.fill(0.0);
                for i in 0..dim {
                    out[(i, i)] = 3.0 * wv[i] * wv[i] - a2;
                }
                let b = f.curvature_matrix();
                for i in 0..dim {
                    for j in 0..dim {
                        out[(i, j)] += curv_mean * b[(i, j)];
                    }
                }
            }
            (Cache::PerSample, fam) => {
                out.fill(0.0);
                let mut tmp = DMatrix::zeros(dim, dim);
                for z in self.data.iter() {
                    fam.sample_hess_into(wv, z, &mut tmp);
                    *out += &tmp;
                }
                *out /= self.data.len() as f64;
            }
            _ => unreachable!(),
        }
    }

    pub fn hess(&self, w: &ParamVector) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.spec.dim(), self.spec.dim());
        self.hess_into(w, &mut out);
        out
    }
}

/// Convex test bed: f(w, z) = 0.5 ||w - z||^2, z uniform on ball(mu, r),
/// domain ball(0, 2r). Closed-form population risk, unique minimum at mu.
pub fn make_quadratic_mean(dim: usize, mu: ParamVector, noise_radius: f64) -> Result<ProblemSpec> {
    let fam = QuadraticMean::new(dim, mu.clone(), noise_radius)?;
    let domain = BallDomain::centered(dim, fam.domain_radius())?;
    let l0 = fam.analytic_l0();
    let diameter = domain.diameter();
    let boundary_grad_floor = fam.domain_radius() - mu.norm();
    let alpha = 0.95 * boundary_grad_floor;
    // boundary inner-product floor minus the worst-case empirical deviation
    let beta_raw = 0.95 * (boundary_grad_floor - fam.worst_grad_deviation());
    let beta = if beta_raw > 0.0 {
        Some(beta_raw.min(0.95)) // keep beta < L1 = 1
    } else {
        None
    };
    let constants = ConstantsBundle::new(l0, 1.0, 0.0, 1.0, alpha, beta, 0.5 * l0 * l0, diameter, 1)?;
    let population = PopulationOracle::analytic(vec![mu], 0);
    let spec = ProblemSpec {
        name: format!("quadratic_mean_d{dim}"),
        domain,
        family: Family::QuadraticMean(fam),
        population,
        constants,
    };
    spec.validate_population()?;
    Ok(spec)
}

/// Strict-saddle test bed on the unit ball; see the family docs.
pub fn make_double_well(
    dim: usize,
    well_radius: f64,
    noise_scale: f64,
    curvature_noise: f64,
    seed: u64,
) -> Result<ProblemSpec> {
    let fam = DoubleWell::new(dim, well_radius, noise_scale, curvature_noise, seed)?;
    let domain = BallDomain::centered(dim, 1.0)?;
    let minima: Vec<ParamVector> = fam
        .minima()
        .into_iter()
        .map(ParamVector::from_dvector)
        .collect();
    let k = minima.len();
    let constants = ConstantsBundle::new(
        fam.analytic_l0(),
        fam.analytic_l1(),
        fam.analytic_l2(),
        fam.analytic_lambda(),
        fam.analytic_alpha(),
        Some(fam.analytic_beta()),
        fam.analytic_loss_bound(),
        domain.diameter(),
        k,
    )?;
    let population = PopulationOracle::analytic(minima, 0);
    let spec = ProblemSpec {
        name: format!("double_well_d{dim}"),
        domain,
        family: Family::DoubleWell(fam),
        population,
        constants,
    };
    spec.validate_population()?;
    Ok(spec)
}

/// Cross-entropy on Gaussian blobs with a frozen Monte-Carlo population
/// oracle; constants certified numerically at construction on a coarse grid.
pub fn make_logistic_blobs(
    classes: usize,
    feature_dim: usize,
    n_population_oracle: usize,
    seed: u64,
) -> Result<ProblemSpec> {
    if n_population_oracle < 100 {
        return Err(Error::usage(
            "logistic_blobs: population oracle needs at least 100 held-out samples",
        ));
    }
    let fam = LogisticBlobs::new(classes, feature_dim, seed)?;
    let dim = fam.dim();
    let domain = BallDomain::centered(dim, fam.domain_radius())?;
    let heldout_seed = fam.heldout_seed();
    let heldout = fam.sample_dataset(heldout_seed, n_population_oracle);

    // provisional constants, good enough to run the minimum search
    let maxx = fam.max_feature_norm();
    let rough_l1 = fam.rough_l1();
    let rough = ConstantsBundle::new(
        std::f64::consts::SQRT_2 * maxx + fam.ridge() * fam.domain_radius(),
        rough_l1,
        maxx.powi(3),
        0.5 * fam.ridge(),
        1e-3,
        None,
        (classes as f64).ln() + 2.0 * fam.domain_radius() * maxx + 0.5 * fam.ridge() * 9.0,
        domain.diameter(),
        1,
    )?;

    let mut spec = ProblemSpec {
        name: format!("logistic_blobs_c{classes}_d{feature_dim}"),
        domain: domain.clone(),
        family: Family::LogisticBlobs(fam),
        population: PopulationOracle {
            mode: PopulationMode::MonteCarlo {
                sample_count: n_population_oracle,
                seed: heldout_seed,
            },
            minima: vec![ParamVector::zeros(dim)],
            global_min_index: 0,
            heldout: Some(heldout.clone()),
        },
        constants: rough,
    };

    // locate the population (held-out) minimum by projected gradient descent
    let emp = spec.empirical(&heldout);
    let mut w = ParamVector::zeros(dim);
    let step = 1.0 / rough_l1;
    let mut g = DVector::zeros(dim);
    for _ in 0..50_000 {
        emp.grad_into(&w, &mut g);
        let next = spec.domain.project(&ParamVector::from_dvector(
            w.as_dvector() - &g * step,
        ))?;
        let moved = next.distance(&w);
        w = next;
        if moved <= 1e-11 {
            break;
        }
    }
    spec.population.minima = vec![w];

    // certify on a coarse construction grid (cube capped at ~3e4 points);
    // callers can re-run certify_constants with a finer resolution
    let pts_per_dim = (30_000f64.powf(1.0 / dim as f64).floor() as usize).max(3);
    let resolution = domain.diameter() / (pts_per_dim.saturating_sub(1)).max(1) as f64;
    let certified = certify_constants(&spec, resolution)?;
    spec = spec.with_constants(certified)?;
    spec.validate_population()?;
    Ok(spec)
}

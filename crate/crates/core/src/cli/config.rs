//! Experiment configuration: TOML schema, validation, and problem
//! construction from a name plus parameter map.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ParamVector;
use crate::problems::{make_double_well, make_logistic_blobs, make_quadratic_mean, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmChoice {
    Gd,
    Sgd,
    Pgd,
}

impl AlgorithmChoice {
    pub fn name(self) -> &'static str {
        match self {
            AlgorithmChoice::Gd => "gd",
            AlgorithmChoice::Sgd => "sgd",
            AlgorithmChoice::Pgd => "pgd",
        }
    }
}

/// Problem selector: family name plus a parameter map. Unknown parameter
/// keys are rejected by name.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub name: String,
    #[serde(default)]
    pub params: toml::Table,
}

fn default_replicates() -> usize {
    50
}
fn default_probe_count() -> usize {
    512
}
fn default_record_stride() -> usize {
    1
}
fn default_algo_seeds() -> usize {
    1
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("risklab_out")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub algorithm: AlgorithmChoice,
    pub n_values: Vec<usize>,
    pub t_values: Vec<usize>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_algo_seeds")]
    pub algo_seeds_per_replicate: usize,
    #[serde(default = "default_probe_count")]
    pub probe_count: usize,
    pub base_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_record_stride")]
    pub record_stride: usize,
    /// Tolerance for the second-order optimizer; defaults to the largest
    /// admissible value for the problem's certified constants.
    #[serde(default)]
    pub pgd_epsilon: Option<f64>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("replicates", self.replicates),
            ("algo_seeds_per_replicate", self.algo_seeds_per_replicate),
            ("probe_count", self.probe_count),
            ("record_stride", self.record_stride),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        for (name, vals) in [("n_values", &self.n_values), ("t_values", &self.t_values)] {
            if vals.is_empty() {
                return Err(Error::Config(format!("{name} must be non-empty")));
            }
            if vals.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config(format!(
                    "{name} must be strictly ascending, got {vals:?}"
                )));
            }
            if vals.contains(&0) {
                return Err(Error::Config(format!("{name} entries must be positive")));
            }
        }
        Ok(())
    }
}

/// Parse and fully validate a config file, including constructing the
/// problem and checking algorithm-specific settings.
pub fn parse_config(path: &Path) -> Result<(ExperimentConfig, ProblemSpec)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let config: ExperimentConfig =
        toml::from_str(&text).map_err(|e| Error::Config(format!("{e}")))?;
    config.validate()?;
    let spec = build_problem(&config.problem)?;
    if config.algorithm == AlgorithmChoice::Pgd {
        let eps_cap = crate::optimizers::PgdConfig::max_admissible_epsilon(spec.constants())
            .map_err(|e| Error::Config(format!("pgd not applicable: {e}")))?;
        if let Some(eps) = config.pgd_epsilon {
            if !(eps > 0.0) || eps > eps_cap {
                return Err(Error::Config(format!(
                    "pgd_epsilon {eps} outside the admissible range (0, {eps_cap:.3e}]"
                )));
            }
        }
    }
    Ok((config, spec))
}

/// Typed accessors over the parameter table that track consumed keys so
/// leftovers can be rejected by name.
struct Params {
    table: toml::Table,
}

impl Params {
    fn new(table: &toml::Table) -> Self {
        Params {
            table: table.clone(),
        }
    }

    fn take_f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.table.remove(key) {
            None => Ok(None),
            Some(toml::Value::Float(f)) => Ok(Some(f)),
            Some(toml::Value::Integer(i)) => Ok(Some(i as f64)),
            Some(other) => Err(Error::Config(format!(
                "parameter {key}: expected a number, got {other}"
            ))),
        }
    }

    fn take_usize(&mut self, key: &str) -> Result<Option<usize>> {
        match self.table.remove(key) {
            None => Ok(None),
            Some(toml::Value::Integer(i)) if i >= 0 => Ok(Some(i as usize)),
            Some(other) => Err(Error::Config(format!(
                "parameter {key}: expected a non-negative integer, got {other}"
            ))),
        }
    }

    fn take_u64(&mut self, key: &str) -> Result<Option<u64>> {
        match self.table.remove(key) {
            None => Ok(None),
            Some(toml::Value::Integer(i)) if i >= 0 => Ok(Some(i as u64)),
            Some(other) => Err(Error::Config(format!(
                "parameter {key}: expected a non-negative integer, got {other}"
            ))),
        }
    }

    fn take_f64_array(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.table.remove(key) {
            None => Ok(None),
            Some(toml::Value::Array(items)) => items
                .into_iter()
                .map(|v| match v {
                    toml::Value::Float(f) => Ok(f),
                    toml::Value::Integer(i) => Ok(i as f64),
                    other => Err(Error::Config(format!(
                        "parameter {key}: expected numbers, got {other}"
                    ))),
                })
                .collect::<Result<Vec<f64>>>()
                .map(Some),
            Some(other) => Err(Error::Config(format!(
                "parameter {key}: expected an array, got {other}"
            ))),
        }
    }

    fn finish(self) -> Result<()> {
        if let Some(key) = self.table.keys().next() {
            return Err(Error::Config(format!("unknown parameter key \"{key}\"")));
        }
        Ok(())
    }
}

/// Construct a problem from its name and parameter map.
pub fn build_problem(config: &ProblemConfig) -> Result<ProblemSpec> {
    let mut p = Params::new(&config.params);
    let spec = match config.name.as_str() {
        "quadratic_mean" => {
            let d = p.take_usize("d")?.unwrap_or(2);
            let noise_radius = p.take_f64("noise_radius")?.unwrap_or(1.0);
            let mu = match p.take_f64_array("mu")? {
                Some(values) => {
                    if values.len() != d {
                        return Err(Error::Config(format!(
                            "parameter mu has length {} but d = {d}",
                            values.len()
                        )));
                    }
                    ParamVector::new(values)?
                }
                None => ParamVector::zeros(d),
            };
            p.finish()?;
            make_quadratic_mean(d, mu, noise_radius)?
        }
        "double_well" => {
            let d = p.take_usize("d")?.unwrap_or(2);
            let well_radius = p.take_f64("well_radius")?.unwrap_or(0.5);
            let noise_scale = p.take_f64("noise_scale")?.unwrap_or(0.02);
            let curvature_noise = p.take_f64("curvature_noise")?.unwrap_or(0.02);
            let seed = p.take_u64("seed")?.unwrap_or(1);
            p.finish()?;
            make_double_well(d, well_radius, noise_scale, curvature_noise, seed)?
        }
        "logistic_blobs" => {
            let classes = p.take_usize("classes")?.unwrap_or(2);
            let d = p.take_usize("d")?.unwrap_or(2);
            let n_population_oracle = p.take_usize("n_population_oracle")?.unwrap_or(4000);
            let seed = p.take_u64("seed")?.unwrap_or(1);
            p.finish()?;
            make_logistic_blobs(classes, d, n_population_oracle, seed)?
        }
        other => {
            return Err(Error::Config(format!(
                "unknown problem \"{other}\"; expected quadratic_mean, double_well, or logistic_blobs"
            )))
        }
    };
    Ok(spec)
}

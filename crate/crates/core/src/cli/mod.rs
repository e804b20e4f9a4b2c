//! Command-line interface: subcommands mapping onto the crate's experiments,
//! with deterministic CSV output. Exit codes: 0 success, 1 usage/config
//! error, 2 in-suite assertion failure.

pub mod config;
pub mod suite;

pub use config::{build_problem, parse_config, AlgorithmChoice, ExperimentConfig, ProblemConfig};
pub use suite::{csv_data_rows, run_suite, SuiteOutcome};

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bounds;
use crate::constants::ConstantsBundle;
use crate::error::{Error, Result};
use crate::geometry::ParamVector;
use crate::landscape;
use crate::optimizers::{check_sosp, run_pgd_sosp, PgdConfig};
use crate::problems::{certify_constants, ProblemSpec};
use crate::stability::{self, AlgorithmKind};

#[derive(Parser, Debug)]
#[command(
    name = "risklab",
    about = "Optimizer stability, excess-risk bounds, and landscape experiments"
)]
pub struct CliArgs {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate a bound formula from explicit constants.
    Bounds(BoundsArgs),
    /// Numerically certify the constants of a problem on a grid.
    Certify(CertifyArgs),
    /// Run an experiment suite from a config file.
    Run(RunArgs),
    /// Multistart minima census of one empirical risk.
    Census(CensusArgs),
    /// Gradient-norm / smallest-eigenvalue field over a grid.
    Field(FieldArgs),
    /// Single saddle-escaping trajectory dump.
    PgdDemo(PgdDemoArgs),
    /// Stability sweep over n with a log-log slope fit.
    Stability(StabilityArgs),
}

#[derive(Args, Debug)]
pub struct ProblemFlags {
    /// Problem family: quadratic_mean | double_well | logistic_blobs.
    #[arg(long, default_value = "double_well")]
    pub problem: String,
    /// Problem parameter, repeatable: --param d=2 --param noise_scale=0.02
    #[arg(long = "param")]
    pub params: Vec<String>,
}

impl ProblemFlags {
    pub fn build(&self) -> Result<ProblemSpec> {
        let mut table = toml::Table::new();
        for kv in &self.params {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::usage(format!("--param expects key=value, got {kv}")))?;
            let value = if let Ok(i) = v.parse::<i64>() {
                toml::Value::Integer(i)
            } else if let Ok(f) = v.parse::<f64>() {
                toml::Value::Float(f)
            } else {
                return Err(Error::usage(format!("--param {k}: cannot parse {v}")));
            };
            table.insert(k.to_string(), value);
        }
        build_problem(&ProblemConfig {
            name: self.problem.clone(),
            params: table,
        })
    }
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    /// One of: gd_opt, sgd_opt, convex_stability, convex_excess, good_event,
    /// local_minima_gen, xi, nonconvex_gen, nonconvex_excess,
    /// pgd_iterations, subgaussian_tail.
    #[arg(long)]
    pub theorem: String,
    #[arg(long = "L0", default_value_t = 1.0)]
    pub l0: f64,
    #[arg(long = "L1", default_value_t = 1.0)]
    pub l1: f64,
    #[arg(long = "L2", default_value_t = 1.0)]
    pub l2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long = "M", default_value_t = 1.0)]
    pub loss_bound: f64,
    #[arg(long = "D", default_value_t = 1.0)]
    pub diameter: f64,
    #[arg(long = "K", default_value_t = 1)]
    pub minima_count: usize,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 10)]
    pub t: usize,
    #[arg(long = "eps-t", default_value_t = 0.0)]
    pub eps_t: f64,
    #[arg(long, default_value_t = 0.0)]
    pub zeta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    #[arg(long = "delta-prime", default_value_t = 0.0)]
    pub delta_prime: f64,
    #[arg(long = "opt-gap", default_value_t = 0.0)]
    pub opt_gap: f64,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long = "delta-dev", default_value_t = 0.5)]
    pub delta_dev: f64,
    /// gradient_inner | hessian (for subgaussian_tail).
    #[arg(long, default_value = "gradient_inner")]
    pub which: String,
    /// with_spurious | no_spurious (for the nonconvex bounds).
    #[arg(long, default_value = "with_spurious")]
    pub variant: String,
}

impl BoundsArgs {
    fn constants(&self) -> Result<ConstantsBundle> {
        ConstantsBundle::new(
            self.l0,
            self.l1,
            self.l2,
            self.lambda,
            self.alpha,
            self.beta,
            self.loss_bound,
            self.diameter,
            self.minima_count,
        )
    }
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub problem: ProblemFlags,
    #[arg(long = "grid-resolution", default_value_t = 0.05)]
    pub grid_resolution: f64,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Args, Debug)]
pub struct CensusArgs {
    #[command(flatten)]
    pub problem: ProblemFlags,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long = "data-seed", default_value_t = 1)]
    pub data_seed: u64,
    #[arg(long, default_value_t = 500)]
    pub starts: usize,
    #[arg(long = "merge-radius")]
    pub merge_radius: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct FieldArgs {
    #[command(flatten)]
    pub problem: ProblemFlags,
    #[arg(long = "grid-resolution", default_value_t = 0.05)]
    pub grid_resolution: f64,
    /// Evaluate the empirical field on a sampled dataset instead of the
    /// population field.
    #[arg(long)]
    pub empirical: bool,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long = "data-seed", default_value_t = 1)]
    pub data_seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PgdDemoArgs {
    #[command(flatten)]
    pub problem: ProblemFlags,
    #[arg(long, default_value_t = 400)]
    pub n: usize,
    #[arg(long = "data-seed", default_value_t = 1)]
    pub data_seed: u64,
    /// Start coordinates, comma separated; defaults to the saddle at the
    /// domain center.
    #[arg(long)]
    pub w0: Option<String>,
    /// Tolerance; defaults to the largest admissible value.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long = "max-steps", default_value_t = 1_000_000)]
    pub max_steps: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub problem: ProblemFlags,
    /// Comma-separated n sweep, e.g. 50,100,200,400.
    #[arg(long, default_value = "50,100,200,400")]
    pub n: String,
    #[arg(long, default_value_t = 100)]
    pub t: usize,
    #[arg(long, default_value = "gd")]
    pub algorithm: String,
    #[arg(long, default_value_t = 50)]
    pub replicates: usize,
    #[arg(long = "algo-seeds", default_value_t = 1)]
    pub algo_seeds: usize,
    #[arg(long = "probe-count", default_value_t = 512)]
    pub probe_count: usize,
    #[arg(long = "base-seed", default_value_t = 42)]
    pub base_seed: u64,
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, content)?;
            Ok(())
        }
        None => {
            std::io::stdout()
                .write_all(content.as_bytes())
                .map_err(Error::Io)?;
            Ok(())
        }
    }
}

fn handle_bounds(args: &BoundsArgs) -> Result<String> {
    let c = args.constants()?;
    let out = match args.theorem.as_str() {
        "gd_opt" => format!("{}\n", bounds::gd_opt_bound(&c, args.t)?),
        "sgd_opt" => format!("{}\n", bounds::sgd_opt_bound(&c, args.t)?),
        "convex_stability" => {
            let r = bounds::convex_stability_bound(&c, args.n, args.d, args.eps_t)?;
            format!("{}csv,{}\n", r.render(), r.csv_row())
        }
        "convex_excess" => {
            let r = bounds::convex_excess_bound(&c, args.n, args.d, args.eps_t)?;
            format!("{}csv,{}\n", r.render(), r.csv_row())
        }
        "good_event" => {
            let r = bounds::good_event_prob_bound(&c, args.n, args.d)?;
            format!("{}csv,{}\n", r.render(), r.csv_row())
        }
        "local_minima_gen" => {
            let r = bounds::local_minima_gen_bound(&c, args.n, args.d)?;
            format!("{}csv,{}\n", r.render(), r.csv_row())
        }
        "xi" => {
            let xi = bounds::xi_terms(&c, args.n, args.d)?;
            format!(
                "xi1 = {}\nxi2 = {}\nr = {}\ndegenerate_covering = {}\nunderflow = {}\n",
                xi.xi1, xi.xi2, xi.r, xi.degenerate_covering, xi.underflow
            )
        }
        "nonconvex_gen" | "nonconvex_excess" => {
            let variant = match args.variant.as_str() {
                "with_spurious" => bounds::SpuriousVariant::WithSpurious,
                "no_spurious" => bounds::SpuriousVariant::NoSpurious,
                other => return Err(Error::usage(format!("unknown variant {other}"))),
            };
            let r = if args.theorem == "nonconvex_gen" {
                bounds::nonconvex_gen_bound(
                    &c,
                    args.n,
                    args.d,
                    args.zeta,
                    args.delta,
                    variant,
                    args.delta_prime,
                )?
            } else {
                bounds::nonconvex_excess_bound(
                    &c,
                    args.n,
                    args.d,
                    args.zeta,
                    args.delta,
                    variant,
                    args.delta_prime,
                    args.opt_gap,
                )?
            };
            format!("{}csv,{}\n", r.render(), r.csv_row())
        }
        "pgd_iterations" => {
            let b = bounds::pgd_iteration_bound(&c, args.eps)?;
            format!("statement = {}\nproof = {}\n", b.statement, b.proof)
        }
        "subgaussian_tail" => {
            let which = match args.which.as_str() {
                "gradient_inner" => bounds::TailKind::GradientInner,
                "hessian" => bounds::TailKind::Hessian,
                other => return Err(Error::usage(format!("unknown tail kind {other}"))),
            };
            let b = bounds::subgaussian_tail_bound(&c, args.n, args.d, args.delta_dev, which)?;
            format!("raw = {}\nclamped = {}\n", b.raw, b.clamped)
        }
        other => return Err(Error::usage(format!("unknown theorem \"{other}\""))),
    };
    Ok(out)
}

fn handle_certify(args: &CertifyArgs) -> Result<String> {
    let spec = args.problem.build()?;
    let cert = certify_constants(&spec, args.grid_resolution)?;
    let mut out = format!("problem,{}\n", spec.name());
    out.push_str(&format!("l0,{}\n", cert.l0));
    out.push_str(&format!("l1,{}\n", cert.l1));
    out.push_str(&format!("l2,{}\n", cert.l2));
    out.push_str(&format!("lambda,{}\n", cert.lambda));
    out.push_str(&format!("alpha,{}\n", cert.alpha));
    out.push_str(&format!(
        "beta,{}\n",
        cert.beta.map(|b| b.to_string()).unwrap_or_default()
    ));
    out.push_str(&format!("loss_bound,{}\n", cert.loss_bound));
    out.push_str(&format!("diameter,{}\n", cert.diameter));
    out.push_str(&format!("minima_count,{}\n", cert.minima_count));
    if let Some(grid) = &cert.grid {
        out.push_str(&format!(
            "grid,resolution={} interior={} boundary={} probes={}\n",
            grid.resolution, grid.interior_points, grid.boundary_points, grid.support_probes
        ));
    }
    Ok(out)
}

fn handle_census(args: &CensusArgs) -> Result<String> {
    let spec = args.problem.build()?;
    let data = spec.sample_dataset(args.data_seed, args.n);
    let merge = args
        .merge_radius
        .unwrap_or_else(|| landscape::default_merge_radius(&spec));
    let census = landscape::minima_census(&spec, &data, args.starts, merge, args.seed)?;
    let mut out = String::from("index,risk,coords\n");
    for (i, (w, r)) in census
        .found_minima
        .iter()
        .zip(census.found_risks.iter())
        .enumerate()
    {
        let coords: Vec<String> = w.as_slice().iter().map(|x| x.to_string()).collect();
        out.push_str(&format!("{i},{r},{}\n", coords.join(";")));
    }
    out.push_str(&format!("# pass: {}\n", census.pass));
    out.push_str(&format!(
        "# matched: {}/{}\n",
        census.matched.iter().flatten().count(),
        census.matched.len()
    ));
    out.push_str(&format!("# unconverged: {}\n", census.unconverged));
    if let Some(w) = &census.warning {
        out.push_str(&format!("# warning: {w}\n"));
    }
    Ok(out)
}

fn handle_field(args: &FieldArgs) -> Result<String> {
    let spec = args.problem.build()?;
    let data;
    let field = if args.empirical {
        data = spec.sample_dataset(args.data_seed, args.n);
        landscape::min_eig_field(&spec, Some(&data), args.grid_resolution)?
    } else {
        landscape::min_eig_field(&spec, None, args.grid_resolution)?
    };
    let mut out = String::from("coords,grad_norm,sigma_min\n");
    for row in &field.rows {
        let coords: Vec<String> = row.point.iter().map(|x| x.to_string()).collect();
        out.push_str(&format!(
            "{},{},{}\n",
            coords.join(";"),
            row.grad_norm,
            row.sigma_min
        ));
    }
    out.push_str(&format!("# pass: {}\n", field.pass));
    out.push_str(&format!("# violations: {}\n", field.violations.len()));
    Ok(out)
}

fn handle_pgd_demo(args: &PgdDemoArgs) -> Result<String> {
    let spec = args.problem.build()?;
    let data = spec.sample_dataset(args.data_seed, args.n);
    let eps = match args.epsilon {
        Some(e) => e,
        None => PgdConfig::max_admissible_epsilon(spec.constants())?,
    };
    let config = PgdConfig::new(eps, spec.constants().clone())?.with_max_steps(args.max_steps);
    let w0 = match &args.w0 {
        Some(csv) => {
            let values: std::result::Result<Vec<f64>, _> =
                csv.split(',').map(|s| s.trim().parse::<f64>()).collect();
            ParamVector::new(values.map_err(|e| Error::usage(format!("bad --w0: {e}")))?)?
        }
        None => spec.domain().center().clone(),
    };
    let (trace, halt) = run_pgd_sosp(&spec, &data, &w0, &config)?;
    let mut out = String::from("step,emp_risk,grad_norm,coords\n");
    for p in &trace.points {
        let coords: Vec<String> = p.iterate.as_slice().iter().map(|x| x.to_string()).collect();
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.step,
            p.emp_risk,
            p.grad_norm,
            coords.join(";")
        ));
    }
    let (sosp, m) = check_sosp(&spec, &data, &trace.terminal, eps, eps.cbrt())?;
    out.push_str(&format!("# halt: {halt:?}\n"));
    out.push_str(&format!(
        "# terminal_sosp: {sosp} (grad_norm={}, sigma_min={})\n",
        m.grad_norm, m.sigma_min
    ));
    out.push_str(&format!("# epsilon: {eps}\n"));
    Ok(out)
}

fn handle_stability(args: &StabilityArgs) -> Result<String> {
    let spec = args.problem.build()?;
    let algorithm = match args.algorithm.as_str() {
        "gd" => AlgorithmKind::Gd,
        "sgd" => AlgorithmKind::Sgd,
        other => return Err(Error::usage(format!("unknown algorithm {other}"))),
    };
    let ns: std::result::Result<Vec<usize>, _> =
        args.n.split(',').map(|s| s.trim().parse::<usize>()).collect();
    let ns = ns.map_err(|e| Error::usage(format!("bad --n list: {e}")))?;
    let mut out = String::from("n,stability,std_error,gap,gap_std_error\n");
    let mut stab_means = Vec::new();
    for &n in &ns {
        let est = stability::estimate_stability(
            &spec,
            algorithm,
            n,
            args.t,
            args.replicates,
            args.algo_seeds,
            args.probe_count,
            args.base_seed,
        )?;
        let (gap, gap_se) = stability::estimate_generalization_gap(
            &spec,
            algorithm,
            n,
            args.t,
            args.replicates,
            args.base_seed,
        )?;
        out.push_str(&format!(
            "{n},{},{},{gap},{gap_se}\n",
            est.value, est.std_error
        ));
        stab_means.push(est.value);
    }
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let fit = stability::fit_scaling(&xs, &stab_means)?;
    out.push_str(&format!("# slope: {}\n", fit.slope));
    out.push_str(&format!("# excluded: {}\n", fit.excluded));
    out.push_str("# note: stability values are probe-max lower estimates\n");
    Ok(out)
}

/// Dispatch a parsed command line; returns the process exit code.
pub fn run(args: &CliArgs) -> Result<i32> {
    match &args.command {
        Command::Bounds(a) => {
            print!("{}", handle_bounds(a)?);
            Ok(0)
        }
        Command::Certify(a) => {
            print!("{}", handle_certify(a)?);
            Ok(0)
        }
        Command::Run(a) => {
            let (config, spec) = parse_config(&a.config)?;
            let outcome = run_suite(&config, &spec)?;
            if outcome.exit_code != 0 {
                let failures: Vec<&suite::AssertionResult> =
                    outcome.assertions.iter().filter(|x| !x.pass).collect();
                eprintln!(
                    "assertion failures:\n{}",
                    serde_json::to_string_pretty(&failures)
                        .unwrap_or_else(|_| "<unprintable>".into())
                );
            }
            println!("artifacts: {}", outcome.output_dir.display());
            Ok(outcome.exit_code)
        }
        Command::Census(a) => {
            print!("{}", handle_census(a)?);
            Ok(0)
        }
        Command::Field(a) => {
            let content = handle_field(a)?;
            write_output(&a.out, &content)?;
            Ok(0)
        }
        Command::PgdDemo(a) => {
            let content = handle_pgd_demo(a)?;
            write_output(&a.out, &content)?;
            Ok(0)
        }
        Command::Stability(a) => {
            print!("{}", handle_stability(a)?);
            Ok(0)
        }
    }
}

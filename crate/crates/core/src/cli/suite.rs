//! The experiment grid runner: (n, t, replicate) sweeps with paired runs,
//! CSV/JSON artifacts, and in-suite assertions comparing measurements to the
//! bound calculators.

use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds;
use crate::error::{Error, Result};
use crate::landscape;
use crate::optimizers::{run_pgd_sosp, HaltReason, PgdConfig};
use crate::problems::ProblemSpec;
use crate::rng;
use crate::stability::{self, AlgorithmKind};
use crate::stats;

use super::config::{AlgorithmChoice, ExperimentConfig};

pub const PER_REPLICATE_SCHEMA: &str =
    "problem,n,t,replicate,seed,emp_risk,pop_risk,gap,stability_pair_diff,halt_reason";
pub const AGGREGATE_SCHEMA: &str = "problem,n,t,metric,mean,std_error,bound_name,bound_value";

#[derive(Debug, Clone, Serialize)]
pub struct AssertionResult {
    pub name: String,
    pub n: usize,
    pub t: usize,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AggregateRow {
    pub n: usize,
    pub t: usize,
    pub metric: String,
    pub mean: f64,
    pub std_error: f64,
    pub bound_name: String,
    pub bound_value: Option<f64>,
}

/// A full bound report attached to one grid cell.
#[derive(Debug, Clone, Serialize)]
pub struct CellBoundReport {
    pub n: usize,
    pub t: usize,
    pub report: bounds::BoundReport,
}

#[derive(Debug)]
pub struct SuiteOutcome {
    pub exit_code: i32,
    pub output_dir: PathBuf,
    pub assertions: Vec<AssertionResult>,
}

struct ReplicateRow {
    n: usize,
    t: usize,
    replicate: usize,
    seed: u64,
    emp_risk: f64,
    pop_risk: f64,
    gap: f64,
    excess: f64,
    stability_pair_diff: f64,
    opt_gap: Option<f64>,
    steps: Option<usize>,
    halt_reason: &'static str,
}

fn run_cell(
    spec: &ProblemSpec,
    config: &ExperimentConfig,
    n: usize,
    t: usize,
    replicate: usize,
    pop_min_risk: f64,
) -> Result<ReplicateRow> {
    let key = [replicate as u64, n as u64, t as u64];
    let base = config.base_seed;
    let data_seed = rng::derive_seed(base, &[key[0], key[1], key[2], 1]);
    let subst_seed = rng::derive_seed(base, &[key[0], key[1], key[2], 2]);
    let probe_seed = rng::derive_seed(base, &[key[0], key[1], key[2], 3]);
    let algo_seed = rng::derive_seed(base, &[key[0], key[1], key[2], 4]);
    let probes = spec.sample_dataset(probe_seed, config.probe_count);
    let global_idx = spec.population().global_min_index();

    match config.algorithm {
        AlgorithmChoice::Gd | AlgorithmChoice::Sgd => {
            let kind = match config.algorithm {
                AlgorithmChoice::Gd => AlgorithmKind::Gd,
                _ => AlgorithmKind::Sgd,
            };
            let mut terminals = Vec::with_capacity(config.algo_seeds_per_replicate);
            let mut first = None;
            for a in 0..config.algo_seeds_per_replicate {
                let run = stability::paired_run(
                    spec,
                    kind,
                    n,
                    t,
                    data_seed,
                    subst_seed,
                    rng::derive_seed(base, &[key[0], key[1], key[2], 4 + a as u64]),
                )?;
                if first.is_none() {
                    first = Some((run.data.clone(), run.trace.terminal.clone()));
                }
                terminals.push((run.trace.terminal, run.trace_prime.terminal));
            }
            let (data, w_t) = first.expect("at least one algorithm seed");
            let pair_diff = stability::stability_pair_statistic(spec, &terminals, &probes);
            let emp_risk = spec.empirical_risk(&w_t, &data);
            let pop_risk = spec.population_risk(&w_t);
            let opt_gap = if spec.is_convex() {
                landscape::locate_empirical_min_near(spec, &data, global_idx)
                    .ok()
                    .map(|loc| emp_risk - spec.empirical_risk(&loc.point, &data))
            } else {
                None
            };
            Ok(ReplicateRow {
                n,
                t,
                replicate,
                seed: algo_seed,
                emp_risk,
                pop_risk,
                gap: pop_risk - emp_risk,
                excess: pop_risk - pop_min_risk,
                stability_pair_diff: pair_diff,
                opt_gap,
                steps: None,
                halt_reason: "completed",
            })
        }
        AlgorithmChoice::Pgd => {
            let eps = match config.pgd_epsilon {
                Some(e) => e,
                None => PgdConfig::max_admissible_epsilon(spec.constants())?,
            };
            let pgd = PgdConfig::new(eps, spec.constants().clone())?
                .with_max_steps(t.max(1_000_000))
                .with_record_stride(usize::MAX);
            let data = spec.sample_dataset(data_seed, n);
            let replacement = spec.sample_dataset(subst_seed, 1);
            let data_prime = data.substitute(0, replacement.get(0).clone())?;
            let w0 = spec.domain().center().clone();
            let (trace, halt) = run_pgd_sosp(spec, &data, &w0, &pgd)?;
            let (trace_prime, _) = run_pgd_sosp(spec, &data_prime, &w0, &pgd)?;
            let pair_diff = stability::stability_pair_statistic(
                spec,
                &[(trace.terminal.clone(), trace_prime.terminal)],
                &probes,
            );
            let emp_risk = spec.empirical_risk(&trace.terminal, &data);
            let pop_risk = spec.population_risk(&trace.terminal);
            Ok(ReplicateRow {
                n,
                t,
                replicate,
                seed: algo_seed,
                emp_risk,
                pop_risk,
                gap: pop_risk - emp_risk,
                excess: pop_risk - pop_min_risk,
                stability_pair_diff: pair_diff,
                opt_gap: None,
                steps: Some(trace.step_count),
                halt_reason: match halt {
                    HaltReason::SospFound => "sosp_found",
                    HaltReason::StepCap => "step_cap",
                },
            })
        }
    }
}

fn aggregate(
    spec: &ProblemSpec,
    config: &ExperimentConfig,
    n: usize,
    t: usize,
    rows: &[ReplicateRow],
) -> Result<(Vec<AggregateRow>, Vec<AssertionResult>, Vec<CellBoundReport>)> {
    let c = spec.constants();
    let d = spec.dim();
    let collect = |f: &dyn Fn(&ReplicateRow) -> f64| -> Vec<f64> { rows.iter().map(f).collect() };
    let emp = stats::mean_and_se(&collect(&|r| r.emp_risk));
    let pop = stats::mean_and_se(&collect(&|r| r.pop_risk));
    let gap = stats::mean_and_se(&collect(&|r| r.gap));
    let excess = stats::mean_and_se(&collect(&|r| r.excess));
    let stab = stats::mean_and_se(&collect(&|r| r.stability_pair_diff));
    let opt_vals: Vec<f64> = rows.iter().filter_map(|r| r.opt_gap).collect();
    let opt = stats::mean_and_se(&opt_vals);

    let mut aggregates = Vec::new();
    let mut reports: Vec<CellBoundReport> = Vec::new();
    let mut push = |metric: &str, mv: (f64, f64), bound_name: &str, bound: Option<f64>| {
        aggregates.push(AggregateRow {
            n,
            t,
            metric: metric.to_string(),
            mean: mv.0,
            std_error: mv.1,
            bound_name: bound_name.to_string(),
            bound_value: bound,
        });
    };
    push("emp_risk", emp, "", None);
    push("pop_risk", pop, "", None);

    let mut assertions: Vec<AssertionResult> = Vec::new();
    fn le(name: &str, n: usize, t: usize, measured: f64, bound: f64) -> AssertionResult {
        AssertionResult {
            name: name.to_string(),
            n,
            t,
            measured,
            bound,
            pass: measured <= bound,
        }
    }

    match config.algorithm {
        AlgorithmChoice::Gd | AlgorithmChoice::Sgd => {
            let stab_bound = if spec.is_convex() && d >= 2 && !opt_vals.is_empty() {
                let eps_t = (opt.0 + 3.0 * opt.1).max(0.0);
                let report = bounds::convex_stability_bound(c, n, d, eps_t)?;
                let total = report.total;
                reports.push(CellBoundReport { n, t, report });
                Some(total)
            } else {
                None
            };
            push("gap", gap, "convex_stability", stab_bound);
            push("stability_pair_diff", stab, "convex_stability", stab_bound);
            let rate = match config.algorithm {
                AlgorithmChoice::Gd => ("gd_opt_rate", bounds::gd_opt_bound(c, t)?),
                _ => ("sgd_opt_rate", bounds::sgd_opt_bound(c, t)?),
            };
            if !opt_vals.is_empty() {
                push("opt_gap", opt, rate.0, Some(rate.1));
            }
            let excess_bound = if spec.is_convex() && d >= 2 && !opt_vals.is_empty() {
                let eps_t = (opt.0 + 3.0 * opt.1).max(0.0);
                let report = bounds::convex_excess_bound(c, n, d, eps_t)?;
                let total = report.total;
                reports.push(CellBoundReport { n, t, report });
                Some(total)
            } else {
                None
            };
            push("excess", excess, "convex_excess", excess_bound);

            // in-suite assertions (measured against the calculators)
            assertions.push(le(
                "gap_le_stability_3sigma",
                n,
                t,
                gap.0.abs(),
                stab.0 + 3.0 * (gap.1 + stab.1),
            ));
            if !opt_vals.is_empty() {
                match config.algorithm {
                    AlgorithmChoice::Gd => {
                        assertions.push(le("opt_le_gd_rate", n, t, opt.0, rate.1))
                    }
                    _ => assertions.push(le(
                        "opt_le_sgd_rate_3sigma",
                        n,
                        t,
                        opt.0,
                        rate.1 + 3.0 * opt.1,
                    )),
                }
                assertions.push(le(
                    "excess_le_decomposition_3sigma",
                    n,
                    t,
                    excess.0,
                    opt.0 + gap.0.abs() + 3.0 * (excess.1 + opt.1 + gap.1),
                ));
            }
            if let Some(b) = excess_bound {
                assertions.push(le("excess_le_bound_3sigma", n, t, excess.0, b + 3.0 * excess.1));
            }
        }
        AlgorithmChoice::Pgd => {
            let eps = match config.pgd_epsilon {
                Some(e) => e,
                None => PgdConfig::max_admissible_epsilon(c)?,
            };
            let gen_bound = if d >= 2 {
                let report = bounds::nonconvex_gen_bound(
                    c,
                    n,
                    d,
                    eps,
                    0.0,
                    bounds::SpuriousVariant::WithSpurious,
                    0.0,
                )?;
                let total = report.total;
                reports.push(CellBoundReport { n, t, report });
                Some(total)
            } else {
                None
            };
            push("gap", gap, "nonconvex_generalization", gen_bound);
            push("stability_pair_diff", stab, "", None);
            push("excess", excess, "", None);
            let steps: Vec<f64> = rows.iter().filter_map(|r| r.steps.map(|s| s as f64)).collect();
            let step_bound = bounds::pgd_iteration_bound(c, eps)?;
            push(
                "steps",
                stats::mean_and_se(&steps),
                "pgd_iterations_proof",
                Some(step_bound.proof),
            );
            let sosp_frac = rows
                .iter()
                .filter(|r| r.halt_reason == "sosp_found")
                .count() as f64
                / rows.len() as f64;
            assertions.push(AssertionResult {
                name: "all_halts_sosp_found".into(),
                n,
                t,
                measured: sosp_frac,
                bound: 1.0,
                pass: (sosp_frac - 1.0).abs() < 1e-12,
            });
            let max_steps = steps.iter().fold(0.0f64, |a, &b| a.max(b));
            assertions.push(le("steps_le_proof_bound", n, t, max_steps, step_bound.proof));
            if let Some(b) = gen_bound {
                assertions.push(le(
                    "gap_le_nonconvex_bound_3sigma",
                    n,
                    t,
                    gap.0.abs(),
                    b + 3.0 * gap.1,
                ));
            }
        }
    }
    Ok((aggregates, assertions, reports))
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Execute the full (n, t, replicate) grid, write artifacts, and return the
/// exit outcome: 0 when all in-suite assertions pass, 2 otherwise.
pub fn run_suite(config: &ExperimentConfig, spec: &ProblemSpec) -> Result<SuiteOutcome> {
    config.validate()?;
    let output_dir = match std::env::var_os("RISKLAB_OUT") {
        Some(dir) => PathBuf::from(dir),
        None => config.output_dir.clone(),
    };
    std::fs::create_dir_all(&output_dir)?;
    let pop_min_risk = spec.population_risk(spec.population().global_minimum());

    let mut all_rows: Vec<ReplicateRow> = Vec::new();
    let mut all_aggregates: Vec<AggregateRow> = Vec::new();
    let mut all_assertions: Vec<AssertionResult> = Vec::new();
    let mut all_reports: Vec<CellBoundReport> = Vec::new();
    for &n in &config.n_values {
        for &t in &config.t_values {
            let rows: Result<Vec<ReplicateRow>> = (0..config.replicates)
                .into_par_iter()
                .map(|rep| run_cell(spec, config, n, t, rep, pop_min_risk))
                .collect();
            let rows = rows?;
            let (aggregates, assertions, reports) = aggregate(spec, config, n, t, &rows)?;
            all_rows.extend(rows);
            all_aggregates.extend(aggregates);
            all_assertions.extend(assertions);
            all_reports.extend(reports);
        }
    }

    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);

    // per-replicate CSV
    let mut f = std::fs::File::create(output_dir.join("per_replicate.csv"))?;
    writeln!(f, "# risklab per-replicate schema v1")?;
    writeln!(f, "# generated_at: {stamp} (only non-deterministic line)")?;
    writeln!(f, "{PER_REPLICATE_SCHEMA}")?;
    for r in &all_rows {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{},{},{}",
            spec.name(),
            r.n,
            r.t,
            r.replicate,
            r.seed,
            fmt(r.emp_risk),
            fmt(r.pop_risk),
            fmt(r.gap),
            fmt(r.stability_pair_diff),
            r.halt_reason
        )?;
    }

    // aggregate CSV
    let mut f = std::fs::File::create(output_dir.join("aggregate.csv"))?;
    writeln!(f, "# risklab aggregate schema v1")?;
    writeln!(f, "# generated_at: {stamp} (only non-deterministic line)")?;
    writeln!(f, "{AGGREGATE_SCHEMA}")?;
    for a in &all_aggregates {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{}",
            spec.name(),
            a.n,
            a.t,
            a.metric,
            fmt(a.mean),
            fmt(a.std_error),
            a.bound_name,
            a.bound_value.map(fmt).unwrap_or_default()
        )?;
    }

    // summary JSON (fully deterministic)
    #[derive(Serialize)]
    struct Summary<'a> {
        prng: &'static str,
        seed_derivation: &'static str,
        problem: &'a str,
        config: &'a ExperimentConfig,
        aggregates: &'a [AggregateRow],
        bound_reports: &'a [CellBoundReport],
        assertions: &'a [AssertionResult],
    }
    let summary = Summary {
        prng: rng::PRNG_ALGORITHM,
        seed_derivation: "replicate streams are chacha8 seeded with \
                          base_seed XOR splitmix64-chain(replicate, n, t, slot)",
        problem: spec.name(),
        config,
        aggregates: &all_aggregates,
        bound_reports: &all_reports,
        assertions: &all_assertions,
    };
    std::fs::write(
        output_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary).map_err(|e| Error::Internal(e.to_string()))?,
    )?;

    let failures: Vec<&AssertionResult> = all_assertions.iter().filter(|a| !a.pass).collect();
    if !failures.is_empty() {
        std::fs::write(
            output_dir.join("failures.json"),
            serde_json::to_string_pretty(&failures).map_err(|e| Error::Internal(e.to_string()))?,
        )?;
    }
    Ok(SuiteOutcome {
        exit_code: if failures.is_empty() { 0 } else { 2 },
        output_dir,
        assertions: all_assertions,
    })
}

/// Data rows of a CSV artifact (everything except the marked timestamp
/// line), for determinism checks and downstream tooling.
pub fn csv_data_rows(content: &str) -> Vec<&str> {
    content
        .lines()
        .filter(|line| !line.starts_with("# generated_at:"))
        .collect()
}

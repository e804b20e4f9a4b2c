//! Acceptance suite: one test per criterion, each printing a pass line with
//! its measured quantities (run with `cargo test --test acceptance --
//! --nocapture` to see them).

mod common;

use std::time::Instant;

use risklab::bounds;
use risklab::geometry::ParamVector;
use risklab::landscape;
use risklab::optimizers::{check_sosp, run_gd, run_pgd_sosp, run_sgd_strided, HaltReason, PgdConfig};
use risklab::problems::{fd, make_logistic_blobs, make_quadratic_mean};
use risklab::rng;
use risklab::stability::{self, AlgorithmKind};
use risklab::stats;

fn quad(dim: usize) -> risklab::ProblemSpec {
    make_quadratic_mean(dim, ParamVector::zeros(dim), 1.0).unwrap()
}

#[test]
fn c01_gd_convex_rate() {
    let start = Instant::now();
    let spec = quad(4);
    let c = spec.constants();
    let data = spec.sample_dataset(101, 100);
    let emp = spec.empirical(&data);
    // closed-form empirical minimum: the sample mean (interior, so the
    // projection is a no-op)
    let w_star_s = spec
        .domain()
        .project(&emp.quadratic_mean_point().unwrap())
        .unwrap();
    let min_risk = emp.risk(&w_star_s);
    let mut stream = rng::stream(7);
    let w0 = ParamVector::from_dvector(rng::uniform_ball(
        &mut stream,
        spec.domain().center().as_dvector(),
        0.95 * spec.domain().radius(),
    ));
    let trace = run_gd(&spec, &data, &w0, 2000).unwrap();
    let mut violations = 0;
    for p in trace.points.iter().filter(|p| p.step >= 1) {
        let gap = p.emp_risk - min_risk;
        let bound = c.diameter * c.diameter * c.l1 / (2.0 * p.step as f64);
        if gap > bound + 1e-12 {
            violations += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert_eq!(violations, 0, "rate violations at some steps");
    assert!(elapsed < 5.0, "criterion 01 overran: {elapsed:.2} s");
    println!("criterion 01 PASS - GD rate D^2 L1/(2t): 0 violations over t in [1,2000] ({elapsed:.2} s)");
}

#[test]
fn c02_sgd_terminal_rate() {
    let start = Instant::now();
    let spec = quad(4);
    let c = spec.constants().clone();
    let data = spec.sample_dataset(202, 100);
    let emp = spec.empirical(&data);
    let w_star_s = emp.quadratic_mean_point().unwrap();
    let min_risk = emp.risk(&w_star_s);
    let w0 = spec.domain().center().clone();
    let mut gaps_100 = Vec::new();
    let mut gaps_1000 = Vec::new();
    for seed in 0..200u64 {
        let trace = run_sgd_strided(&spec, &data, &w0, 1000, rng::derive_seed(99, &[seed]), 100)
            .unwrap();
        let risk_at = |step: usize| {
            trace
                .points
                .iter()
                .find(|p| p.step == step)
                .map(|p| p.emp_risk)
                .expect("recorded step")
        };
        gaps_100.push(risk_at(100) - min_risk);
        gaps_1000.push(risk_at(1000) - min_risk);
    }
    let elapsed = start.elapsed().as_secs_f64();
    for (t, gaps) in [(100usize, &gaps_100), (1000usize, &gaps_1000)] {
        let (mean, se) = stats::mean_and_se(gaps);
        let bound = bounds::sgd_opt_bound(&c, t).unwrap();
        assert!(
            mean <= bound + 3.0 * se,
            "t = {t}: mean gap {mean} above bound {bound} (se {se})"
        );
        println!(
            "criterion 02 PASS - SGD terminal rate at t={t}: mean {mean:.4e} <= bound {bound:.4e} + 3se"
        );
    }
    assert!(elapsed < 60.0, "criterion 02 overran: {elapsed:.2} s");
}

fn stability_sweep() -> (Vec<usize>, Vec<stability::StabilityEstimate>) {
    let spec = quad(4);
    let ns = vec![50usize, 100, 200, 400, 800];
    let estimates: Vec<_> = ns
        .iter()
        .map(|&n| {
            stability::estimate_stability(&spec, AlgorithmKind::Gd, n, 60, 50, 1, 512, 4242)
                .unwrap()
        })
        .collect();
    (ns, estimates)
}

#[test]
fn c03_stability_scaling_slope() {
    let start = Instant::now();
    let (ns, estimates) = stability_sweep();
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = estimates.iter().map(|e| e.value).collect();
    let fit = stability::fit_scaling(&xs, &ys).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        fit.slope >= -1.35 && fit.slope <= -0.65,
        "slope {} outside [-1.35, -0.65]",
        fit.slope
    );
    assert!(elapsed < 120.0, "criterion 03 overran: {elapsed:.2} s");
    println!(
        "criterion 03 PASS - GD stability log-log slope {:.3} in [-1.35, -0.65] ({elapsed:.2} s)",
        fit.slope
    );
}

#[test]
fn c04_gap_below_stability() {
    let spec = quad(4);
    let (ns, estimates) = stability_sweep();
    for (&n, est) in ns.iter().zip(estimates.iter()) {
        let (gap, gap_se) =
            stability::estimate_generalization_gap(&spec, AlgorithmKind::Gd, n, 60, 50, 4242)
                .unwrap();
        let margin = 3.0 * (gap_se + est.std_error);
        assert!(
            gap.abs() <= est.value + margin,
            "n = {n}: |gap| {} above stability {} + 3 sigma {margin}",
            gap.abs(),
            est.value
        );
    }
    println!("criterion 04 PASS - |generalization gap| <= stability estimate + 3 sigma at all n");
}

#[test]
fn c05_minima_concentration() {
    let spec = quad(4);
    let report = stability::minima_distance_experiment(&spec, 100, 500, 777).unwrap();
    assert_eq!(
        report.violations, 0,
        "paired-minima distance exceeded 8 L0/(n lambda) on the good event"
    );
    println!(
        "criterion 05 PASS - paired minima: 0/{} violations, event freq {:.3}, max ratio {:.3}",
        report.replicates, report.event_frequency, report.max_ratio
    );
}

#[test]
fn c06_matrix_concentration_moment() {
    let start = Instant::now();
    let spec = common::certified_double_well(2, 0.02, 61, 0.02);
    let w_star = spec.population().global_minimum().clone();
    let report = stability::concentration_mc(&spec, &w_star, 500, 10_000, &[0.05], 555).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        report.hess_sq.0 <= report.hess_sq_bound + 3.0 * report.hess_sq.1,
        "hessian moment {} above bound {}",
        report.hess_sq.0,
        report.hess_sq_bound
    );
    assert!(
        report.grad_sq.0 <= report.grad_sq_bound + 3.0 * report.grad_sq.1,
        "gradient moment {} above bound {}",
        report.grad_sq.0,
        report.grad_sq_bound
    );
    assert!(elapsed < 120.0, "criterion 06 overran: {elapsed:.2} s");
    println!(
        "criterion 06 PASS - E||hess dev||^2 = {:.3e} <= {:.3e} over 10^4 replicates ({elapsed:.2} s)",
        report.hess_sq.0, report.hess_sq_bound
    );
}

#[test]
fn c07_subgaussian_tails() {
    let spec = common::certified_double_well(2, 0.02, 61, 0.02);
    let w_ref = ParamVector::new(vec![0.3, -0.2]).unwrap();
    let deltas = [0.05, 0.1, 0.2];
    let report = stability::concentration_mc(&spec, &w_ref, 500, 10_000, &deltas, 556).unwrap();
    let mut nonvacuous = 0;
    for (delta, freq, se, bound) in report.inner_tails.iter().chain(report.hess_tails.iter()) {
        assert!(
            *freq <= bound + 3.0 * se,
            "tail at delta {delta}: freq {freq} above bound {bound}"
        );
        if *bound < 1.0 {
            nonvacuous += 1;
        }
    }
    assert!(nonvacuous > 0, "all tail bounds were vacuous; widen deltas");
    println!(
        "criterion 07 PASS - sub-Gaussian tails at deltas {deltas:?} below printed bounds \
         ({nonvacuous} non-vacuous)"
    );
}

#[test]
fn c08_pgd_halts_at_sosp() {
    let start = Instant::now();
    for (dim, resolution) in [(1usize, 0.002), (2usize, 0.02)] {
        let spec = common::certified_double_well(dim, 0.02, 71 + dim as u64, resolution);
        let data = spec.sample_dataset(808 + dim as u64, 400);
        let eps = PgdConfig::max_admissible_epsilon(spec.constants()).unwrap();
        let config = PgdConfig::new(eps, spec.constants().clone())
            .unwrap()
            .with_record_stride(usize::MAX);
        let proof_cap = bounds::pgd_iteration_bound(spec.constants(), eps)
            .unwrap()
            .proof;
        let mut stream = rng::stream(4040 + dim as u64);
        let mut max_steps = 0usize;
        for run in 0..100 {
            // run 0 starts at the exact central stationary point
            let w0 = if run == 0 {
                spec.domain().center().clone()
            } else {
                ParamVector::from_dvector(rng::uniform_ball(
                    &mut stream,
                    spec.domain().center().as_dvector(),
                    0.98,
                ))
            };
            let (trace, halt) = run_pgd_sosp(&spec, &data, &w0, &config).unwrap();
            assert_eq!(halt, HaltReason::SospFound, "d = {dim}, run {run} hit the cap");
            let (ok, m) = check_sosp(&spec, &data, &trace.terminal, eps, eps.cbrt()).unwrap();
            assert!(
                ok,
                "d = {dim}, run {run}: terminal not an SOSP (grad {}, sigma {})",
                m.grad_norm, m.sigma_min
            );
            assert!(
                (trace.step_count as f64) <= proof_cap,
                "d = {dim}, run {run}: {} steps above proof cap {proof_cap}",
                trace.step_count
            );
            max_steps = max_steps.max(trace.step_count);
        }
        println!(
            "criterion 08 PASS - d={dim}: 100/100 sosp_found, max {max_steps} steps <= {proof_cap:.3e}, eps = {eps:.3e}"
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "criterion 08 overran: {elapsed:.2} s");
}

#[test]
fn c09_no_extra_minima_census() {
    let start = Instant::now();
    let spec = common::certified_double_well(2, 0.02, 91, 0.02);
    let c = spec.constants();
    let replicates = 200usize;
    let n = 2000usize;
    let merge = landscape::default_merge_radius(&spec);
    let mut passes = 0usize;
    for rep in 0..replicates {
        let data = spec.sample_dataset(rng::derive_seed(909, &[rep as u64]), n);
        let census = landscape::minima_census(&spec, &data, 300, merge, 1).unwrap();
        if census.pass {
            passes += 1;
            assert!(
                census.found_minima.len() <= c.minima_count,
                "passing census found more than K minima"
            );
            assert_eq!(census.found_minima.len(), 4);
        }
    }
    let freq = passes as f64 / replicates as f64;
    let xi = bounds::xi_terms(c, n, 2).unwrap();
    let se = (freq * (1.0 - freq) / replicates as f64).sqrt();
    let threshold = 1.0 - (xi.xi1 + xi.xi2) - 3.0 * se;
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        freq >= threshold,
        "census pass frequency {freq} below 1 - (xi1 + xi2) - 3 sigma = {threshold}"
    );
    // the probability bound is far from tight at this scale; the measured
    // rate should still be essentially one
    assert!(freq >= 0.95, "census pass frequency {freq} unexpectedly low");
    assert!(elapsed < 600.0, "criterion 09 overran: {elapsed:.2} s");
    println!(
        "criterion 09 PASS - census exactly K=4 in {passes}/{replicates} replicates \
         (threshold {threshold:.3e}, xi1+xi2 = {:.3e}) ({elapsed:.2} s)",
        xi.xi1 + xi.xi2
    );
}

#[test]
fn c10_error_bound_zero_violations() {
    let spec = common::certified_double_well(2, 0.02, 91, 0.02);
    let merge = landscape::default_merge_radius(&spec);
    let mut total_samples = 0usize;
    let mut statement_violations = 0usize;
    for rep in 0..20usize {
        let data = spec.sample_dataset(rng::derive_seed(1010, &[rep as u64]), 2000);
        let census = landscape::minima_census(&spec, &data, 300, merge, 1).unwrap();
        assert!(census.pass, "replicate {rep}: census failed");
        let report =
            landscape::error_bound_check(&spec, &data, &census, 1000, rep as u64).unwrap();
        assert_eq!(
            report.samples, 1000,
            "replicate {rep}: could not draw 1000 qualifying probes"
        );
        assert_eq!(
            report.proof_violations, 0,
            "replicate {rep}: proof-form error bound violated"
        );
        total_samples += report.samples;
        statement_violations += report.statement_violations;
    }
    println!(
        "criterion 10 PASS - 0/{total_samples} proof-form violations \
         (statement-form factor violated {statement_violations} times, as expected of the typo)"
    );
}

#[test]
fn c11_bound_calculator_pins() {
    let rows = common::check_all_bound_pins();
    assert_eq!(rows, 100);
    println!(
        "criterion 11 PASS - all calculators match 60-digit pins to rel 1e-10 on {rows} bundles"
    );
}

#[test]
fn c12_oracle_integrity() {
    let quad_spec = quad(4);
    let well_spec = risklab::problems::make_double_well(2, 0.5, 0.05, 0.05, 5).unwrap();
    let logit_spec = make_logistic_blobs(2, 2, 1000, 5).unwrap();
    for (name, spec) in [
        ("quadratic_mean", &quad_spec),
        ("double_well", &well_spec),
        ("logistic_blobs", &logit_spec),
    ] {
        let grad_err = fd::check_gradients(spec, 1212, 100);
        let hess_err = fd::check_hessians(spec, 1212, 100);
        assert!(grad_err < 1e-5, "{name}: gradient FD error {grad_err}");
        assert!(hess_err < 1e-4, "{name}: hessian FD error {hess_err}");
    }
    // frozen-vs-fresh Monte-Carlo agreement for the analytic oracle
    let mut stream = rng::stream(313);
    for probe in 0..5 {
        let w = ParamVector::from_dvector(rng::uniform_ball(
            &mut stream,
            quad_spec.domain().center().as_dvector(),
            quad_spec.domain().radius(),
        ));
        let (mc, se) = quad_spec.mc_population_risk(&w, 200_000, 90 + probe);
        let analytic = quad_spec.population_risk(&w);
        assert!(
            (mc - analytic).abs() <= 3.0 * se,
            "probe {probe}: MC {mc} vs analytic {analytic} (se {se})"
        );
    }
    println!("criterion 12 PASS - FD checks on all families; MC oracle within 3 sigma");
}

#[test]
fn c13_byte_identical_reruns() {
    use risklab::cli::{run_suite, suite::csv_data_rows, ExperimentConfig, ProblemConfig};
    // the env override would send both runs to one directory
    std::env::remove_var("RISKLAB_OUT");
    let base = std::env::temp_dir().join(format!("risklab_det_{}", std::process::id()));
    let make_config = |dir: &std::path::Path| ExperimentConfig {
        problem: ProblemConfig {
            name: "quadratic_mean".into(),
            params: {
                let mut t = toml::Table::new();
                t.insert("d".into(), toml::Value::Integer(2));
                t.insert("noise_radius".into(), toml::Value::Float(1.0));
                t
            },
        },
        algorithm: risklab::cli::AlgorithmChoice::Gd,
        n_values: vec![50, 100],
        t_values: vec![60],
        replicates: 20,
        algo_seeds_per_replicate: 1,
        probe_count: 128,
        base_seed: 31,
        output_dir: dir.to_path_buf(),
        record_stride: 1,
        pgd_epsilon: None,
    };
    let spec = risklab::cli::build_problem(&make_config(&base).problem).unwrap();
    let dir_a = base.join("a");
    let dir_b = base.join("b");
    let out_a = run_suite(&make_config(&dir_a), &spec).unwrap();
    let out_b = run_suite(&make_config(&dir_b), &spec).unwrap();
    assert_eq!(out_a.exit_code, 0);
    assert_eq!(out_b.exit_code, 0);
    for file in ["per_replicate.csv", "aggregate.csv"] {
        let a = std::fs::read_to_string(dir_a.join(file)).unwrap();
        let b = std::fs::read_to_string(dir_b.join(file)).unwrap();
        assert_eq!(
            csv_data_rows(&a),
            csv_data_rows(&b),
            "{file} data rows differ between reruns"
        );
    }
    let sa = std::fs::read_to_string(dir_a.join("summary.json")).unwrap();
    let sb = std::fs::read_to_string(dir_b.join("summary.json")).unwrap();
    // summaries echo the config including output_dir; normalize it away
    let sa = sa.replace(&dir_a.display().to_string(), "<out>");
    let sb = sb.replace(&dir_b.display().to_string(), "<out>");
    assert_eq!(sa, sb, "summary.json differs between reruns");
    println!("criterion 13 PASS - reruns reproduce byte-identical data rows");
}

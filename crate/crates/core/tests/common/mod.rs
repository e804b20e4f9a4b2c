//! Helpers shared by the integration test binaries.

use serde::Deserialize;

use risklab::bounds::{self, SpuriousVariant, TailKind};
use risklab::constants::ConstantsBundle;
use risklab::problems::{certify_constants, make_double_well, ProblemSpec};

#[derive(Deserialize)]
pub struct Fixture {
    #[allow(dead_code)]
    pub generator: String,
    pub rows: Vec<Row>,
}

#[derive(Deserialize)]
pub struct Row {
    pub inputs: Inputs,
    pub expected: std::collections::BTreeMap<String, f64>,
}

#[derive(Deserialize)]
pub struct Inputs {
    pub l0: f64,
    pub l1: f64,
    pub l2: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub m: f64,
    pub diameter: f64,
    pub k: usize,
    pub n: usize,
    pub d: usize,
    pub t: usize,
    pub eps_t: f64,
    pub zeta: f64,
    pub delta: f64,
    pub delta_prime: f64,
    pub opt_gap: f64,
    pub eps: f64,
    pub delta_g: f64,
    pub delta_h: f64,
}

pub fn load_pins() -> Fixture {
    let raw = include_str!("../data/bound_pins.json");
    serde_json::from_str(raw).expect("valid fixture")
}

pub fn bundle_of(x: &Inputs) -> ConstantsBundle {
    ConstantsBundle::new(
        x.l0, x.l1, x.l2, x.lambda, x.alpha, None, x.m, x.diameter, x.k,
    )
    .expect("fixture bundle valid")
}

fn assert_rel(name: &str, row: usize, got: f64, want: f64) {
    let tol = 1e-10 * want.abs().max(f64::MIN_POSITIVE);
    assert!(
        (got - want).abs() <= tol,
        "row {row} {name}: got {got:e}, pinned {want:e}"
    );
}

/// Evaluate every calculator against its pinned high-precision value; the
/// number of verified rows is returned.
pub fn check_all_bound_pins() -> usize {
    let fixture = load_pins();
    for (i, row) in fixture.rows.iter().enumerate() {
        let x = &row.inputs;
        let c = bundle_of(x);
        let want = |key: &str| -> f64 { *row.expected.get(key).expect("fixture key") };

        assert_rel(
            "convex_stability",
            i,
            bounds::convex_stability_bound(&c, x.n, x.d, x.eps_t).unwrap().total,
            want("convex_stability"),
        );
        assert_rel(
            "convex_excess",
            i,
            bounds::convex_excess_bound(&c, x.n, x.d, x.eps_t).unwrap().total,
            want("convex_excess"),
        );
        assert_rel("gd_opt", i, bounds::gd_opt_bound(&c, x.t).unwrap(), want("gd_opt"));
        assert_rel(
            "sgd_opt",
            i,
            bounds::sgd_opt_bound(&c, x.t).unwrap(),
            want("sgd_opt"),
        );
        assert_rel(
            "good_event",
            i,
            bounds::good_event_prob_bound(&c, x.n, x.d).unwrap().total,
            want("good_event"),
        );
        assert_rel(
            "local_minima_gen",
            i,
            bounds::local_minima_gen_bound(&c, x.n, x.d).unwrap().total,
            want("local_minima_gen"),
        );
        let xi = bounds::xi_terms(&c, x.n, x.d).unwrap();
        assert_rel("xi1", i, xi.xi1, want("xi1"));
        assert_rel("xi2", i, xi.xi2, want("xi2"));
        assert_rel("r", i, xi.r, want("r"));
        assert_rel(
            "nonconvex_gen_with",
            i,
            bounds::nonconvex_gen_bound(
                &c,
                x.n,
                x.d,
                x.zeta,
                x.delta,
                SpuriousVariant::WithSpurious,
                x.delta_prime,
            )
            .unwrap()
            .total,
            want("nonconvex_gen_with"),
        );
        assert_rel(
            "nonconvex_gen_without",
            i,
            bounds::nonconvex_gen_bound(
                &c,
                x.n,
                x.d,
                x.zeta,
                x.delta,
                SpuriousVariant::NoSpurious,
                x.delta_prime,
            )
            .unwrap()
            .total,
            want("nonconvex_gen_without"),
        );
        assert_rel(
            "nonconvex_excess_with",
            i,
            bounds::nonconvex_excess_bound(
                &c,
                x.n,
                x.d,
                x.zeta,
                x.delta,
                SpuriousVariant::WithSpurious,
                x.delta_prime,
                x.opt_gap,
            )
            .unwrap()
            .total,
            want("nonconvex_excess_with"),
        );
        assert_rel(
            "nonconvex_excess_without",
            i,
            bounds::nonconvex_excess_bound(
                &c,
                x.n,
                x.d,
                x.zeta,
                x.delta,
                SpuriousVariant::NoSpurious,
                x.delta_prime,
                x.opt_gap,
            )
            .unwrap()
            .total,
            want("nonconvex_excess_without"),
        );
        let it = bounds::pgd_iteration_bound(&c, x.eps).unwrap();
        assert_rel("pgd_iter_statement", i, it.statement, want("pgd_iter_statement"));
        assert_rel("pgd_iter_proof", i, it.proof, want("pgd_iter_proof"));
        assert_rel(
            "tail_gradient_inner",
            i,
            bounds::subgaussian_tail_bound(&c, x.n, x.d, x.delta_g, TailKind::GradientInner)
                .unwrap()
                .raw,
            want("tail_gradient_inner"),
        );
        assert_rel(
            "tail_hessian",
            i,
            bounds::subgaussian_tail_bound(&c, x.n, x.d, x.delta_h, TailKind::Hessian)
                .unwrap()
                .raw,
            want("tail_hessian"),
        );
        assert_rel(
            "gradient_moment",
            i,
            bounds::gradient_moment_bound(&c, x.n),
            want("gradient_moment"),
        );
        assert_rel(
            "hessian_moment",
            i,
            bounds::hessian_moment_bound(&c, x.n, x.d).unwrap(),
            want("hessian_moment"),
        );
    }
    fixture.rows.len()
}

/// Double-well problem with numerically certified constants.
#[allow(dead_code)]
pub fn certified_double_well(dim: usize, noise: f64, seed: u64, resolution: f64) -> ProblemSpec {
    let spec = make_double_well(dim, 0.5, noise, noise, seed).expect("construct double well");
    let cert = certify_constants(&spec, resolution).expect("certify double well");
    spec.with_constants(cert).expect("certified bundle valid")
}

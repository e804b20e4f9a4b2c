//! Regression pins for every bound calculator against a high-precision
//! re-evaluation of the same formulas (fixture produced by
//! tools/gen_bound_pins.py with 60-digit arithmetic). Each calculator must
//! match to relative 1e-10 across 100 randomized constant bundles.

mod common;

use risklab::bounds::{self, SpuriousVariant};

#[test]
fn calculators_match_high_precision_pins() {
    let rows = common::check_all_bound_pins();
    assert_eq!(rows, 100);
}

#[test]
fn report_totals_always_equal_term_sums() {
    let fixture = common::load_pins();
    for row in fixture.rows.iter().take(20) {
        let x = &row.inputs;
        let c = common::bundle_of(x);
        for report in [
            bounds::convex_stability_bound(&c, x.n, x.d, x.eps_t).unwrap(),
            bounds::convex_excess_bound(&c, x.n, x.d, x.eps_t).unwrap(),
            bounds::good_event_prob_bound(&c, x.n, x.d).unwrap(),
            bounds::local_minima_gen_bound(&c, x.n, x.d).unwrap(),
            bounds::nonconvex_gen_bound(
                &c,
                x.n,
                x.d,
                x.zeta,
                x.delta,
                SpuriousVariant::WithSpurious,
                x.delta_prime,
            )
            .unwrap(),
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
            .unwrap(),
        ] {
            let sum: f64 = report.terms.iter().map(|(_, v)| v).sum();
            assert!(
                (report.total - sum).abs() <= 1e-12 * report.total.abs().max(1.0),
                "{} total != sum of terms",
                report.name
            );
            assert!(report.terms.iter().all(|(_, v)| *v >= 0.0));
        }
    }
}

//! Exact evaluators for the closed-form right-hand sides used throughout the
//! experiments, each with a term-by-term breakdown so measurements can be
//! compared against individual contributions.
//!
//! Conventions: the L2 = 0 limit zeroes every term with L2 in the numerator
//! and sends radii of the form lambda/(c L2) to infinity (so min-expressions
//! pick their other argument); exponential-times-power expressions are
//! evaluated in log space to survive large covering exponents; probability
//! outputs carry both the raw value and a [0, 1]-clamped companion.

use serde::Serialize;

use crate::constants::ConstantsBundle;
use crate::error::{Error, Result};

/// Evaluated right-hand side of one formula.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub inputs: Vec<(String, f64)>,
    pub terms: Vec<(String, f64)>,
    pub total: f64,
    /// min(total, 1) for probability-valued bounds.
    pub clamped: Option<f64>,
    /// Set when a log-space exponential underflowed to zero.
    pub underflow: bool,
}

impl BoundReport {
    fn new(name: &str, inputs: Vec<(String, f64)>, terms: Vec<(String, f64)>) -> Self {
        let total = terms.iter().map(|(_, v)| v).sum();
        BoundReport {
            name: name.to_string(),
            inputs,
            terms,
            total,
            clamped: None,
            underflow: false,
        }
    }

    fn clamped_prob(mut self) -> Self {
        self.clamped = Some(self.total.min(1.0));
        self
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    /// Key-value text rendering used by the CLI.
    pub fn render(&self) -> String {
        let mut out = format!("bound {}\n", self.name);
        for (k, v) in &self.inputs {
            out.push_str(&format!("  in  {k} = {v}\n"));
        }
        for (k, v) in &self.terms {
            out.push_str(&format!("  term {k} = {v}\n"));
        }
        out.push_str(&format!("  total = {}\n", self.total));
        if let Some(c) = self.clamped {
            out.push_str(&format!("  clamped = {c}\n"));
        }
        out
    }

    /// One CSV row: name,total,clamped,term:value,...
    pub fn csv_row(&self) -> String {
        let mut fields = vec![self.name.clone(), format!("{}", self.total)];
        fields.push(match self.clamped {
            Some(c) => format!("{c}"),
            None => String::new(),
        });
        for (k, v) in &self.terms {
            fields.push(format!("{k}:{v}"));
        }
        fields.join(",")
    }
}

fn require_d_at_least_2(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::usage(
            "bound formulas use log d; d >= 2 required (d = 1 degenerates them)",
        ));
    }
    Ok((d as f64).ln())
}

fn log_dim_factor(c: &ConstantsBundle, n: usize, log_d: f64) -> f64 {
    // (5 sqrt(log d) + 4 e log d / sqrt(n))^2, shared by several bounds
    let nf = n as f64;
    let inner = 5.0 * log_d.sqrt() + 4.0 * std::f64::consts::E * log_d / nf.sqrt();
    let _ = c;
    inner * inner
}

/// Uniform-stability bound for convex losses at optimization gap `eps_t`:
/// 4 sqrt(2) L0 (lambda + 4 D L2) / lambda^{3/2} * sqrt(eps_t)
///   + 8 L0 / (n lambda) * { L0 + 64 L0^2 L2^2 D / lambda^3
///       + 16 L1^2 D / lambda * (5 sqrt(log d) + 4 e log d / sqrt(n))^2 }.
pub fn convex_stability_bound(
    c: &ConstantsBundle,
    n: usize,
    d: usize,
    eps_t: f64,
) -> Result<BoundReport> {
    let log_d = require_d_at_least_2(d)?;
    if n < 1 {
        return Err(Error::usage("n >= 1 required"));
    }
    if eps_t < 0.0 {
        return Err(Error::usage("eps_t >= 0 required"));
    }
    let nf = n as f64;
    let sqrt_eps_term = 4.0 * 2.0f64.sqrt() * c.l0 * (c.lambda + 4.0 * c.diameter * c.l2)
        / c.lambda.powf(1.5)
        * eps_t.sqrt();
    let brace = c.l0
        + 64.0 * c.l0.powi(2) * c.l2.powi(2) * c.diameter / c.lambda.powi(3)
        + 16.0 * c.l1.powi(2) * c.diameter / c.lambda * log_dim_factor(c, n, log_d);
    let one_over_n_term = 8.0 * c.l0 / (nf * c.lambda) * brace;
    Ok(BoundReport::new(
        "convex_stability",
        vec![
            ("n".into(), nf),
            ("d".into(), d as f64),
            ("eps_t".into(), eps_t),
        ],
        vec![
            ("sqrt_eps_term".into(), sqrt_eps_term),
            ("one_over_n_term".into(), one_over_n_term),
        ],
    ))
}

/// Excess-risk bound for convex losses: eps_t plus the stability bound.
pub fn convex_excess_bound(
    c: &ConstantsBundle,
    n: usize,
    d: usize,
    eps_t: f64,
) -> Result<BoundReport> {
    let stab = convex_stability_bound(c, n, d, eps_t)?;
    let mut terms = vec![("eps_term".into(), eps_t)];
    terms.extend(stab.terms.clone());
    Ok(BoundReport::new("convex_excess", stab.inputs.clone(), terms))
}

/// Terminal-iterate rate of projected gradient descent with step 1/L1:
/// D^2 L1 / (2 t).
pub fn gd_opt_bound(c: &ConstantsBundle, t: usize) -> Result<f64> {
    if t == 0 {
        return Err(Error::usage("gd_opt_bound: t >= 1 required"));
    }
    Ok(c.diameter * c.diameter * c.l1 / (2.0 * t as f64))
}

/// Terminal-iterate rate of projected SGD with step D / (L1 sqrt(t+1)):
/// D (L1^2 + 2 L0^2) / (2 L1 sqrt(t+1)) * (1 + log(t+1)).
pub fn sgd_opt_bound(c: &ConstantsBundle, t: usize) -> Result<f64> {
    if c.l1 <= 0.0 {
        return Err(Error::usage("sgd_opt_bound: L1 > 0 required"));
    }
    let tp1 = (t + 1) as f64;
    Ok(c.diameter * (c.l1 * c.l1 + 2.0 * c.l0 * c.l0) / (2.0 * c.l1 * tp1.sqrt())
        * (1.0 + tp1.ln()))
}

/// Probability that the locally-strongly-convex good event fails:
/// 512 L0^2 L2^2 / (n lambda^4)
///   + 128 L1^2 / (n lambda^2) * (5 sqrt(log d) + 4 e log d / sqrt(n))^2.
pub fn good_event_prob_bound(c: &ConstantsBundle, n: usize, d: usize) -> Result<BoundReport> {
    let log_d = require_d_at_least_2(d)?;
    let nf = n as f64;
    let grad_term = 512.0 * c.l0.powi(2) * c.l2.powi(2) / (nf * c.lambda.powi(4));
    let hess_term = 128.0 * c.l1.powi(2) / (nf * c.lambda.powi(2)) * log_dim_factor(c, n, log_d);
    Ok(BoundReport::new(
        "good_event_failure",
        vec![("n".into(), nf), ("d".into(), d as f64)],
        vec![
            ("grad_term".into(), grad_term),
            ("hess_term".into(), hess_term),
        ],
    )
    .clamped_prob())
}

/// min{3D, 3 lambda / (2 L2)} with the L2 = 0 convention.
fn min_3d_radius(c: &ConstantsBundle) -> f64 {
    if c.l2 > 0.0 {
        (3.0 * c.diameter).min(1.5 * c.lambda / c.l2)
    } else {
        3.0 * c.diameter
    }
}

/// Generalization bound at the trapped empirical local minima:
/// 8 L0 / (n lambda) [ L0 + {64 L0^2 L2^2 / lambda^3
///   + 16 L1^2 / lambda (5 sqrt(log d) + 4 e log d / sqrt n)^2} min{3D, 3 lambda / 2 L2} ].
pub fn local_minima_gen_bound(c: &ConstantsBundle, n: usize, d: usize) -> Result<BoundReport> {
    let log_d = require_d_at_least_2(d)?;
    let nf = n as f64;
    let lead = 8.0 * c.l0 / (nf * c.lambda);
    let radius = min_3d_radius(c);
    let l0_term = lead * c.l0;
    let grad_event_term = lead * 64.0 * c.l0.powi(2) * c.l2.powi(2) / c.lambda.powi(3) * radius;
    let hess_event_term =
        lead * 16.0 * c.l1.powi(2) / c.lambda * log_dim_factor(c, n, log_d) * radius;
    Ok(BoundReport::new(
        "local_minima_generalization",
        vec![("n".into(), nf), ("d".into(), d as f64)],
        vec![
            ("l0_term".into(), l0_term),
            ("grad_event_term".into(), grad_event_term),
            ("hess_event_term".into(), hess_event_term),
        ],
    ))
}

/// The failure probabilities of the landscape theorems.
#[derive(Debug, Clone, Serialize)]
pub struct XiTerms {
    pub xi1: f64,
    pub xi2: f64,
    /// Covering radius r = min{lambda / 8 L2, alpha^2 / 16 L0 L1}.
    pub r: f64,
    /// Set when r >= 3D (covering count collapses to 1).
    pub degenerate_covering: bool,
    /// Set when a log-space term underflowed below ~1e-300 and was reported 0.
    pub underflow: bool,
}

/// xi_{n,1} = K * good-event failure bound; xi_{n,2} = the two covering
/// exponentials, computed in log space.
pub fn xi_terms(c: &ConstantsBundle, n: usize, d: usize) -> Result<XiTerms> {
    let _ = require_d_at_least_2(d)?;
    if !(c.alpha > 0.0 && c.lambda > 0.0 && c.l0 > 0.0 && c.l1 > 0.0) {
        return Err(Error::usage("xi_terms: alpha, lambda, L0, L1 must be > 0"));
    }
    let nf = n as f64;
    let xi1 = c.minima_count as f64 * good_event_prob_bound(c, n, d)?.total;

    let r_curv = if c.l2 > 0.0 {
        c.lambda / (8.0 * c.l2)
    } else {
        f64::INFINITY
    };
    let r = r_curv.min(c.alpha.powi(2) / (16.0 * c.l0 * c.l1));
    let three_d = 3.0 * c.diameter;
    let degenerate = r >= three_d;
    // log of the covering count (3D/r)^d, or 0 for a single-ball covering
    let log_cover = if degenerate {
        0.0
    } else {
        d as f64 * (three_d / r).ln()
    };
    let exp1 = (2.0f64).ln() + log_cover - nf * c.alpha.powi(4) / (256.0 * c.l0.powi(4));
    let exp2 =
        (4.0 * d as f64).ln() + log_cover - nf * c.lambda.powi(2) / (256.0 * c.l1.powi(2));
    let mut underflow = false;
    let mut eval = |log_term: f64| -> f64 {
        if log_term < -700.0 {
            underflow = true;
            0.0
        } else {
            log_term.exp()
        }
    };
    let xi2 = eval(exp1) + eval(exp2);
    Ok(XiTerms {
        xi1,
        xi2,
        r,
        degenerate_covering: degenerate,
        underflow,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpuriousVariant {
    /// Spurious empirical minima possible: rate includes 2KM/sqrt(n).
    WithSpurious,
    /// No spurious empirical minima with probability 1 - delta_prime.
    NoSpurious,
}

/// Generalization bound for iterates approximating second-order stationary
/// points, both variants.
#[allow(clippy::too_many_arguments)]
pub fn nonconvex_gen_bound(
    c: &ConstantsBundle,
    n: usize,
    d: usize,
    zeta_t: f64,
    delta: f64,
    variant: SpuriousVariant,
    delta_prime: f64,
) -> Result<BoundReport> {
    if zeta_t < 0.0 || delta < 0.0 || delta_prime < 0.0 {
        return Err(Error::usage("zeta_t, delta, delta_prime must be >= 0"));
    }
    let xi = xi_terms(c, n, d)?;
    let nf = n as f64;
    let k = c.minima_count as f64;
    let m = c.loss_bound;
    let radius = min_3d_radius(c);
    let zeta_term = 8.0 * c.l0 / c.lambda * zeta_t;
    let delta_term = 2.0 * c.l0 * c.diameter * delta;
    let inputs = vec![
        ("n".into(), nf),
        ("d".into(), d as f64),
        ("zeta_t".into(), zeta_t),
        ("delta".into(), delta),
        ("delta_prime".into(), delta_prime),
        ("xi1".into(), xi.xi1),
        ("xi2".into(), xi.xi2),
        ("r".into(), xi.r),
    ];
    let mut report = match variant {
        SpuriousVariant::WithSpurious => BoundReport::new(
            "nonconvex_generalization_with_spurious",
            inputs,
            vec![
                ("zeta_term".into(), zeta_term),
                ("delta_term".into(), delta_term),
                ("sqrt_n_term".into(), 2.0 * k * m / nf.sqrt()),
                ("n_term".into(), 8.0 * k * c.l0.powi(2) / (nf * c.lambda)),
                ("xi1_term".into(), (c.l0 * radius + 2.0 * m) * xi.xi1),
                ("xi2_term".into(), 2.0 * m * xi.xi2),
            ],
        ),
        SpuriousVariant::NoSpurious => BoundReport::new(
            "nonconvex_generalization_no_spurious",
            inputs,
            vec![
                ("zeta_term".into(), zeta_term),
                ("delta_term".into(), delta_term),
                ("delta_prime_term".into(), 6.0 * m * delta_prime),
                (
                    "n_term".into(),
                    8.0 * (k + 4.0) * c.l0.powi(2) / (nf * c.lambda),
                ),
                (
                    "xi1_term".into(),
                    ((k + 4.0) * c.l0 / k * radius + 6.0 * m) * xi.xi1,
                ),
                ("xi2_term".into(), 6.0 * m * xi.xi2),
            ],
        ),
    };
    report.underflow = xi.underflow;
    Ok(report)
}

/// Excess-risk bound for iterates approximating second-order stationary
/// points; the with-spurious variant carries the measured optimization gap to
/// the empirical global minimum as a pass-through term.
#[allow(clippy::too_many_arguments)]
pub fn nonconvex_excess_bound(
    c: &ConstantsBundle,
    n: usize,
    d: usize,
    zeta_t: f64,
    delta: f64,
    variant: SpuriousVariant,
    delta_prime: f64,
    opt_gap: f64,
) -> Result<BoundReport> {
    if opt_gap < 0.0 {
        return Err(Error::usage("opt_gap must be >= 0"));
    }
    if zeta_t < 0.0 || delta < 0.0 || delta_prime < 0.0 {
        return Err(Error::usage("zeta_t, delta, delta_prime must be >= 0"));
    }
    let xi = xi_terms(c, n, d)?;
    let nf = n as f64;
    let k = c.minima_count as f64;
    let m = c.loss_bound;
    let radius = min_3d_radius(c);
    let zeta_term = 4.0 * c.l0 / c.lambda * zeta_t;
    let delta_term = c.l0 * c.diameter * delta;
    let inputs = vec![
        ("n".into(), nf),
        ("d".into(), d as f64),
        ("zeta_t".into(), zeta_t),
        ("delta".into(), delta),
        ("delta_prime".into(), delta_prime),
        ("opt_gap".into(), opt_gap),
        ("xi1".into(), xi.xi1),
        ("xi2".into(), xi.xi2),
    ];
    let mut report = match variant {
        SpuriousVariant::WithSpurious => BoundReport::new(
            "nonconvex_excess_with_spurious",
            inputs,
            vec![
                ("zeta_term".into(), zeta_term),
                ("delta_term".into(), delta_term),
                ("sqrt_n_term".into(), 2.0 * k * m / nf.sqrt()),
                ("n_term".into(), 8.0 * k * c.l0.powi(2) / (nf * c.lambda)),
                ("xi1_term".into(), (c.l0 * radius + 2.0 * m) * xi.xi1),
                ("xi2_term".into(), 2.0 * m * xi.xi2),
                ("opt_gap_term".into(), opt_gap),
            ],
        ),
        SpuriousVariant::NoSpurious => BoundReport::new(
            "nonconvex_excess_no_spurious",
            inputs,
            vec![
                ("zeta_term".into(), zeta_term),
                ("delta_term".into(), delta_term),
                ("delta_prime_term".into(), 8.0 * m * delta_prime),
                (
                    "n_term".into(),
                    8.0 * (k + 4.0) * c.l0.powi(2) / (nf * c.lambda),
                ),
                (
                    "xi1_term".into(),
                    ((k + 4.0) * c.l0 / k * radius + 8.0 * m) * xi.xi1,
                ),
                ("xi2_term".into(), 8.0 * m * xi.xi2),
            ],
        ),
    };
    report.underflow = xi.underflow;
    Ok(report)
}

/// Iteration cap of the saddle-escaping optimizer. The cap circulates in two
/// versions whose gradient-phase constants differ (2 L1 vs 4 L1); both are
/// reported, and the experiments assert against the weaker (proof-side)
/// version.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PgdIterationBound {
    pub statement: f64,
    pub proof: f64,
}

pub fn pgd_iteration_bound(c: &ConstantsBundle, eps: f64) -> Result<PgdIterationBound> {
    if !(eps > 0.0) {
        return Err(Error::usage("pgd_iteration_bound: eps > 0 required"));
    }
    let m = c.loss_bound;
    let curvature_phase = 256.0 * c.l2.powi(2) / (9.0 * eps);
    Ok(PgdIterationBound {
        statement: 2.0 * m * (2.0 * c.l1 / (eps * eps)).max(curvature_phase),
        proof: 2.0 * m * (4.0 * c.l1 / (eps * eps)).max(curvature_phase),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TailKind {
    /// Deviation of (1/n) sum <grad f(w, z_i), grad R(w)> from ||grad R(w)||^2.
    GradientInner,
    /// Spectral deviation of the empirical Hessian from the population one.
    Hessian,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailBound {
    pub raw: f64,
    pub clamped: f64,
}

/// Sub-Gaussian tail bounds: 2 exp(-n delta^2 / 16 L0^4) for the gradient
/// inner product and 2 d exp(-n delta^2 / 16 L1^2) for the Hessian.
pub fn subgaussian_tail_bound(
    c: &ConstantsBundle,
    n: usize,
    d: usize,
    delta_dev: f64,
    which: TailKind,
) -> Result<TailBound> {
    if !(delta_dev > 0.0) {
        return Err(Error::usage("subgaussian_tail_bound: delta_dev > 0 required"));
    }
    let nf = n as f64;
    let raw = match which {
        TailKind::GradientInner => {
            2.0 * (-nf * delta_dev * delta_dev / (16.0 * c.l0.powi(4))).exp()
        }
        TailKind::Hessian => {
            2.0 * d as f64 * (-nf * delta_dev * delta_dev / (16.0 * c.l1.powi(2))).exp()
        }
    };
    Ok(TailBound {
        raw,
        clamped: raw.clamp(0.0, 1.0),
    })
}

/// Moment bound E ||hess R_S(w) - hess R(w)||^2 <= (1/n)(10 sqrt(log d) L1 +
/// 8 e log d L1 / sqrt(n))^2, companion of the good-event bound.
pub fn hessian_moment_bound(c: &ConstantsBundle, n: usize, d: usize) -> Result<f64> {
    let log_d = require_d_at_least_2(d)?;
    let nf = n as f64;
    let inner = 10.0 * log_d.sqrt() * c.l1 + 8.0 * std::f64::consts::E * log_d * c.l1 / nf.sqrt();
    Ok(inner * inner / nf)
}

/// Moment bound E ||grad R_S(w) - grad R(w)||^2 <= L0^2 / n.
pub fn gradient_moment_bound(c: &ConstantsBundle, n: usize) -> f64 {
    c.l0 * c.l0 / n as f64
}

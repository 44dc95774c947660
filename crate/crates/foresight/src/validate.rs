//! Self-check suite behind `foresight validate`.
//!
//! Each check pits an estimator against an independent reference at a size
//! that runs in seconds. Monte Carlo checks use a 3.5 standard-error band.

use std::fmt::Write as _;

use foresight_core::analytic::{
    cycle_probabilities, excursion_rates, lambda_max, optimal_threshold, psi, rule_value_parts,
    FormulaParams,
};
use foresight_core::bounds::{estimate_bounds, BoundsConfig};
use foresight_core::oracle::{
    exact_foresight_value, exact_small_value, mc_excursion_stats, mc_lambda,
    nonsemimartingale_demo, TreeSpec,
};
use foresight_core::paths::ModelParams;
use foresight_core::rng::derive_seed;
use foresight_core::rules::{run_rule, RuleConfig, RuleVariant};
use foresight_core::PathExecutor;

const MC_BAND: f64 = 3.5;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self {
            name,
            passed,
            detail,
        }
    }

    fn from_result(name: &'static str, r: anyhow::Result<(bool, String)>) -> Self {
        match r {
            Ok((passed, detail)) => Self::new(name, passed, detail),
            Err(e) => Self::new(name, false, format!("error: {e:#}")),
        }
    }
}

fn rel_close(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol * x.abs().max(y.abs())
}

fn log_space(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
}

fn identities() -> anyhow::Result<(bool, String)> {
    let mut cases = 0;
    let mut bad = 0;
    for a in log_space(1e-3, 10.0, 8) {
        for eta in std::iter::once(0.0).chain(log_space(1e-2, 1e4, 7)) {
            let p = FormulaParams::new(a, eta)?;
            let r = excursion_rates(&p)?;
            let (hf, tf) = cycle_probabilities(&p)?;
            let at_zero = psi(0.0, &p)?;
            let mut ok = rel_close(r.nu, r.nu_a + r.nu_alpha, 1e-10)
                && rel_close(hf + tf, 1.0, 1e-10)
                && rel_close(at_zero.psi0, r.nu_a * (-eta * a).exp(), 1e-10)
                && at_zero.psi1.abs() <= 1e-10;
            // With eta = 0 the denominator underflows to 0 for q far below
            // -a/2; for eta > 0 it is bounded below by nu_alpha.
            if eta > 0.0 {
                for i in 0..8 {
                    let q = -5.0 * i as f64 / 7.0;
                    ok &= rule_value_parts(q, &p)?.1 > 0.0;
                }
            }
            cases += 1;
            bad += usize::from(!ok);
        }
    }
    Ok((bad == 0, format!("{cases} (a, eta) cases, {bad} failing")))
}

fn fixed_point() -> anyhow::Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for a in [0.004, 0.04] {
        for eta in log_space(0.1, 1e4, 12) {
            let s = optimal_threshold(&FormulaParams::new(a, eta)?)?;
            worst = worst.max((s.k_star - (-s.q_star).exp()).abs());
        }
    }
    Ok((
        worst <= 1e-6,
        format!("max |K(q*) - exp(-q*)| = {worst:.2e}"),
    ))
}

fn lambda<E: PathExecutor>(seed: u64, exec: &E) -> anyhow::Result<(bool, String)> {
    let est = mc_lambda(1.0, 1e-3, 100_000, seed, exec)?;
    let target = lambda_max(1.0)?;
    Ok((
        est.within(target, MC_BAND),
        format!("{:.5} ± {:.5} vs {target:.5}", est.mean, est.se),
    ))
}

fn tree_equivalence() -> anyhow::Result<(bool, String)> {
    let mut bad = Vec::new();
    for depth in 1..=10 {
        for m in 0..=depth {
            let ts = TreeSpec::new(depth, m, 0.01, -0.5)?;
            if exact_small_value(&ts)?.to_bits() != exact_foresight_value(&ts)?.to_bits() {
                bad.push((depth, m));
            }
        }
    }
    Ok((bad.is_empty(), format!("depth <= 10, mismatches {bad:?}")))
}

fn tree_bracket<E: PathExecutor>(seed: u64, exec: &E) -> anyhow::Result<(bool, String)> {
    let ts = TreeSpec::new(10, 3, 0.01, -0.5)?;
    let exact = exact_small_value(&ts)?;
    let cfg = BoundsConfig {
        num_bins: 50,
        samples_per_bin: 200,
        lower_paths: 20_000,
        upper_paths: 2_000,
        sub_paths: 50,
    };
    let r = estimate_bounds(&ts.model_params()?, &cfg, seed, exec)?;
    let lo = r.lower.mean - 3.0 * r.lower.se;
    let hi = r.upper.mean + 3.0 * r.upper.se;
    Ok((
        lo <= exact && exact <= hi,
        format!("exact {exact:.5} in [{lo:.5}, {hi:.5}]"),
    ))
}

fn zero_window<E: PathExecutor>(seed: u64, exec: &E) -> anyhow::Result<(bool, String)> {
    let mut ok = true;
    let mut detail = String::new();
    let mp = ModelParams::share_measure(1.0 / 2500.0, 250, 0)?;
    let r = estimate_bounds(
        &mp,
        &BoundsConfig {
            num_bins: 20,
            samples_per_bin: 20,
            lower_paths: 2_000,
            upper_paths: 200,
            sub_paths: 5,
        },
        seed,
        exec,
    )?;
    ok &= (r.lower.mean - 1.0).abs() <= MC_BAND * r.lower.se.max(1e-12);
    write!(detail, "lower {:.5}", r.lower.mean)?;
    for (mp, label) in [
        (mp, "share"),
        (ModelParams::physical(1.0 / 2500.0, 250, 0)?, "physical"),
    ] {
        for variant in [RuleVariant::One, RuleVariant::Two] {
            let e = run_rule(
                &RuleConfig {
                    variant,
                    mp,
                    n_paths: 5_000,
                    seed,
                },
                exec,
            )?;
            ok &= (e.mean - 1.0).abs() <= MC_BAND * e.se.max(1e-12);
            write!(detail, ", rule{} {label} {:.5}", variant.index(), e.mean)?;
        }
    }
    Ok((ok, detail))
}

fn prop_zero<E: PathExecutor>(seed: u64, exec: &E) -> anyhow::Result<(bool, String)> {
    let d = nonsemimartingale_demo(1_000, 1.0, 10_000, seed, exec)?;
    let target = (2.0 / std::f64::consts::PI).sqrt();
    Ok((
        (d.mean - target).abs() <= MC_BAND * d.se && d.sup_integrand == 1.0 / 1_000f64.sqrt(),
        format!(
            "{:.5} ± {:.5} vs {target:.5}, sup|H| = {:.4}",
            d.mean, d.se, d.sup_integrand
        ),
    ))
}

fn excursions<E: PathExecutor>(seed: u64, exec: &E) -> anyhow::Result<(bool, String)> {
    let p = FormulaParams::new(0.5, 1.0)?;
    let q = -0.3;
    let st = mc_excursion_stats(&p, 0.005, q, 20_000, seed, exec)?;
    let (horizon_first, _) = cycle_probabilities(&p)?;
    let nu = excursion_rates(&p)?.nu;
    let ratio = psi(q, &p)?.psi0 / psi(0.0, &p)?.psi0;
    let ok = st.p_horizon_first.within(horizon_first, MC_BAND)
        && st.mean_running_max.within(1.0 / nu, MC_BAND)
        && st.p_below_q.within(ratio, MC_BAND)
        && st.lambda.within(lambda_max(p.a)?, MC_BAND);
    Ok((
        ok,
        format!(
            "P[α<τ0] {:.4}/{horizon_first:.4}, E[X̄] {:.4}/{:.4}, P(Y<q) {:.4}/{ratio:.4}",
            st.p_horizon_first.mean,
            st.mean_running_max.mean,
            1.0 / nu,
            st.p_below_q.mean
        ),
    ))
}

/// Runs every check; seeds for the Monte Carlo checks derive from `seed`.
pub fn run_suite<E: PathExecutor>(seed: u64, exec: &E) -> Vec<Check> {
    let s = |tag| derive_seed(seed, tag);
    vec![
        Check::from_result("analytic identities", identities()),
        Check::from_result("threshold fixed point", fixed_point()),
        Check::from_result("lambda by simulation", lambda(s(1), exec)),
        Check::from_result("tree foresight equivalence", tree_equivalence()),
        Check::from_result("tree bracket", tree_bracket(s(2), exec)),
        Check::from_result("zero window", zero_window(s(3), exec)),
        Check::from_result("foresight integrand", prop_zero(s(4), exec)),
        Check::from_result("excursion statistics", excursions(s(5), exec)),
    ]
}

pub fn render(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for c in checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{status}  {:width$}  {}", c.name, c.detail);
    }
    out
}

//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs as a plain binary so the lines are always shown.

use std::process::Command;
use std::time::Instant;

use foresight::experiments::{rules_table, Grid, Measure};
use foresight::Parallel;
use foresight_core::analytic::{
    cycle_probabilities, excursion_rates, lambda_max, normal_cdf, normal_pdf, optimal_threshold,
    psi, rule_value_parts, FormulaParams,
};
use foresight_core::bounds::{
    build_bin_model, estimate_bounds, lower_bound, upper_bound, BoundsConfig,
};
use foresight_core::oracle::{
    exact_foresight_value, exact_small_value, mc_lambda, nonsemimartingale_demo, TreeSpec,
};
use foresight_core::paths::ModelParams;
use foresight_core::rules::{run_rule, RuleConfig, RuleVariant};

const H: f64 = 1.0 / 2500.0;
const N_STEPS: usize = 250;
const SEED: u64 = 20_240_601;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

fn rel(x: f64, y: f64) -> f64 {
    let scale = x.abs().max(y.abs());
    if scale == 0.0 {
        0.0
    } else {
        (x - y).abs() / scale
    }
}

/// Identities over a 20 x 20 x 20 grid of (a, eta, q), relative 1e-10.
fn analytic_identities() -> Outcome {
    let a_grid = log_space(1e-3, 10.0, 20);
    let eta_grid = log_space(1e-2, 1e4, 20);
    let q_grid: Vec<f64> = (0..20).map(|i| -5.0 * (i as f64 + 1.0) / 20.0).collect();
    let mut worst: f64 = 0.0;
    let mut min_den = f64::INFINITY;
    let mut cases = 0;
    for &a in &a_grid {
        for &eta in &eta_grid {
            let p = FormulaParams::new(a, eta).unwrap();
            let r = excursion_rates(&p).unwrap();
            let (hf, tf) = cycle_probabilities(&p).unwrap();
            let zero = psi(0.0, &p).unwrap();
            worst = worst
                .max(rel(r.nu, r.nu_a + r.nu_alpha))
                .max(rel(hf + tf, 1.0))
                .max(rel(zero.psi0, r.nu_a * (-eta * a).exp()))
                .max(zero.psi1.abs());
            for &q in &q_grid {
                let (_, den) = rule_value_parts(q, &p).unwrap();
                // relative to the scale of the terms it is built from
                min_den = min_den.min(den / (r.nu + 1.0));
                cases += 1;
            }
        }
    }
    outcome(
        worst <= 1e-10 && min_den > 0.0,
        format!(
            "{cases} cases, worst identity error {worst:.1e}, min scaled denominator {min_den:.2e}"
        ),
    )
}

/// |K(q*) - exp(-q*)| <= 1e-6 for 50 rates in [0.1, 1e4] at two windows.
fn fixed_point() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for a in [0.004, 0.04] {
        for eta in log_space(0.1, 1e4, 50) {
            match optimal_threshold(&FormulaParams::new(a, eta).unwrap()) {
                Ok(s) => worst = worst.max((s.k_star - (-s.q_star).exp()).abs()),
                Err(_) => failures += 1,
            }
        }
    }
    outcome(
        worst <= 1e-6 && failures == 0,
        format!("100 solves, {failures} failures, max residual {worst:.1e}"),
    )
}

/// Monte Carlo E[exp(max X)] at a = 1 against the closed form, and away
/// from the variant with phi(a/4) in place of phi(sqrt(a)/2).
fn lambda_oracle(exec: &Parallel) -> Outcome {
    let a: f64 = 1.0;
    let est = mc_lambda(a, 1e-4, 1_000_000, SEED, exec).unwrap();
    let formula = lambda_max(a).unwrap();
    let variant = (2.0 + a / 2.0) * normal_cdf(a.sqrt() / 2.0) + a.sqrt() * normal_pdf(a / 4.0);
    let z_formula = (est.mean - formula) / est.se;
    let z_variant = (est.mean - variant) / est.se;
    outcome(
        z_formula.abs() <= 3.0 && z_variant.abs() > 3.0,
        format!(
            "MC {:.5} ± {:.5}; formula {formula:.5} (z = {z_formula:.2}); variant {variant:.5} (z = {z_variant:.1})",
            est.mean, est.se
        ),
    )
}

fn cli_bounds_csv(threads: usize) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_foresight"))
        .args([
            "bounds",
            "--preset",
            "desk",
            "--a-over-h",
            "1,5,10,20",
            "--bins",
            "200",
            "--samples-per-bin",
            "200",
            "--lower-paths",
            "20000",
            "--upper-paths",
            "2000",
            "--sub-paths",
            "50",
            "--seed",
            &SEED.to_string(),
            "--threads",
            &threads.to_string(),
        ])
        .output()
        .expect("failed to run the foresight binary");
    assert!(
        out.status.success(),
        "bounds failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Rows of a CSV with leading `#` comments: (header, rows).
fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines
        .next()
        .unwrap()
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

/// Desk-scale bounds at a/h in {1, 5, 10, 20}.
fn desk_bounds(csv: &str) -> Outcome {
    let targets = [(1.0, 1.054), (5.0, 1.109), (10.0, 1.140), (20.0, 1.174)];
    let (header, rows) = parse_csv(csv);
    let mut ok = header
        == [
            "a_over_h", "lower", "lower_se", "upper", "upper_se", "gap_pct",
        ]
        && rows.len() == targets.len();
    let mut detail = Vec::new();
    for (row, &(m, target)) in rows.iter().zip(&targets) {
        let (lower, upper, gap) = (row[1], row[3], row[5]);
        let row_ok = row[0] == m && (lower - target).abs() <= 0.005 && upper >= lower && gap <= 2.5;
        ok &= row_ok;
        detail.push(format!("{m}: {lower:.4}/{upper:.4} ({gap:.2}%)"));
    }
    outcome(ok, detail.join(", "))
}

/// Both rules with 50,000 paths.
fn rule_values(exec: &Parallel) -> Outcome {
    let grid = Grid {
        h: H,
        n_steps: N_STEPS,
        windows: vec![1, 10, 20],
        measure: Measure::Share,
    };
    let rows = rules_table(&grid, 50_000, SEED, exec).unwrap();
    let rule2 = [1.054, 1.139, 1.174];
    let mut ok = true;
    let mut detail = Vec::new();
    for (row, target) in rows.iter().zip(rule2) {
        ok &= (row.rule2.mean - target).abs() <= 0.004;
        detail.push(format!("R2({}) {:.4}", row.a_over_h, row.rule2.mean));
    }
    let r1 = rows[1].rule1.mean;
    ok &= (r1 - 1.136).abs() <= 0.004;
    detail.push(format!("R1(10) {r1:.4}"));
    outcome(ok, detail.join(", "))
}

/// Exact tree value inside the simulated bracket on the same increments.
fn tree_bracket(exec: &Parallel) -> Outcome {
    let ts = TreeSpec::new(10, 3, 0.01, -0.5).unwrap();
    let exact = exact_small_value(&ts).unwrap();
    let cfg = BoundsConfig {
        lower_paths: 20_000,
        ..BoundsConfig::DESK
    };
    let r = estimate_bounds(&ts.model_params().unwrap(), &cfg, SEED, exec).unwrap();
    let lo = r.lower.mean - 3.0 * r.lower.se;
    let hi = r.upper.mean + 3.0 * r.upper.se;
    outcome(
        lo <= exact && exact <= hi,
        format!("exact {exact:.5} in [{lo:.5}, {hi:.5}]"),
    )
}

/// Bit-exact equality of the two tree programs for depth <= 12.
fn tree_equivalence() -> Outcome {
    let mut cases = 0;
    let mut mismatches = Vec::new();
    for depth in 1..=12 {
        for m in 0..=depth {
            let ts = TreeSpec::new(depth, m, 0.01, -0.5).unwrap();
            let v = exact_small_value(&ts).unwrap();
            let w = exact_foresight_value(&ts).unwrap();
            if v.to_bits() != w.to_bits() {
                mismatches.push((depth, m));
            }
            cases += 1;
        }
    }
    outcome(
        mismatches.is_empty(),
        format!("{cases} trees, mismatches {mismatches:?}"),
    )
}

/// Zero window: the lower bound and both rules return 1 within 3 SE. The
/// dual upper bound is biased high by its sub-simulation, so it is printed
/// but not gated.
fn zero_window(exec: &Parallel) -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    let check = |mean: f64, se: f64| (mean - 1.0).abs() <= 3.0 * se;
    for (label, mp) in [
        ("share", ModelParams::share_measure(H, N_STEPS, 0).unwrap()),
        ("physical", ModelParams::physical(H, N_STEPS, 0).unwrap()),
    ] {
        let cfg = BoundsConfig::DESK;
        let bm = build_bin_model(&mp, cfg.num_bins, cfg.samples_per_bin, SEED, exec).unwrap();
        let lb = lower_bound(&bm, &mp, 20_000, SEED + 1, exec).unwrap();
        let ub = upper_bound(&bm, &mp, 2_000, cfg.sub_paths, SEED + 2, exec).unwrap();
        ok &= check(lb.mean, lb.se);
        detail.push(format!(
            "{label} LB {:.5}±{:.5} UB {:.5}±{:.5}",
            lb.mean, lb.se, ub.mean, ub.se
        ));
        for variant in [RuleVariant::One, RuleVariant::Two] {
            let rc = RuleConfig {
                variant,
                mp,
                n_paths: 20_000,
                seed: SEED + 3,
            };
            let e = run_rule(&rc, exec).unwrap();
            ok &= check(e.mean, e.se);
            detail.push(format!("R{} {:.5}±{:.5}", variant.index(), e.mean, e.se));
        }
    }
    outcome(ok, detail.join(", "))
}

/// n^{-1/2} sum |increments| against E|W_1|.
fn prop_zero(exec: &Parallel) -> Outcome {
    let d = nonsemimartingale_demo(10_000, 1.0, 10_000, SEED, exec).unwrap();
    let target = (2.0 / std::f64::consts::PI).sqrt();
    outcome(
        (d.mean - target).abs() <= 3.0 * d.se,
        format!(
            "{:.5} ± {:.5} vs {target:.5}, sup|H| {:.0e}",
            d.mean, d.se, d.sup_integrand
        ),
    )
}

fn main() {
    let exec = Parallel::new(0).unwrap();
    let mut failed = 0;
    let mut report = |n: usize, name: &str, run: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = run();
        let status = if o.passed { "PASS" } else { "FAIL" };
        failed += usize::from(!o.passed);
        println!(
            "criterion {n:>2} {status}  {name} [{:.1}s]: {}",
            t.elapsed().as_secs_f64(),
            o.detail
        );
    };

    report(1, "analytic identities", &mut analytic_identities);
    report(2, "threshold fixed point", &mut fixed_point);
    report(3, "lambda oracle", &mut || lambda_oracle(&exec));
    let mut csv_one = String::new();
    report(4, "bounds at desk scale", &mut || {
        csv_one = cli_bounds_csv(1);
        desk_bounds(&csv_one)
    });
    report(5, "rule values", &mut || rule_values(&exec));
    report(6, "tree bracket", &mut || tree_bracket(&exec));
    report(7, "tree foresight equivalence", &mut tree_equivalence);
    report(8, "zero window sanity", &mut || zero_window(&exec));
    report(9, "foresight integrand", &mut || prop_zero(&exec));
    report(10, "determinism across threads", &mut || {
        let other = cli_bounds_csv(3);
        outcome(
            other == csv_one && !csv_one.is_empty(),
            format!(
                "threads 1 vs 3: {} bytes, identical = {}",
                csv_one.len(),
                other == csv_one
            ),
        )
    });

    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use foresight::config::{
    parse_f64_list, parse_usize_list, ConfigFile, Preset, DEFAULT_H, DEFAULT_N_STEPS, DEFAULT_SEED,
};
use foresight::error::{bad_input, AppError};
use foresight::experiments::{bounds_table, rules_table, Grid, Measure};
use foresight::output::{write_bounds, write_path, write_rules, write_series, Header};
use foresight::{exit_code, validate, Parallel};
use foresight_core::analytic::{
    a_quantities, excursion_rates, optimal_threshold, psi, rule_value, FormulaParams,
};
use foresight_core::bounds::BoundsConfig;
use foresight_core::oracle::nonsemimartingale_demo;
use foresight_core::paths::simulate_path;
use foresight_core::rng::RngStream;
use foresight_core::rules::RuleVariant;

/// Value of foresight / fixed-window lookback: closed forms, simulation
/// bounds and explicit stopping rules.
#[derive(Debug, Parser)]
#[command(name = "foresight", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the closed-form renewal quantities at (a, eta, q).
    Formulas(FormulasArgs),
    /// Optimal threshold q*(eta) for a list of rates.
    Qstar(QstarArgs),
    /// Lower and upper bounds per window length (CSV).
    Bounds(BoundsArgs),
    /// Rules 1 and 2 per window length (CSV), optionally with a plot series.
    Rules(RulesArgs),
    /// Run the oracle self-checks; exits 4 if any fails.
    Validate(RunArgs),
    /// Foresight integrand statistic with vanishing integrands.
    DemoProp0(DemoArgs),
    /// Dump one simulated path (k, x, s, z, g) for debugging.
    DumpPath(DumpArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Flat key = value file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores). Does not change the output.
    #[arg(long)]
    threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    n_steps: Option<usize>,
    /// Window lengths in steps, e.g. `1,5,10` or `1-20`.
    #[arg(long, visible_alias = "m")]
    a_over_h: Option<String>,
    #[arg(long, value_enum)]
    measure: Option<Measure>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
}

#[derive(Debug, Args)]
struct SizeArgs {
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    samples_per_bin: Option<usize>,
    #[arg(long)]
    lower_paths: Option<usize>,
    #[arg(long)]
    upper_paths: Option<usize>,
    #[arg(long)]
    sub_paths: Option<usize>,
}

#[derive(Debug, Args)]
struct FormulasArgs {
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    /// Threshold; defaults to q*(eta).
    #[arg(long, allow_hyphen_values = true)]
    q: Option<f64>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct QstarArgs {
    #[arg(long)]
    a: Option<f64>,
    /// Comma-separated rates.
    #[arg(long)]
    eta: Option<String>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    sizes: SizeArgs,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct RulesArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// Paths per rule and window.
    #[arg(long)]
    paths: Option<usize>,
    /// Also run the bounds and write a (rule, lower, upper) series here.
    #[arg(long)]
    series_out: Option<PathBuf>,
    /// Rule shown in the series.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    series_rule: Option<u8>,
    #[command(flatten)]
    sizes: SizeArgs,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct DemoArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    paths: Option<usize>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct DumpArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    path_id: Option<u64>,
    #[command(flatten)]
    run: RunArgs,
}

const RUN_KEYS: [&str; 3] = ["seed", "threads", "out"];
const GRID_KEYS: [&str; 5] = ["h", "n-steps", "a-over-h", "measure", "preset"];
const SIZE_KEYS: [&str; 5] = [
    "bins",
    "samples-per-bin",
    "lower-paths",
    "upper-paths",
    "sub-paths",
];

fn load_config(run: &RunArgs, extra: &[&[&str]]) -> anyhow::Result<ConfigFile> {
    let cfg = match &run.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let allowed: Vec<&str> = RUN_KEYS
        .iter()
        .chain(extra.iter().flat_map(|k| k.iter()))
        .copied()
        .collect();
    cfg.check_keys(&allowed)?;
    Ok(cfg)
}

struct Run {
    seed: u64,
    threads: usize,
    out: Option<PathBuf>,
}

fn resolve_run(run: &RunArgs, cfg: &ConfigFile) -> anyhow::Result<Run> {
    Ok(Run {
        seed: cfg.resolve(run.seed, "seed", DEFAULT_SEED)?,
        threads: cfg.resolve(run.threads, "threads", 0)?,
        out: run
            .out
            .clone()
            .or_else(|| cfg.raw("out").map(PathBuf::from)),
    })
}

fn resolve_grid(
    g: &GridArgs,
    cfg: &ConfigFile,
    default_windows: &str,
) -> anyhow::Result<(Grid, Preset)> {
    let preset = match g.preset {
        Some(p) => p,
        None => cfg
            .raw("preset")
            .map(|s| s.parse::<Preset>().map_err(bad_input))
            .transpose()?
            .unwrap_or_default(),
    };
    let measure = match g.measure {
        Some(m) => m,
        None => match cfg.raw("measure") {
            None | Some("share") => Measure::Share,
            Some("physical") => Measure::Physical,
            Some(other) => return Err(bad_input(format!("unknown measure `{other}`"))),
        },
    };
    let windows = match &g.a_over_h {
        Some(s) => s.clone(),
        None => cfg.raw("a-over-h").unwrap_or(default_windows).to_string(),
    };
    let grid = Grid {
        h: cfg.resolve(g.h, "h", DEFAULT_H)?,
        n_steps: cfg.resolve(g.n_steps, "n-steps", DEFAULT_N_STEPS)?,
        windows: parse_usize_list(&windows)?,
        measure,
    };
    Ok((grid, preset))
}

fn resolve_sizes(s: &SizeArgs, cfg: &ConfigFile, preset: Preset) -> anyhow::Result<BoundsConfig> {
    let base = preset.bounds();
    Ok(BoundsConfig {
        num_bins: cfg.resolve(s.bins, "bins", base.num_bins)?,
        samples_per_bin: cfg.resolve(s.samples_per_bin, "samples-per-bin", base.samples_per_bin)?,
        lower_paths: cfg.resolve(s.lower_paths, "lower-paths", base.lower_paths)?,
        upper_paths: cfg.resolve(s.upper_paths, "upper-paths", base.upper_paths)?,
        sub_paths: cfg.resolve(s.sub_paths, "sub-paths", base.sub_paths)?,
    })
}

fn grid_header(title: &str, grid: &Grid, preset: Preset, seed: u64) -> Header {
    let windows: Vec<String> = grid.windows.iter().map(usize::to_string).collect();
    Header::new(title)
        .entry("preset", preset.name())
        .entry("h", grid.h)
        .entry("n-steps", grid.n_steps)
        .entry("a-over-h", windows.join(","))
        .entry("measure", grid.measure.name())
        .entry("seed", seed)
}

fn size_header(header: Header, s: &BoundsConfig) -> Header {
    header
        .entry("bins", s.num_bins)
        .entry("samples-per-bin", s.samples_per_bin)
        .entry("lower-paths", s.lower_paths)
        .entry("upper-paths", s.upper_paths)
        .entry("sub-paths", s.sub_paths)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn cmd_formulas(args: &FormulasArgs) -> anyhow::Result<()> {
    let cfg = load_config(&args.run, &[&["a", "eta", "q"]])?;
    let run = resolve_run(&args.run, &cfg)?;
    let a = cfg.resolve(args.a, "a", 10.0 * DEFAULT_H)?;
    let eta = cfg.resolve(args.eta, "eta", 1.0 / (DEFAULT_N_STEPS as f64 * DEFAULT_H))?;
    let p = FormulaParams::new(a, eta)?;
    let q = match args.q.or(cfg.get("q")?) {
        Some(q) => q,
        None => optimal_threshold(&p)?.q_star,
    };
    let r = excursion_rates(&p)?;
    let s = psi(q, &p)?;
    let aq = a_quantities(q, &p)?;
    let k = rule_value(q, &p)?;

    let mut out = String::new();
    for (key, v) in [
        ("a", a),
        ("eta", eta),
        ("q", q),
        ("beta", r.beta),
        ("nu", r.nu),
        ("nu_a", r.nu_a),
        ("nu_alpha", r.nu_alpha),
        ("psi0", s.psi0),
        ("psi1", s.psi1),
        ("a0", aq.a0),
        ("a_minus", aq.a_minus),
        ("a_plus", aq.a_plus),
        ("k", k),
    ] {
        out.push_str(&format!("{key} = {v:.15e}\n"));
    }
    emit(run.out.as_deref(), out.as_bytes())
}

fn cmd_qstar(args: &QstarArgs) -> anyhow::Result<()> {
    let cfg = load_config(&args.run, &[&["a", "eta"]])?;
    let run = resolve_run(&args.run, &cfg)?;
    let a = cfg.resolve(args.a, "a", 10.0 * DEFAULT_H)?;
    let etas = match &args.eta {
        Some(s) => s.clone(),
        None => cfg.raw("eta").unwrap_or("0.4,4,40,400").to_string(),
    };
    let mut buf = Vec::new();
    Header::new("qstar").entry("a", a).write(&mut buf)?;
    let mut csv = csv::Writer::from_writer(&mut buf);
    csv.write_record(["eta", "q_star", "k_star"])?;
    for eta in parse_f64_list(&etas)? {
        let s = optimal_threshold(&FormulaParams::new(a, eta)?)?;
        csv.write_record([
            eta.to_string(),
            format!("{:.12}", s.q_star),
            format!("{:.12}", s.k_star),
        ])?;
    }
    csv.flush()?;
    drop(csv);
    emit(run.out.as_deref(), &buf)
}

fn cmd_bounds(args: &BoundsArgs) -> anyhow::Result<()> {
    let cfg = load_config(&args.run, &[&GRID_KEYS, &SIZE_KEYS])?;
    let run = resolve_run(&args.run, &cfg)?;
    let (grid, preset) = resolve_grid(&args.grid, &cfg, "1,5,10,20")?;
    let sizes = resolve_sizes(&args.sizes, &cfg, preset)?;
    let exec = Parallel::new(run.threads)?;
    let rows = bounds_table(&grid, &sizes, run.seed, &exec)?;
    let header = size_header(grid_header("bounds", &grid, preset, run.seed), &sizes);
    let mut buf = Vec::new();
    write_bounds(&mut buf, &header, &rows)?;
    emit(run.out.as_deref(), &buf)
}

fn cmd_rules(args: &RulesArgs) -> anyhow::Result<()> {
    let cfg = load_config(
        &args.run,
        &[
            &GRID_KEYS,
            &SIZE_KEYS,
            &["paths", "series-out", "series-rule"],
        ],
    )?;
    let run = resolve_run(&args.run, &cfg)?;
    let (grid, preset) = resolve_grid(&args.grid, &cfg, "1,10,20")?;
    let paths = cfg.resolve(args.paths, "paths", preset.rule_paths())?;
    let exec = Parallel::new(run.threads)?;
    let rows = rules_table(&grid, paths, run.seed, &exec)?;
    let header = grid_header("rules", &grid, preset, run.seed).entry("paths", paths);
    let mut buf = Vec::new();
    write_rules(&mut buf, &header, &rows)?;
    emit(run.out.as_deref(), &buf)?;

    let series_out = args
        .series_out
        .clone()
        .or_else(|| cfg.raw("series-out").map(PathBuf::from));
    if let Some(path) = series_out {
        let rule: u8 = cfg.resolve(args.series_rule, "series-rule", 2)?;
        let variant =
            RuleVariant::from_index(rule).ok_or_else(|| bad_input("series-rule must be 1 or 2"))?;
        let sizes = resolve_sizes(&args.sizes, &cfg, preset)?;
        let bounds = bounds_table(&grid, &sizes, run.seed, &exec)?;
        let header = size_header(header, &sizes);
        let mut buf = Vec::new();
        write_series(&mut buf, &header, variant, &rows, &bounds)?;
        emit(Some(&path), &buf)?;
    }
    Ok(())
}

fn cmd_validate(args: &RunArgs) -> anyhow::Result<()> {
    let cfg = load_config(args, &[])?;
    let run = resolve_run(args, &cfg)?;
    let exec = Parallel::new(run.threads)?;
    let checks = validate::run_suite(run.seed, &exec);
    emit(run.out.as_deref(), validate::render(&checks).as_bytes())?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(AppError::ValidationFailed {
            failed,
            total: checks.len(),
        }
        .into());
    }
    Ok(())
}

fn cmd_demo(args: &DemoArgs) -> anyhow::Result<()> {
    let cfg = load_config(&args.run, &[&["n", "a", "paths"]])?;
    let run = resolve_run(&args.run, &cfg)?;
    let n = cfg.resolve(args.n, "n", 10_000)?;
    let a = cfg.resolve(args.a, "a", 1.0)?;
    let paths = cfg.resolve(args.paths, "paths", 10_000)?;
    let exec = Parallel::new(run.threads)?;
    let d = nonsemimartingale_demo(n, a, paths, run.seed, &exec)?;
    let target = (2.0 * a / std::f64::consts::PI).sqrt();
    let text = format!(
        "n = {n}\na = {a}\npaths = {paths}\nmean = {:.6}\nse = {:.6}\nE|W_a| = {target:.6}\nsup|H| = {:.6e}\n",
        d.mean, d.se, d.sup_integrand
    );
    emit(run.out.as_deref(), text.as_bytes())
}

fn cmd_dump(args: &DumpArgs) -> anyhow::Result<()> {
    let cfg = load_config(&args.run, &[&GRID_KEYS, &["path-id"]])?;
    let run = resolve_run(&args.run, &cfg)?;
    let (grid, preset) = resolve_grid(&args.grid, &cfg, "10")?;
    if grid.windows.len() != 1 {
        return Err(bad_input("dump-path takes a single window length"));
    }
    let path_id = cfg.resolve(args.path_id, "path-id", 0)?;
    let mp = grid.model(grid.windows[0])?;
    let path = simulate_path(&mp, &mut RngStream::new(run.seed, path_id));
    let header = grid_header("dump-path", &grid, preset, run.seed).entry("path-id", path_id);
    let mut buf = Vec::new();
    write_path(&mut buf, &header, &path)?;
    emit(run.out.as_deref(), &buf)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Formulas(a) => cmd_formulas(a),
        Command::Qstar(a) => cmd_qstar(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Rules(a) => cmd_rules(a),
        Command::Validate(a) => cmd_validate(a),
        Command::DemoProp0(a) => cmd_demo(a),
        Command::DumpPath(a) => cmd_dump(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("foresight: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

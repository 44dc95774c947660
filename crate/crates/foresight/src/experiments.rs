//! Table-style experiment drivers over a list of window lengths.

use foresight_core::bounds::{estimate_bounds, BoundEstimate, BoundsConfig};
use foresight_core::paths::ModelParams;
use foresight_core::rng::derive_seed;
use foresight_core::rules::{run_rule, RuleConfig, RuleEstimate, RuleVariant};
use foresight_core::PathExecutor;

/// Measure the paths are simulated under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Measure {
    /// Stock as numeraire: drift +1/2, payoff `Z/S`. Much lower variance.
    #[default]
    Share,
    /// Cash numeraire: drift -1/2, payoff `Z`.
    Physical,
}

impl Measure {
    pub fn name(self) -> &'static str {
        match self {
            Measure::Share => "share",
            Measure::Physical => "physical",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub h: f64,
    pub n_steps: usize,
    /// Window lengths `a/h` in steps, one table row each.
    pub windows: Vec<usize>,
    pub measure: Measure,
}

impl Grid {
    pub fn model(&self, m: usize) -> foresight_core::Result<ModelParams> {
        match self.measure {
            Measure::Share => ModelParams::share_measure(self.h, self.n_steps, m),
            Measure::Physical => ModelParams::physical(self.h, self.n_steps, m),
        }
    }
}

/// Seed of one table row, so a row does not depend on which others ran.
pub fn row_seed(seed: u64, m: usize) -> u64 {
    derive_seed(seed, m as u64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsRow {
    pub a_over_h: usize,
    pub lower: BoundEstimate,
    pub upper: BoundEstimate,
}

impl BoundsRow {
    pub fn gap_pct(&self) -> f64 {
        100.0 * (self.upper.mean - self.lower.mean) / self.lower.mean
    }
}

pub fn bounds_table<E: PathExecutor>(
    grid: &Grid,
    cfg: &BoundsConfig,
    seed: u64,
    exec: &E,
) -> anyhow::Result<Vec<BoundsRow>> {
    grid.windows
        .iter()
        .map(|&m| {
            let mp = grid.model(m)?;
            let report = estimate_bounds(&mp, cfg, row_seed(seed, m), exec)
                .map_err(|e| anyhow::Error::new(e).context(format!("bounds at a/h = {m}")))?;
            Ok(BoundsRow {
                a_over_h: m,
                lower: report.lower,
                upper: report.upper,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RulesRow {
    pub a_over_h: usize,
    pub rule1: RuleEstimate,
    pub rule2: RuleEstimate,
}

impl RulesRow {
    pub fn get(&self, variant: RuleVariant) -> &RuleEstimate {
        match variant {
            RuleVariant::One => &self.rule1,
            RuleVariant::Two => &self.rule2,
        }
    }
}

/// Both rules per window, on the same paths.
pub fn rules_table<E: PathExecutor>(
    grid: &Grid,
    n_paths: usize,
    seed: u64,
    exec: &E,
) -> anyhow::Result<Vec<RulesRow>> {
    grid.windows
        .iter()
        .map(|&m| {
            let mp = grid.model(m)?;
            let run = |variant| {
                let rc = RuleConfig {
                    variant,
                    mp,
                    n_paths,
                    seed: row_seed(seed, m),
                };
                run_rule(&rc, exec)
                    .map_err(|e| anyhow::Error::new(e).context(format!("rules at a/h = {m}")))
            };
            Ok(RulesRow {
                a_over_h: m,
                rule1: run(RuleVariant::One)?,
                rule2: run(RuleVariant::Two)?,
            })
        })
        .collect()
}

//! Finite-horizon versions of the renewal rule with explicit thresholds.
//!
//! Both rules wait for the next `τ0` after the current restart point, look at
//! `Y = X_{τ0} - X_{τ0 - a}` and stop if `Y` is below a threshold that depends
//! on the time left; otherwise they forget the past and restart at `τ0`.
//!
//! * [`RuleVariant::One`]: `q*(1/(T - τ0))`.
//! * [`RuleVariant::Two`]: the same, shifted by `-q*(1/a) - ln λ(a)` so that
//!   the decision is exact when one window is left.

use alloc::vec::Vec;

use crate::analytic::{lambda_max, optimal_threshold, FormulaParams};
use crate::exec::PathExecutor;
use crate::paths::{detect_tau0, simulate_path, ModelParams};
use crate::rng::RngStream;
use crate::stats::{pairwise_sum, Estimate};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleVariant {
    One,
    Two,
}

impl RuleVariant {
    pub fn index(self) -> u8 {
        match self {
            RuleVariant::One => 1,
            RuleVariant::Two => 2,
        }
    }

    pub fn from_index(i: u8) -> Option<Self> {
        match i {
            1 => Some(RuleVariant::One),
            2 => Some(RuleVariant::Two),
            _ => None,
        }
    }
}

fn two_shift(a: f64) -> Result<f64> {
    let q_a = optimal_threshold(&FormulaParams::new(a, 1.0 / a)?)?.q_star;
    Ok(q_a + libm::log(lambda_max(a)?))
}

/// Stopping threshold with `time_to_go = T - τ0` left and window `a`.
pub fn threshold(variant: RuleVariant, time_to_go: f64, a: f64) -> Result<f64> {
    if !(time_to_go.is_finite() && time_to_go > 0.0) {
        return Err(Error::invalid("time_to_go", "must be finite and > 0"));
    }
    let q = optimal_threshold(&FormulaParams::new(a, 1.0 / time_to_go)?)?.q_star;
    match variant {
        RuleVariant::One => Ok(q),
        RuleVariant::Two => Ok(q - two_shift(a)?),
    }
}

/// Thresholds for every possible number of steps to go on a grid.
///
/// `τ0` only falls on grid points, so only `n_steps` distinct times to go can
/// be queried; each one is solved exactly once up front.
#[derive(Debug, Clone)]
pub struct ThresholdTable {
    variant: RuleVariant,
    /// Entry `j - 1` is the threshold with `j` steps to go.
    q: Vec<f64>,
}

impl ThresholdTable {
    pub fn new(variant: RuleVariant, mp: &ModelParams) -> Result<Self> {
        mp.validate()?;
        let a = mp.window();
        let shift = match variant {
            RuleVariant::One => 0.0,
            RuleVariant::Two => two_shift(a)?,
        };
        let q = (1..=mp.n_steps)
            .map(|j| {
                let p = FormulaParams::new(a, 1.0 / (j as f64 * mp.h))?;
                Ok(optimal_threshold(&p)?.q_star - shift)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self { variant, q })
    }

    pub fn variant(&self) -> RuleVariant {
        self.variant
    }

    /// Threshold with `steps_to_go >= 1` grid steps left.
    #[inline]
    pub fn get(&self, steps_to_go: usize) -> f64 {
        self.q[steps_to_go - 1]
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleConfig {
    pub variant: RuleVariant,
    pub mp: ModelParams,
    pub n_paths: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleEstimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
    pub seed: u64,
    pub variant: RuleVariant,
    /// Mean number of forget-and-continue restarts per path.
    pub mean_renewals: f64,
    /// Fraction of paths that ran to the horizon.
    pub horizon_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleOutcome {
    pub payoff: f64,
    pub stop: usize,
    pub renewals: usize,
}

/// Applies the rule to one log-price path.
pub fn apply_rule(x: &[f64], m: usize, table: Option<&ThresholdTable>) -> RuleOutcome {
    let n = x.len() - 1;
    let horizon = RuleOutcome {
        payoff: f64::NAN,
        stop: n,
        renewals: 0,
    };
    let table = match (m, table) {
        (0, _) | (_, None) => return horizon,
        (_, Some(t)) => t,
    };
    let mut rho = 0;
    let mut renewals = 0;
    while let Some(k) = detect_tau0(x, m, rho) {
        if k == n {
            break;
        }
        let y = x[k] - x[k - m];
        if y < table.get(n - k) {
            return RuleOutcome {
                payoff: f64::NAN,
                stop: k,
                renewals,
            };
        }
        rho = k;
        renewals += 1;
    }
    RuleOutcome {
        renewals,
        ..horizon
    }
}

pub fn run_rule<E: PathExecutor>(rc: &RuleConfig, exec: &E) -> Result<RuleEstimate> {
    let mp = &rc.mp;
    mp.validate()?;
    if rc.n_paths < 2 {
        return Err(Error::invalid("n_paths", "need at least two paths"));
    }
    let table = if mp.m == 0 {
        None
    } else {
        Some(ThresholdTable::new(rc.variant, mp)?)
    };

    let outcomes: Vec<RuleOutcome> = exec.map_paths(rc.n_paths, |i| {
        let pg = simulate_path(mp, &mut RngStream::new(rc.seed, i as u64));
        let out = apply_rule(&pg.x, mp.m, table.as_ref());
        RuleOutcome {
            payoff: pg.payoff(out.stop, mp.numeraire),
            ..out
        }
    });

    let payoffs: Vec<f64> = outcomes.iter().map(|o| o.payoff).collect();
    let renewals: Vec<f64> = outcomes.iter().map(|o| o.renewals as f64).collect();
    let at_horizon = outcomes.iter().filter(|o| o.stop == mp.n_steps).count();
    let e = Estimate::from_samples(&payoffs);
    Ok(RuleEstimate {
        mean: e.mean,
        se: e.se,
        n: e.n,
        seed: rc.seed,
        variant: rc.variant,
        mean_renewals: pairwise_sum(&renewals) / rc.n_paths as f64,
        horizon_fraction: at_horizon as f64 / rc.n_paths as f64,
    })
}

//! Simulation bounds for the Bermudan fixed-window lookback.
//!
//! 1. Pretend the ratio `G = Z/S` is Markov, discretise it into per-step
//!    equal-frequency bins and estimate the bin transition counts from a pilot
//!    simulation (Barraquand–Martineau).
//! 2. Solve the resulting finite chain by backward induction.
//! 3. Lower bound: run the induced stopping rule on fresh paths.
//! 4. Upper bound: build a martingale from the chain's value function with
//!    one-step sub-simulation and evaluate `E[max_k (payoff_k - M_k)]`.
//!
//! The chain always works in units of the current stock price, where the
//! reward is `G` and values depend on `G` alone. Paths are normally simulated
//! under the share measure, where that is the natural unit. Under the cash
//! numeraire each pilot transition carries the weight `S_{k+1}/S_k`, which
//! turns cash-measure averages into share-unit conditional expectations, and
//! the reported payoffs are `Z`.

use alloc::vec;
use alloc::vec::Vec;

use crate::exec::PathExecutor;
use crate::paths::{simulate_path, ModelParams, Numeraire, WindowMax};
use crate::rng::{derive_seed, RngStream};
use crate::stats::Estimate;
use crate::{Error, Result};

const PILOT_TAG: u64 = 0x7069_6c6f;
const LOWER_TAG: u64 = 0x6c6f_7765;
const UPPER_TAG: u64 = 0x7570_7065;
const SUB_TAG: u64 = 0x7375_6273;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundEstimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
    pub seed: u64,
    pub kind: BoundKind,
}

impl BoundEstimate {
    fn new(samples: &[f64], seed: u64, kind: BoundKind) -> Self {
        let e = Estimate::from_samples(samples);
        Self {
            mean: e.mean,
            se: e.se,
            n: e.n,
            seed,
            kind,
        }
    }
}

/// Pilot paths moving from one bin to `to` at the next step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub to: u32,
    pub count: u32,
    /// Sum of `S_{k+1}/S_k` over those paths; equals `count` when simulating
    /// under the share measure.
    pub weight: f64,
}

/// Finite-state approximation of the stopping problem, in share units.
#[derive(Debug, Clone)]
pub struct BinModel {
    pub num_bins: usize,
    pub n_pilot: usize,
    pub seed: u64,
    /// Ascending, deduplicated interior edges per step. Bin `b` of step `k`
    /// is `(edges[k][b-1], edges[k][b]]`, open-ended at both extremes.
    pub edges: Vec<Vec<f64>>,
    /// Pilot paths per (step, bin).
    pub occupancy: Vec<Vec<u32>>,
    /// Mean pilot `G` per (step, bin).
    pub bin_payoff: Vec<Vec<f64>>,
    /// Sparse transitions per (step, bin), for steps `0..n_steps`.
    pub transitions: Vec<Vec<Vec<Transition>>>,
    /// Value per unit of the current price.
    pub value: Vec<Vec<f64>>,
    /// Expected next-step value; `-∞` at the terminal step.
    pub continuation: Vec<Vec<f64>>,
}

impl BinModel {
    pub fn n_steps(&self) -> usize {
        self.edges.len() - 1
    }

    #[inline]
    pub fn bin(&self, k: usize, state: f64) -> usize {
        self.edges[k].partition_point(|&e| e < state)
    }

    #[inline]
    pub fn value_at(&self, k: usize, state: f64) -> f64 {
        self.value[k][self.bin(k, state)]
    }

    #[inline]
    pub fn continuation_at(&self, k: usize, state: f64) -> f64 {
        self.continuation[k][self.bin(k, state)]
    }

    /// Normalised transition row; empty for bins without pilot paths.
    pub fn transition_row(&self, k: usize, b: usize) -> Vec<(usize, f64)> {
        let total: u64 = self.transitions[k][b].iter().map(|t| t.count as u64).sum();
        self.transitions[k][b]
            .iter()
            .map(|t| (t.to as usize, t.count as f64 / total as f64))
            .collect()
    }
}

/// For every bin, the index of the nearest occupied bin (lower one on ties).
fn nearest_occupied(occupancy: &[u32]) -> Vec<usize> {
    let occupied: Vec<usize> = (0..occupancy.len()).filter(|&b| occupancy[b] > 0).collect();
    (0..occupancy.len())
        .map(|b| {
            if occupancy[b] > 0 {
                return b;
            }
            let pos = occupied.partition_point(|&o| o < b);
            match (pos.checked_sub(1).map(|p| occupied[p]), occupied.get(pos)) {
                (Some(lo), Some(&hi)) => {
                    if b - lo <= hi - b {
                        lo
                    } else {
                        hi
                    }
                }
                (Some(lo), None) => lo,
                (None, Some(&hi)) => hi,
                (None, None) => b,
            }
        })
        .collect()
}

fn equal_frequency_edges(sorted: &[f64], num_bins: usize) -> Vec<f64> {
    let n = sorted.len();
    let mut edges: Vec<f64> = (1..num_bins)
        .map(|i| sorted[i * n / num_bins - 1])
        .collect();
    edges.dedup();
    edges
}

/// Simulates `num_bins * samples_per_bin` pilot paths, bins `G` per step and
/// solves the chain.
pub fn build_bin_model<E: PathExecutor>(
    mp: &ModelParams,
    num_bins: usize,
    samples_per_bin: usize,
    seed: u64,
    exec: &E,
) -> Result<BinModel> {
    mp.validate()?;
    if num_bins < 2 || num_bins > u16::MAX as usize {
        return Err(Error::invalid("num_bins", "must be in 2..=65535"));
    }
    if samples_per_bin == 0 {
        return Err(Error::invalid("samples_per_bin", "must be >= 1"));
    }
    let n_pilot = num_bins * samples_per_bin;
    let n_steps = mp.n_steps;
    let numeraire = mp.numeraire;

    // (G path, log-price path when transitions need price weights)
    let pilot: Vec<(Vec<f64>, Option<Vec<f64>>)> = exec.map_paths(n_pilot, |i| {
        let pg = simulate_path(mp, &mut RngStream::new(seed, i as u64));
        match numeraire {
            Numeraire::Share => (pg.g, None),
            Numeraire::Cash => (pg.g, Some(pg.x)),
        }
    });
    let weight = |i: usize, k: usize| match &pilot[i].1 {
        Some(x) => libm::exp(x[k + 1] - x[k]),
        None => 1.0,
    };

    let mut edges = Vec::with_capacity(n_steps + 1);
    let mut occupancy = Vec::with_capacity(n_steps + 1);
    let mut bin_payoff = Vec::with_capacity(n_steps + 1);
    // step-major bin index of every pilot path
    let mut bins = vec![0u16; (n_steps + 1) * n_pilot];
    let mut column = vec![0.0; n_pilot];

    for k in 0..=n_steps {
        for (i, slot) in column.iter_mut().enumerate() {
            *slot = pilot[i].0[k];
        }
        column.sort_unstable_by(f64::total_cmp);
        let step_edges = equal_frequency_edges(&column, num_bins);
        let nb = step_edges.len() + 1;

        let mut occ = vec![0u32; nb];
        let mut sums = vec![0.0; nb];
        for i in 0..n_pilot {
            let b = step_edges.partition_point(|&e| e < pilot[i].0[k]);
            bins[k * n_pilot + i] = b as u16;
            occ[b] += 1;
            sums[b] += pilot[i].0[k];
        }
        let occupied = occ.iter().filter(|&&c| c > 0).count();
        if occupied == 1 && column[0] != column[n_pilot - 1] {
            return Err(Error::DegenerateBinning { step: k });
        }
        let fill = nearest_occupied(&occ);
        let means: Vec<f64> = (0..nb)
            .map(|b| sums[fill[b]] / occ[fill[b]] as f64)
            .collect();

        edges.push(step_edges);
        occupancy.push(occ);
        bin_payoff.push(means);
    }

    let mut transitions = Vec::with_capacity(n_steps);
    let mut pairs: Vec<(u16, u16, f64)> = Vec::with_capacity(n_pilot);
    for k in 0..n_steps {
        pairs.clear();
        pairs.extend((0..n_pilot).map(|i| {
            (
                bins[k * n_pilot + i],
                bins[(k + 1) * n_pilot + i],
                weight(i, k),
            )
        }));
        // stable, so weights are summed in path order
        pairs.sort_by_key(|&(from, to, _)| (from, to));
        let mut rows: Vec<Vec<Transition>> = vec![Vec::new(); occupancy[k].len()];
        for &(from, to, w) in &pairs {
            let row = &mut rows[from as usize];
            match row.last_mut() {
                Some(t) if t.to == to as u32 => {
                    t.count += 1;
                    t.weight += w;
                }
                _ => row.push(Transition {
                    to: to as u32,
                    count: 1,
                    weight: w,
                }),
            }
        }
        transitions.push(rows);
    }

    // backward induction
    let mut value = vec![Vec::new(); n_steps + 1];
    let mut continuation = vec![Vec::new(); n_steps + 1];
    value[n_steps] = bin_payoff[n_steps].clone();
    continuation[n_steps] = vec![f64::NEG_INFINITY; bin_payoff[n_steps].len()];
    for k in (0..n_steps).rev() {
        let nb = occupancy[k].len();
        let mut cont = vec![0.0; nb];
        for (b, row) in transitions[k].iter().enumerate() {
            if occupancy[k][b] == 0 {
                continue;
            }
            let acc: f64 = row
                .iter()
                .map(|t| t.weight * value[k + 1][t.to as usize])
                .sum();
            cont[b] = acc / occupancy[k][b] as f64;
        }
        let fill = nearest_occupied(&occupancy[k]);
        let cont: Vec<f64> = (0..nb).map(|b| cont[fill[b]]).collect();
        value[k] = (0..nb).map(|b| bin_payoff[k][b].max(cont[b])).collect();
        continuation[k] = cont;
    }

    Ok(BinModel {
        num_bins,
        n_pilot,
        seed,
        edges,
        occupancy,
        bin_payoff,
        transitions,
        value,
        continuation,
    })
}

fn check_model(bm: &BinModel, mp: &ModelParams) -> Result<()> {
    mp.validate()?;
    if bm.n_steps() != mp.n_steps {
        return Err(Error::invalid("bin model", "built for a different horizon"));
    }
    Ok(())
}

/// Payoff of the chain's stopping rule on one fresh path: stop at the first
/// step where `G` is at least the continuation value of its bin.
fn lower_bound_path(bm: &BinModel, mp: &ModelParams, seed: u64, i: usize) -> f64 {
    let pg = simulate_path(mp, &mut RngStream::new(seed, i as u64));
    for k in 0..mp.n_steps {
        if pg.g[k] >= bm.continuation_at(k, pg.g[k]) {
            return pg.payoff(k, mp.numeraire);
        }
    }
    pg.payoff(mp.n_steps, mp.numeraire)
}

pub fn lower_bound<E: PathExecutor>(
    bm: &BinModel,
    mp: &ModelParams,
    n_paths: usize,
    seed: u64,
    exec: &E,
) -> Result<BoundEstimate> {
    check_model(bm, mp)?;
    if n_paths < 2 {
        return Err(Error::invalid("n_paths", "need at least two paths"));
    }
    let samples = exec.map_paths(n_paths, |i| lower_bound_path(bm, mp, seed, i));
    Ok(BoundEstimate::new(&samples, seed, BoundKind::Lower))
}

#[inline]
fn payoff_from_logs(numeraire: Numeraire, window_max: f64, x: f64) -> f64 {
    match numeraire {
        Numeraire::Cash => libm::exp(window_max),
        Numeraire::Share => libm::exp(window_max - x),
    }
}

/// Chain value at log-price `x` and window max `window_max`, in the units of
/// `numeraire`.
#[inline]
fn value_from_logs(bm: &BinModel, k: usize, numeraire: Numeraire, window_max: f64, x: f64) -> f64 {
    let v = bm.value_at(k, libm::exp(window_max - x));
    match numeraire {
        Numeraire::Cash => libm::exp(x) * v,
        Numeraire::Share => v,
    }
}

/// `max_k (payoff_k - M_k)` on one outer path.
fn upper_bound_path(bm: &BinModel, mp: &ModelParams, n_sub: usize, seed: u64, i: usize) -> f64 {
    let mut outer = RngStream::new(seed, i as u64);
    let mut sub = RngStream::new(derive_seed(seed, SUB_TAG), i as u64);
    let numeraire = mp.numeraire;

    let mut window = WindowMax::new(mp.m);
    let mut x = 0.0;
    let wmax = window.push(x);
    let mut best = payoff_from_logs(numeraire, wmax, x);
    let mut martingale = 0.0;

    for k in 1..=mp.n_steps {
        // The pre-time-0 price (log 0) is covered by x[0] = 0 whenever the
        // window reaches back that far.
        let surviving = window.max_of_surviving();
        let mut sub_sum = 0.0;
        for _ in 0..n_sub {
            let xt = x + mp.increments.sample(&mut sub);
            sub_sum += value_from_logs(bm, k, numeraire, surviving.max(xt), xt);
        }
        x += mp.increments.sample(&mut outer);
        let wmax = window.push(x);
        martingale += value_from_logs(bm, k, numeraire, wmax, x) - sub_sum / n_sub as f64;
        best = best.max(payoff_from_logs(numeraire, wmax, x) - martingale);
    }
    best
}

pub fn upper_bound<E: PathExecutor>(
    bm: &BinModel,
    mp: &ModelParams,
    n_outer: usize,
    n_sub: usize,
    seed: u64,
    exec: &E,
) -> Result<BoundEstimate> {
    check_model(bm, mp)?;
    if n_outer < 2 {
        return Err(Error::invalid("n_outer", "need at least two paths"));
    }
    if n_sub == 0 {
        return Err(Error::invalid("n_sub", "need at least one sub-simulation"));
    }
    let samples = exec.map_paths(n_outer, |i| upper_bound_path(bm, mp, n_sub, seed, i));
    Ok(BoundEstimate::new(&samples, seed, BoundKind::Upper))
}

/// Simulation sizes for the bounds pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundsConfig {
    pub num_bins: usize,
    pub samples_per_bin: usize,
    pub lower_paths: usize,
    pub upper_paths: usize,
    pub sub_paths: usize,
}

impl BoundsConfig {
    /// Full-size run: 200 bins × 200 samples, 50,000 lower-bound paths,
    /// 10,000 upper-bound paths with 50 sub-simulations per step.
    pub const FULL: Self = Self {
        num_bins: 200,
        samples_per_bin: 200,
        lower_paths: 50_000,
        upper_paths: 10_000,
        sub_paths: 50,
    };

    /// Path counts of [`Self::FULL`] divided by 5.
    pub const DESK: Self = Self {
        num_bins: 200,
        samples_per_bin: 200,
        lower_paths: 10_000,
        upper_paths: 2_000,
        sub_paths: 50,
    };
}

#[derive(Debug, Clone)]
pub struct BoundsReport {
    pub lower: BoundEstimate,
    pub upper: BoundEstimate,
    pub model: BinModel,
}

impl BoundsReport {
    /// Relative gap `(upper - lower) / lower` in percent.
    pub fn gap_pct(&self) -> f64 {
        100.0 * (self.upper.mean - self.lower.mean) / self.lower.mean
    }
}

/// Pilot, lower and upper phases with seeds derived from one run seed.
pub fn estimate_bounds<E: PathExecutor>(
    mp: &ModelParams,
    cfg: &BoundsConfig,
    seed: u64,
    exec: &E,
) -> Result<BoundsReport> {
    let model = build_bin_model(
        mp,
        cfg.num_bins,
        cfg.samples_per_bin,
        derive_seed(seed, PILOT_TAG),
        exec,
    )?;
    let lower = lower_bound(
        &model,
        mp,
        cfg.lower_paths,
        derive_seed(seed, LOWER_TAG),
        exec,
    )?;
    let upper = upper_bound(
        &model,
        mp,
        cfg.upper_paths,
        cfg.sub_paths,
        derive_seed(seed, UPPER_TAG),
        exec,
    )?;
    Ok(BoundsReport {
        lower,
        upper,
        model,
    })
}

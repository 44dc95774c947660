//! Independent reference values.
//!
//! * Exact dynamic programming on small two-point trees, both for the
//!   lookback payoff and for the "see `m` steps ahead" formulation.
//! * Monte Carlo estimates of the excursion quantities behind the closed
//!   forms in [`crate::analytic`].
//! * The elementary-integrand statistic showing that a foresighted seller
//!   can extract `E|W_a|` with vanishing integrands.

use alloc::vec;
use alloc::vec::Vec;

use crate::analytic::FormulaParams;
use crate::exec::PathExecutor;
use crate::paths::{detect_tau0, IncrementLaw, ModelParams};
use crate::rng::RngStream;
use crate::stats::{pairwise_sum, Estimate};
use crate::{Error, Result};

/// Largest tree the exact oracles accept (`2^22` leaves).
pub const MAX_TREE_DEPTH: usize = 22;

/// Non-recombining tree of two-point log-increments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeSpec {
    pub depth: usize,
    pub m: usize,
    pub h: f64,
    pub up: f64,
    pub down: f64,
    pub p_up: f64,
}

impl TreeSpec {
    /// Increments `±√h + c h` with probability 1/2 each.
    pub fn new(depth: usize, m: usize, h: f64, c: f64) -> Result<Self> {
        let root = libm::sqrt(h);
        let ts = Self {
            depth,
            m,
            h,
            up: root + c * h,
            down: -root + c * h,
            p_up: 0.5,
        };
        ts.validate()?;
        Ok(ts)
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.depth > MAX_TREE_DEPTH {
            return Err(Error::invalid("depth", "tree depth must be in 1..=22"));
        }
        if self.m > self.depth {
            return Err(Error::invalid("m", "window cannot exceed the tree depth"));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::invalid("h", "grid step must be finite and > 0"));
        }
        if !(self.up.is_finite() && self.down.is_finite() && (0.0..=1.0).contains(&self.p_up)) {
            return Err(Error::invalid("increments", "bad two-point law"));
        }
        Ok(())
    }

    pub fn increments(&self) -> IncrementLaw {
        IncrementLaw::TwoPoint {
            up: self.up,
            down: self.down,
            p_up: self.p_up,
        }
    }

    /// Simulation parameters with the tree's increments, payoff `Z`.
    pub fn model_params(&self) -> Result<ModelParams> {
        ModelParams::physical(self.h, self.depth, self.m)?.with_increments(self.increments())
    }

    /// Expectation of two child values.
    ///
    /// Written as a move from the smaller towards the larger so the result
    /// is monotone in both arguments and independent of their order.
    #[inline]
    fn average(&self, v_up: f64, v_down: f64) -> f64 {
        if v_up >= v_down {
            v_down + self.p_up * (v_up - v_down)
        } else {
            v_up + (1.0 - self.p_up) * (v_down - v_up)
        }
    }
}

/// Scratch path for the tree recursions: prices `s[0..=depth]`.
struct TreeWalk<'a> {
    ts: &'a TreeSpec,
    x: Vec<f64>,
    s: Vec<f64>,
}

impl<'a> TreeWalk<'a> {
    fn new(ts: &'a TreeSpec) -> Self {
        let mut x = vec![0.0; ts.depth + 1];
        let mut s = vec![0.0; ts.depth + 1];
        x[0] = 0.0;
        s[0] = 1.0;
        Self { ts, x, s }
    }

    /// `Z_k`, with the pre-time-0 price 1 while the window reaches back.
    fn window_max(&self, k: usize) -> f64 {
        let lo = k.saturating_sub(self.ts.m);
        let best = self.s[lo..=k]
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        if k < self.ts.m {
            best.max(1.0)
        } else {
            best
        }
    }

    fn step(&mut self, k: usize, inc: f64) {
        self.x[k + 1] = self.x[k] + inc;
        self.s[k + 1] = libm::exp(self.x[k + 1]);
    }

    fn children(&mut self, k: usize, rec: fn(&mut Self, usize) -> f64) -> f64 {
        let (up, down) = (self.ts.up, self.ts.down);
        self.step(k, up);
        let v_up = rec(self, k + 1);
        self.step(k, down);
        let v_down = rec(self, k + 1);
        self.ts.average(v_up, v_down)
    }

    fn lookback(&mut self, k: usize) -> f64 {
        let z = self.window_max(k);
        if k == self.ts.depth {
            return z;
        }
        z.max(self.children(k, Self::lookback))
    }

    fn foresight(&mut self, k: usize) -> f64 {
        if k == self.ts.depth {
            return self.window_max(k);
        }
        let c = self.children(k, Self::foresight);
        if k >= self.ts.m {
            self.s[k - self.ts.m].max(c)
        } else {
            c
        }
    }

    fn terminal_max(&mut self, k: usize, weight: f64, acc: &mut f64) {
        if k == self.ts.depth {
            *acc += weight * self.window_max(k);
            return;
        }
        let (up, down, p) = (self.ts.up, self.ts.down, self.ts.p_up);
        self.step(k, up);
        self.terminal_max(k + 1, weight * p, acc);
        self.step(k, down);
        self.terminal_max(k + 1, weight * (1.0 - p), acc);
    }
}

/// Bermudan value `sup_τ E[Z_τ]` by backward induction over all paths.
pub fn exact_small_value(ts: &TreeSpec) -> Result<f64> {
    ts.validate()?;
    Ok(TreeWalk::new(ts).lookback(0))
}

/// `sup E[S_{τ-m}]` over stopping indices `τ` in `[m, depth]` where the
/// decision at `τ` sees the path up to `τ`; past the horizon the seller picks
/// the best of the last `m + 1` prices.
pub fn exact_foresight_value(ts: &TreeSpec) -> Result<f64> {
    ts.validate()?;
    Ok(TreeWalk::new(ts).foresight(0))
}

/// `E[Z_depth]` by enumeration of the leaves.
pub fn expected_window_max(ts: &TreeSpec) -> Result<f64> {
    ts.validate()?;
    let mut acc = 0.0;
    TreeWalk::new(ts).terminal_max(0, 1.0, &mut acc);
    Ok(acc)
}

/// Maximum over one step of a Brownian bridge from `x0` to `x1` with
/// variance `h`, given that the current running maximum is `running`.
///
/// The bridge max is only sampled when it can beat `running` with
/// probability above `e^{-40}`.
#[inline]
fn bridge_max(x0: f64, x1: f64, h: f64, running: f64, rng: &mut RngStream) -> f64 {
    let top = x0.max(x1);
    if running > top && 2.0 * (running - x0) * (running - x1) > 40.0 * h {
        return running;
    }
    let d = x1 - x0;
    let m = 0.5 * (x0 + x1 + libm::sqrt(d * d - 2.0 * h * libm::log(rng.uniform_pos())));
    running.max(m)
}

/// Continuous-time `max_{[0,t]} X` for `X_s = W_s + c s`, sampled exactly on
/// a grid of step `h` with bridge maxima between the grid points.
fn continuous_max(t: f64, h: f64, c: f64, rng: &mut RngStream) -> f64 {
    let steps = libm::round(t / h) as usize;
    let (mean, sd) = (c * h, libm::sqrt(h));
    let mut x = 0.0;
    let mut best = 0.0;
    for _ in 0..steps {
        let next = x + mean + sd * rng.standard_normal();
        best = bridge_max(x, next, h, best, rng);
        x = next;
    }
    best
}

/// Estimate of `λ(a) = E[exp(max_{[0,a]} X)]` for `X_t = W_t - t/2`.
pub fn mc_lambda<E: PathExecutor>(
    a: f64,
    h: f64,
    n_paths: usize,
    seed: u64,
    exec: &E,
) -> Result<Estimate> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::invalid("a", "window length must be finite and > 0"));
    }
    if !(h.is_finite() && h > 0.0 && h <= a) {
        return Err(Error::invalid("h", "grid step must be in (0, a]"));
    }
    let samples = exec.map_paths(n_paths, |i| {
        libm::exp(continuous_max(
            a,
            h,
            -0.5,
            &mut RngStream::new(seed, i as u64),
        ))
    });
    Ok(Estimate::from_samples(&samples))
}

/// Monte Carlo counterparts of the renewal-cycle quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcursionStats {
    /// `P[α < τ0]`.
    pub p_horizon_first: Estimate,
    /// `P[τ0 < α]`.
    pub p_tau0_first: Estimate,
    /// `E[X̄_{τ0∧α}]`, analytically `1/ν`.
    pub mean_running_max: Estimate,
    /// `E[exp(X̄_a)]`, analytically `λ(a)` when `c = -1/2`.
    pub lambda: Estimate,
    /// `P(Y_{τ0} < q | τ0 < α)`, analytically `ψ0(q)/ψ0(0)`.
    pub p_below_q: Estimate,
}

/// Simulates `X_t = W_t + c t` with an independent `α ~ Exp(η)` and
/// estimates the quantities listed on [`ExcursionStats`] at threshold `q`.
///
/// `τ0` is detected on the grid. Running maxima are the exact continuous
/// maxima of the Brownian bridges between grid points, which removes the
/// `O(√h)` undershoot of grid maxima; `Y_{τ0}` is measured against that
/// maximum.
pub fn mc_excursion_stats<E: PathExecutor>(
    p: &FormulaParams,
    h: f64,
    q: f64,
    n_paths: usize,
    seed: u64,
    exec: &E,
) -> Result<ExcursionStats> {
    p.validate()?;
    if !(p.eta > 0.0) {
        return Err(Error::invalid("eta", "need a finite horizon, eta > 0"));
    }
    if !(q <= 0.0) {
        return Err(Error::invalid("q", "threshold must be <= 0"));
    }
    if n_paths < 2 {
        return Err(Error::invalid("n_paths", "need at least two paths"));
    }
    let m_real = p.a / h;
    let m = libm::round(m_real) as usize;
    if !(h.is_finite() && h > 0.0) || (m_real - m as f64).abs() > 1e-9 * m_real {
        return Err(Error::invalid(
            "h",
            "window must be a whole number of steps",
        ));
    }
    if m < 50 {
        return Err(Error::invalid("h", "need at least 50 steps per window"));
    }

    // (tau0 first, running max, tau0 first and Y below q, exp(max over [0, a]))
    let per_path: Vec<[f64; 4]> = exec.map_paths(n_paths, |i| {
        let mut rng = RngStream::new(seed, i as u64);
        let alpha = rng.exponential(p.eta);
        let n = libm::floor(alpha / h) as usize;
        let (mean, sd) = (p.c * h, libm::sqrt(h));
        let mut x = Vec::with_capacity(n + 1);
        let mut cur = 0.0;
        x.push(cur);
        for _ in 0..n {
            cur += mean + sd * rng.standard_normal();
            x.push(cur);
        }
        let tau0 = detect_tau0(&x, m, 0);
        let end = tau0.unwrap_or(n);
        let mut best = 0.0;
        for j in 0..end {
            best = bridge_max(x[j], x[j + 1], h, best, &mut rng);
        }
        let lam = libm::exp(continuous_max(p.a, h, p.c, &mut rng));
        match tau0 {
            Some(k) => [1.0, best, if x[k] - best < q { 1.0 } else { 0.0 }, lam],
            None => [0.0, best, 0.0, lam],
        }
    });

    let column = |c: usize| -> Vec<f64> { per_path.iter().map(|r| r[c]).collect() };
    let tau0 = column(0);
    let horizon: Vec<f64> = tau0.iter().map(|v| 1.0 - v).collect();

    Ok(ExcursionStats {
        p_horizon_first: Estimate::from_samples(&horizon),
        p_tau0_first: Estimate::from_samples(&tau0),
        mean_running_max: Estimate::from_samples(&column(1)),
        lambda: Estimate::from_samples(&column(3)),
        p_below_q: ratio_estimate(&column(2), &tau0),
    })
}

/// `mean(num) / mean(den)` with a delta-method standard error.
fn ratio_estimate(num: &[f64], den: &[f64]) -> Estimate {
    let n = num.len();
    let mean_den = pairwise_sum(den) / n as f64;
    let r = pairwise_sum(num) / n as f64 / mean_den;
    let resid: Vec<f64> = num
        .iter()
        .zip(den)
        .map(|(a, b)| (a - r * b) / mean_den)
        .collect();
    Estimate {
        mean: r,
        ..Estimate::from_samples(&resid)
    }
}

/// Result of the foresight-integrand experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropZeroDemo {
    pub mean: f64,
    pub se: f64,
    pub n_paths: usize,
    /// `max |H^n| = n^{-1/2}`.
    pub sup_integrand: f64,
}

/// Simple integrals `Σ_j H_j Δ_j` with `H_j = n^{-1/2} sign(Δ_j)` chosen
/// with knowledge of the next increment `Δ_j ~ N(0, a/n)`.
pub fn nonsemimartingale_demo<E: PathExecutor>(
    n: usize,
    a: f64,
    n_paths: usize,
    seed: u64,
    exec: &E,
) -> Result<PropZeroDemo> {
    if n == 0 {
        return Err(Error::invalid("n", "need at least one increment"));
    }
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::invalid("a", "must be finite and > 0"));
    }
    if n_paths < 2 {
        return Err(Error::invalid("n_paths", "need at least two paths"));
    }
    let sd = libm::sqrt(a / n as f64);
    let weight = 1.0 / libm::sqrt(n as f64);
    let samples = exec.map_paths(n_paths, |i| {
        let mut rng = RngStream::new(seed, i as u64);
        let mut acc = 0.0;
        for _ in 0..n {
            acc += (sd * rng.standard_normal()).abs();
        }
        weight * acc
    });
    let e = Estimate::from_samples(&samples);
    Ok(PropZeroDemo {
        mean: e.mean,
        se: e.se,
        n_paths,
        sup_integrand: weight,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{cycle_probabilities, excursion_rates, lambda_max, psi};
    use crate::exec::Sequential;

    #[test]
    fn tree_goldens() {
        let v = exact_small_value(&TreeSpec::new(6, 2, 0.01, -0.5).unwrap()).unwrap();
        assert!((v - 1.154_688_140_742_846_2).abs() < 1e-14);
        let v = exact_small_value(&TreeSpec::new(10, 3, 0.01, -0.5).unwrap()).unwrap();
        assert!((v - 1.202_894_814_027_177_8).abs() < 1e-14);
    }

    #[test]
    fn zero_window_is_one() {
        for depth in [1, 5, 9] {
            let ts = TreeSpec::new(depth, 0, 0.01, -0.5).unwrap();
            assert_eq!(exact_small_value(&ts).unwrap(), 1.0);
            assert_eq!(exact_foresight_value(&ts).unwrap(), 1.0);
        }
    }

    #[test]
    fn full_window_is_terminal_max() {
        let ts = TreeSpec::new(6, 6, 0.01, -0.5).unwrap();
        let v = exact_small_value(&ts).unwrap();
        assert!((v - expected_window_max(&ts).unwrap()).abs() < 1e-15);
        assert!((v - 1.162_813_536_618_228_4).abs() < 1e-14);
    }

    #[test]
    fn foresight_matches_lookback_exactly() {
        for depth in 1..=9 {
            for m in 0..=depth {
                let ts = TreeSpec::new(depth, m, 0.01, -0.5).unwrap();
                assert_eq!(
                    exact_small_value(&ts).unwrap().to_bits(),
                    exact_foresight_value(&ts).unwrap().to_bits(),
                    "depth {depth} m {m}"
                );
            }
        }
    }

    #[test]
    fn tree_rejects_bad_specs() {
        assert!(TreeSpec::new(23, 2, 0.01, -0.5).is_err());
        assert!(TreeSpec::new(4, 5, 0.01, -0.5).is_err());
        assert!(TreeSpec::new(0, 0, 0.01, -0.5).is_err());
    }

    #[test]
    fn average_is_order_free() {
        let ts = TreeSpec {
            p_up: 0.3,
            ..TreeSpec::new(3, 1, 0.01, -0.5).unwrap()
        };
        assert_eq!(ts.average(2.0, 1.0), 1.0 + 0.3 * 1.0);
        assert_eq!(ts.average(1.0, 2.0), 1.0 + 0.7 * 1.0);
    }

    #[test]
    fn bridge_max_is_exact_in_distribution() {
        // P(max > b) = exp(-2 b (b - x1) / h) for x0 = 0
        let (h, x1, b) = (1.0, 0.3, 0.8);
        let mut rng = RngStream::new(4, 0);
        let n = 200_000;
        let hits = (0..n)
            .filter(|_| bridge_max(0.0, x1, h, f64::NEG_INFINITY, &mut rng) > b)
            .count();
        let p = libm::exp(-2.0 * b * (b - x1) / h);
        let se = libm::sqrt(p * (1.0 - p) / n as f64);
        assert!((hits as f64 / n as f64 - p).abs() < 4.0 * se);
    }

    #[test]
    fn lambda_by_simulation() {
        let est = mc_lambda(1.0, 1e-2, 40_000, 8, &Sequential).unwrap();
        assert!(est.within(lambda_max(1.0).unwrap(), 3.5), "{est:?}");
    }

    #[test]
    fn excursion_stats_match_closed_forms() {
        let p = FormulaParams::new(0.5, 1.0).unwrap();
        let q = -0.3;
        let st = mc_excursion_stats(&p, 0.5 / 100.0, q, 20_000, 11, &Sequential).unwrap();
        assert_eq!(st.p_horizon_first.mean + st.p_tau0_first.mean, 1.0);
        let (horizon_first, _) = cycle_probabilities(&p).unwrap();
        let rates = excursion_rates(&p).unwrap();
        let ratio = psi(q, &p).unwrap().psi0 / psi(0.0, &p).unwrap().psi0;
        assert!(st.p_horizon_first.within(horizon_first, 3.5), "{st:?}");
        assert!(st.mean_running_max.within(1.0 / rates.nu, 3.5), "{st:?}");
        assert!(st.p_below_q.within(ratio, 3.5), "{st:?}");
        assert!(st.lambda.within(lambda_max(0.5).unwrap(), 3.5), "{st:?}");
    }

    #[test]
    fn demo_statistic() {
        let d = nonsemimartingale_demo(1, 1.0, 50_000, 3, &Sequential).unwrap();
        let target = libm::sqrt(2.0 / core::f64::consts::PI);
        assert!((d.mean - target).abs() < 3.5 * d.se);
        assert_eq!(d.sup_integrand, 1.0);
        let d = nonsemimartingale_demo(400, 2.0, 5_000, 3, &Sequential).unwrap();
        assert!((d.mean - libm::sqrt(4.0 / core::f64::consts::PI)).abs() < 3.5 * d.se);
        assert_eq!(d.sup_integrand, 0.05);
        assert!(nonsemimartingale_demo(0, 1.0, 10, 0, &Sequential).is_err());
    }
}

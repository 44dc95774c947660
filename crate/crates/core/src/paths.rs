//! Grid paths of the log-price, trailing-window maxima and `τ0` detection.
//!
//! Time is `k h` for `k = 0..=n_steps`, the window is `m` steps (`a = m h`)
//! and the window at step `k` is `{j : k - m <= j <= k}`. While `k h < a`
//! the window reaches before time 0 where the price is taken to be 1.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::rng::RngStream;
use crate::{Error, Result};

/// Law of one log-price increment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IncrementLaw {
    Gaussian {
        mean: f64,
        sd: f64,
    },
    /// `up` with probability `p_up`, else `down`.
    TwoPoint {
        up: f64,
        down: f64,
        p_up: f64,
    },
}

impl IncrementLaw {
    #[inline]
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match *self {
            IncrementLaw::Gaussian { mean, sd } => mean + sd * rng.standard_normal(),
            IncrementLaw::TwoPoint { up, down, p_up } => {
                if rng.uniform() < p_up {
                    up
                } else {
                    down
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            IncrementLaw::Gaussian { mean, .. } => mean,
            IncrementLaw::TwoPoint { up, down, p_up } => p_up * up + (1.0 - p_up) * down,
        }
    }
}

/// Unit in which payoffs are measured, which fixes the simulation measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Numeraire {
    /// Physical measure (`X` drifts at -1/2), payoff `Z`.
    Cash,
    /// Share measure (`X` drifts at +1/2), payoff `Z / S`.
    Share,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub h: f64,
    pub n_steps: usize,
    /// Window length in steps.
    pub m: usize,
    pub increments: IncrementLaw,
    pub numeraire: Numeraire,
}

impl ModelParams {
    /// Gaussian increments with the given drift per unit time.
    pub fn new(h: f64, n_steps: usize, m: usize, drift: f64, numeraire: Numeraire) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::invalid("h", "grid step must be finite and > 0"));
        }
        if !drift.is_finite() {
            return Err(Error::invalid("drift", "must be finite"));
        }
        let mp = Self {
            h,
            n_steps,
            m,
            increments: IncrementLaw::Gaussian {
                mean: drift * h,
                sd: libm::sqrt(h),
            },
            numeraire,
        };
        mp.validate()?;
        Ok(mp)
    }

    /// `X_t = W_t - t/2`, payoff `Z`.
    pub fn physical(h: f64, n_steps: usize, m: usize) -> Result<Self> {
        Self::new(h, n_steps, m, -0.5, Numeraire::Cash)
    }

    /// After the change of numeraire to the stock: drift +1/2, payoff `Z/S`.
    pub fn share_measure(h: f64, n_steps: usize, m: usize) -> Result<Self> {
        Self::new(h, n_steps, m, 0.5, Numeraire::Share)
    }

    pub fn with_increments(mut self, law: IncrementLaw) -> Result<Self> {
        self.increments = law;
        self.validate()?;
        Ok(self)
    }

    pub fn with_window(mut self, m: usize) -> Result<Self> {
        self.m = m;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::invalid("h", "grid step must be finite and > 0"));
        }
        if self.n_steps == 0 {
            return Err(Error::invalid("n_steps", "need at least one step"));
        }
        if self.m > self.n_steps {
            return Err(Error::invalid("m", "window cannot exceed the horizon"));
        }
        if let IncrementLaw::TwoPoint { up, down, p_up } = self.increments {
            if !(up.is_finite() && down.is_finite() && (0.0..=1.0).contains(&p_up)) {
                return Err(Error::invalid("increments", "bad two-point law"));
            }
        }
        Ok(())
    }

    /// `a = m h`.
    pub fn window(&self) -> f64 {
        self.m as f64 * self.h
    }

    /// `T = n_steps h`.
    pub fn horizon(&self) -> f64 {
        self.n_steps as f64 * self.h
    }

    /// Drift of `X` per unit time.
    pub fn drift(&self) -> f64 {
        self.increments.mean() / self.h
    }
}

/// Sliding maximum over the last `m + 1` pushed values (monotone deque).
#[derive(Debug, Clone)]
pub struct WindowMax {
    m: usize,
    next: usize,
    // (index, value), values strictly decreasing from front to back
    deque: VecDeque<(usize, f64)>,
}

impl WindowMax {
    pub fn new(m: usize) -> Self {
        Self {
            m,
            next: 0,
            deque: VecDeque::with_capacity(m + 2),
        }
    }

    /// Appends the value for the next index and returns the new window max.
    #[inline]
    pub fn push(&mut self, value: f64) -> f64 {
        let k = self.next;
        self.next += 1;
        while let Some(&(_, back)) = self.deque.back() {
            if back <= value {
                self.deque.pop_back();
            } else {
                break;
            }
        }
        self.deque.push_back((k, value));
        while let Some(&(j, _)) = self.deque.front() {
            if j + self.m < k {
                self.deque.pop_front();
            } else {
                break;
            }
        }
        self.deque[0].1
    }

    /// Max over the `m` most recent values, i.e. the part of the window that
    /// survives into the next step. `-∞` when `m = 0` or nothing was pushed.
    #[inline]
    pub fn max_of_surviving(&self) -> f64 {
        let k = self.next;
        for &(j, v) in &self.deque {
            if j + self.m >= k {
                return v;
            }
        }
        f64::NEG_INFINITY
    }
}

/// `out[k] = max(values[max(0, k-m) ..= k])`, with `sentinel` included
/// while `k < m`. Linear time.
pub fn rolling_window_max(values: &[f64], m: usize, sentinel: Option<f64>) -> Vec<f64> {
    let mut window = WindowMax::new(m);
    values
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let w = window.push(v);
            match sentinel {
                Some(s) if k < m => w.max(s),
                _ => w,
            }
        })
        .collect()
}

/// One simulated path with its derived series.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGrid {
    /// Log-price, `x[0] = 0`.
    pub x: Vec<f64>,
    /// Price `exp(x)`.
    pub s: Vec<f64>,
    /// Trailing-window maximum of the price.
    pub z: Vec<f64>,
    /// Payoff ratio `z / s >= 1`.
    pub g: Vec<f64>,
}

impl PathGrid {
    /// Builds the derived series from a log-price path.
    pub fn from_log_path(x: Vec<f64>, m: usize) -> Self {
        // log-space maxima; the pre-time-0 price 1 is log 0
        let xmax = rolling_window_max(&x, m, Some(0.0));
        let s = x.iter().map(|&v| libm::exp(v)).collect();
        let z = xmax.iter().map(|&v| libm::exp(v)).collect();
        let g = xmax
            .iter()
            .zip(&x)
            .map(|(&w, &v)| libm::exp(w - v))
            .collect();
        Self { x, s, z, g }
    }

    pub fn n_steps(&self) -> usize {
        self.x.len() - 1
    }

    /// Payoff at step `k` in units of `numeraire`.
    pub fn payoff(&self, k: usize, numeraire: Numeraire) -> f64 {
        match numeraire {
            Numeraire::Cash => self.z[k],
            Numeraire::Share => self.g[k],
        }
    }

    pub fn tau0(&self, m: usize, start: usize) -> Option<usize> {
        detect_tau0(&self.x, m, start)
    }
}

/// Log-price path `x[0..=n_steps]` starting at 0.
pub fn simulate_log_path(mp: &ModelParams, rng: &mut RngStream) -> Vec<f64> {
    let mut x = Vec::with_capacity(mp.n_steps + 1);
    let mut cur = 0.0;
    x.push(cur);
    for _ in 0..mp.n_steps {
        cur += mp.increments.sample(rng);
        x.push(cur);
    }
    x
}

pub fn simulate_path(mp: &ModelParams, rng: &mut RngStream) -> PathGrid {
    PathGrid::from_log_path(simulate_log_path(mp, rng), mp.m)
}

/// First `k >= start + m` at which the left end of the window attains the
/// window maximum: `x[k-m] >= x[j]` for all `j` in `[k-m, k]`.
///
/// Ties count as attaining the max. `None` if no such `k` is on the path.
pub fn detect_tau0(x: &[f64], m: usize, start: usize) -> Option<usize> {
    let first = start.checked_add(m)?;
    if first >= x.len() {
        return None;
    }
    let mut window = WindowMax::new(m);
    for &v in &x[start..first] {
        window.push(v);
    }
    for k in first..x.len() {
        let wmax = window.push(x[k]);
        if x[k - m] >= wmax {
            return Some(k);
        }
    }
    None
}

//! Closed forms for the renewal rule `R(q)`.
//!
//! The log-price is `X_t = W_t + c t` (with `c = -1/2` for the discounted
//! stock), the horizon is an independent `α ~ Exp(η)` and `τ0` is the first
//! time the trailing window `[t - a, t]` attains its maximum at the left end.
//! `Y = X - X̄` is the reflected process whose excursions below zero drive
//! everything here.
//!
//! The rule `R(q)` waits for `τ0 ∧ α`; at `τ0` it stops if `Y_{τ0} < q` and
//! otherwise forgets the past and restarts. Its value is
//!
//! ```text
//! K(q) = (ν_α + (1 - e^{-ηa}) ν_a + ψ0(q)) / (ν - 1 - ψ1(q))
//! ```
//!
//! and [`optimal_threshold`] maximises it over `q < 0`.

mod normal;

pub use normal::{normal_cdf, normal_pdf};

use crate::{Error, Result};

/// Drift of the log of the discounted stock, `X_t = W_t - t/2`.
pub const PHYSICAL_DRIFT: f64 = -0.5;

/// Search interval for the optimal threshold.
pub const Q_SEARCH_MIN: f64 = -8.0;
pub const Q_SEARCH_MAX: f64 = -1e-6;
const Q_GRID_POINTS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormulaParams {
    /// Window length `a > 0`.
    pub a: f64,
    /// Rate `η >= 0` of the exponential horizon.
    pub eta: f64,
    /// Drift `c` of `X`.
    pub c: f64,
}

impl FormulaParams {
    /// Parameters with the physical drift `c = -1/2`.
    pub fn new(a: f64, eta: f64) -> Result<Self> {
        Self::with_drift(a, eta, PHYSICAL_DRIFT)
    }

    pub fn with_drift(a: f64, eta: f64, c: f64) -> Result<Self> {
        let p = Self { a, eta, c };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.a > 0.0) {
            return Err(Error::invalid("a", "window length must be finite and > 0"));
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::invalid("eta", "rate must be finite and >= 0"));
        }
        if !self.c.is_finite() {
            return Err(Error::invalid("c", "drift must be finite"));
        }
        Ok(())
    }

    fn require_physical_drift(&self) -> Result<()> {
        if self.c != PHYSICAL_DRIFT {
            return Err(Error::invalid(
                "c",
                "the rule value is only guaranteed finite for c = -1/2",
            ));
        }
        Ok(())
    }

    /// `e^{-ηa}`, the probability that the horizon survives one window.
    fn survival(&self) -> f64 {
        libm::exp(-self.eta * self.a)
    }

    /// `1 - e^{-ηa}` without cancellation.
    fn killed(&self) -> f64 {
        -libm::expm1(-self.eta * self.a)
    }
}

/// Rates (in local time at the maximum) of the excursions of `Y` that end
/// the first renewal cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcursionRates {
    pub beta: f64,
    /// Total rate of excursions that last at least `a` or carry a mark.
    pub nu: f64,
    /// Rate of excursions lasting at least `a`.
    pub nu_a: f64,
    /// Rate of marked excursions shorter than `a`.
    pub nu_alpha: f64,
}

pub fn excursion_rates(p: &FormulaParams) -> Result<ExcursionRates> {
    p.validate()?;
    let FormulaParams { a, eta, c } = *p;
    let sa = libm::sqrt(a);
    let beta = if eta == 0.0 {
        c.abs()
    } else {
        libm::sqrt(c * c + 2.0 * eta)
    };

    let nu = 2.0 / sa * normal_pdf(beta * sa) + 2.0 * beta * normal_cdf(beta * sa) - c - beta;
    let nu_a = 2.0 / sa * normal_pdf(c * sa) - 2.0 * c * normal_cdf(-c * sa);
    let nu_alpha = if eta == 0.0 {
        0.0
    } else {
        2.0 * beta * (normal_cdf(beta * sa) - 0.5) - 2.0 * c * (normal_cdf(c * sa) - 0.5)
            + 2.0 / sa * (normal_pdf(beta * sa) - normal_pdf(c * sa))
    };

    Ok(ExcursionRates {
        beta,
        nu,
        nu_a,
        nu_alpha,
    })
}

/// `P[α < τ0]` and `P[τ0 < α]` for the first renewal cycle.
pub fn cycle_probabilities(p: &FormulaParams) -> Result<(f64, f64)> {
    let r = excursion_rates(p)?;
    let horizon_first = (r.nu_alpha + p.killed() * r.nu_a) / r.nu;
    let tau0_first = r.nu_a * p.survival() / r.nu;
    Ok((horizon_first, tau0_first))
}

/// The two integrals of the excursion density at time `a`:
/// `ψ0(q) = ∫_{-∞}^q g` and `ψ1(q) = ∫_q^0 e^y g(y) dy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Psi {
    pub psi0: f64,
    pub psi1: f64,
}

fn check_threshold(q: f64) -> Result<()> {
    if q.is_nan() || q > 0.0 {
        return Err(Error::invalid("q", "threshold must be <= 0"));
    }
    Ok(())
}

/// `q = -∞` is accepted and gives the limits.
pub fn psi(q: f64, p: &FormulaParams) -> Result<Psi> {
    p.validate()?;
    check_threshold(q)?;
    let FormulaParams { a, eta, c } = *p;
    let sa = libm::sqrt(a);
    let cbar = 1.0 + c;

    let u0 = (q - c * a) / sa;
    let psi0 = p.survival() * (2.0 / sa * normal_pdf(u0) - 2.0 * c * normal_cdf(u0));

    let u1 = (q - cbar * a) / sa;
    let psi1 = libm::exp((c + 0.5 - eta) * a)
        * (2.0 / sa * (normal_pdf(cbar * sa) - normal_pdf(u1))
            + 2.0 * cbar * (normal_cdf(cbar * sa) - normal_cdf(-u1)));

    Ok(Psi { psi0, psi1 })
}

/// The three expectations that make up `K`:
/// `A0 = E[e^{X̄_α}; α < τ0]`, `A-(q) = E[e^{X̄_{τ0}}; τ0 < α, Y_{τ0} < q]`,
/// `A+(q) = E[e^{X_{τ0}}; τ0 < α, Y_{τ0} > q]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AQuantities {
    pub a0: f64,
    pub a_minus: f64,
    pub a_plus: f64,
}

pub fn a_quantities(q: f64, p: &FormulaParams) -> Result<AQuantities> {
    let r = excursion_rates(p)?;
    let s = psi(q, p)?;
    let denom = r.nu - 1.0;
    if !(denom > 0.0) {
        return Err(Error::DegenerateDenominator {
            context: "nu - 1",
            value: denom,
        });
    }
    Ok(AQuantities {
        a0: (r.nu_alpha + p.killed() * r.nu_a) / denom,
        a_minus: s.psi0 / denom,
        a_plus: s.psi1 / denom,
    })
}

/// Numerator and denominator of `K(q)` for `c = -1/2`.
///
/// The denominator `ν - 1 - ψ1(q)` is evaluated as the sum of nonnegative
/// pieces `ν_α + (1 - e^{-ηa}) B + e^{-ηa} F(q)` where
/// `B = ν_a - 1 = (2/√a) φ(√a/2) - Φ(-√a/2)` and
/// `F(q) = (2/√a) φ(u) - Φ(u)`, `u = (q - a/2)/√a`, is the tail
/// `∫_{-∞}^q e^y g(y) dy` up to the factor `e^{-ηa}`.
pub fn rule_value_parts(q: f64, p: &FormulaParams) -> Result<(f64, f64)> {
    p.require_physical_drift()?;
    let r = excursion_rates(p)?;
    let s = psi(q, p)?;
    let sa = libm::sqrt(p.a);

    let numerator = r.nu_alpha + p.killed() * r.nu_a + s.psi0;

    let b = 2.0 / sa * normal_pdf(0.5 * sa) - normal_cdf(-0.5 * sa);
    let u = (q - 0.5 * p.a) / sa;
    let tail = 2.0 / sa * normal_pdf(u) - normal_cdf(u);
    let denominator = r.nu_alpha + p.killed() * b + p.survival() * tail;
    Ok((numerator, denominator))
}

/// Value `K(q)` of the renewal rule `R(q)`.
pub fn rule_value(q: f64, p: &FormulaParams) -> Result<f64> {
    let (num, den) = rule_value_parts(q, p)?;
    if !(den > 0.0) || !den.is_finite() {
        return Err(Error::DegenerateDenominator {
            context: "nu - 1 - psi1(q)",
            value: den,
        });
    }
    Ok(num / den)
}

/// `sign(dK/dq)` up to a positive factor: `D(q) - N(q) e^q`.
///
/// Its derivative is `-N(q) e^q < 0`, so it has exactly one root on `q < 0`,
/// which is the maximiser of `K`. At the root `K = e^{-q}`.
fn stationarity_residual(q: f64, p: &FormulaParams) -> Result<f64> {
    let (num, den) = rule_value_parts(q, p)?;
    Ok(den - num * libm::exp(q))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSolution {
    pub q_star: f64,
    pub k_star: f64,
}

/// Threshold `q*(η)` maximising `K` over `q < 0`.
///
/// A log-spaced grid of 2000 points on `[-8, -1e-6]` brackets the sign change
/// of the stationarity residual, then bisection narrows the bracket to
/// ~1e-13. Roots outside the grid are reported, not extrapolated.
pub fn optimal_threshold(p: &FormulaParams) -> Result<ThresholdSolution> {
    p.require_physical_drift()?;
    if !(p.eta > 0.0) {
        return Err(Error::invalid("eta", "optimal threshold needs eta > 0"));
    }
    p.validate()?;

    let ratio = Q_SEARCH_MAX / Q_SEARCH_MIN;
    let grid = |i: usize| Q_SEARCH_MIN * libm::pow(ratio, i as f64 / (Q_GRID_POINTS - 1) as f64);

    let mut lo = grid(0);
    if stationarity_residual(lo, p)? <= 0.0 {
        return Err(Error::NoConvergence {
            a: p.a,
            eta: p.eta,
            reason: "maximiser lies below q = -8",
        });
    }
    let mut hi = f64::NAN;
    for i in 1..Q_GRID_POINTS {
        let q = grid(i);
        if stationarity_residual(q, p)? <= 0.0 {
            hi = q;
            break;
        }
        lo = q;
    }
    if hi.is_nan() {
        return Err(Error::NoConvergence {
            a: p.a,
            eta: p.eta,
            reason: "maximiser lies above q = -1e-6",
        });
    }

    for _ in 0..200 {
        if hi - lo <= 1e-13 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if stationarity_residual(mid, p)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let q_star = 0.5 * (lo + hi);
    let k_star = rule_value(q_star, p)?;
    if !((k_star - libm::exp(-q_star)).abs() <= 1e-6) {
        return Err(Error::NoConvergence {
            a: p.a,
            eta: p.eta,
            reason: "fixed point K(q*) = exp(-q*) not satisfied",
        });
    }
    Ok(ThresholdSolution { q_star, k_star })
}

/// `λ(a) = E[exp(max_{[0,a]} X)]` for `X_t = W_t - t/2`:
/// `(2 + a/2) Φ(√a/2) + √a φ(√a/2)`.
pub fn lambda_max(a: f64) -> Result<f64> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::invalid("a", "window length must be finite and > 0"));
    }
    let half_root = 0.5 * libm::sqrt(a);
    Ok((2.0 + 0.5 * a) * normal_cdf(half_root) + libm::sqrt(a) * normal_pdf(half_root))
}

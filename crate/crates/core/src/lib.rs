//! Value of foresight, equivalently the fixed-window lookback option.
//!
//! A seller who may look `a` time units into the future can beat the
//! optional-sampling value of 1. This crate computes that value three ways:
//!
//! * [`analytic`]: closed forms for the renewal rule `R(q)` on an exponential
//!   horizon, plus the optimal threshold `q*(η)`.
//! * [`bounds`]: a binned dynamic program on the ratio `Z/S` giving a policy
//!   lower bound and a dual-martingale upper bound.
//! * [`rules`]: finite-horizon simulators of the two explicit threshold rules.
//!
//! [`oracle`] holds exact tree dynamic programs and Monte Carlo estimators used
//! to cross-check the rest.
//!
//! The crate is `no_std` (with `alloc`). Anything that runs over many paths
//! takes a [`PathExecutor`]; [`Sequential`] is provided here and the companion
//! `foresight` crate supplies a thread-pool executor.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]
// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analytic;
pub mod bounds;
mod error;
pub mod exec;
pub mod oracle;
pub mod paths;
pub mod rng;
pub mod rules;
pub mod stats;

pub use error::{Error, Result};
pub use exec::{PathExecutor, Sequential};

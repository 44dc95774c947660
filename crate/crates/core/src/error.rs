use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },

    /// A denominator that the theory guarantees positive came out `<= 0`.
    #[error("degenerate denominator {value:e} in {context}")]
    DegenerateDenominator { context: &'static str, value: f64 },

    #[error("optimal threshold search failed for a = {a}, eta = {eta}: {reason}")]
    NoConvergence {
        a: f64,
        eta: f64,
        reason: &'static str,
    },

    /// Every pilot sample at this step fell into a single bin although the
    /// samples were not all equal.
    #[error("degenerate binning at step {step}: all pilot mass in one bin")]
    DegenerateBinning { step: usize },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: &'static str) -> Self {
        Error::InvalidParameter { name, reason }
    }

    /// True for failures caused by bad user input, as opposed to numerical
    /// degeneracy.
    pub fn is_invalid_input(&self) -> bool {
        matches!(self, Error::InvalidParameter { .. })
    }
}

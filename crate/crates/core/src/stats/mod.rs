//! Rate statistics: exact Poisson intervals, normal-approximation
//! intervals, mixture standard errors, percent reduction and the
//! interval-overlap significance rule.
//!
//! All rates are in claims per million miles (cpmm) and all exposures in
//! millions of miles (Mmi). Nothing here rounds; see [`round_half_up`]
//! for the display rule.

mod gamma;
mod interval;

pub use gamma::{inverse_regularized_lower_gamma, ln_gamma, regularized_lower_gamma};
pub use interval::{
    mixture_standard_error, normal_rate_ci, percent_reduction, poisson_exact_rate_ci, significance,
    Confidence, IntervalMethod, PercentReduction, RateEstimate, SignificanceVerdict,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("mixture weights sum to {sum}, expected 1 within 1e-9")]
    WeightSumInvalid { sum: f64 },
    #[error("baseline rate is zero")]
    BaselineZero,
    #[error("confidence levels differ ({0} vs {1})")]
    ConfidenceMismatch(f64, f64),
}

/// Half-up rounding to `decimals` places, for display only.
///
/// A `1e-9` nudge keeps values such as `0.125` from falling to the lower
/// neighbour through binary representation error.
pub fn round_half_up(value: f64, decimals: u32) -> f64 {
    let scale = 10_f64.powi(decimals as i32);
    let scaled = value * scale;
    let rounded = if scaled >= 0.0 {
        (scaled + 0.5 + 1e-9).floor()
    } else {
        -((-scaled) + 0.5 - 1e-9).floor()
    };
    rounded / scale
}

/// Formats a cpmm value the way reports print it: half-up, two decimals.
pub fn format_cpmm(value: f64) -> String {
    format!("{:.2}", round_half_up(value, 2))
}

//! Adversarial constructions behind the lower bounds, with numeric checks.

mod adversary;
mod concentration;
mod counterexample;
mod late_stop;
mod tv;

pub use adversary::{hide_signal, residual_adversary, start_index_for, AdversaryConditions, AdversaryResult};
pub use concentration::{lm_lower_threshold, lm_tail_experiment, lm_upper_threshold, TailReport};
pub use counterexample::{bias_gap_counterexample, smallest_feasible_dimension, CounterexampleReport};
pub use late_stop::{
    late_stop_check, monte_carlo_risk, ConstantRule, LateStopReport, ResidualRule, RiskEstimate, StoppingRule,
    ThresholdCoinRule,
};
pub use tv::{simplification_threshold, tv_bound, tv_numeric, TvBoundResult};

use crate::error::{Error, Result};

/// `log(delta^{-2}) / log(D) - p - 1/2`, the largest regularity a residual-based
/// rule can adapt to at this `(D, delta)`.
pub fn adaptation_ceiling(dimension: usize, delta: f64, p: f64) -> Result<f64> {
    if dimension <= 1 {
        return Err(Error::InvalidDimension(format!("adaptation ceiling needs D > 1, got {dimension}")));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta = {delta} must be > 0")));
    }
    Ok((delta * delta).recip().ln() / (dimension as f64).ln() - p - 0.5)
}

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimator::RiskProfile;
use crate::model::{make_polynomial_spectrum, NoiseModel, Signal};
use crate::oracles::Norm;
use crate::stopping::canonical_kappa;

/// A signal supported on the last coordinate for which the weak oracle stops a
/// full step before the strong one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub p: f64,
    pub dimension: usize,
    pub delta: f64,
    pub feasible: bool,
    /// `lambda_D^2 mu_D^2 / (delta^2 (D - 1))`; feasibility needs at most 1.
    pub weak_condition_ratio: f64,
    pub mu_d: Option<f64>,
    pub t_s: Option<f64>,
    pub t_w: Option<f64>,
    pub t_star: Option<f64>,
    /// `B_{t*}^2 / B_{t_s}^2`.
    pub bias_ratio: Option<f64>,
}

/// `4 lambda_D^2 (lambda_D^{-2} / 4 + sum_{i < D} lambda_i^{-2}) / (D - 1)` for `lambda_i = i^{-p}`.
fn weak_condition_ratio(p: f64, d: usize) -> f64 {
    if d < 2 {
        return f64::INFINITY;
    }
    let head: f64 = (1..d).map(|i| (i as f64).powf(2.0 * p)).sum();
    let lambda_d_sq = (d as f64).powf(-2.0 * p);
    (1.0 + 4.0 * lambda_d_sq * head) / (d - 1) as f64
}

/// Builds the instance with `lambda_i = i^{-p}`, `kappa = D delta^2` and
/// `mu = mu_D e_D`, `mu_D^2 = 4 V_{D - 3/4}`, so that `t_s = D - 3/4`.
pub fn bias_gap_counterexample(p: f64, dimension: usize, delta: f64) -> Result<CounterexampleReport> {
    let ratio = weak_condition_ratio(p, dimension);
    let mut report = CounterexampleReport {
        p,
        dimension,
        delta,
        feasible: false,
        weak_condition_ratio: ratio,
        mu_d: None,
        t_s: None,
        t_w: None,
        t_star: None,
        bias_ratio: None,
    };
    if !(p > 1.5) || ratio > 1.0 {
        return Ok(report);
    }
    let spectrum = make_polynomial_spectrum(dimension, p)?;
    let noise = NoiseModel::new(delta)?;
    let v_target: f64 = delta * delta * (spectrum.inverse_squares().iter().take(dimension - 1).sum::<f64>()
        + 0.25 * spectrum.inverse_squares()[dimension - 1]);
    let mu_d = (4.0 * v_target).sqrt();
    let mut coeffs = vec![0.0; dimension];
    coeffs[dimension - 1] = mu_d;
    let signal = Signal::new(coeffs);
    let prof = RiskProfile::new(&signal, &spectrum, &noise)?;
    let kappa = canonical_kappa(dimension, delta);
    let t_s = prof.balanced_continuous(0, Norm::Strong)?;
    let t_w = prof.balanced_continuous(0, Norm::Weak)?;
    let t_star = prof.oracle_proxy(kappa, 0)?;
    report.feasible = true;
    report.mu_d = Some(mu_d);
    report.t_s = Some(t_s);
    report.t_w = Some(t_w);
    report.t_star = Some(t_star);
    report.bias_ratio = Some(prof.strong_bias_sq(t_star) / prof.strong_bias_sq(t_s));
    Ok(report)
}

/// Smallest `D <= max_dimension` for which the construction is feasible.
pub fn smallest_feasible_dimension(p: f64, max_dimension: usize) -> Option<usize> {
    if !(p > 1.5) {
        return None;
    }
    (2..=max_dimension).find(|&d| weak_condition_ratio(p, d) <= 1.0)
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::estimator::{strong_error_sq, RiskProfile};
use crate::model::{simulate_with_rng, NoiseModel, Observation, Signal, Spectrum};
use crate::numeric::mean_and_se;
use crate::rng;
use crate::stopping::{early_stop, ObservationStream};

/// Any data-dependent truncation index.
pub trait StoppingRule: Sync {
    fn stop(&self, obs: &Observation) -> usize;
}

/// `tau = m` regardless of the data.
#[derive(Debug, Clone, Copy)]
pub struct ConstantRule(pub usize);

impl StoppingRule for ConstantRule {
    fn stop(&self, obs: &Observation) -> usize {
        self.0.min(obs.len())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ResidualRule {
    pub kappa: f64,
    pub m0: usize,
}

impl StoppingRule for ResidualRule {
    fn stop(&self, obs: &Observation) -> usize {
        early_stop(&mut ObservationStream::new(obs), self.kappa, self.m0)
            .map(|o| o.tau)
            .unwrap_or(obs.len())
    }
}

/// `high` if `Y_1 >= 0`, `low` otherwise.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdCoinRule {
    pub low: usize,
    pub high: usize,
}

impl StoppingRule for ThresholdCoinRule {
    fn stop(&self, obs: &Observation) -> usize {
        if obs.y().first().is_some_and(|&y| y >= 0.0) {
            self.high.min(obs.len())
        } else {
            self.low.min(obs.len())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub risk_sq: f64,
    pub risk_se: f64,
    pub taus: Vec<usize>,
}

/// Monte Carlo estimate of `E ||mu_hat^(tau) - mu||^2` with per-replication streams.
pub fn monte_carlo_risk<R: StoppingRule + ?Sized>(
    rule: &R,
    signal: &Signal,
    spectrum: &Spectrum,
    noise: &NoiseModel,
    replications: usize,
    seed: u64,
) -> Result<RiskEstimate> {
    check_len(spectrum.len(), signal.len())?;
    if replications == 0 {
        return Err(Error::InvalidParameter("need at least one replication".into()));
    }
    let runs = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rng::split(seed, rep as u64);
            let obs = simulate_with_rng(signal, spectrum, noise, &mut rng)?;
            let tau = rule.stop(&obs);
            Ok((strong_error_sq(&obs, spectrum, signal, tau)?, tau))
        })
        .collect::<Result<Vec<_>>>()?;
    let errs: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let (risk_sq, risk_se) = mean_and_se(&errs);
    Ok(RiskEstimate { risk_sq, risk_se, taus: runs.into_iter().map(|r| r.1).collect() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LateStopReport {
    pub m: usize,
    pub v_m: f64,
    pub risk_sq: f64,
    pub risk_se: f64,
    /// `V_m >= 200 R^2` with the Monte Carlo risk.
    pub premise: bool,
    pub prob_tau_ge_m: f64,
    pub prob_se: f64,
    /// `P(tau >= m) <= 0.9 + 3 SE`; `None` when the premise fails.
    pub conclusion: Option<bool>,
    pub replications: usize,
}

/// Checks `V_m >= 200 R(mu, tau)^2  =>  P(tau >= m) <= 0.9` by simulation.
pub fn late_stop_check<R: StoppingRule + ?Sized>(
    rule: &R,
    signal: &Signal,
    spectrum: &Spectrum,
    noise: &NoiseModel,
    m: usize,
    replications: usize,
    seed: u64,
) -> Result<LateStopReport> {
    if m == 0 || m > spectrum.len() {
        return Err(Error::InvalidParameter(format!("m = {m} must lie in 1..={}", spectrum.len())));
    }
    let est = monte_carlo_risk(rule, signal, spectrum, noise, replications, seed)?;
    let v_m = RiskProfile::new(signal, spectrum, noise)?.strong_variance_at(m);
    let n = replications as f64;
    let prob = est.taus.iter().filter(|&&t| t >= m).count() as f64 / n;
    let prob_se = (prob * (1.0 - prob) / n).sqrt();
    let premise = v_m >= 200.0 * est.risk_sq;
    Ok(LateStopReport {
        m,
        v_m,
        risk_sq: est.risk_sq,
        risk_se: est.risk_se,
        premise,
        prob_tau_ge_m: prob,
        prob_se,
        conclusion: premise.then_some(prob <= 0.9 + 3.0 * prob_se),
        replications,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_polynomial_spectrum;

    #[test]
    fn constant_rules() {
        let d = 50;
        let spec = make_polynomial_spectrum(d, 0.5).unwrap();
        let noise = NoiseModel::new(0.1).unwrap();
        let mu = Signal::new(vec![0.5; d]);
        let zero = late_stop_check(&ConstantRule(0), &mu, &spec, &noise, 3, 200, 1).unwrap();
        assert_eq!(zero.prob_tau_ge_m, 0.0);
        assert!(zero.conclusion.unwrap_or(true));
        let full = late_stop_check(&ConstantRule(d), &mu, &spec, &noise, 3, 200, 1).unwrap();
        assert!(!full.premise);
        assert_eq!(full.conclusion, None);
    }

    #[test]
    fn risk_of_constant_rule_is_bias_plus_variance() {
        let d = 30;
        let spec = make_polynomial_spectrum(d, 0.5).unwrap();
        let noise = NoiseModel::new(0.2).unwrap();
        let mu = Signal::new((1..=d).map(|i| 1.0 / i as f64).collect());
        let prof = RiskProfile::new(&mu, &spec, &noise).unwrap();
        let est = monte_carlo_risk(&ConstantRule(7), &mu, &spec, &noise, 4000, 5).unwrap();
        let want = prof.strong_bias_at(7) + prof.strong_variance_at(7);
        assert!((est.risk_sq - want).abs() <= 4.0 * est.risk_se);
    }
}

//! Residual-based early stopping, AIC selection and the two-step estimator.
//!
//! The stopping rule only ever sees `||Y||^2` up front and then the
//! coefficients `Y_1, Y_2, ...` one at a time. It halts at the first
//! `m >= m0` with `R_m^2 = ||Y||^2 - sum_{i <= m} Y_i^2 <= kappa`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{check_len, Error, Result};
use crate::estimator::{estimate_at, EstimateVector, TruncationIndex};
use crate::model::{NoiseModel, Observation, Spectrum};
use crate::numeric::CompensatedSum;
use crate::oracles::Norm;

/// How the start index `m0` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum M0Mode {
    Explicit { m0: usize },
    #[default]
    Zero,
    /// `floor(q_level sqrt(2D)) + 1` with `q_level` the standard normal quantile.
    NormalQuantile { level: f64 },
    /// `floor(128 log(D) sqrt(D)) + 1`, clamped to `D`.
    #[serde(rename = "theory")]
    Theory128LogD,
}

impl M0Mode {
    pub fn resolve(self, dimension: usize) -> Result<usize> {
        let d = dimension as f64;
        let m0 = match self {
            M0Mode::Explicit { m0 } => {
                if m0 > dimension {
                    return Err(Error::InvalidParameter(format!("m0 = {m0} exceeds D = {dimension}")));
                }
                m0
            }
            M0Mode::Zero => 0,
            M0Mode::NormalQuantile { level } => {
                if !(level > 0.0 && level < 1.0) {
                    return Err(Error::InvalidParameter(format!("quantile level {level} must lie in (0, 1)")));
                }
                let q = Normal::standard().inverse_cdf(level);
                ((q * (2.0 * d).sqrt()).floor().max(-1.0) + 1.0) as usize
            }
            M0Mode::Theory128LogD => (128.0 * d.ln() * d.sqrt()).floor() as usize + 1,
        };
        Ok(m0.min(dimension))
    }
}

/// Threshold rule for `kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum KappaRule {
    /// `D delta^2`.
    #[default]
    Canonical,
    Value { kappa: f64 },
    /// `D delta^2 + c sqrt(D) delta^2`.
    Drift { c: f64 },
}

impl KappaRule {
    pub fn resolve(self, dimension: usize, delta: f64) -> Result<f64> {
        let kappa = match self {
            KappaRule::Canonical => canonical_kappa(dimension, delta),
            KappaRule::Value { kappa } => kappa,
            KappaRule::Drift { c } => drift_kappa(dimension, delta, c),
        };
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("kappa = {kappa} must be finite and >= 0")));
        }
        Ok(kappa)
    }
}

pub fn canonical_kappa(dimension: usize, delta: f64) -> f64 {
    dimension as f64 * (delta * delta)
}

pub fn drift_kappa(dimension: usize, delta: f64, c: f64) -> f64 {
    let d = dimension as f64;
    (d + c * d.sqrt()) * (delta * delta)
}

/// Resolved stopping parameters for one dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingConfig {
    pub kappa: f64,
    pub m0: usize,
    pub m0_mode: M0Mode,
    /// Norm of the AIC fallback used by the two-step estimator.
    #[serde(default = "default_norm")]
    pub aic_norm: Norm,
    /// Multiplier on the AIC penalty constant 2.
    #[serde(default = "default_penalty")]
    pub aic_penalty: f64,
}

fn default_norm() -> Norm {
    Norm::Strong
}

fn default_penalty() -> f64 {
    1.0
}

impl StoppingConfig {
    pub fn new(kappa: f64, m0_mode: M0Mode, dimension: usize) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("kappa = {kappa} must be finite and >= 0")));
        }
        Ok(Self {
            kappa,
            m0: m0_mode.resolve(dimension)?,
            m0_mode,
            aic_norm: Norm::Strong,
            aic_penalty: 1.0,
        })
    }

    /// `kappa = D delta^2`, `m0 = 0`.
    pub fn canonical(dimension: usize, delta: f64) -> Self {
        Self {
            kappa: canonical_kappa(dimension, delta),
            m0: 0,
            m0_mode: M0Mode::Zero,
            aic_norm: Norm::Strong,
            aic_penalty: 1.0,
        }
    }

    pub fn with_aic(mut self, norm: Norm, penalty: f64) -> Self {
        self.aic_norm = norm;
        self.aic_penalty = penalty;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopOutcome {
    pub tau: usize,
    pub rho: Option<usize>,
    pub coefficients_consumed: usize,
    pub immediate_stop: bool,
}

/// Sequential source of observed coefficients with a known total energy.
pub trait CoefficientStream {
    fn dimension(&self) -> usize;
    /// `||Y||^2`, available before any coefficient is read.
    fn total_norm_sq(&self) -> f64;
    /// The next `(index, Y_index)` pair, 1-based.
    fn next_coefficient(&mut self) -> Option<(usize, f64)>;
}

/// Streams the coefficients of an in-memory observation in order.
#[derive(Debug, Clone)]
pub struct ObservationStream<'a> {
    obs: &'a Observation,
    pos: usize,
}

impl<'a> ObservationStream<'a> {
    pub fn new(obs: &'a Observation) -> Self {
        Self { obs, pos: 0 }
    }

    pub fn consumed(&self) -> usize {
        self.pos
    }
}

impl CoefficientStream for ObservationStream<'_> {
    fn dimension(&self) -> usize {
        self.obs.len()
    }

    fn total_norm_sq(&self) -> f64 {
        self.obs.y_norm_sq()
    }

    fn next_coefficient(&mut self) -> Option<(usize, f64)> {
        let y = *self.obs.y().get(self.pos)?;
        self.pos += 1;
        Some((self.pos, y))
    }
}

/// Push-driven state of the stopping rule.
#[derive(Debug, Clone)]
pub struct ResidualStopper {
    kappa: f64,
    m0: usize,
    dimension: usize,
    residual: CompensatedSum,
    m: usize,
}

impl ResidualStopper {
    pub fn new(total_norm_sq: f64, dimension: usize, kappa: f64, m0: usize) -> Self {
        Self {
            kappa,
            m0: m0.min(dimension),
            dimension,
            residual: CompensatedSum::new(total_norm_sq),
            m: 0,
        }
    }

    /// Number of coefficients absorbed so far.
    pub fn position(&self) -> usize {
        self.m
    }

    /// Current `R_m^2`.
    pub fn residual_sq(&self) -> f64 {
        self.residual.value()
    }

    pub fn should_stop(&self) -> bool {
        self.m == self.dimension || (self.m >= self.m0 && self.residual.value() <= self.kappa)
    }

    pub fn push(&mut self, y: f64) {
        debug_assert!(self.m < self.dimension);
        self.residual.add(-(y * y));
        self.m += 1;
    }

    pub fn outcome(&self) -> StopOutcome {
        StopOutcome {
            tau: self.m,
            rho: None,
            coefficients_consumed: self.m,
            immediate_stop: self.m == self.m0,
        }
    }
}

/// Runs the stopping rule on a coefficient stream, reading exactly `tau` coefficients.
pub fn early_stop<S: CoefficientStream + ?Sized>(stream: &mut S, kappa: f64, m0: usize) -> Result<StopOutcome> {
    let d = stream.dimension();
    let mut stopper = ResidualStopper::new(stream.total_norm_sq(), d, kappa, m0);
    while !stopper.should_stop() {
        match stream.next_coefficient() {
            Some((_, y)) => stopper.push(y),
            None => {
                return Err(Error::TruncatedStream { read: stopper.position(), expected: d });
            }
        }
    }
    Ok(stopper.outcome())
}

pub fn early_stop_observation(obs: &Observation, config: &StoppingConfig) -> Result<StopOutcome> {
    early_stop(&mut ObservationStream::new(obs), config.kappa, config.m0)
}

/// AIC choice over `{0..y.len()}` from the given leading coefficients.
pub fn aic_select_prefix(y: &[f64], lambda: &[f64], delta: f64, norm: Norm, penalty: f64) -> Result<usize> {
    if lambda.len() < y.len() {
        return Err(Error::DimensionMismatch { expected: y.len(), found: lambda.len() });
    }
    let pen = 2.0 * penalty * delta * delta;
    let mut crit = CompensatedSum::default();
    let mut best = (0, 0.0);
    for (m, (yi, li)) in y.iter().zip(lambda).enumerate() {
        let weight = match norm {
            Norm::Strong => 1.0 / (li * li),
            Norm::Weak => 1.0,
        };
        crit.add(weight * (pen - yi * yi));
        if crit.value() < best.1 {
            best = (m + 1, crit.value());
        }
    }
    Ok(best.0)
}

pub fn aic_select(
    obs: &Observation,
    spectrum: &Spectrum,
    noise: &NoiseModel,
    m0: usize,
    norm: Norm,
    penalty: f64,
) -> Result<usize> {
    check_len(spectrum.len(), obs.len())?;
    if m0 > obs.len() {
        return Err(Error::InvalidParameter(format!("m0 = {m0} exceeds D = {}", obs.len())));
    }
    aic_select_prefix(&obs.y()[..m0], &spectrum.values()[..m0], noise.delta, norm, penalty)
}

/// `rho = tau` if `tau > m0`, otherwise the AIC choice on `{0..m0}`.
pub fn two_step(
    obs: &Observation,
    spectrum: &Spectrum,
    noise: &NoiseModel,
    config: &StoppingConfig,
) -> Result<(StopOutcome, EstimateVector)> {
    check_len(spectrum.len(), obs.len())?;
    let mut outcome = early_stop_observation(obs, config)?;
    let rho = if outcome.tau > config.m0 {
        outcome.tau
    } else {
        aic_select(obs, spectrum, noise, config.m0, config.aic_norm, config.aic_penalty)?
    };
    outcome.rho = Some(rho);
    let estimate = estimate_at(obs, spectrum, TruncationIndex::integer(rho))?;
    Ok((outcome, estimate))
}

/// Plug-in noise level `sqrt(R_{m1}^2 / (D - m1))`.
pub fn estimate_noise_level(obs: &Observation, m1: usize) -> Result<f64> {
    let d = obs.len();
    if m1 >= d {
        return Err(Error::InvalidParameter(format!("burn-in m1 = {m1} must be below D = {d}")));
    }
    let mut r = CompensatedSum::default();
    for y in &obs.y()[m1..] {
        r.add(y * y);
    }
    Ok((r.value() / (d - m1) as f64).sqrt())
}

//! Spectral cut-off estimators on a continuous truncation scale.
//!
//! For real `t in [0, D]` write `t = k + f` with `k = floor(t)`. The estimator
//! keeps coordinates `1..=k` in full and coordinate `k + 1` with amplitude
//! weight `sqrt(f)`:
//!
//! ```text
//! mu_hat_i = (1(i <= k) + sqrt(f) 1(i = k + 1)) Y_i / lambda_i
//! ```
//!
//! so the weak variance `t delta^2` is linear in `t`. Residuals and biases
//! carry the complementary weight `(1 - sqrt(f))^2` on coordinate `k + 1`,
//! while the strong variance and the stochastic error carry the linear
//! weight `f`. At integer `t` all of these reduce to the usual truncated
//! quantities.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::model::{NoiseModel, Observation, Signal, Spectrum};
use crate::numeric::{compensated_sum, prefix_sums, suffix_sums};

/// A truncation level `t in [0, D]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TruncationIndex(f64);

impl TruncationIndex {
    pub fn new(t: f64, dimension: usize) -> Result<Self> {
        if !(t >= 0.0 && t <= dimension as f64) {
            return Err(Error::TruncationOutOfRange { t, dimension });
        }
        Ok(Self(t))
    }

    pub fn integer(m: usize) -> Self {
        Self(m as f64)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `(floor(t), t - floor(t))`, with the fractional part forced to zero at `t = D`.
    pub fn split(self, dimension: usize) -> (usize, f64) {
        split(self.0, dimension)
    }

    fn checked(self, dimension: usize) -> Result<Self> {
        Self::new(self.0, dimension)
    }
}

pub(crate) fn split(t: f64, dimension: usize) -> (usize, f64) {
    let t = t.clamp(0.0, dimension as f64);
    let k = t.floor() as usize;
    if k >= dimension {
        (dimension, 0.0)
    } else {
        (k, t - k as f64)
    }
}

/// Tail functional `(1 - sqrt(f))^2 a_{k+1} + sum_{i >= k+2} a_i`.
#[derive(Debug, Clone)]
pub(crate) struct InterpolatedTail {
    terms: Vec<f64>,
    suffix: Vec<f64>,
}

impl InterpolatedTail {
    pub(crate) fn new(terms: Vec<f64>) -> Self {
        let suffix = suffix_sums(&terms);
        Self { terms, suffix }
    }

    pub(crate) fn eval(&self, t: f64) -> f64 {
        let (k, f) = split(t, self.terms.len());
        if k == self.terms.len() {
            return 0.0;
        }
        let w = 1.0 - f.sqrt();
        w * w * self.terms[k] + self.suffix[k + 1]
    }

    /// Value at integer `m` (sum over coordinates `m+1..=D`).
    pub(crate) fn at(&self, m: usize) -> f64 {
        self.suffix[m.min(self.terms.len())]
    }

    pub(crate) fn terms(&self) -> &[f64] {
        &self.terms
    }
}

/// Prefix functional `sum_{i <= k} a_i + f a_{k+1}`.
#[derive(Debug, Clone)]
pub(crate) struct InterpolatedPrefix {
    terms: Vec<f64>,
    prefix: Vec<f64>,
}

impl InterpolatedPrefix {
    pub(crate) fn new(terms: Vec<f64>) -> Self {
        let prefix = prefix_sums(&terms);
        Self { terms, prefix }
    }

    pub(crate) fn eval(&self, t: f64) -> f64 {
        let (k, f) = split(t, self.terms.len());
        if k == self.terms.len() {
            return self.prefix[k];
        }
        self.prefix[k] + f * self.terms[k]
    }

    pub(crate) fn at(&self, m: usize) -> f64 {
        self.prefix[m.min(self.terms.len())]
    }

    pub(crate) fn terms(&self) -> &[f64] {
        &self.terms
    }
}

/// Truncated-SVD estimate together with the level it was computed at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateVector {
    pub mu_hat: Vec<f64>,
    pub t: TruncationIndex,
}

pub fn estimate_at(obs: &Observation, spectrum: &Spectrum, t: TruncationIndex) -> Result<EstimateVector> {
    check_len(spectrum.len(), obs.len())?;
    let d = spectrum.len();
    let t = t.checked(d)?;
    let (k, f) = t.split(d);
    let mut mu_hat = vec![0.0; d];
    for (i, slot) in mu_hat.iter_mut().enumerate().take(k) {
        *slot = obs.y()[i] / spectrum.values()[i];
    }
    if k < d && f > 0.0 {
        mu_hat[k] = f.sqrt() * obs.y()[k] / spectrum.values()[k];
    }
    Ok(EstimateVector { mu_hat, t })
}

pub fn residual_sq(obs: &Observation, t: TruncationIndex) -> Result<f64> {
    let t = t.checked(obs.len())?;
    let (k, f) = t.split(obs.len());
    let y = obs.y();
    if k == y.len() {
        return Ok(0.0);
    }
    let w = 1.0 - f.sqrt();
    Ok(w * w * y[k] * y[k] + compensated_sum(y[k + 1..].iter().map(|v| v * v)))
}

pub fn strong_bias_sq(signal: &Signal, t: TruncationIndex) -> Result<f64> {
    let t = t.checked(signal.len())?;
    Ok(InterpolatedTail::new(signal.coefficients().iter().map(|m| m * m).collect()).eval(t.value()))
}

pub fn weak_bias_sq(signal: &Signal, spectrum: &Spectrum, t: TruncationIndex) -> Result<f64> {
    check_len(spectrum.len(), signal.len())?;
    let t = t.checked(signal.len())?;
    Ok(InterpolatedTail::new(weak_terms(signal, spectrum)).eval(t.value()))
}

pub fn strong_variance(spectrum: &Spectrum, noise: &NoiseModel, t: TruncationIndex) -> Result<f64> {
    let t = t.checked(spectrum.len())?;
    Ok(noise.variance() * InterpolatedPrefix::new(spectrum.inverse_squares()).eval(t.value()))
}

/// `t delta^2`.
pub fn weak_variance(noise: &NoiseModel, t: TruncationIndex) -> f64 {
    t.value() * noise.variance()
}

/// `S_t = delta^2 (sum_{i <= k} lambda_i^{-2} eps_i^2 + f lambda_{k+1}^{-2} eps_{k+1}^2)`.
pub fn stochastic_error(obs: &Observation, spectrum: &Spectrum, t: TruncationIndex) -> Result<f64> {
    check_len(spectrum.len(), obs.len())?;
    let t = t.checked(spectrum.len())?;
    let eps = obs.noise().ok_or(Error::MissingNoise)?;
    let terms: Vec<f64> = eps
        .iter()
        .zip(spectrum.values())
        .map(|(e, l)| e * e / (l * l))
        .collect();
    Ok(obs.delta() * obs.delta() * InterpolatedPrefix::new(terms).eval(t.value()))
}

/// `E[R_t^2] = B_{t,lambda}^2 + ((1 - sqrt(f))^2 + D - k - 1) delta^2`.
pub fn expected_residual(signal: &Signal, spectrum: &Spectrum, noise: &NoiseModel, t: TruncationIndex) -> Result<f64> {
    check_len(spectrum.len(), signal.len())?;
    let t = t.checked(spectrum.len())?;
    Ok(RiskProfile::new(signal, spectrum, noise)?.expected_residual(t.value()))
}

fn weak_terms(signal: &Signal, spectrum: &Spectrum) -> Vec<f64> {
    signal
        .coefficients()
        .iter()
        .zip(spectrum.values())
        .map(|(m, l)| (l * m) * (l * m))
        .collect()
}

/// Deterministic bias and variance curves of one `(signal, spectrum, noise)`
/// triple, built once in `O(D)` and evaluated in `O(1)` per level.
///
/// Methods taking `t: f64` clamp it to `[0, D]`.
#[derive(Debug, Clone)]
pub struct RiskProfile {
    dimension: usize,
    delta_sq: f64,
    strong_bias: InterpolatedTail,
    weak_bias: InterpolatedTail,
    inv_sq: InterpolatedPrefix,
}

impl RiskProfile {
    pub fn new(signal: &Signal, spectrum: &Spectrum, noise: &NoiseModel) -> Result<Self> {
        check_len(spectrum.len(), signal.len())?;
        Ok(Self {
            dimension: spectrum.len(),
            delta_sq: noise.variance(),
            strong_bias: InterpolatedTail::new(signal.coefficients().iter().map(|m| m * m).collect()),
            weak_bias: InterpolatedTail::new(weak_terms(signal, spectrum)),
            inv_sq: InterpolatedPrefix::new(spectrum.inverse_squares()),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn delta_sq(&self) -> f64 {
        self.delta_sq
    }

    pub fn strong_bias_sq(&self, t: f64) -> f64 {
        self.strong_bias.eval(t)
    }

    pub fn weak_bias_sq(&self, t: f64) -> f64 {
        self.weak_bias.eval(t)
    }

    pub fn strong_variance(&self, t: f64) -> f64 {
        self.delta_sq * self.inv_sq.eval(t)
    }

    pub fn weak_variance(&self, t: f64) -> f64 {
        self.delta_sq * t.clamp(0.0, self.dimension as f64)
    }

    /// `B_t^2 + V_t`, the strong-norm risk of the interpolated estimator.
    pub fn strong_risk(&self, t: f64) -> f64 {
        self.strong_bias_sq(t) + self.strong_variance(t)
    }

    pub fn weak_risk(&self, t: f64) -> f64 {
        self.weak_bias_sq(t) + self.weak_variance(t)
    }

    pub fn expected_residual(&self, t: f64) -> f64 {
        let (k, f) = split(t, self.dimension);
        if k == self.dimension {
            return 0.0;
        }
        let w = 1.0 - f.sqrt();
        self.weak_bias_sq(t) + (w * w + (self.dimension - k - 1) as f64) * self.delta_sq
    }

    /// `lambda_i^{-2}` for 1-based `i`, clamped to `1..=D`.
    pub fn inverse_sq_at(&self, i: usize) -> f64 {
        self.inv_sq.terms()[i.clamp(1, self.dimension) - 1]
    }

    /// `|lambda_i mu_i|^2` terms, 0-based.
    pub(crate) fn weak_terms(&self) -> &[f64] {
        self.weak_bias.terms()
    }

    /// Integer-level strong bias `sum_{i > m} mu_i^2`.
    pub fn strong_bias_at(&self, m: usize) -> f64 {
        self.strong_bias.at(m)
    }

    pub fn weak_bias_at(&self, m: usize) -> f64 {
        self.weak_bias.at(m)
    }

    pub fn strong_variance_at(&self, m: usize) -> f64 {
        self.delta_sq * self.inv_sq.at(m)
    }
}

/// Squared strong-norm error `||mu_hat^(m) - mu||^2` at an integer level.
pub fn strong_error_sq(obs: &Observation, spectrum: &Spectrum, signal: &Signal, m: usize) -> Result<f64> {
    check_len(spectrum.len(), obs.len())?;
    check_len(spectrum.len(), signal.len())?;
    let m = m.min(spectrum.len());
    let head = obs.y()[..m]
        .iter()
        .zip(&spectrum.values()[..m])
        .zip(&signal.coefficients()[..m])
        .map(|((y, l), mu)| (y / l - mu) * (y / l - mu));
    let tail = signal.coefficients()[m..].iter().map(|mu| mu * mu);
    Ok(compensated_sum(head.chain(tail)))
}

/// Squared weak-norm error `||mu_hat^(m) - mu||_lambda^2` at an integer level.
pub fn weak_error_sq(obs: &Observation, spectrum: &Spectrum, signal: &Signal, m: usize) -> Result<f64> {
    check_len(spectrum.len(), obs.len())?;
    check_len(spectrum.len(), signal.len())?;
    let m = m.min(spectrum.len());
    let head = obs.y()[..m]
        .iter()
        .zip(&spectrum.values()[..m])
        .zip(&signal.coefficients()[..m])
        .map(|((y, l), mu)| (y - l * mu) * (y - l * mu));
    let tail = spectrum.values()[m..]
        .iter()
        .zip(&signal.coefficients()[m..])
        .map(|(l, mu)| (l * mu) * (l * mu));
    Ok(compensated_sum(head.chain(tail)))
}

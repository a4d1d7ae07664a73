//! The discretized inverse problem in its singular-value form:
//! `Y_i = lambda_i * mu_i + delta * eps_i`, `i = 1..D`.
//!
//! Indices in the mathematical description are 1-based; every vector here is
//! stored 0-based, so coordinate `i` lives at position `i - 1`.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::numeric::compensated_sum;
use crate::rng::{self, NoiseKind};

/// Certificate that `C_A^{-1} i^{-p} <= lambda_i <= C_A i^{-p}` for all `i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayCertificate {
    pub p: f64,
    pub c_a: f64,
}

/// Non-increasing, strictly positive singular values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    values: Vec<f64>,
    certificate: Option<DecayCertificate>,
}

impl Spectrum {
    pub fn new(values: Vec<f64>, certificate: Option<DecayCertificate>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidDimension("spectrum must have at least one value".into()));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "singular value {} at index {} is not strictly positive",
                v,
                i + 1
            )));
        }
        if let Some(i) = values.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter(format!(
                "singular values increase between indices {} and {}",
                i + 1,
                i + 2
            )));
        }
        if let Some(cert) = certificate {
            if !(cert.p >= 0.0 && cert.c_a >= 1.0) {
                return Err(Error::InvalidParameter("decay certificate needs p >= 0, C_A >= 1".into()));
            }
            if !satisfies_decay(&values, cert.p, cert.c_a) {
                return Err(Error::InvalidParameter(format!(
                    "spectrum violates the decay bound with p = {}, C_A = {}",
                    cert.p, cert.c_a
                )));
            }
        }
        Ok(Self { values, certificate })
    }

    /// `lambda_i = i^{-p}`, certified with `(p, 1)`.
    pub fn polynomial(dimension: usize, p: f64) -> Result<Self> {
        make_polynomial_spectrum(dimension, p)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn certificate(&self) -> Option<DecayCertificate> {
        self.certificate
    }

    /// Whether the stored values satisfy the polynomial decay bound.
    pub fn satisfies_decay(&self, p: f64, c_a: f64) -> bool {
        satisfies_decay(&self.values, p, c_a)
    }

    /// `lambda_i^{-2}` for every coordinate.
    pub fn inverse_squares(&self) -> Vec<f64> {
        self.values.iter().map(|l| 1.0 / (l * l)).collect()
    }
}

fn satisfies_decay(values: &[f64], p: f64, c_a: f64) -> bool {
    const SLACK: f64 = 1e-12;
    values.iter().enumerate().all(|(k, &l)| {
        let base = ((k + 1) as f64).powf(-p);
        l >= base / c_a * (1.0 - SLACK) && l <= base * c_a * (1.0 + SLACK)
    })
}

pub fn make_polynomial_spectrum(dimension: usize, p: f64) -> Result<Spectrum> {
    if dimension == 0 {
        return Err(Error::InvalidDimension("D must be at least 1".into()));
    }
    if !(p >= 0.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("decay exponent p = {p} must be >= 0")));
    }
    let values = (1..=dimension).map(|i| (i as f64).powf(-p)).collect();
    Ok(Spectrum {
        values,
        certificate: Some(DecayCertificate { p, c_a: 1.0 }),
    })
}

/// Coefficients `mu_i` of the unknown signal in the singular basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Signal {
    coefficients: Vec<f64>,
}

impl Signal {
    pub fn new(coefficients: Vec<f64>) -> Self {
        Self { coefficients }
    }

    pub fn zeros(dimension: usize) -> Self {
        Self::new(vec![0.0; dimension])
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.coefficients
    }
}

impl From<Vec<f64>> for Signal {
    fn from(v: Vec<f64>) -> Self {
        Self::new(v)
    }
}

/// Noise level and the law of the standardized noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub delta: f64,
    #[serde(default)]
    pub kind: NoiseKind,
}

impl NoiseModel {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise level delta = {delta} must be > 0")));
        }
        Ok(Self { delta, kind: NoiseKind::Gaussian })
    }

    /// `delta = 0`; only meaningful for deterministic diagnostics.
    pub fn noiseless() -> Self {
        Self { delta: 0.0, kind: NoiseKind::Gaussian }
    }

    pub fn with_kind(mut self, kind: NoiseKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn variance(&self) -> f64 {
        self.delta * self.delta
    }
}

/// Observed coefficients together with `||Y||^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    y: Vec<f64>,
    y_norm_sq: f64,
    delta: f64,
    noise: Option<Vec<f64>>,
    seed: Option<u64>,
}

impl Observation {
    /// Wraps real data; no noise draw is retained.
    pub fn from_data(y: Vec<f64>, delta: f64) -> Self {
        let y_norm_sq = compensated_sum(y.iter().map(|v| v * v));
        Self { y, y_norm_sq, delta, noise: None, seed: None }
    }

    /// Builds `Y = lambda * mu + delta * eps` from a given noise vector and
    /// retains `eps`, exactly as a simulation would.
    pub fn from_noise(signal: &Signal, spectrum: &Spectrum, delta: f64, eps: Vec<f64>) -> Result<Self> {
        check_len(spectrum.len(), signal.len())?;
        check_len(spectrum.len(), eps.len())?;
        let y: Vec<f64> = spectrum
            .values()
            .iter()
            .zip(signal.coefficients())
            .zip(&eps)
            .map(|((l, m), e)| l * m + delta * e)
            .collect();
        let y_norm_sq = compensated_sum(y.iter().map(|v| v * v));
        Ok(Self { y, y_norm_sq, delta, noise: Some(eps), seed: None })
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn y_norm_sq(&self) -> f64 {
        self.y_norm_sq
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn noise(&self) -> Option<&[f64]> {
        self.noise.as_deref()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

pub fn simulate_observation(signal: &Signal, spectrum: &Spectrum, noise: &NoiseModel, seed: u64) -> Result<Observation> {
    let mut rng = rng::seeded(seed);
    let mut obs = simulate_with_rng(signal, spectrum, noise, &mut rng)?;
    obs.seed = Some(seed);
    Ok(obs)
}

/// Draws an observation from an existing generator (used by Monte Carlo loops
/// that own one stream per replication).
pub fn simulate_with_rng<R: Rng + ?Sized>(signal: &Signal, spectrum: &Spectrum, noise: &NoiseModel, rng: &mut R) -> Result<Observation> {
    check_len(spectrum.len(), signal.len())?;
    let mut eps = vec![0.0; spectrum.len()];
    noise.kind.fill(rng, &mut eps);
    Observation::from_noise(signal, spectrum, noise.delta, eps)
}

/// `sum lambda_i^2 v_i^2`.
pub fn weak_norm_sq(v: &[f64], spectrum: &Spectrum) -> Result<f64> {
    check_len(spectrum.len(), v.len())?;
    Ok(compensated_sum(spectrum.values().iter().zip(v).map(|(l, x)| (l * x) * (l * x))))
}

/// `(sum i^{2 beta} mu_i^2)^{1/2}`.
pub fn sobolev_radius(signal: &Signal, beta: f64) -> f64 {
    compensated_sum(
        signal
            .coefficients()
            .iter()
            .enumerate()
            .map(|(k, m)| ((k + 1) as f64).powf(2.0 * beta) * m * m),
    )
    .sqrt()
}

/// The ellipsoid `{mu : sum i^{2 beta} mu_i^2 <= R^2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevClass {
    pub beta: f64,
    pub radius: f64,
}

impl SobolevClass {
    pub fn new(beta: f64, radius: f64) -> Result<Self> {
        if !(beta >= 0.0) || !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!("Sobolev class needs beta >= 0, R > 0 (got {beta}, {radius})")));
        }
        Ok(Self { beta, radius })
    }

    pub fn contains(&self, signal: &Signal) -> bool {
        sobolev_radius(signal, self.beta) <= self.radius
    }
}

/// Parses a column of reals, one per line. Blank lines and `#` comments are skipped.
pub fn parse_column(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .enumerate()
        .map(|(n, l)| (n, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(n, l)| {
            l.parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: {e} ({l:?})", n + 1)))
        })
        .collect()
}

pub fn read_column_file(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    parse_column(&std::fs::read_to_string(path)?)
}

//! Parametric test signals and their calibration to target oracle indices.
//!
//! Two families are provided: polynomial decay `mu_i = c i^{-s}` and
//! exponential decay `mu_i = c e^{-s i}`. For a fixed shape `s` the weak
//! balanced oracle `t_w` is increasing in the amplitude `c`, and since
//! `B_{t,lambda}^2` scales with `c^2` the amplitude hitting a prescribed
//! `t_w` is available in closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::RiskProfile;
use crate::model::{NoiseModel, Signal, Spectrum};
use crate::oracles::Norm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalFamily {
    /// `c i^{-s}`.
    Power,
    /// `c e^{-s i}`.
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub family: SignalFamily,
    pub c: f64,
    pub s: f64,
}

impl SignalSpec {
    pub fn coefficients(&self, dimension: usize) -> Signal {
        Signal::new((1..=dimension).map(|i| self.c * shape(self.family, self.s, i)).collect())
    }
}

fn shape(family: SignalFamily, s: f64, i: usize) -> f64 {
    match family {
        SignalFamily::Power => (i as f64).powf(-s),
        SignalFamily::Exponential => (-s * i as f64).exp(),
    }
}

/// The three reference signals used by the efficiency study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibratedProfile {
    SuperSmooth,
    Smooth,
    Rough,
}

impl CalibratedProfile {
    pub const ALL: [CalibratedProfile; 3] =
        [CalibratedProfile::SuperSmooth, CalibratedProfile::Smooth, CalibratedProfile::Rough];

    /// Parameters frozen from [`calibrate`] at `D = 10000`, `delta = 0.01`, `lambda_i = i^{-1/2}`.
    pub fn spec(self) -> SignalSpec {
        match self {
            CalibratedProfile::SuperSmooth => SignalSpec { family: SignalFamily::Exponential, c: SUPER_SMOOTH.0, s: SUPER_SMOOTH.1 },
            CalibratedProfile::Smooth => SignalSpec { family: SignalFamily::Power, c: SMOOTH.0, s: SMOOTH.1 },
            CalibratedProfile::Rough => SignalSpec { family: SignalFamily::Power, c: ROUGH.0, s: ROUGH.1 },
        }
    }

    /// Target weak balanced oracle at the reference setting.
    pub fn target_t_w(self) -> f64 {
        match self {
            CalibratedProfile::SuperSmooth => 34.0,
            CalibratedProfile::Smooth => 316.0,
            CalibratedProfile::Rough => 1356.0,
        }
    }

    /// Reference classical strong-norm oracle; only approached, see [`calibrate`].
    pub fn target_classical(self) -> usize {
        match self {
            CalibratedProfile::SuperSmooth => 43,
            CalibratedProfile::Smooth => 504,
            CalibratedProfile::Rough => 1331,
        }
    }

    pub fn signal(self, dimension: usize) -> Signal {
        self.spec().coefficients(dimension)
    }

    pub fn name(self) -> &'static str {
        match self {
            CalibratedProfile::SuperSmooth => "super_smooth",
            CalibratedProfile::Smooth => "smooth",
            CalibratedProfile::Rough => "rough",
        }
    }
}

// (c, s)
const SUPER_SMOOTH: (f64, f64) = (3.4684978123199803, 0.09);
const SMOOTH: (f64, f64) = (6.210565608661061, 0.6);
const ROUGH: (f64, f64) = (5.410659529200071, 0.375);

/// Shape grid searched for each profile when re-deriving the frozen parameters.
pub fn shape_grid(profile: CalibratedProfile) -> Vec<f64> {
    match profile {
        CalibratedProfile::SuperSmooth => (1..=100).map(|k| 0.01 * k as f64).collect(),
        CalibratedProfile::Smooth => vec![0.6],
        CalibratedProfile::Rough => (0..=60).map(|k| 0.25 + 0.005 * k as f64).collect(),
    }
}

/// Amplitude `c` for which the weak balanced oracle (with `m0 = 0`) equals `target`.
pub fn amplitude_for(family: SignalFamily, s: f64, spectrum: &Spectrum, noise: &NoiseModel, target: f64) -> Result<f64> {
    let d = spectrum.len();
    if !(target > 0.0 && target < d as f64) {
        return Err(Error::InvalidParameter(format!("target t_w = {target} must lie in (0, {d})")));
    }
    let unit = SignalSpec { family, c: 1.0, s }.coefficients(d);
    let prof = RiskProfile::new(&unit, spectrum, &NoiseModel::new(1.0)?)?;
    let tail = prof.weak_bias_sq(target);
    if !(tail > 0.0) {
        return Err(Error::InvalidParameter(format!("shape s = {s} leaves no weak bias beyond {target}")));
    }
    Ok((target * noise.variance() / tail).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub spec: SignalSpec,
    pub t_w: f64,
    pub classical: usize,
}

/// For each shape on `s_grid`, fixes `c` so that `t_w = target_t_w`, and keeps
/// the shape whose classical oracle is closest to `target_classical`.
pub fn calibrate(
    family: SignalFamily,
    s_grid: &[f64],
    spectrum: &Spectrum,
    noise: &NoiseModel,
    target_t_w: f64,
    target_classical: usize,
) -> Result<Calibration> {
    let mut best: Option<(f64, Calibration)> = None;
    for &s in s_grid {
        let c = amplitude_for(family, s, spectrum, noise, target_t_w)?;
        let spec = SignalSpec { family, c, s };
        let prof = RiskProfile::new(&spec.coefficients(spectrum.len()), spectrum, noise)?;
        let t_w = prof.balanced_continuous(0, Norm::Weak)?;
        let classical = prof.classical_oracle(Norm::Strong).0;
        let miss = (classical as f64 - target_classical as f64).abs();
        if best.as_ref().is_none_or(|(m, _)| miss < *m) {
            best = Some((miss, Calibration { spec, t_w, classical }));
        }
    }
    best.map(|b| b.1).ok_or_else(|| Error::InvalidParameter("empty shape grid".into()))
}

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::estimator::RiskProfile;
use crate::model::{NoiseModel, Signal, Spectrum};

/// Premises (a)-(c) of the residual-filtration two-point bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversaryConditions {
    /// Signals agree on coordinates `1..=i0`.
    pub a: bool,
    /// `|B_{i0,lambda}^2(mu_bar) - B_{i0,lambda}^2(mu)| <= 0.05 sqrt(D - i0) / 2 * delta^2`.
    pub b: bool,
    /// `B_{i0,lambda}(mu) + B_{i0,lambda}(mu_bar) >= 5.25 delta`.
    pub c: bool,
}

impl AdversaryConditions {
    pub fn all(&self) -> bool {
        self.a && self.b && self.c
    }

    /// Evaluates the three premises from the two signals alone.
    pub fn evaluate(mu: &Signal, mu_bar: &Signal, spectrum: &Spectrum, noise: &NoiseModel, i0: usize) -> Result<Self> {
        check_len(spectrum.len(), mu.len())?;
        check_len(spectrum.len(), mu_bar.len())?;
        let d = spectrum.len();
        let base = RiskProfile::new(mu, spectrum, noise)?;
        let alt = RiskProfile::new(mu_bar, spectrum, noise)?;
        let a = mu.coefficients()[..i0.min(d)] == mu_bar.coefficients()[..i0.min(d)];
        let (wb, wa) = (base.weak_bias_at(i0), alt.weak_bias_at(i0));
        let ds = noise.variance();
        let b = (wa - wb).abs() <= 0.05 * ((d - i0.min(d)) as f64).sqrt() / 2.0 * ds;
        let c = wb.sqrt() + wa.sqrt() >= 5.25 * noise.delta;
        Ok(Self { a, b, c })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryResult {
    pub mu_bar: Signal,
    pub i0: usize,
    /// Present for the residual-filtration construction.
    pub conditions_met: Option<AdversaryConditions>,
    pub predicted_floor: f64,
}

fn check_i0(i0: usize, d: usize) -> Result<()> {
    if i0 == 0 || i0 >= d {
        return Err(Error::InvalidParameter(format!("i0 = {i0} must lie in 1..={}", d.saturating_sub(1))));
    }
    Ok(())
}

fn check_radius(alpha: f64, r_bar: f64) -> Result<()> {
    if !(alpha >= 0.0) || !(r_bar > 0.0) {
        return Err(Error::InvalidParameter(format!("need alpha >= 0 and R_bar > 0 (got {alpha}, {r_bar})")));
    }
    Ok(())
}

fn strong_tail(v: &[f64], i0: usize) -> f64 {
    v[i0..].iter().map(|x| x * x).sum()
}

/// Replaces coordinate `i0 + 1` by `R_bar (i0 + 1)^{-alpha} / 2`; the floor is
/// a third of the strong bias of the result at `i0`.
pub fn hide_signal(mu: &Signal, i0: usize, alpha: f64, r_bar: f64) -> Result<AdversaryResult> {
    check_i0(i0, mu.len())?;
    check_radius(alpha, r_bar)?;
    let mut v = mu.coefficients().to_vec();
    v[i0] = 0.5 * r_bar * ((i0 + 1) as f64).powf(-alpha);
    let predicted_floor = strong_tail(&v, i0) / 3.0;
    Ok(AdversaryResult { mu_bar: Signal::new(v), i0, conditions_met: None, predicted_floor })
}

/// Raises coordinate `i0 + 1` so that `mu_bar^2 = mu^2 + R_bar^2 (i0 + 1)^{-2 alpha} / 4`
/// and checks whether the weak-bias perturbation stays hidden in the residual.
pub fn residual_adversary(
    mu: &Signal,
    spectrum: &Spectrum,
    noise: &NoiseModel,
    i0: usize,
    alpha: f64,
    r_bar: f64,
) -> Result<AdversaryResult> {
    check_len(spectrum.len(), mu.len())?;
    check_i0(i0, mu.len())?;
    check_radius(alpha, r_bar)?;
    let mut v = mu.coefficients().to_vec();
    let bump = 0.25 * r_bar * r_bar * ((i0 + 1) as f64).powf(-2.0 * alpha);
    let sign = if v[i0] < 0.0 { -1.0 } else { 1.0 };
    v[i0] = sign * (v[i0] * v[i0] + bump).sqrt();
    let predicted_floor = 0.05 * strong_tail(&v, i0);
    let mu_bar = Signal::new(v);
    let conditions = AdversaryConditions::evaluate(mu, &mu_bar, spectrum, noise, i0)?;
    Ok(AdversaryResult { mu_bar, i0, conditions_met: Some(conditions), predicted_floor })
}

/// `ceil(400 C_mu m_s)`, or `None` if that index does not fit below `D`.
pub fn start_index_for(m_s: usize, c_mu: f64, dimension: usize) -> Option<usize> {
    let i0 = (400.0 * c_mu * m_s as f64).ceil() as usize;
    (i0 >= 1 && i0 < dimension).then_some(i0)
}

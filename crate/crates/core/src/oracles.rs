//! Oracle truncation levels and evaluated oracle-inequality bounds.
//!
//! Every oracle depends on the true signal and is therefore a benchmark, not
//! an estimator. Continuous oracles are first crossings of monotone curves in
//! `t`; they are located by a linear scan over integers followed by bisection
//! inside the bracketing unit interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::RiskProfile;
use crate::model::{NoiseModel, Signal, Spectrum};
use crate::numeric::bisect_first_true;

/// Which norm a risk or oracle refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    /// Prediction norm `||A v||`.
    Weak,
    /// Euclidean norm of the coefficients.
    Strong,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleSet {
    pub m_s: usize,
    pub t_w: f64,
    pub t_s: f64,
    pub t_star: f64,
    pub classical_discrete: usize,
    pub classical_risk: f64,
    pub kappa: f64,
    pub m0: usize,
}

/// Right-hand sides of the oracle inequalities for one instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryBounds {
    /// Discretisation error of the weak-norm proxy bound.
    pub delta_tau: f64,
    /// `sqrt(2D) delta^2 + 2 delta B_{t*,lambda} + delta_tau^2`.
    pub weak_proxy_rhs: f64,
    /// Bound on `E[(B_{tau,lambda}^2 - B_{t*,lambda}^2)_+]`.
    pub weak_dev_rhs: f64,
    /// Bound on `E[(B_tau^2 - B_{t_s}^2)_+]`.
    pub bias_rhs: f64,
    /// Dimensionless factor `r`; `E[(S_tau - S_{t*})_+] <= r delta^2`.
    pub r_v_tau: f64,
    /// `r_v_tau * delta^2`.
    pub stochastic_rhs: f64,
    /// Bound on `E[(S_tau - S_{t_s})_+]`.
    pub stochastic_balanced_rhs: f64,
    /// Additive term of the strong-norm balanced oracle inequality.
    pub strong_thm_rhs: f64,
    /// `|kappa - D delta^2| / (sqrt(D) delta^2)`.
    pub c_kappa: f64,
}

fn check_m0(m0: usize, d: usize) -> Result<()> {
    if m0 > d {
        return Err(Error::InvalidParameter(format!("m0 = {m0} exceeds D = {d}")));
    }
    Ok(())
}

/// First `t >= m0` where `excess(t) <= 0`, for `excess` non-increasing on `[m0, D]`.
fn first_crossing<F: Fn(f64) -> f64>(m0: usize, d: usize, excess: F) -> f64 {
    if excess(m0 as f64) <= 0.0 {
        return m0 as f64;
    }
    for m in m0 + 1..=d {
        if excess(m as f64) <= 0.0 {
            return bisect_first_true((m - 1) as f64, m as f64, |t| excess(t) <= 0.0);
        }
    }
    d as f64
}

impl RiskProfile {
    /// `m_s = min{m : V_m >= B_m^2}`.
    pub fn strongly_balanced_discrete(&self) -> usize {
        (0..=self.dimension())
            .find(|&m| self.strong_variance_at(m) >= self.strong_bias_at(m))
            .unwrap_or(self.dimension())
    }

    /// `t_w` (weak) or `t_s` (strong): first `t >= m0` with squared bias at most variance.
    pub fn balanced_continuous(&self, m0: usize, norm: Norm) -> Result<f64> {
        check_m0(m0, self.dimension())?;
        Ok(match norm {
            Norm::Weak => first_crossing(m0, self.dimension(), |t| self.weak_bias_sq(t) - self.weak_variance(t)),
            Norm::Strong => first_crossing(m0, self.dimension(), |t| self.strong_bias_sq(t) - self.strong_variance(t)),
        })
    }

    /// `t* = inf{t >= m0 : B_{t,lambda}^2 - t delta^2 <= kappa - D delta^2}`.
    pub fn oracle_proxy(&self, kappa: f64, m0: usize) -> Result<f64> {
        check_m0(m0, self.dimension())?;
        if !(kappa >= 0.0) {
            return Err(Error::InvalidParameter(format!("kappa = {kappa} must be >= 0")));
        }
        let level = kappa - self.dimension() as f64 * self.delta_sq();
        Ok(first_crossing(m0, self.dimension(), |t| {
            self.weak_bias_sq(t) - self.weak_variance(t) - level
        }))
    }

    /// Discrete minimiser of the risk over `{0..D}`, ties to the smallest index.
    pub fn classical_oracle(&self, norm: Norm) -> (usize, f64) {
        let risk = |m: usize| match norm {
            Norm::Strong => self.strong_bias_at(m) + self.strong_variance_at(m),
            Norm::Weak => self.weak_bias_at(m) + m as f64 * self.delta_sq(),
        };
        let mut best = (0, risk(0));
        for m in 1..=self.dimension() {
            let r = risk(m);
            if r < best.1 {
                best = (m, r);
            }
        }
        best
    }

    pub fn oracle_set(&self, kappa: f64, m0: usize) -> Result<OracleSet> {
        let (classical_discrete, classical_risk) = self.classical_oracle(Norm::Strong);
        Ok(OracleSet {
            m_s: self.strongly_balanced_discrete(),
            t_w: self.balanced_continuous(m0, Norm::Weak)?,
            t_s: self.balanced_continuous(m0, Norm::Strong)?,
            t_star: self.oracle_proxy(kappa, m0)?,
            classical_discrete,
            classical_risk,
            kappa,
            m0,
        })
    }

    pub fn theory_bounds(&self, kappa: f64, m0: usize) -> Result<TheoryBounds> {
        let oracles = self.oracle_set(kappa, m0)?;
        self.theory_bounds_for(&oracles)
    }

    /// Bounds for an already computed oracle set of this profile.
    pub fn theory_bounds_for(&self, o: &OracleSet) -> Result<TheoryBounds> {
        let d = self.dimension();
        let df = d as f64;
        let ds = self.delta_sq();
        if !(ds > 0.0) {
            return Err(Error::InvalidParameter("theory bounds need delta > 0".into()));
        }
        let delta = ds.sqrt();
        let sqrt_d = df.sqrt();
        let kappa_units = o.kappa / ds;
        let star_floor = (o.t_star.floor() as usize).min(d);

        let max_tail = self.weak_terms()[star_floor..]
            .iter()
            .fold(0.0f64, |acc, &w| acc.max(w.sqrt()));
        let delta_tau = max_tail + 4.0 * delta * (((2.0f64).sqrt() * df).ln().sqrt() + 1.0);
        let b_star_sq = self.weak_bias_sq(o.t_star);
        let weak_proxy_rhs = (2.0 * df).sqrt() * ds + 2.0 * delta * b_star_sq.sqrt() + delta_tau * delta_tau;

        let weak_dev_rhs = (17.0 * sqrt_d + 64.0) * ds + b_star_sq / sqrt_d;

        let s_floor = o.t_s.floor() as usize;
        let bias_rhs =
            81.0 * self.inverse_sq_at(s_floor + 1) * ds * (o.t_s + sqrt_d + (kappa_units - df).max(0.0));

        let r_v_tau = self.r_v_tau(o.t_star, kappa_units);
        let stochastic_rhs = r_v_tau * ds;
        let stochastic_balanced_rhs =
            (r_v_tau + self.inverse_sq_at(star_floor + 1) * (df - kappa_units).max(0.0)) * ds;

        let c_kappa = (o.kappa - df * ds).abs() / (sqrt_d * ds);
        let shifted = (o.t_s + c_kappa * sqrt_d).floor();
        let shifted = if shifted.is_finite() { shifted.min(df) as usize } else { d };
        let strong_thm_rhs =
            (81.0 * self.inverse_sq_at(shifted + 1) * (o.t_s + (1.0 + c_kappa) * sqrt_d) + r_v_tau) * ds;

        Ok(TheoryBounds {
            delta_tau,
            weak_proxy_rhs,
            weak_dev_rhs,
            bias_rhs,
            r_v_tau,
            stochastic_rhs,
            stochastic_balanced_rhs,
            strong_thm_rhs,
            c_kappa,
        })
    }

    /// Capped at `sum_i lambda_i^{-2}`, the value of `E[S_D] / delta^2`.
    fn r_v_tau(&self, t_star: f64, kappa_units: f64) -> f64 {
        let d = self.dimension();
        let scale = 16.0 * d as f64 + 32.0 * kappa_units;
        let start = (t_star.floor() as usize + 1).min(d + 1);
        let series: f64 = (start..=d)
            .map(|m| {
                let gap = (m as f64 - 1.0 - t_star).max(0.0);
                self.inverse_sq_at(m) * (-gap * gap / scale).exp()
            })
            .sum();
        let cap: f64 = (1..=d).map(|m| self.inverse_sq_at(m)).sum();
        (2.0 * 3f64.sqrt() * series).min(cap)
    }
}

pub fn strongly_balanced_discrete(signal: &Signal, spectrum: &Spectrum, noise: &NoiseModel) -> Result<usize> {
    Ok(RiskProfile::new(signal, spectrum, noise)?.strongly_balanced_discrete())
}

pub fn balanced_continuous(
    signal: &Signal,
    spectrum: &Spectrum,
    noise: &NoiseModel,
    m0: usize,
    norm: Norm,
) -> Result<f64> {
    RiskProfile::new(signal, spectrum, noise)?.balanced_continuous(m0, norm)
}

pub fn oracle_proxy(signal: &Signal, spectrum: &Spectrum, noise: &NoiseModel, kappa: f64, m0: usize) -> Result<f64> {
    RiskProfile::new(signal, spectrum, noise)?.oracle_proxy(kappa, m0)
}

/// Strong-norm classical oracle `(argmin_m B_m^2 + V_m, min risk)`.
pub fn classical_oracle(signal: &Signal, spectrum: &Spectrum, noise: &NoiseModel) -> Result<(usize, f64)> {
    Ok(RiskProfile::new(signal, spectrum, noise)?.classical_oracle(Norm::Strong))
}

pub fn oracle_set(signal: &Signal, spectrum: &Spectrum, noise: &NoiseModel, kappa: f64, m0: usize) -> Result<OracleSet> {
    RiskProfile::new(signal, spectrum, noise)?.oracle_set(kappa, m0)
}

pub fn theory_bounds(
    signal: &Signal,
    spectrum: &Spectrum,
    noise: &NoiseModel,
    kappa: f64,
    m0: usize,
) -> Result<TheoryBounds> {
    RiskProfile::new(signal, spectrum, noise)?.theory_bounds(kappa, m0)
}

fn check_minimax(beta: f64, p: f64, radius: f64, delta: f64) -> Result<()> {
    if !(radius > 0.0) || !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "radius {radius} and delta {delta} must both be positive"
        )));
    }
    if !(beta >= 0.0 && p >= 0.0) {
        return Err(Error::InvalidParameter("beta and p must be nonnegative".into()));
    }
    Ok(())
}

/// `(delta / R)^{-2 / (2 beta + 2p + 1)}`.
pub fn minimax_time(beta: f64, p: f64, radius: f64, delta: f64) -> Result<f64> {
    check_minimax(beta, p, radius, delta)?;
    Ok((delta / radius).powf(-2.0 / (2.0 * beta + 2.0 * p + 1.0)))
}

/// `R (delta / R)^{2 beta / (2 beta + 2p + 1)}`.
pub fn minimax_rate(beta: f64, p: f64, radius: f64, delta: f64) -> Result<f64> {
    check_minimax(beta, p, radius, delta)?;
    Ok(radius * (delta / radius).powf(2.0 * beta / (2.0 * beta + 2.0 * p + 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_polynomial_spectrum;
    use approx::assert_relative_eq;

    fn unit(d: usize) -> (Spectrum, NoiseModel) {
        (make_polynomial_spectrum(d, 0.0).unwrap(), NoiseModel::new(1.0).unwrap())
    }

    #[test]
    fn strongly_balanced_examples() {
        let (spec, noise) = unit(2);
        assert_eq!(strongly_balanced_discrete(&Signal::zeros(2), &spec, &noise).unwrap(), 0);
        assert_eq!(strongly_balanced_discrete(&Signal::new(vec![2.0, 2.0]), &spec, &noise).unwrap(), 2);
        let (spec, noise) = unit(5);
        let spike = Signal::new(vec![3.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(strongly_balanced_discrete(&spike, &spec, &noise).unwrap(), 1);
    }

    #[test]
    fn weak_balanced_solves_quadratic() {
        let (spec, noise) = unit(2);
        let t = balanced_continuous(&Signal::new(vec![2.0, 0.0]), &spec, &noise, 0, Norm::Weak).unwrap();
        assert!((t - 4.0 / 9.0).abs() <= 1e-9);
        assert_eq!(balanced_continuous(&Signal::zeros(2), &spec, &noise, 1, Norm::Strong).unwrap(), 1.0);
    }

    #[test]
    fn flat_spectrum_makes_weak_and_strong_coincide() {
        let (spec, noise) = unit(30);
        let sig = Signal::new((1..=30).map(|i| 3.0 / i as f64).collect());
        let w = balanced_continuous(&sig, &spec, &noise, 0, Norm::Weak).unwrap();
        let s = balanced_continuous(&sig, &spec, &noise, 0, Norm::Strong).unwrap();
        assert_eq!(w, s);
    }

    #[test]
    fn proxy_examples() {
        let (spec, noise) = unit(2);
        let sig = Signal::new(vec![2.0, 0.0]);
        let t = oracle_proxy(&sig, &spec, &noise, 2.5, 0).unwrap();
        let root = (8.0 - 22f64.sqrt()) / 6.0;
        assert!((t - root * root).abs() <= 1e-9);
        // Back-substitution: kappa = D delta^2 + B^2_{t,lambda} - t delta^2.
        let prof = RiskProfile::new(&sig, &spec, &noise).unwrap();
        assert!((2.0 + prof.weak_bias_sq(t) - t - 2.5).abs() <= 1e-9);

        let big = 2.0 + prof.weak_bias_sq(1.0) - 1.0;
        assert_eq!(oracle_proxy(&sig, &spec, &noise, big, 1).unwrap(), 1.0);
        assert_eq!(
            oracle_proxy(&sig, &spec, &noise, 2.0, 0).unwrap(),
            balanced_continuous(&sig, &spec, &noise, 0, Norm::Weak).unwrap()
        );
    }

    #[test]
    fn classical_examples() {
        let (spec, noise) = unit(2);
        assert_eq!(classical_oracle(&Signal::zeros(2), &spec, &noise).unwrap(), (0, 0.0));
        assert_eq!(classical_oracle(&Signal::new(vec![2.0, 2.0]), &spec, &noise).unwrap(), (2, 2.0));
    }

    #[test]
    fn minimax_examples() {
        assert_relative_eq!(minimax_time(1.0, 0.5, 1.0, 0.01).unwrap(), 10.0, max_relative = 1e-12);
        assert_relative_eq!(minimax_time(2.0, 1.0, 0.3, 0.3).unwrap(), 1.0);
        assert_relative_eq!(minimax_rate(2.0, 1.0, 0.3, 0.3).unwrap(), 0.3);
        assert_relative_eq!(minimax_rate(0.0, 1.0, 2.0, 1e-4).unwrap(), 2.0);
        assert!(minimax_time(1.0, 0.5, 0.0, 0.01).is_err());
        assert!(minimax_rate(1.0, 0.5, 1.0, -1.0).is_err());
    }

    #[test]
    fn theory_bound_examples() {
        let (spec, noise) = unit(100);
        let zero = Signal::zeros(100);
        let b = theory_bounds(&zero, &spec, &noise, 100.0, 10).unwrap();
        assert_relative_eq!(b.weak_dev_rhs, 234.0, max_relative = 1e-14);
        let expected = 4.0 * ((2f64.sqrt() * 100.0).ln().sqrt() + 1.0);
        assert_relative_eq!(b.delta_tau, expected, max_relative = 1e-14);
        assert!(b.r_v_tau <= 100.0);

        let spec = make_polynomial_spectrum(200, 0.5).unwrap();
        let noise = NoiseModel::new(0.05).unwrap();
        let sig = Signal::new((1..=200).map(|i| (i as f64).powf(-1.0)).collect());
        let b = theory_bounds(&sig, &spec, &noise, 200.0 * 0.0025, 0).unwrap();
        for v in [
            b.delta_tau,
            b.weak_proxy_rhs,
            b.weak_dev_rhs,
            b.bias_rhs,
            b.r_v_tau,
            b.stochastic_rhs,
            b.stochastic_balanced_rhs,
            b.strong_thm_rhs,
        ] {
            assert!(v.is_finite() && v >= 0.0);
        }
        assert!(b.c_kappa < 1e-12);
    }

    #[test]
    fn rejects_m0_beyond_dimension() {
        let (spec, noise) = unit(3);
        assert!(oracle_set(&Signal::zeros(3), &spec, &noise, 3.0, 4).is_err());
    }
}

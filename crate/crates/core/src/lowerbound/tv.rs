use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Poisson weights below this tail mass are dropped.
const WEIGHT_TAIL: f64 = 1e-12;
const TARGET: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvBoundResult {
    pub bound_general: f64,
    pub bound_simplified: Option<f64>,
    pub tv_numeric: Option<f64>,
}

/// `sqrt(8) e / (2 pi - sqrt(pi) e)`, about 5.248.
pub fn simplification_threshold() -> f64 {
    8f64.sqrt() * E / (2.0 * PI - PI.sqrt() * E)
}

/// Upper bounds on the total variation distance between non-central chi-square
/// laws with `K` degrees of freedom and noncentralities `theta_norm^2`, `theta_bar_norm^2`.
pub fn tv_bound(theta_norm: f64, theta_bar_norm: f64, k: usize) -> Result<TvBoundResult> {
    check(theta_norm, theta_bar_norm, k)?;
    let (a, b) = (theta_norm, theta_bar_norm);
    let kf = k as f64;
    let sq = (a * a - b * b).abs();
    let bound_general = E * (sq + (8.0 / PI).sqrt() * (a - b).abs()) / (PI * kf).sqrt();
    let bound_simplified = (a + b >= simplification_threshold()).then(|| 2.0 * sq / kf.sqrt());
    Ok(TvBoundResult { bound_general, bound_simplified, tv_numeric: None })
}

fn check(a: f64, b: f64, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }
    if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter(format!("norms must be finite and >= 0 (got {a}, {b})")));
    }
    Ok(())
}

/// Non-central chi-square law as a Poisson mixture of central ones.
struct Mixture {
    k: f64,
    first: usize,
    log_weights: Vec<f64>,
    dropped: f64,
}

impl Mixture {
    fn new(k: usize, noncentrality: f64) -> Result<Self> {
        let half = 0.5 * noncentrality;
        if half == 0.0 {
            return Ok(Self { k: k as f64, first: 0, log_weights: vec![0.0], dropped: 0.0 });
        }
        let log_w = |j: usize| -half + j as f64 * half.ln() - ln_gamma(j as f64 + 1.0);
        let mode = half.floor() as usize;
        let (mut lo, mut hi) = (mode, mode);
        let mut kept = log_w(mode).exp();
        const MAX_TERMS: usize = 5_000_000;
        while 1.0 - kept > WEIGHT_TAIL && hi - lo < MAX_TERMS {
            let up = log_w(hi + 1).exp();
            let down = if lo > 0 { log_w(lo - 1).exp() } else { 0.0 };
            if up >= down {
                hi += 1;
                kept += up;
            } else {
                lo -= 1;
                kept += down;
            }
        }
        let dropped = (1.0 - kept).max(0.0);
        if dropped > TARGET {
            return Err(Error::Accuracy { target: TARGET, achieved: dropped, estimate: f64::NAN });
        }
        Ok(Self { k: k as f64, first: lo, log_weights: (lo..=hi).map(log_w).collect(), dropped })
    }

    fn terms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.log_weights
            .iter()
            .enumerate()
            .map(move |(n, &lw)| (self.k + 2.0 * (self.first + n) as f64, lw))
    }

    fn ln_pdf(&self, x: f64) -> f64 {
        let lx = x.ln();
        let parts: Vec<f64> = self
            .terms()
            .map(|(dof, lw)| {
                let h = 0.5 * dof;
                lw + (h - 1.0) * lx - 0.5 * x - h * 2f64.ln() - ln_gamma(h)
            })
            .collect();
        let top = parts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        top + parts.iter().map(|p| (p - top).exp()).sum::<f64>().ln()
    }

    fn cdf(&self, x: f64) -> f64 {
        self.terms()
            .map(|(dof, lw)| lw.exp() * ChiSquared::new(dof).expect("positive dof").cdf(x))
            .sum()
    }
}

/// `1/2 int |f - g|` for the two non-central chi-square densities.
///
/// The family has a monotone likelihood ratio in the noncentrality, so the
/// densities cross exactly once, at `x*`, and the distance equals
/// `F_small(x*) - F_large(x*)`. The crossing is located by bisection on the
/// log-density difference and both CDFs come from the mixture series.
pub fn tv_numeric(theta_norm: f64, theta_bar_norm: f64, k: usize) -> Result<f64> {
    check(theta_norm, theta_bar_norm, k)?;
    let (small, large) = if theta_norm <= theta_bar_norm {
        (theta_norm, theta_bar_norm)
    } else {
        (theta_bar_norm, theta_norm)
    };
    if small == large {
        return Ok(0.0);
    }
    let f = Mixture::new(k, small * small)?;
    let g = Mixture::new(k, large * large)?;
    let h = |x: f64| f.ln_pdf(x) - g.ln_pdf(x);

    let mut hi = (k as f64 + large * large).max(1.0);
    while h(hi) > 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Accuracy { target: TARGET, achieved: f64::INFINITY, estimate: f64::NAN });
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    let tv = f.cdf(x) - g.cdf(x);
    let slack = f.dropped + g.dropped;
    if slack > TARGET {
        return Err(Error::Accuracy { target: TARGET, achieved: slack, estimate: tv });
    }
    Ok(tv.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_value() {
        assert!((simplification_threshold() - 5.248).abs() < 1e-3);
    }

    #[test]
    fn bound_examples() {
        let r = tv_bound(2.0, 2.0, 7).unwrap();
        assert_eq!(r.bound_general, 0.0);
        let r = tv_bound(3.0, 3.0, 7).unwrap();
        assert_eq!(r.bound_simplified, Some(0.0));
        let r = tv_bound(6.0, 5.25, 100).unwrap();
        assert!((r.bound_simplified.unwrap() - 1.6875).abs() < 1e-12);
        assert_eq!(tv_bound(1.0, 1.0, 3).unwrap().bound_simplified, None);
        assert!(tv_bound(1.0, 2.0, 0).is_err());
    }

    #[test]
    fn numeric_limits() {
        assert_eq!(tv_numeric(1.3, 1.3, 4).unwrap(), 0.0);
        assert!(tv_numeric(0.0, 60.0, 1).unwrap() > 1.0 - 1e-6);
        let v = tv_numeric(1.1, 1.0, 50).unwrap();
        assert!(v > 0.0 && v <= tv_bound(1.1, 1.0, 50).unwrap().bound_general);
        assert_eq!(tv_numeric(1.0, 2.0, 3).unwrap(), tv_numeric(2.0, 1.0, 3).unwrap());
    }
}

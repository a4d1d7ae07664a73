use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, NoiseKind};

const BLOCK: usize = 1024;

/// `-2 ||a|| sqrt(x)`.
pub fn lm_lower_threshold(a: &[f64], x: f64) -> f64 {
    -2.0 * l2(a) * x.sqrt()
}

/// `2 ||a|| sqrt(x) + 2 max(a) x`.
pub fn lm_upper_threshold(a: &[f64], x: f64) -> f64 {
    let top = a.iter().copied().fold(0.0, f64::max);
    2.0 * l2(a) * x.sqrt() + 2.0 * top * x
}

fn l2(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Empirical tail frequencies of `sum a_i (eps_i^2 - 1)` at one level `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub x: f64,
    pub bound: f64,
    pub lower_frequency: f64,
    pub lower_se: f64,
    pub upper_frequency: f64,
    pub upper_se: f64,
    pub draws: usize,
}

impl TailReport {
    pub fn lower_dominated(&self) -> bool {
        self.lower_frequency <= self.bound + 3.0 * self.lower_se
    }

    pub fn upper_dominated(&self) -> bool {
        self.upper_frequency <= self.bound + 3.0 * self.upper_se
    }
}

/// Simulates `draws` weighted chi-square sums and counts threshold exceedances.
///
/// Draws are generated in fixed blocks, one random stream per block, so the
/// counts do not depend on the thread pool.
pub fn lm_tail_experiment(a: &[f64], xs: &[f64], draws: usize, seed: u64) -> Result<Vec<TailReport>> {
    if a.is_empty() || a.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::InvalidParameter("weights must be nonempty and nonnegative".into()));
    }
    if draws == 0 {
        return Err(Error::InvalidParameter("need at least one draw".into()));
    }
    let lower: Vec<f64> = xs.iter().map(|&x| lm_lower_threshold(a, x)).collect();
    let upper: Vec<f64> = xs.iter().map(|&x| lm_upper_threshold(a, x)).collect();
    let blocks = draws.div_ceil(BLOCK);
    let counts = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng::split(seed, b as u64);
            let n = BLOCK.min(draws - b * BLOCK);
            let mut lo = vec![0usize; xs.len()];
            let mut up = vec![0usize; xs.len()];
            for _ in 0..n {
                let s: f64 = a
                    .iter()
                    .map(|w| {
                        let e = NoiseKind::Gaussian.draw(&mut rng);
                        w * (e * e - 1.0)
                    })
                    .sum();
                for j in 0..xs.len() {
                    lo[j] += usize::from(s < lower[j]);
                    up[j] += usize::from(s > upper[j]);
                }
            }
            (lo, up)
        })
        .collect::<Vec<_>>();
    let n = draws as f64;
    Ok(xs
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let l = counts.iter().map(|c| c.0[j]).sum::<usize>() as f64 / n;
            let u = counts.iter().map(|c| c.1[j]).sum::<usize>() as f64 / n;
            TailReport {
                x,
                bound: (-x).exp(),
                lower_frequency: l,
                lower_se: (l * (1.0 - l) / n).sqrt(),
                upper_frequency: u,
                upper_se: (u * (1.0 - u) / n).sqrt(),
                draws,
            }
        })
        .collect())
}

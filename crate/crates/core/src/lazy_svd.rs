//! Singular triplets on demand, coupled to the stopping rule.
//!
//! Triplets are produced one at a time by power iteration on the normal
//! operator `A^T A`, deflated by classical Gram-Schmidt (applied twice) against
//! the right singular vectors found so far. [`sequential_solve`] asks for a new
//! triplet only while the residual stopping rule has not fired, so a solve that
//! stops at `tau` never pays for triplet `tau + 1`.
//!
//! A triplet is accepted once both the relative change of the Rayleigh
//! quotient and the eigen-residual `||A^T A v - rho v||` are small. The
//! Rayleigh quotient alone converges quadratically faster than the vector, so
//! the residual test is what pins down `v` and `u`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::estimator::{EstimateVector, TruncationIndex};
use crate::model::{NoiseModel, Observation};
use crate::numeric::compensated_sum;
use crate::rng::{self, NoiseKind};
use crate::stopping::{aic_select_prefix, ResidualStopper, StopOutcome, StoppingConfig};

const MAGIC: &[u8; 8] = b"TSVDMAT1";

/// Dense row-major `P x D` matrix with `D <= P`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixOperator {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl MatrixOperator {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if cols == 0 || cols > rows {
            return Err(Error::InvalidDimension(format!("need 1 <= D <= P, got P = {rows}, D = {cols}")));
        }
        check_len(rows * cols, data.len())?;
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Square diagonal operator.
    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let d = values.len();
        let mut data = vec![0.0; d * d];
        for (i, &v) in values.iter().enumerate() {
            data[i * d + i] = v;
        }
        Self::new(d, d, data)
    }

    /// `P`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// `D`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// `out = A v`.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    /// `out = A^T z`.
    pub fn apply_transpose(&self, z: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (zi, row) in z.iter().zip(self.data.chunks_exact(self.cols)) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += zi * a;
            }
        }
    }

    /// Reads either format, detected from the leading bytes.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        if bytes.starts_with(MAGIC) {
            Self::from_binary(&bytes)
        } else {
            let text = String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))?;
            Self::from_text(&text)
        }
    }

    /// Header line `P D`, then the entries in row-major order.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut tokens = text
            .lines()
            .filter(|l| !l.trim_start().starts_with('#'))
            .flat_map(str::split_whitespace);
        let mut header = || -> Result<usize> {
            tokens
                .next()
                .ok_or_else(|| Error::Parse("missing matrix header".into()))?
                .parse()
                .map_err(|e| Error::Parse(format!("bad matrix header: {e}")))
        };
        let rows = header()?;
        let cols = header()?;
        let data = tokens
            .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("bad entry {t:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows, cols, data)
    }

    /// Magic `TSVDMAT1`, little-endian `u64` P and D, then little-endian `f64` entries.
    pub fn from_binary(bytes: &[u8]) -> Result<Self> {
        let mut r = bytes;
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Parse("not a binary matrix file".into()));
        }
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        let rows = u64::from_le_bytes(word) as usize;
        r.read_exact(&mut word)?;
        let cols = u64::from_le_bytes(word) as usize;
        if r.len() != rows.saturating_mul(cols).saturating_mul(8) {
            return Err(Error::Parse(format!(
                "binary matrix body has {} bytes, expected {} x {} entries",
                r.len(),
                rows,
                cols
            )));
        }
        let data = r
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Self::new(rows, cols, data)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.rows, self.cols);
        for row in self.data.chunks_exact(self.cols) {
            let line: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + 8 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.rows as u64).to_le_bytes());
        out.extend_from_slice(&(self.cols as u64).to_le_bytes());
        for x in &self.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn write_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::File::create(path)?.write_all(&self.to_binary())?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularTriplet {
    pub sigma: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Convergence controls for the power iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    /// Relative Rayleigh-quotient change.
    pub tolerance: f64,
    /// Eigen-residual, relative to the largest squared singular value.
    pub residual_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self { tolerance: 1e-10, residual_tolerance: 1e-14, max_iterations: 10_000 }
    }
}

/// Triplets computed so far and the work spent on them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeflationState {
    pub computed: Vec<SingularTriplet>,
    pub matvec_count: usize,
    pub tolerance: f64,
    pub residual_tolerance: f64,
    pub max_iterations: usize,
}

impl DeflationState {
    pub fn new(config: PowerConfig) -> Self {
        Self {
            computed: Vec::new(),
            matvec_count: 0,
            tolerance: config.tolerance,
            residual_tolerance: config.residual_tolerance,
            max_iterations: config.max_iterations,
        }
    }

    pub fn len(&self) -> usize {
        self.computed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.computed.is_empty()
    }

    /// Removes the components along computed right singular vectors, twice.
    fn deflate(&self, x: &mut [f64]) {
        for _ in 0..2 {
            for t in &self.computed {
                let c: f64 = t.v.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
                x.iter_mut().zip(&t.v).for_each(|(xi, vi)| *xi -= c * vi);
            }
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn scale(x: &mut [f64], s: f64) {
    x.iter_mut().for_each(|v| *v *= s);
}

/// Flips signs so that the first component of `v` above `1e-8` in magnitude is positive.
fn canonical_sign(v: &mut [f64], u: &mut [f64]) {
    if let Some(&first) = v.iter().find(|x| x.abs() > 1e-8) {
        if first < 0.0 {
            scale(v, -1.0);
            scale(u, -1.0);
        }
    }
}

/// Computes the next singular triplet and appends it to `state`.
pub fn next_triplet<'s>(state: &'s mut DeflationState, a: &MatrixOperator, seed: u64) -> Result<&'s SingularTriplet> {
    let (p, d) = (a.rows(), a.cols());
    let k = state.computed.len();
    if k >= d {
        return Err(Error::InvalidParameter(format!("all {d} triplets already computed")));
    }
    let mut rng = rng::split(seed, k as u64);
    let mut v = vec![0.0; d];
    NoiseKind::Gaussian.fill(&mut rng, &mut v);
    state.deflate(&mut v);
    let n = norm(&v);
    if !(n > 0.0) {
        return Err(Error::RankDeficient { computed: k });
    }
    scale(&mut v, 1.0 / n);

    let mut z = vec![0.0; p];
    let mut w = vec![0.0; d];
    let mut rho_prev = f64::NAN;
    let mut best = (0.0, v.clone());
    for _ in 0..state.max_iterations {
        a.apply(&v, &mut z);
        a.apply_transpose(&z, &mut w);
        state.matvec_count += 2;
        state.deflate(&mut w);
        let rho = z.iter().map(|x| x * x).sum::<f64>();
        let top = state.computed.first().map_or(rho, |t| t.sigma * t.sigma);
        if !(rho > f64::EPSILON * f64::EPSILON * top) {
            return Err(Error::RankDeficient { computed: k });
        }
        best = (rho.sqrt(), v.clone());
        let residual = w.iter().zip(&v).map(|(wi, vi)| (wi - rho * vi).powi(2)).sum::<f64>().sqrt();
        if (rho - rho_prev).abs() < state.tolerance * rho && residual <= state.residual_tolerance * top {
            let sigma = rho.sqrt();
            scale(&mut z, 1.0 / sigma);
            canonical_sign(&mut v, &mut z);
            state.computed.push(SingularTriplet { sigma, u: z, v });
            return Ok(state.computed.last().expect("just pushed"));
        }
        rho_prev = rho;
        let wn = norm(&w);
        if !(wn > 0.0) {
            return Err(Error::RankDeficient { computed: k });
        }
        v.iter_mut().zip(&w).for_each(|(vi, wi)| *vi = wi / wn);
    }
    Err(Error::NoConvergence {
        iterations: state.max_iterations,
        best_sigma: best.0,
        best_v: best.1,
    })
}

/// Options for [`sequential_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveOptions {
    pub power: PowerConfig,
    pub seed: u64,
    /// Maximum number of triplets the solve may compute.
    pub budget: Option<usize>,
    /// Fall back to AIC on the computed coefficients when `tau = m0`.
    pub two_step: bool,
}

/// State handed back when the triplet budget runs out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialSolve {
    pub state: DeflationState,
    /// `Y_i = <u_i, y_raw>` for the computed triplets.
    pub coefficients: Vec<f64>,
    pub residual_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequentialSolution {
    /// `sum_{i <= rho} sigma_i^{-1} Y_i v_i` in the original coordinates.
    pub estimate: EstimateVector,
    pub outcome: StopOutcome,
    pub matvec_count: usize,
    pub triplets_computed: usize,
    pub sigmas: Vec<f64>,
    pub coefficients: Vec<f64>,
    /// `||y_raw||^2 - sum_{i <= m} Y_i^2` for `m = 0..=triplets_computed`.
    pub residuals: Vec<f64>,
}

/// Computes triplets lazily until the residual rule stops, then forms the estimate.
pub fn sequential_solve(
    a: &MatrixOperator,
    y_raw: &[f64],
    noise: &NoiseModel,
    config: &StoppingConfig,
    options: &SolveOptions,
) -> Result<SequentialSolution> {
    check_len(a.rows(), y_raw.len())?;
    let d = a.cols();
    if config.m0 > d {
        return Err(Error::InvalidParameter(format!("m0 = {} exceeds D = {d}", config.m0)));
    }
    let total = compensated_sum(y_raw.iter().map(|y| y * y));
    let mut stopper = ResidualStopper::new(total, d, config.kappa, config.m0);
    let mut state = DeflationState::new(options.power);
    let mut coefficients = Vec::new();
    let mut residuals = vec![stopper.residual_sq()];
    while !stopper.should_stop() {
        if options.budget.is_some_and(|b| state.len() >= b) {
            return Err(Error::BudgetExceeded {
                budget: state.len(),
                partial: Box::new(PartialSolve { state, coefficients, residual_sq: stopper.residual_sq() }),
            });
        }
        let t = next_triplet(&mut state, a, options.seed)?;
        let y: f64 = t.u.iter().zip(y_raw).map(|(u, y)| u * y).sum();
        coefficients.push(y);
        stopper.push(y);
        residuals.push(stopper.residual_sq());
    }
    let mut outcome = stopper.outcome();
    let sigmas: Vec<f64> = state.computed.iter().map(|t| t.sigma).collect();
    let rho = if options.two_step {
        let r = if outcome.tau > config.m0 {
            outcome.tau
        } else {
            let m0 = config.m0.min(coefficients.len());
            aic_select_prefix(&coefficients[..m0], &sigmas[..m0], noise.delta, config.aic_norm, config.aic_penalty)?
        };
        outcome.rho = Some(r);
        r
    } else {
        outcome.tau
    };
    let mut mu_hat = vec![0.0; d];
    for (t, y) in state.computed.iter().zip(&coefficients).take(rho) {
        let c = y / t.sigma;
        mu_hat.iter_mut().zip(&t.v).for_each(|(m, v)| *m += c * v);
    }
    Ok(SequentialSolution {
        estimate: EstimateVector { mu_hat, t: TruncationIndex::integer(rho) },
        outcome,
        matvec_count: state.matvec_count,
        triplets_computed: state.len(),
        sigmas,
        coefficients,
        residuals,
    })
}

/// Runs the engine to completion, for cost comparisons.
pub fn full_decomposition(a: &MatrixOperator, power: PowerConfig, seed: u64) -> Result<DeflationState> {
    let mut state = DeflationState::new(power);
    while state.len() < a.cols() {
        next_triplet(&mut state, a, seed)?;
    }
    Ok(state)
}

/// Wraps raw data as an observation in the singular basis of computed triplets.
pub fn project_observation(state: &DeflationState, y_raw: &[f64], delta: f64) -> Observation {
    let y = state
        .computed
        .iter()
        .map(|t| t.u.iter().zip(y_raw).map(|(u, y)| u * y).sum())
        .collect();
    Observation::from_data(y, delta)
}

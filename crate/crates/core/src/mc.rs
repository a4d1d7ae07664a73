//! Monte Carlo efficiency experiments.
//!
//! Every replication draws one observation from stream `rep` of the base
//! seed and runs all configured procedures on that same observation. Records
//! are reduced in replication order, so results do not depend on the number
//! of worker threads.

use std::io::{Read, Write};
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::estimator::{strong_error_sq, weak_error_sq, RiskProfile};
use crate::model::{make_polynomial_spectrum, read_column_file, simulate_with_rng, NoiseModel, Observation, Signal, Spectrum};
use crate::numeric::{mean_and_se, quantile_sorted};
use crate::oracles::Norm;
use crate::rng;
use crate::signals::{CalibratedProfile, SignalSpec};
use crate::stopping::{aic_select, early_stop_observation, KappaRule, M0Mode, StoppingConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Procedure {
    /// Residual stopping rule on its own.
    PlainStop,
    /// Stopping rule with prediction-norm AIC fallback.
    TwoStepWeak,
    /// Stopping rule with coefficient-norm AIC fallback.
    TwoStepStrong,
    /// Deterministic truncation at the classical strong-norm oracle.
    FixedOracle,
}

impl Procedure {
    pub const ALL: [Procedure; 4] =
        [Procedure::PlainStop, Procedure::TwoStepWeak, Procedure::TwoStepStrong, Procedure::FixedOracle];

    pub fn name(self) -> &'static str {
        match self {
            Procedure::PlainStop => "plain_stop",
            Procedure::TwoStepWeak => "two_step_weak",
            Procedure::TwoStepStrong => "two_step_strong",
            Procedure::FixedOracle => "fixed_oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectrumSource {
    /// `lambda_i = i^{-p}`.
    Polynomial { p: f64 },
    /// One singular value per line.
    File { path: PathBuf },
}

impl Default for SpectrumSource {
    fn default() -> Self {
        SpectrumSource::Polynomial { p: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalSource {
    Calibrated { profile: CalibratedProfile },
    Parametric(SignalSpec),
    Zero,
    Values { values: Vec<f64> },
    /// One coefficient per line.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dimension: usize,
    #[serde(default)]
    pub spectrum: SpectrumSource,
    pub noise: NoiseModel,
    pub signal: SignalSource,
    #[serde(default)]
    pub kappa: KappaRule,
    /// Start index of `plain_stop`.
    #[serde(default)]
    pub m0: M0Mode,
    /// Start index of the two-step procedures.
    #[serde(default = "default_two_step_m0")]
    pub two_step_m0: M0Mode,
    #[serde(default = "default_penalty")]
    pub aic_penalty: f64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_procedures")]
    pub procedures: Vec<Procedure>,
}

fn default_two_step_m0() -> M0Mode {
    M0Mode::NormalQuantile { level: 0.99 }
}

fn default_penalty() -> f64 {
    1.0
}

fn default_replications() -> usize {
    1000
}

fn default_procedures() -> Vec<Procedure> {
    Procedure::ALL.to_vec()
}

impl ExperimentConfig {
    /// Reference setting: `D = 10000`, `delta = 0.01`, `lambda_i = i^{-1/2}`, 1000 replications.
    pub fn reference(profile: CalibratedProfile) -> Self {
        Self {
            dimension: 10_000,
            spectrum: SpectrumSource::default(),
            noise: NoiseModel { delta: 0.01, kind: Default::default() },
            signal: SignalSource::Calibrated { profile },
            kappa: KappaRule::Canonical,
            m0: M0Mode::Zero,
            two_step_m0: default_two_step_m0(),
            aic_penalty: 1.0,
            replications: 1000,
            base_seed: 0,
            procedures: default_procedures(),
        }
    }

    /// Validates the configuration and loads every referenced file.
    pub fn resolve(&self) -> Result<Setup> {
        let d = self.dimension;
        if d == 0 {
            return Err(Error::InvalidDimension("D must be at least 1".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidParameter("replications must be at least 1".into()));
        }
        if self.procedures.is_empty() {
            return Err(Error::InvalidParameter("no procedures selected".into()));
        }
        if !(self.aic_penalty > 0.0 && self.aic_penalty.is_finite()) {
            return Err(Error::InvalidParameter(format!("aic_penalty = {} must be > 0", self.aic_penalty)));
        }
        let noise = NoiseModel::new(self.noise.delta)?.with_kind(self.noise.kind);
        let spectrum = match &self.spectrum {
            SpectrumSource::Polynomial { p } => make_polynomial_spectrum(d, *p)?,
            SpectrumSource::File { path } => Spectrum::new(read_column_file(path)?, None)?,
        };
        check_len(d, spectrum.len())?;
        let signal = match &self.signal {
            SignalSource::Calibrated { profile } => profile.signal(d),
            SignalSource::Parametric(spec) => spec.coefficients(d),
            SignalSource::Zero => Signal::zeros(d),
            SignalSource::Values { values } => Signal::new(values.clone()),
            SignalSource::File { path } => Signal::new(read_column_file(path)?),
        };
        check_len(d, signal.len())?;
        if signal.coefficients().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("signal has non-finite coefficients".into()));
        }
        let kappa = self.kappa.resolve(d, noise.delta)?;
        let plain = StoppingConfig::new(kappa, self.m0, d)?;
        let two_step = StoppingConfig::new(kappa, self.two_step_m0, d)?;
        Ok(Setup { spectrum, signal, noise, plain, two_step })
    }
}

/// A resolved configuration.
#[derive(Debug, Clone)]
pub struct Setup {
    pub spectrum: Spectrum,
    pub signal: Signal,
    pub noise: NoiseModel,
    pub plain: StoppingConfig,
    pub two_step: StoppingConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleIndices {
    pub m_s: usize,
    pub t_w: f64,
    pub t_s: f64,
    pub t_star: f64,
    pub classical: usize,
    /// `sqrt(min_m (B_m^2 + V_m))`.
    pub oracle_root_risk_strong: f64,
    /// `sqrt(min_m (B_{m,lambda}^2 + m delta^2))`.
    pub oracle_root_risk_weak: f64,
    pub kappa: f64,
    pub m0: usize,
}

impl Setup {
    pub fn oracle_indices(&self) -> Result<OracleIndices> {
        let prof = RiskProfile::new(&self.signal, &self.spectrum, &self.noise)?;
        let set = prof.oracle_set(self.plain.kappa, self.plain.m0)?;
        Ok(OracleIndices {
            m_s: set.m_s,
            t_w: set.t_w,
            t_s: set.t_s,
            t_star: set.t_star,
            classical: set.classical_discrete,
            oracle_root_risk_strong: set.classical_risk.sqrt(),
            oracle_root_risk_weak: prof.classical_oracle(Norm::Weak).1.sqrt(),
            kappa: self.plain.kappa,
            m0: self.plain.m0,
        })
    }
}

pub fn oracle_indices(config: &ExperimentConfig) -> Result<OracleIndices> {
    config.resolve()?.oracle_indices()
}

/// One procedure applied to one replication. Errors are norms, not squares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub rep: usize,
    pub procedure: Procedure,
    pub tau: usize,
    pub rho: Option<usize>,
    pub immediate: bool,
    pub err_strong: f64,
    pub err_weak: f64,
    pub eff_strong: f64,
    pub eff_weak: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationFailure {
    pub rep: usize,
    pub procedure: Procedure,
    pub message: String,
}

/// Order statistics of a sample; quartiles use linear interpolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    pub se: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let (mean, se) = mean_and_se(&sorted);
        Some(Self {
            min: sorted[0],
            q1: quantile_sorted(&sorted, 0.25),
            median: quantile_sorted(&sorted, 0.5),
            q3: quantile_sorted(&sorted, 0.75),
            max: sorted[sorted.len() - 1],
            mean,
            se,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcedureSummary {
    pub procedure: Procedure,
    pub runs: usize,
    pub eff_strong: Option<Summary>,
    pub eff_weak: Option<Summary>,
    pub tau: Option<Summary>,
    pub immediate_fraction: f64,
    /// Mean of `err_strong^2`.
    pub mean_risk_strong: f64,
    pub mean_risk_strong_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub replications: usize,
    pub base_seed: u64,
    pub oracles: OracleIndices,
    pub two_step_m0: usize,
    pub procedures: Vec<ProcedureSummary>,
    pub failures: Vec<ReplicationFailure>,
}

impl EfficiencyReport {
    pub fn procedure(&self, p: Procedure) -> Option<&ProcedureSummary> {
        self.procedures.iter().find(|s| s.procedure == p)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: EfficiencyReport,
    pub records: Vec<ReplicationRecord>,
}

fn efficiency(oracle: f64, err: f64) -> f64 {
    if err == 0.0 {
        f64::INFINITY
    } else {
        oracle / err
    }
}

fn run_procedure(
    procedure: Procedure,
    obs: &Observation,
    setup: &Setup,
    fixed: usize,
) -> Result<(usize, Option<usize>, bool)> {
    match procedure {
        Procedure::PlainStop => {
            let out = early_stop_observation(obs, &setup.plain)?;
            Ok((out.tau, None, out.immediate_stop))
        }
        Procedure::TwoStepWeak | Procedure::TwoStepStrong => {
            let norm = if procedure == Procedure::TwoStepWeak { Norm::Weak } else { Norm::Strong };
            let cfg = &setup.two_step;
            let out = early_stop_observation(obs, cfg)?;
            let rho = if out.tau > cfg.m0 {
                out.tau
            } else {
                aic_select(obs, &setup.spectrum, &setup.noise, cfg.m0, norm, cfg.aic_penalty)?
            };
            Ok((out.tau, Some(rho), out.immediate_stop))
        }
        Procedure::FixedOracle => Ok((fixed, None, false)),
    }
}

/// Runs the experiment on the global rayon pool.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let setup = config.resolve()?;
    let oracles = setup.oracle_indices()?;
    let (num_s, num_w) = (oracles.oracle_root_risk_strong, oracles.oracle_root_risk_weak);

    let per_rep: Vec<Vec<std::result::Result<ReplicationRecord, ReplicationFailure>>> = (0..config.replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rng::split(config.base_seed, rep as u64);
            let obs = match simulate_with_rng(&setup.signal, &setup.spectrum, &setup.noise, &mut rng) {
                Ok(obs) => obs,
                Err(e) => {
                    let message = e.to_string();
                    return config
                        .procedures
                        .iter()
                        .map(|&procedure| Err(ReplicationFailure { rep, procedure, message: message.clone() }))
                        .collect();
                }
            };
            config
                .procedures
                .iter()
                .map(|&procedure| {
                    let fail = |e: Error| ReplicationFailure { rep, procedure, message: e.to_string() };
                    let (tau, rho, immediate) = run_procedure(procedure, &obs, &setup, oracles.classical).map_err(fail)?;
                    let m = rho.unwrap_or(tau);
                    let es = strong_error_sq(&obs, &setup.spectrum, &setup.signal, m).map_err(fail)?.sqrt();
                    let ew = weak_error_sq(&obs, &setup.spectrum, &setup.signal, m).map_err(fail)?.sqrt();
                    Ok(ReplicationRecord {
                        rep,
                        procedure,
                        tau,
                        rho,
                        immediate,
                        err_strong: es,
                        err_weak: ew,
                        eff_strong: efficiency(num_s, es),
                        eff_weak: efficiency(num_w, ew),
                    })
                })
                .collect()
        })
        .collect();

    let mut records = Vec::with_capacity(config.replications * config.procedures.len());
    let mut failures = Vec::new();
    for r in per_rep.into_iter().flatten() {
        match r {
            Ok(rec) => records.push(rec),
            Err(f) => failures.push(f),
        }
    }
    let procedures = config.procedures.iter().map(|&p| summarize(p, &records)).collect();
    Ok(ExperimentOutput {
        report: EfficiencyReport {
            replications: config.replications,
            base_seed: config.base_seed,
            oracles,
            two_step_m0: setup.two_step.m0,
            procedures,
            failures,
        },
        records,
    })
}

/// Aggregates the records of one procedure.
pub fn summarize(procedure: Procedure, records: &[ReplicationRecord]) -> ProcedureSummary {
    let mine: Vec<&ReplicationRecord> = records.iter().filter(|r| r.procedure == procedure).collect();
    let col = |f: fn(&ReplicationRecord) -> f64| mine.iter().map(|r| f(r)).collect::<Vec<f64>>();
    let risks = col(|r| r.err_strong * r.err_strong);
    let (mean_risk_strong, mean_risk_strong_se) = mean_and_se(&risks);
    let runs = mine.len();
    ProcedureSummary {
        procedure,
        runs,
        eff_strong: Summary::of(&col(|r| r.eff_strong)),
        eff_weak: Summary::of(&col(|r| r.eff_weak)),
        tau: Summary::of(&col(|r| r.tau as f64)),
        immediate_fraction: if runs == 0 {
            f64::NAN
        } else {
            mine.iter().filter(|r| r.immediate).count() as f64 / runs as f64
        },
        mean_risk_strong,
        mean_risk_strong_se,
    }
}

/// Writes records as CSV with a header row; infinite efficiencies print as `inf`.
pub fn write_csv<W: Write>(records: &[ReplicationRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ReplicationRecord>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(csv_error)
}

fn csv_error(e: csv::Error) -> Error {
    Error::Parse(format!("csv: {e}"))
}

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use spectral_stop::estimator::{estimate_at, strong_error_sq, weak_error_sq, EstimateVector, RiskProfile, TruncationIndex};
use spectral_stop::lazy_svd::{sequential_solve, MatrixOperator, PowerConfig, SolveOptions};
use spectral_stop::lowerbound::{hide_signal, residual_adversary, start_index_for};
use spectral_stop::mc::{read_csv, run_experiment, write_csv, ExperimentConfig, Setup};
use spectral_stop::model::{read_column_file, simulate_with_rng, NoiseModel, Observation};
use spectral_stop::oracles::Norm;
use spectral_stop::rng;
use spectral_stop::stopping::{early_stop_observation, two_step, KappaRule, M0Mode, StopOutcome, StoppingConfig};

use crate::config::{take_section, typed};
use crate::error::{CliError, CliResult};
use crate::plot;

pub struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn new(dir: PathBuf) -> CliResult<Self> {
        std::fs::create_dir_all(&dir).map_err(|source| CliError::Output { path: dir.clone(), source })?;
        Ok(Self { dir })
    }

    pub fn write(&self, name: &str, bytes: impl AsRef<[u8]>) -> CliResult<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|source| CliError::Output { path, source })
    }

    pub fn json(&self, name: &str, value: &impl Serialize) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).expect("output serializes");
        text.push('\n');
        self.write(name, text)
    }
}

fn echo(value: &impl Serialize) -> Value {
    serde_json::to_value(value).expect("config serializes")
}

fn experiment(raw: Value) -> CliResult<(ExperimentConfig, Setup, Value)> {
    let cfg: ExperimentConfig = typed(raw)?;
    let setup = cfg.resolve()?;
    let effective = echo(&cfg);
    Ok((cfg, setup, effective))
}

/// The observation `mc` would draw for replication 0.
fn first_observation(cfg: &ExperimentConfig, setup: &Setup) -> CliResult<Observation> {
    let mut r = rng::split(cfg.base_seed, 0);
    Ok(simulate_with_rng(&setup.signal, &setup.spectrum, &setup.noise, &mut r)?)
}

#[derive(Serialize)]
struct Fit {
    outcome: StopOutcome,
    err_strong: f64,
    err_weak: f64,
    estimate: EstimateVector,
}

fn fit(obs: &Observation, setup: &Setup, outcome: StopOutcome) -> CliResult<Fit> {
    let m = outcome.rho.unwrap_or(outcome.tau);
    Ok(Fit {
        outcome,
        err_strong: strong_error_sq(obs, &setup.spectrum, &setup.signal, m)?.sqrt(),
        err_weak: weak_error_sq(obs, &setup.spectrum, &setup.signal, m)?.sqrt(),
        estimate: estimate_at(obs, &setup.spectrum, TruncationIndex::integer(m))?,
    })
}

pub fn oracles(raw: Value, out: &Output) -> CliResult<()> {
    let (_, setup, effective) = experiment(raw)?;
    let oracles = setup.oracle_indices()?;
    out.json("effective_config.json", &effective)?;
    out.json("oracles.json", &json!({ "config": effective, "oracles": oracles }))
}

pub fn stop(raw: Value, out: &Output) -> CliResult<()> {
    let (cfg, setup, effective) = experiment(raw)?;
    let obs = first_observation(&cfg, &setup)?;
    let outcome = early_stop_observation(&obs, &setup.plain)?;
    let result = fit(&obs, &setup, outcome)?;
    out.json("effective_config.json", &effective)?;
    out.json("stop.json", &json!({ "config": effective, "oracles": setup.oracle_indices()?, "stop": result }))
}

pub fn two_step_cmd(raw: Value, out: &Output) -> CliResult<()> {
    let (cfg, setup, effective) = experiment(raw)?;
    let obs = first_observation(&cfg, &setup)?;
    let mut fits = Vec::new();
    for norm in [Norm::Strong, Norm::Weak] {
        let sc = setup.two_step.with_aic(norm, cfg.aic_penalty);
        let (outcome, _) = two_step(&obs, &setup.spectrum, &setup.noise, &sc)?;
        fits.push(fit(&obs, &setup, outcome)?);
    }
    let weak = fits.pop();
    let strong = fits.pop();
    out.json("effective_config.json", &effective)?;
    out.json(
        "two_step.json",
        &json!({
            "config": effective,
            "oracles": setup.oracle_indices()?,
            "m0": setup.two_step.m0,
            "strong": strong,
            "weak": weak,
        }),
    )
}

pub fn bounds(raw: Value, out: &Output) -> CliResult<()> {
    let (_, setup, effective) = experiment(raw)?;
    let prof = RiskProfile::new(&setup.signal, &setup.spectrum, &setup.noise)?;
    let set = prof.oracle_set(setup.plain.kappa, setup.plain.m0)?;
    let bounds = prof.theory_bounds_for(&set)?;
    out.json("effective_config.json", &effective)?;
    out.json("bounds.json", &json!({ "config": effective, "oracle_set": set, "bounds": bounds }))
}

/// Returns the number of failed procedure runs.
pub fn mc(raw: Value, out: &Output) -> CliResult<usize> {
    let cfg: ExperimentConfig = typed(raw)?;
    let effective = echo(&cfg);
    let output = run_experiment(&cfg)?;
    let mut csv = Vec::new();
    write_csv(&output.records, &mut csv)?;
    out.write("mc.csv", csv)?;
    out.json("effective_config.json", &effective)?;
    out.json("report.json", &json!({ "config": effective, "report": output.report }))?;
    Ok(output.report.failures.len())
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Construction {
    /// Overwrite coordinate `i0 + 1`.
    Hide,
    /// Raise coordinate `i0 + 1` while keeping the residual statistics close.
    Residual,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AdversarySection {
    construction: Construction,
    alpha: f64,
    radius: f64,
    /// Defaults to `ceil(400 c_mu m_s)`.
    #[serde(default)]
    i0: Option<usize>,
    #[serde(default = "unit")]
    c_mu: f64,
}

fn unit() -> f64 {
    1.0
}

pub fn adversary(mut raw: Value, out: &Output) -> CliResult<()> {
    let section = take_section(&mut raw, "adversary")
        .ok_or_else(|| CliError::Config("the adversary command needs an `adversary` section".into()))?;
    let section: AdversarySection = typed(section)?;
    let (cfg, setup, mut effective) = experiment(raw)?;
    effective["adversary"] = echo(&section);
    let m_s = setup.oracle_indices()?.m_s;
    let i0 = section.i0.or_else(|| start_index_for(m_s, section.c_mu, cfg.dimension));
    let result = match i0 {
        None => None,
        Some(i0) => Some(match section.construction {
            Construction::Hide => hide_signal(&setup.signal, i0, section.alpha, section.radius)?,
            Construction::Residual => {
                residual_adversary(&setup.signal, &setup.spectrum, &setup.noise, i0, section.alpha, section.radius)?
            }
        }),
    };
    out.json("effective_config.json", &effective)?;
    out.json(
        "adversary.json",
        &json!({ "config": effective, "m_s": m_s, "feasible": result.is_some(), "result": result }),
    )
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LazySvdConfig {
    /// Text (`P D` header then row-major entries) or binary matrix file.
    pub matrix: PathBuf,
    /// Raw data `y`, one value per line, length `P`.
    pub data: PathBuf,
    pub noise: NoiseModel,
    /// Resolved with the row count `P`.
    #[serde(default)]
    pub kappa: KappaRule,
    #[serde(default)]
    pub m0: M0Mode,
    #[serde(default)]
    pub two_step: bool,
    #[serde(default = "strong")]
    pub aic_norm: Norm,
    #[serde(default = "unit")]
    pub aic_penalty: f64,
    #[serde(default)]
    pub budget: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub power: PowerConfig,
}

fn strong() -> Norm {
    Norm::Strong
}

pub fn lazysvd(raw: Value, out: &Output) -> CliResult<()> {
    let cfg: LazySvdConfig = typed(raw)?;
    let a = MatrixOperator::read(&cfg.matrix)?;
    let y = read_column_file(&cfg.data)?;
    let noise = NoiseModel::new(cfg.noise.delta)?.with_kind(cfg.noise.kind);
    let kappa = cfg.kappa.resolve(a.rows(), noise.delta)?;
    let stopping = StoppingConfig::new(kappa, cfg.m0, a.cols())?.with_aic(cfg.aic_norm, cfg.aic_penalty);
    let options = SolveOptions { power: cfg.power, seed: cfg.seed, budget: cfg.budget, two_step: cfg.two_step };
    let solution = sequential_solve(&a, &y, &noise, &stopping, &options)?;
    let effective = echo(&cfg);
    out.json("effective_config.json", &effective)?;
    out.json(
        "lazysvd.json",
        &json!({ "config": effective, "stopping": stopping, "rows": a.rows(), "cols": a.cols(), "solution": solution }),
    )
}

pub fn plot(csv: &Path, title: &str, out: &Output) -> CliResult<()> {
    let file = std::fs::File::open(csv).map_err(|e| CliError::Config(format!("cannot read {}: {e}", csv.display())))?;
    let records = read_csv(std::io::BufReader::new(file))?;
    if records.is_empty() {
        return Err(CliError::Config(format!("{} has no records", csv.display())));
    }
    out.write("plot.svg", plot::render(&records, title))
}

use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] spectral_stop::Error),

    #[error("{0} procedure runs failed; see report.json")]
    FailedRuns(usize),

    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "usage" => 2,
            "config" => 3,
            "numeric" => 4,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        use spectral_stop::Error as E;
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Output { .. } => "io",
            CliError::FailedRuns(_) => "numeric",
            CliError::Core(e) => match e {
                E::NoConvergence { .. }
                | E::RankDeficient { .. }
                | E::BudgetExceeded { .. }
                | E::Accuracy { .. }
                | E::TruncatedStream { .. } => "numeric",
                _ => "config",
            },
        }
    }

    /// One-line JSON record for stderr.
    pub fn record(&self) -> String {
        #[derive(Serialize)]
        struct Record<'a> {
            kind: &'a str,
            exit_code: i32,
            message: String,
        }
        #[derive(Serialize)]
        struct Envelope<'a> {
            error: Record<'a>,
        }
        let env = Envelope { error: Record { kind: self.kind(), exit_code: self.exit_code(), message: self.to_string() } };
        serde_json::to_string(&env).expect("error record serializes")
    }
}

pub type CliResult<T> = Result<T, CliError>;

//! Flag and config-file settings. Values in a `--config` file take
//! precedence over flags; nothing is read from the environment.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use febarrier::{codes, io, RateKind, StabilizerHamiltonian};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Shipped code name (rep1..rep64, four, bell) or a code JSON file.
    #[arg(long)]
    pub code: Option<String>,
    /// Flow JSON file.
    #[arg(long)]
    pub flows: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value = "glauber", value_parser = parse_rate)]
    pub rate: RateKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest number of qubits accepted.
    #[arg(long = "cap-n", default_value_t = 8)]
    pub cap_n: usize,
    /// Number of KMC trajectories.
    #[arg(long, default_value_t = 1000)]
    pub trajectories: u64,
    /// Simulation or evolution horizon.
    #[arg(long = "t-max")]
    pub t_max: Option<f64>,
    /// Paths per target for ensemble flow search.
    #[arg(long, default_value_t = 4)]
    pub budget: usize,
    /// Report destination; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// JSON file whose fields override the flags above.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn parse_rate(s: &str) -> Result<RateKind, String> {
    s.parse()
}

/// Config-file form; every field optional, unknown fields rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfigFile {
    command: Option<String>,
    code: Option<String>,
    flows: Option<PathBuf>,
    beta: Option<f64>,
    rate: Option<RateKind>,
    seed: Option<u64>,
    cap_n: Option<usize>,
    trajectories: Option<u64>,
    t_max: Option<f64>,
    budget: Option<usize>,
    output: Option<PathBuf>,
    format: Option<Format>,
}

/// Validated settings for one command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub code: Option<String>,
    pub flows: Option<PathBuf>,
    pub beta: f64,
    pub rate: RateKind,
    pub seed: u64,
    pub cap_n: usize,
    pub trajectories: u64,
    pub t_max: Option<f64>,
    pub budget: usize,
    pub output: Option<PathBuf>,
    pub format: Format,
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs, command: &str) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(p) => serde_json::from_str::<RunConfigFile>(&read_file(p)?)
                .map_err(|e| CliError::validation(format!("config {}: {e}", p.display())))?,
            None => RunConfigFile::default(),
        };
        if let Some(c) = &file.command {
            if c != command {
                return Err(CliError::validation(format!(
                    "config is for command {c:?}, but {command:?} was invoked"
                )));
            }
        }
        let cfg = Self {
            code: file.code.or_else(|| args.code.clone()),
            flows: file.flows.or_else(|| args.flows.clone()),
            beta: file.beta.unwrap_or(args.beta),
            rate: file.rate.unwrap_or(args.rate),
            seed: file.seed.unwrap_or(args.seed),
            cap_n: file.cap_n.unwrap_or(args.cap_n),
            trajectories: file.trajectories.unwrap_or(args.trajectories),
            t_max: file.t_max.or(args.t_max),
            budget: file.budget.unwrap_or(args.budget),
            output: file.output.or_else(|| args.output.clone()),
            format: file.format.unwrap_or(args.format),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(CliError::validation(format!(
                "beta must be finite and positive, got {}",
                self.beta
            )));
        }
        if self.cap_n == 0 {
            return Err(CliError::validation("cap-n must be at least 1"));
        }
        if let Some(t) = self.t_max {
            if !(t.is_finite() && t > 0.0) {
                return Err(CliError::validation(format!(
                    "t-max must be finite and positive, got {t}"
                )));
            }
        }
        if self.budget == 0 {
            return Err(CliError::validation("budget must be at least 1"));
        }
        Ok(())
    }

    /// Loads the code and enforces `cap_n`.
    pub fn hamiltonian(&self) -> Result<StabilizerHamiltonian, CliError> {
        let name = self
            .code
            .as_deref()
            .ok_or_else(|| CliError::validation("no code given (--code)"))?;
        let h = match codes::by_name(name) {
            Some(h) => h,
            None => {
                let path = Path::new(name);
                if !path.is_file() {
                    return Err(CliError::validation(format!(
                        "{name:?} is neither a shipped code nor a file"
                    )));
                }
                io::parse_code(&read_file(path)?).map_err(|e| CliError::validation(format!("{name}: {e}")))?
            }
        };
        if h.num_qubits() > self.cap_n {
            return Err(CliError::cap(format!(
                "code has n = {} qubits, above cap-n = {}",
                h.num_qubits(),
                self.cap_n
            )));
        }
        Ok(h)
    }

    pub fn require_json(&self) -> Result<(), CliError> {
        match self.format {
            Format::Json => Ok(()),
            Format::Csv => Err(CliError::validation("csv output is only available for time series")),
        }
    }

    /// Writes `body` to the output file or standard output.
    pub fn emit(&self, body: &str) -> Result<(), CliError> {
        match &self.output {
            Some(p) => {
                std::fs::write(p, body).map_err(|e| CliError::validation(format!("cannot write {}: {e}", p.display())))
            }
            None => {
                use std::io::Write;
                let mut out = std::io::stdout().lock();
                match writeln!(out, "{}", body.trim_end()) {
                    // A closed reader (e.g. `head`) is not an error of the run.
                    Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                        Err(CliError::validation(format!("cannot write to stdout: {e}")))
                    }
                    _ => Ok(()),
                }
            }
        }
    }
}

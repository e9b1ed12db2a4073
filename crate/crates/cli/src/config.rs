//! Run configuration: global flags layered over an optional JSON file.

use std::fmt;
use std::fs;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use digitrange::rng::DEFAULT_SEED;
use digitrange::weights::ModelKind;
use digitrange::{ModelSpec, WeightModel};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Contents of a `--config` file; every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub model: Option<ModelSpec>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Weight model: luroth, power, power-log or explicit-prefix
    #[arg(long, global = true)]
    pub model: Option<ModelKind>,
    /// Tail index ρ > 1
    #[arg(long, global = true)]
    pub rho: Option<f64>,
    /// Log exponent of the power-log model
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    /// Explicit leading weights, comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    pub prefix: Option<Vec<f64>>,
    /// JSON run configuration; flags override its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file (standard output when absent)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

/// Resolved configuration shared by all subcommands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub seed: u64,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub threads: usize,
}

impl RunConfig {
    pub fn resolve(args: &GlobalArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
                serde_json::from_str::<RunConfigFile>(&text)
                    .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))?
            }
            None => RunConfigFile::default(),
        };
        let mut model = match args.model {
            Some(kind) => ModelSpec { kind, rho: None, gamma: None, prefix: None },
            None => file.model.unwrap_or_else(ModelSpec::luroth),
        };
        if args.rho.is_some() {
            model.rho = args.rho;
        }
        if args.gamma.is_some() {
            model.gamma = args.gamma;
        }
        if args.prefix.is_some() {
            model.prefix = args.prefix.clone();
        }
        let threads = args
            .threads
            .or(file.threads)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        if threads == 0 {
            return Err(CliError::Usage("thread count must be at least 1".into()));
        }
        Ok(RunConfig {
            model,
            seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            format: args.format.or(file.format).unwrap_or_default(),
            out: args.out.clone().or(file.out),
            threads,
        })
    }

    pub fn build_model(&self) -> Result<WeightModel, CliError> {
        self.model.build().map_err(|e| CliError::Usage(format!("invalid model: {e}")))
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Validation(String),
    Suite(String),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Suite(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Suite(m) => write!(f, "suite failure: {m}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.into())
    }
}

/// Library errors raised while computing.
impl From<digitrange::Error> for CliError {
    fn from(e: digitrange::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

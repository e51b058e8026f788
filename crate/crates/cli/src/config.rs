//! Experiment configuration: defaults, config-file values and command-line
//! flags merged in increasing precedence.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qdense_core::capacity::{OptimizationConfig, ProbabilityMode};

use crate::CliError;

pub const DEFAULT_GRID_POINTS: usize = 63;

/// Raw command-line options shared by every subcommand; `None` means the flag
/// was not given and the config file / default applies.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct CommonOpts {
    /// Flat JSON config file; explicit flags override its values.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Input state family: gghz | maxmixed | sepmixed | product | file.
    #[arg(long)]
    pub state: Option<String>,

    /// JSON state document, used with --state file.
    #[arg(long, value_name = "PATH")]
    pub state_file: Option<PathBuf>,

    /// Generalized-GHZ angle theta in radians.
    #[arg(long)]
    pub theta: Option<f64>,

    /// Generalized-GHZ phase phi in radians.
    #[arg(long)]
    pub phi: Option<f64>,

    /// Number of receivers.
    #[arg(long = "M")]
    pub m: Option<usize>,

    /// Alphabet size |X|.
    #[arg(long)]
    pub alphabet: Option<usize>,

    /// Number of random restarts.
    #[arg(long)]
    pub restarts: Option<usize>,

    /// Local-search iteration cap per restart.
    #[arg(long)]
    pub max_iterations: Option<usize>,

    /// Base seed for restart initialization.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Output path; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Output format: csv | json.
    #[arg(long)]
    pub format: Option<String>,

    /// Sweep grid start in radians.
    #[arg(long)]
    pub grid_start: Option<f64>,

    /// Sweep grid stop in radians.
    #[arg(long)]
    pub grid_stop: Option<f64>,

    /// Number of sweep grid points.
    #[arg(long)]
    pub grid_points: Option<usize>,

    /// Letter probabilities: free | uniform.
    #[arg(long)]
    pub probability_mode: Option<String>,

    /// Checkpoint file to warm-start from.
    #[arg(long, value_name = "PATH")]
    pub resume: Option<PathBuf>,

    /// Skip criteria tagged slow (verify only).
    #[arg(long)]
    pub fast: bool,

    /// Optimize the generalized-GHZ theta jointly (locc1 only).
    #[arg(long)]
    pub optimize_theta: bool,
}

/// Config-file schema: the same knobs as the flags, all optional. Unknown
/// keys are rejected so typos fail loudly.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    state: Option<String>,
    state_file: Option<String>,
    theta: Option<f64>,
    phi: Option<f64>,
    m: Option<usize>,
    alphabet: Option<usize>,
    restarts: Option<usize>,
    max_iterations: Option<usize>,
    seed: Option<u64>,
    out: Option<String>,
    format: Option<String>,
    grid_start: Option<f64>,
    grid_stop: Option<f64>,
    grid_points: Option<usize>,
    probability_mode: Option<String>,
    optimize_theta: Option<bool>,
}

/// Fully resolved experiment configuration; embedded verbatim in every
/// report for auditability.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ExperimentConfig {
    pub command: String,
    pub state: String,
    pub state_file: Option<String>,
    pub theta: f64,
    pub phi: f64,
    pub m: usize,
    pub alphabet: usize,
    pub restarts: usize,
    pub max_iterations: usize,
    pub seed: u64,
    pub gradient_step: f64,
    pub convergence_tolerance: f64,
    pub probability_mode: String,
    pub out: Option<String>,
    pub format: String,
    pub grid_start: f64,
    pub grid_stop: f64,
    pub grid_points: usize,
    pub resume: Option<String>,
    pub fast: bool,
    pub optimize_theta: bool,
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    /// Merges defaults, config file and flags (flags win) for a subcommand.
    pub fn resolve(command: &str, opts: &CommonOpts) -> Result<Self, CliError> {
        let file = match &opts.config {
            Some(path) => load_file_config(path)?,
            None => FileConfig::default(),
        };
        let default_restarts = if command == "locc1" { 64 } else { 32 };
        let default_format = match command {
            "sweep" | "baseline" => "csv",
            _ => "json",
        };
        let threads = read_thread_cap()?;

        let cfg = Self {
            command: command.to_string(),
            state: opts
                .state
                .clone()
                .or(file.state)
                .unwrap_or_else(|| "gghz".into()),
            state_file: opts
                .state_file
                .as_ref()
                .map(|p| p.display().to_string())
                .or(file.state_file),
            theta: opts
                .theta
                .or(file.theta)
                .unwrap_or(std::f64::consts::FRAC_PI_2),
            phi: opts.phi.or(file.phi).unwrap_or(0.0),
            m: opts.m.or(file.m).unwrap_or(2),
            alphabet: opts.alphabet.or(file.alphabet).unwrap_or(4),
            restarts: opts.restarts.or(file.restarts).unwrap_or(default_restarts),
            max_iterations: opts.max_iterations.or(file.max_iterations).unwrap_or(300),
            seed: opts.seed.or(file.seed).unwrap_or(7),
            gradient_step: 1e-6,
            convergence_tolerance: 1e-9,
            probability_mode: opts
                .probability_mode
                .clone()
                .or(file.probability_mode)
                .unwrap_or_else(|| "free".into()),
            out: opts
                .out
                .as_ref()
                .map(|p| p.display().to_string())
                .or(file.out),
            format: opts
                .format
                .clone()
                .or(file.format)
                .unwrap_or_else(|| default_format.into()),
            grid_start: opts.grid_start.or(file.grid_start).unwrap_or(0.0),
            grid_stop: opts
                .grid_stop
                .or(file.grid_stop)
                .unwrap_or(std::f64::consts::PI),
            grid_points: opts
                .grid_points
                .or(file.grid_points)
                .unwrap_or(DEFAULT_GRID_POINTS),
            resume: opts.resume.as_ref().map(|p| p.display().to_string()),
            fast: opts.fast,
            optimize_theta: opts.optimize_theta || file.optimize_theta.unwrap_or(false),
            threads,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.alphabet == 0 {
            return Err(CliError::usage("alphabet size must be >= 1"));
        }
        if self.m < 2 {
            return Err(CliError::usage("M must be >= 2"));
        }
        if self.restarts == 0 {
            return Err(CliError::usage("restarts must be >= 1"));
        }
        if !matches!(self.format.as_str(), "csv" | "json") {
            return Err(CliError::usage(format!(
                "unknown format '{}', expected csv or json",
                self.format
            )));
        }
        if !matches!(
            self.state.as_str(),
            "gghz" | "maxmixed" | "sepmixed" | "product" | "file"
        ) {
            return Err(CliError::usage(format!(
                "unknown state family '{}', expected gghz|maxmixed|sepmixed|product|file",
                self.state
            )));
        }
        if self.state == "file" && self.state_file.is_none() {
            return Err(CliError::usage("--state file requires --state-file <PATH>"));
        }
        if !matches!(self.probability_mode.as_str(), "free" | "uniform") {
            return Err(CliError::usage(format!(
                "unknown probability mode '{}', expected free or uniform",
                self.probability_mode
            )));
        }
        if self.command == "sweep" && self.grid_points == 0 {
            return Err(CliError::usage("sweep grid must be nonempty"));
        }
        Ok(())
    }

    pub fn probability_mode_enum(&self) -> ProbabilityMode {
        match self.probability_mode.as_str() {
            "uniform" => ProbabilityMode::Uniform,
            _ => ProbabilityMode::Free,
        }
    }

    pub fn optimization(&self) -> OptimizationConfig {
        OptimizationConfig {
            restarts: self.restarts,
            max_iterations: self.max_iterations,
            seed: self.seed,
            gradient_step: self.gradient_step,
            convergence_tolerance: self.convergence_tolerance,
            probability_mode: self.probability_mode_enum(),
        }
    }

    /// Uniform theta grid from the resolved bounds.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.grid_points;
        if n == 1 {
            return vec![self.grid_start];
        }
        (0..n)
            .map(|i| {
                self.grid_start + (self.grid_stop - self.grid_start) * i as f64 / (n - 1) as f64
            })
            .collect()
    }
}

fn load_file_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("cannot parse config {}: {e}", path.display())))
}

/// Thread cap from NCR_DC_THREADS; unset means library default.
pub fn read_thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var("NCR_DC_THREADS") {
        Ok(v) => v
            .parse::<usize>()
            .map(Some)
            .map_err(|_| CliError::usage(format!("NCR_DC_THREADS must be an integer, got '{v}'"))),
        Err(_) => Ok(None),
    }
}

//! Command implementations shared by the binary and the test suites.

use std::path::Path;

use serde::{Deserialize, Serialize};

use qdense_core::capacity::{
    figure_of_merit, optimize_global_capacity_warm, optimize_locc1_theta_free_warm,
    optimize_locc1_warm, optimize_separable_search_warm, theta_sweep, CapacityResult, SweepPoint,
};
use qdense_core::encoding::EncodingScheme;
use qdense_core::information::{chi_dc_bipartite, chi_sdc_gghz, Locc1Scheme};
use qdense_core::linalg::{SystemLayout, C64, ZERO};
use qdense_core::optim::derive_seed;
use qdense_core::states::{
    gghz_state, maximally_mixed_state, product_pure_state, DensityMatrix, PureState, SeparableTerm,
    StateDocument,
};

use crate::config::ExperimentConfig;
use crate::CliError;

/// JSON report of one capacity or locc1 run; embeds the resolved config.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub state: String,
    pub m: usize,
    pub alphabet: usize,
    pub best_value_bits: f64,
    pub chi_sdc: f64,
    pub delta: f64,
    pub scheme: EncodingScheme,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub locc1_scheme: Option<Locc1Scheme>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state_terms: Option<Vec<SeparableTerm>>,
    pub per_restart_values: Vec<f64>,
    pub converged: bool,
    pub seeds: Seeds,
    pub runtime_seconds: f64,
    pub config: ExperimentConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Seeds {
    pub base: u64,
    pub per_restart: Vec<u64>,
}

impl Seeds {
    fn new(base: u64, restarts: usize) -> Self {
        Self {
            base,
            per_restart: (0..restarts as u64).map(|i| derive_seed(base, i)).collect(),
        }
    }
}

/// Optimizer checkpoint written next to `--out`; `--resume` warm-starts from
/// its parameter vector when the run shape matches.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub command: String,
    pub state: String,
    pub m: usize,
    pub alphabet: usize,
    pub optimize_theta: bool,
    pub best_value: f64,
    pub best_params: Vec<f64>,
    pub config: ExperimentConfig,
}

impl Checkpoint {
    fn from_result(cfg: &ExperimentConfig, result: &CapacityResult) -> Self {
        Self {
            command: cfg.command.clone(),
            state: cfg.state.clone(),
            m: cfg.m,
            alphabet: cfg.alphabet,
            optimize_theta: cfg.optimize_theta,
            best_value: result.best_value,
            best_params: result.best_params.clone(),
            config: cfg.clone(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::usage(format!("cannot read checkpoint {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text).map_err(|e| {
            CliError::usage(format!("cannot parse checkpoint {}: {e}", path.display()))
        })
    }
}

/// Builds the physical input state for the resolved config.
pub fn build_state(cfg: &ExperimentConfig) -> Result<DensityMatrix, CliError> {
    match cfg.state.as_str() {
        "gghz" => Ok(gghz_state(cfg.m + 1, cfg.theta, cfg.phi)
            .map_err(CliError::numerical)?
            .to_density()),
        "maxmixed" => maximally_mixed_state(cfg.m + 1).map_err(CliError::numerical),
        "product" => product_state(cfg.m).map_err(CliError::numerical),
        "file" => {
            let path = cfg.state_file.as_ref().expect("validated");
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("cannot read state file {path}: {e}")))?;
            let doc: StateDocument = serde_json::from_str(&text)
                .map_err(|e| CliError::usage(format!("cannot parse state file {path}: {e}")))?;
            let rho = doc.to_density().map_err(CliError::numerical)?;
            if rho.layout().num_subsystems() != cfg.m + 1 {
                return Err(CliError::usage(format!(
                    "state file has {} subsystems but M = {} needs {}",
                    rho.layout().num_subsystems(),
                    cfg.m,
                    cfg.m + 1
                )));
            }
            Ok(rho)
        }
        "sepmixed" => Err(CliError::usage(
            "sepmixed runs a joint state search; use the capacity command",
        )),
        other => Err(CliError::usage(format!("unknown state family {other}"))),
    }
}

/// Sender-unentangled pure reference state: |0> (x) Bell for two receivers,
/// the all-zeros product ket for more.
fn product_state(m: usize) -> qdense_core::Result<DensityMatrix> {
    if m == 2 {
        let zero = PureState::basis(SystemLayout::new(vec![("A", 2)])?, 0)?;
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let bell = PureState::new(
            SystemLayout::new(vec![("B1", 2), ("B2", 2)])?,
            vec![C64::new(r, 0.0), ZERO, ZERO, C64::new(r, 0.0)],
        )?;
        Ok(product_pure_state(&zero, &bell)?.to_density())
    } else {
        Ok(PureState::basis(SystemLayout::physical(m), 0)?.to_density())
    }
}

fn load_warm_starts(cfg: &ExperimentConfig) -> Result<Vec<Vec<f64>>, CliError> {
    let Some(resume) = &cfg.resume else {
        return Ok(Vec::new());
    };
    let ckpt = Checkpoint::load(Path::new(resume))?;
    if ckpt.command != cfg.command
        || ckpt.alphabet != cfg.alphabet
        || ckpt.m != cfg.m
        || ckpt.state != cfg.state
        || ckpt.optimize_theta != cfg.optimize_theta
        || ckpt.config.probability_mode != cfg.probability_mode
    {
        return Err(CliError::usage(
            "checkpoint does not match this run (command, state, M, alphabet or probability mode differ)",
        ));
    }
    Ok(vec![ckpt.best_params])
}

fn write_checkpoint(cfg: &ExperimentConfig, result: &CapacityResult) -> Result<(), CliError> {
    let Some(out) = &cfg.out else { return Ok(()) };
    let path = format!("{out}.ckpt.json");
    let ckpt = Checkpoint::from_result(cfg, result);
    let text = serde_json::to_string_pretty(&ckpt).expect("checkpoint serializes");
    std::fs::write(&path, text)
        .map_err(|e| CliError::numerical(format!("cannot write checkpoint {path}: {e}")))
}

fn emit(cfg: &ExperimentConfig, payload: &str) -> Result<(), CliError> {
    match &cfg.out {
        Some(path) => std::fs::write(path, payload)
            .map_err(|e| CliError::numerical(format!("cannot write {path}: {e}"))),
        None => {
            println!("{payload}");
            Ok(())
        }
    }
}

/// Standard-protocol capacity of the input state via the bipartite formula,
/// with the sender as subsystem 1.
fn standard_capacity(rho: &DensityMatrix) -> Result<f64, CliError> {
    chi_dc_bipartite(rho, 1, false).map_err(CliError::numerical)
}

pub fn run_capacity_command(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let warm = load_warm_starts(cfg)?;
    let opt_cfg = cfg.optimization();

    let (result, chi_sdc) = if cfg.state == "sepmixed" {
        let result = optimize_separable_search_warm(cfg.alphabet, &opt_cfg, &warm)
            .map_err(CliError::numerical)?;
        let terms = result.best_state_terms.as_ref().expect("separable search");
        let instance =
            qdense_core::states::separable_mixed_state(terms).map_err(CliError::numerical)?;
        let chi_sdc = standard_capacity(&instance)?;
        (result, chi_sdc)
    } else {
        let rho = build_state(cfg)?;
        let chi_sdc = standard_capacity(&rho)?;
        let result = optimize_global_capacity_warm(&rho, cfg.m, cfg.alphabet, &opt_cfg, &warm)
            .map_err(CliError::numerical)?;
        (result, chi_sdc)
    };

    write_checkpoint(cfg, &result)?;
    let report = Report {
        command: cfg.command.clone(),
        state: cfg.state.clone(),
        m: cfg.m,
        alphabet: cfg.alphabet,
        best_value_bits: result.best_value,
        chi_sdc,
        delta: figure_of_merit(result.best_value, chi_sdc, cfg.m),
        scheme: result.best_scheme.clone(),
        locc1_scheme: None,
        theta: matches!(cfg.state.as_str(), "gghz").then_some(cfg.theta),
        state_terms: result.best_state_terms.clone(),
        per_restart_values: result.per_restart_values.clone(),
        converged: result.converged,
        seeds: Seeds::new(cfg.seed, cfg.restarts),
        runtime_seconds: result.wall_time,
        config: cfg.clone(),
    };
    emit(
        cfg,
        &serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    Ok(report)
}

pub fn run_locc1_command(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    if cfg.m != 2 {
        return Err(CliError::usage("locc1 decoding is defined for M = 2"));
    }
    let warm = load_warm_starts(cfg)?;
    let opt_cfg = cfg.optimization();

    let (result, chi_sdc, theta) = if cfg.optimize_theta {
        let result = optimize_locc1_theta_free_warm(cfg.alphabet, &opt_cfg, &warm)
            .map_err(CliError::numerical)?;
        let theta = result.best_theta.expect("theta-free search reports theta");
        (result, chi_sdc_gghz(theta), Some(theta))
    } else {
        let rho = build_state(cfg)?;
        let chi_sdc = standard_capacity(&rho)?;
        let result = optimize_locc1_warm(&rho, cfg.alphabet, &opt_cfg, &warm)
            .map_err(CliError::numerical)?;
        let theta = matches!(cfg.state.as_str(), "gghz").then_some(cfg.theta);
        (result, chi_sdc, theta)
    };

    write_checkpoint(cfg, &result)?;
    let report = Report {
        command: cfg.command.clone(),
        state: cfg.state.clone(),
        m: cfg.m,
        alphabet: cfg.alphabet,
        best_value_bits: result.best_value,
        chi_sdc,
        delta: figure_of_merit(result.best_value, chi_sdc, cfg.m),
        scheme: result.best_scheme.clone(),
        locc1_scheme: result.best_locc1.clone(),
        theta,
        state_terms: None,
        per_restart_values: result.per_restart_values.clone(),
        converged: result.converged,
        seeds: Seeds::new(cfg.seed, cfg.restarts),
        runtime_seconds: result.wall_time,
        config: cfg.clone(),
    };
    emit(
        cfg,
        &serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    Ok(report)
}

/// Sweep CSV, 6 decimal places, one row per grid point.
pub fn format_sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("theta,chi_ncr_lower,chi_sdc,delta,restarts_used,seed,status\n");
    for p in points {
        let fmt = |v: Option<f64>| match v {
            Some(v) => format!("{v:.6}"),
            None => String::new(),
        };
        out.push_str(&format!(
            "{:.6},{},{:.6},{},{},{},{}\n",
            p.theta,
            fmt(p.chi_ncr_lower),
            p.chi_sdc,
            fmt(p.delta),
            p.restarts_used,
            p.seed,
            p.status
        ));
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    pub config: ExperimentConfig,
}

pub fn run_sweep_command(cfg: &ExperimentConfig) -> Result<Vec<SweepPoint>, CliError> {
    if cfg.state != "gghz" {
        return Err(CliError::usage("sweep runs over the gghz family"));
    }
    let grid = cfg.grid();
    let points = theta_sweep(&grid, cfg.m, cfg.alphabet, &cfg.optimization())
        .map_err(CliError::numerical)?;
    let payload = match cfg.format.as_str() {
        "csv" => format_sweep_csv(&points),
        _ => serde_json::to_string_pretty(&SweepReport {
            points: points.clone(),
            config: cfg.clone(),
        })
        .expect("sweep serializes"),
    };
    emit(cfg, &payload)?;
    Ok(points)
}

/// Closed-form baseline rows (theta, chi_sdc).
pub fn baseline_rows(cfg: &ExperimentConfig) -> Vec<(f64, f64)> {
    cfg.grid().iter().map(|&t| (t, chi_sdc_gghz(t))).collect()
}

pub fn format_baseline_csv(rows: &[(f64, f64)]) -> String {
    let mut out = String::from("theta,chi_sdc\n");
    for (theta, chi) in rows {
        out.push_str(&format!("{theta:.6},{chi:.6}\n"));
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct BaselineReport {
    pub rows: Vec<(f64, f64)>,
    pub config: ExperimentConfig,
}

pub fn run_baseline_command(cfg: &ExperimentConfig) -> Result<Vec<(f64, f64)>, CliError> {
    if cfg.grid_points == 0 {
        return Err(CliError::usage("baseline grid must be nonempty"));
    }
    let rows = baseline_rows(cfg);
    let payload = match cfg.format.as_str() {
        "csv" => format_baseline_csv(&rows),
        _ => serde_json::to_string_pretty(&BaselineReport {
            rows: rows.clone(),
            config: cfg.clone(),
        })
        .expect("baseline serializes"),
    };
    emit(cfg, &payload)?;
    Ok(rows)
}

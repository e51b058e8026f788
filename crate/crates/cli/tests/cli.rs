//! Integration tests for config resolution, reports, checkpoints and the
//! binary's exit codes.

use std::process::Command;

use qdense_cli::commands::{
    baseline_rows, build_state, format_baseline_csv, run_capacity_command, run_sweep_command,
    Checkpoint, Report,
};
use qdense_cli::config::{CommonOpts, ExperimentConfig};

use qdense_core::information::chi_sdc_gghz;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qdense"))
}

fn temp_path(name: &str) -> std::path::PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("qdense-test-{}-{name}", std::process::id()));
    p
}

fn fast_opts() -> CommonOpts {
    CommonOpts {
        alphabet: Some(2),
        restarts: Some(3),
        max_iterations: Some(80),
        seed: Some(5),
        ..Default::default()
    }
}

#[test]
fn flags_override_config_file() {
    let path = temp_path("config.json");
    std::fs::write(
        &path,
        r#"{"theta": 1.0, "alphabet": 5, "restarts": 2, "seed": 42}"#,
    )
    .unwrap();
    let opts = CommonOpts {
        config: Some(path.clone()),
        alphabet: Some(3),
        ..Default::default()
    };
    let cfg = ExperimentConfig::resolve("capacity", &opts).unwrap();
    assert_eq!(cfg.alphabet, 3); // flag wins
    assert_eq!(cfg.theta, 1.0); // file value
    assert_eq!(cfg.restarts, 2);
    assert_eq!(cfg.seed, 42);
    assert_eq!(cfg.m, 2); // default
    std::fs::remove_file(path).unwrap();
}

#[test]
fn unknown_config_keys_are_rejected() {
    let path = temp_path("bad-config.json");
    std::fs::write(&path, r#"{"alphbet": 5}"#).unwrap();
    let opts = CommonOpts {
        config: Some(path.clone()),
        ..Default::default()
    };
    let err = ExperimentConfig::resolve("capacity", &opts).unwrap_err();
    assert_eq!(err.code, 1);
    std::fs::remove_file(path).unwrap();
}

#[test]
fn alphabet_zero_is_a_usage_error() {
    let out = bin()
        .args(["capacity", "--alphabet", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("alphabet size must be >= 1"), "{stderr}");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = bin().args(["capacity", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn locc1_rejects_three_receivers() {
    let out = bin()
        .args(["locc1", "--M", "3", "--alphabet", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn thread_cap_must_be_an_integer() {
    let out = bin()
        .args(["baseline", "--grid-points", "3"])
        .env("NCR_DC_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin()
        .args(["baseline", "--grid-points", "3"])
        .env("NCR_DC_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn baseline_matches_closed_form_at_full_precision() {
    let opts = CommonOpts {
        grid_points: Some(63),
        ..Default::default()
    };
    let cfg = ExperimentConfig::resolve("baseline", &opts).unwrap();
    for (theta, chi) in baseline_rows(&cfg) {
        assert!((chi - chi_sdc_gghz(theta)).abs() < 1e-12);
    }
    let csv = format_baseline_csv(&baseline_rows(&cfg));
    assert!(csv.starts_with("theta,chi_sdc\n"));
    assert_eq!(csv.lines().count(), 64);
}

#[test]
fn capacity_report_embeds_config_and_seeds() {
    let mut opts = fast_opts();
    let out_path = temp_path("report.json");
    opts.out = Some(out_path.clone());
    let cfg = ExperimentConfig::resolve("capacity", &opts).unwrap();
    let report = run_capacity_command(&cfg).unwrap();
    assert_eq!(report.config, cfg);
    assert_eq!(report.seeds.base, 5);
    assert_eq!(report.seeds.per_restart.len(), 3);
    assert!(report.best_value_bits > 0.9);

    // The written report parses back to the same content.
    let text = std::fs::read_to_string(&out_path).unwrap();
    let parsed: Report = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed.config, cfg);
    assert_eq!(parsed.per_restart_values, report.per_restart_values);

    // And a checkpoint was written next to it.
    let ckpt = Checkpoint::load(&out_path.with_extension("json.ckpt.json")).unwrap();
    assert_eq!(ckpt.alphabet, 2);
    std::fs::remove_file(&out_path).unwrap();
    std::fs::remove_file(out_path.with_extension("json.ckpt.json")).unwrap();
}

#[test]
fn resume_warm_starts_from_checkpoint() {
    let mut opts = fast_opts();
    let out_path = temp_path("resume.json");
    opts.out = Some(out_path.clone());
    let cfg = ExperimentConfig::resolve("capacity", &opts).unwrap();
    let first = run_capacity_command(&cfg).unwrap();

    let ckpt_path = format!("{}.ckpt.json", out_path.display());
    let mut opts2 = fast_opts();
    opts2.restarts = Some(1);
    opts2.resume = Some(ckpt_path.clone().into());
    let cfg2 = ExperimentConfig::resolve("capacity", &opts2).unwrap();
    let second = run_capacity_command(&cfg2).unwrap();
    // One cold restart plus the warm start; cannot undershoot the checkpoint.
    assert_eq!(second.per_restart_values.len(), 2);
    assert!(second.best_value_bits >= first.best_value_bits - 1e-9);

    // Mismatched shape is refused.
    let mut opts3 = fast_opts();
    opts3.alphabet = Some(3);
    opts3.resume = Some(ckpt_path.clone().into());
    let cfg3 = ExperimentConfig::resolve("capacity", &opts3).unwrap();
    assert_eq!(run_capacity_command(&cfg3).unwrap_err().code, 1);

    std::fs::remove_file(&out_path).unwrap();
    std::fs::remove_file(ckpt_path).unwrap();
}

#[test]
fn state_files_round_trip_through_capacity() {
    use qdense_core::states::{gghz_state, StateDocument};
    let state = gghz_state(3, 1.2, 0.0).unwrap();
    let doc = StateDocument::from_pure(&state);
    let path = temp_path("state.json");
    std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();

    let opts = CommonOpts {
        state: Some("file".into()),
        state_file: Some(path.clone()),
        ..fast_opts()
    };
    let cfg = ExperimentConfig::resolve("capacity", &opts).unwrap();
    let rho = build_state(&cfg).unwrap();
    assert_eq!(rho.dim(), 8);
    let report = run_capacity_command(&cfg).unwrap();
    assert!(report.best_value_bits > 0.9);
    std::fs::remove_file(path).unwrap();
}

#[test]
fn invalid_density_in_state_file_is_a_numerical_error() {
    // Parses fine but violates the unit-trace invariant: exit code 2.
    let path = temp_path("trace2-state.json");
    let doc = serde_json::json!({
        "kind": "density",
        "labels": ["A", "B1", "B2"],
        "dims": [2, 2, 2],
        "re": (0..64).map(|i| if i % 9 == 0 { 0.25 } else { 0.0 }).collect::<Vec<f64>>(),
        "im": vec![0.0; 64],
    });
    std::fs::write(&path, doc.to_string()).unwrap();
    let out = bin()
        .args([
            "capacity",
            "--state",
            "file",
            "--state-file",
            path.to_str().unwrap(),
            "--alphabet",
            "2",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_file(path).unwrap();
}

#[test]
fn corrupted_state_file_is_a_parse_error() {
    let path = temp_path("broken-state.json");
    std::fs::write(&path, "{ not json").unwrap();
    let out = bin()
        .args([
            "capacity",
            "--state",
            "file",
            "--state-file",
            path.to_str().unwrap(),
            "--alphabet",
            "2",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("parse"), "{stderr}");
    std::fs::remove_file(path).unwrap();
}

#[test]
fn sweep_csv_is_byte_identical_across_runs() {
    let run = |tag: &str| {
        let opts = CommonOpts {
            alphabet: Some(2),
            restarts: Some(2),
            max_iterations: Some(60),
            seed: Some(77),
            grid_points: Some(4),
            out: Some(temp_path(tag)),
            ..Default::default()
        };
        let cfg = ExperimentConfig::resolve("sweep", &opts).unwrap();
        run_sweep_command(&cfg).unwrap();
        let bytes = std::fs::read(temp_path(tag)).unwrap();
        std::fs::remove_file(temp_path(tag)).unwrap();
        bytes
    };
    let a = run("sweep-a.csv");
    let b = run("sweep-b.csv");
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("theta,chi_ncr_lower,chi_sdc,delta,restarts_used,seed,status\n"));
    assert_eq!(text.lines().count(), 5);
    for line in text.lines().skip(1) {
        assert!(line.ends_with(",ok"), "{line}");
    }
}

#[test]
fn sweep_rejects_empty_grid() {
    let out = bin()
        .args(["sweep", "--grid-points", "0", "--alphabet", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn capacity_binary_emits_report_on_stdout() {
    let out = bin()
        .args([
            "capacity",
            "--state",
            "gghz",
            "--theta",
            "1.5708",
            "--M",
            "2",
            "--alphabet",
            "2",
            "--restarts",
            "3",
            "--max-iterations",
            "80",
            "--seed",
            "5",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: Report = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report.best_value_bits > 0.9);
    assert!((report.chi_sdc - 2.0).abs() < 1e-3);
}

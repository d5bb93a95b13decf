//! CLI behavior: exit-code policy, artifact round-trips, header rows and
//! flag-over-config precedence.

use std::process::Command;

use admissibility_lab::config::{Experiment, PartialConfig, RunConfig};
use admissibility_lab::experiments::{self, ExperimentData};
use admissibility_lab::report::read_result;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_admissibility-lab"))
}

fn small_config(experiment: Experiment, out: &std::path::Path) -> RunConfig {
    let mut cfg = RunConfig::default_for(experiment);
    cfg.out_dir = out.to_path_buf();
    cfg
}

#[test]
fn result_json_round_trips_through_the_reader() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(Experiment::Ex2Divergence, dir.path());
    cfg.n = 64;
    cfg.n_list = vec![5, 10];
    cfg.grid.re_points = 8;
    cfg.grid.im_points = 24;
    let result = experiments::run(&cfg).unwrap();
    let loaded = read_result(&dir.path().join("result.json")).unwrap();
    assert_eq!(loaded, result);
    match loaded.data {
        ExperimentData::Ex2Divergence { report } => {
            assert_eq!(report.witness_sequence.len(), 2);
        }
        other => panic!("unexpected payload: {other:?}"),
    }
}

#[test]
fn empty_witness_list_yields_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(Experiment::Ex1Feedback, dir.path());
    cfg.n = 16;
    cfg.n_list = vec![];
    experiments::run(&cfg).unwrap();
    let body = std::fs::read_to_string(dir.path().join("ex1_feedback_theorem1.csv")).unwrap();
    assert_eq!(body, "n,t,phi_norm_sq,bound\n");
}

#[test]
fn csv_files_carry_documented_headers() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(Experiment::Ex1Divergence, dir.path());
    cfg.n = 300;
    cfg.n_list = vec![16, 256];
    experiments::run(&cfg).unwrap();
    let body = std::fs::read_to_string(dir.path().join("ex1_divergence.csv")).unwrap();
    assert!(body.starts_with("n,n_quarter,lower_bound,measured_phi_sq,t\n"));
    assert_eq!(body.lines().count(), 3);
}

#[test]
fn science_outcomes_exit_zero_config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    // a not-admissible verdict is a completed run
    let status = bin()
        .args(["ex2-divergence", "--N", "64", "--n-list", "5,10"])
        .arg("--out")
        .arg(dir.path().join("ok"))
        .status()
        .unwrap();
    assert!(status.success());

    // non-square witness index for ex1-divergence is a usage error
    let status = bin()
        .args(["ex1-divergence", "--n-list", "15"])
        .arg("--out")
        .arg(dir.path().join("bad"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // unknown experiment name is a clap usage error
    let status = bin().arg("no-such-experiment").status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("config.json");
    std::fs::write(
        &cfg_path,
        serde_json::json!({
            "N": 80,
            "n_list": [4, 16],
            "grid": { "re_min": 1e-6, "re_max": 100.0, "re_points": 8, "im_pad": 10.0, "im_points": 16 }
        })
        .to_string(),
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .args(["ex1-divergence", "--config"])
        .arg(&cfg_path)
        .args(["--N", "400"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let result = read_result(&out.join("result.json")).unwrap();
    assert_eq!(result.config.n, 400, "flag must win over the config file");
    assert_eq!(result.config.n_list, vec![4, 16], "file value must survive");
    assert_eq!(result.config.grid.re_points, 8);
    assert_eq!(result.schema, 1);
}

#[test]
fn every_experiment_runs_end_to_end() {
    use admissibility_lab::config::SystemChoice;
    let dir = tempfile::tempdir().unwrap();
    let shrink = |cfg: &mut RunConfig| {
        cfg.grid.re_points = 8;
        cfg.grid.im_points = 24;
    };
    let cases: Vec<(RunConfig, &str, &str)> = vec![
        {
            let mut c = small_config(Experiment::Ex1Divergence, &dir.path().join("a"));
            c.n = 300;
            c.n_list = vec![16, 256];
            (c, "lower-bounds", "hold")
        },
        {
            let mut c = small_config(Experiment::Ex1Feedback, &dir.path().join("b"));
            c.n = 16;
            c.n_list = vec![4, 9];
            (c, "theorem1-bound", "holds")
        },
        {
            let mut c = small_config(Experiment::Ex2Criterion, &dir.path().join("c"));
            c.n = 64;
            shrink(&mut c);
            (c, "admissibility", "admissible")
        },
        {
            let mut c = small_config(Experiment::Ex2Divergence, &dir.path().join("d"));
            c.n = 32;
            c.n_list = vec![5, 10, 20];
            shrink(&mut c);
            (c, "admissibility", "not-admissible")
        },
        {
            let mut c = small_config(Experiment::Ex2Perturbation, &dir.path().join("e"));
            c.n = 64;
            (c, "rank", "infinite")
        },
        {
            let mut c = small_config(Experiment::CriterionScan, &dir.path().join("f"));
            c.n = 64;
            c.system = SystemChoice::Example2Aprime;
            c.n_list = vec![5, 10, 20];
            shrink(&mut c);
            (c, "admissibility", "not-admissible")
        },
        {
            let mut c = small_config(Experiment::StabilityReport, &dir.path().join("g"));
            c.n = 24;
            c.n_list = vec![4, 9, 16];
            (c, "spectrum-strictly-left", "holds")
        },
        {
            let mut c = small_config(Experiment::StabilityReport, &dir.path().join("h"));
            c.n = 16;
            c.system = SystemChoice::Example2A;
            c.n_list = vec![];
            (c, "contraction", "holds")
        },
        {
            let c = small_config(Experiment::Selftest, &dir.path().join("i"));
            (c, "selftest", "pass")
        },
    ];
    for (cfg, key, expected) in cases {
        cfg.validate().unwrap();
        let result = experiments::run(&cfg).unwrap();
        assert_eq!(
            result.verdicts.get(key).map(String::as_str),
            Some(expected),
            "{} verdict {key}",
            cfg.experiment.name()
        );
        assert!(cfg.out_dir.join("result.json").exists());
    }
}

#[test]
fn partial_config_parses_with_defaults() {
    let partial: PartialConfig = serde_json::from_str(r#"{ "N": 32 }"#).unwrap();
    let cfg = RunConfig::resolve(
        Experiment::Ex2Criterion,
        Some(partial),
        PartialConfig::default(),
    )
    .unwrap();
    assert_eq!(cfg.n, 32);
    assert_eq!(cfg.grid.re_points, 60);
}

#[test]
fn custom_beta_profile_through_config_file() {
    // the witness bounds are beta-free, so a custom profile must reproduce
    // the same lower-bound verdict
    let dir = tempfile::tempdir().unwrap();
    let table: Vec<f64> = (1..=16).map(|k| 1.5 * k as f64 + 0.25).collect();
    let cfg_path = dir.path().join("config.json");
    std::fs::write(
        &cfg_path,
        serde_json::json!({
            "N": 16,
            "beta_profile": { "custom": table },
            "n_list": [4, 16]
        })
        .to_string(),
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .args(["ex1-divergence", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let result = read_result(&out.join("result.json")).unwrap();
    assert_eq!(
        result.verdicts.get("lower-bounds").map(String::as_str),
        Some("hold")
    );

    // a non-increasing table is rejected before any numerics run
    std::fs::write(
        &cfg_path,
        serde_json::json!({
            "N": 4,
            "beta_profile": { "custom": [1.0, 1.0, 2.0, 3.0] },
            "n_list": [4]
        })
        .to_string(),
    )
    .unwrap();
    let output = bin()
        .args(["ex1-divergence", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(
        output.status.code(),
        Some(2),
        "bad profile is a usage error"
    );
}

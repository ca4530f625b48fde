use std::path::Path;
use std::process::{Command, Output};

use nlam::experiment::ExperimentConfig;

fn nlam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlam"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn small_sim(dir: &Path) -> Output {
    nlam(&[
        "simulate",
        "-o",
        dir.to_str().unwrap(),
        "--radius",
        "48",
        "--seeds",
        "0..3",
        "--t-final",
        "100",
        "--tail-j0",
        "16",
        "--set",
        "fit_t_min=5",
        "--set",
        "fit_t_max=100",
    ])
}

#[test]
fn show_config_round_trips() {
    let out = nlam(&["show-config"]);
    assert!(out.status.success());
    let cfg = ExperimentConfig::parse(&stdout(&out)).unwrap();
    assert_eq!(cfg, ExperimentConfig::default());
}

#[test]
fn file_then_set_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    // the file alone is invalid (tail_j0 defaults past radius 64)
    std::fs::write(&path, "# test\nepsilon = 0.2\ndelta = 0.3\nradius = 64\n").unwrap();
    assert_eq!(
        nlam(&["-c", path.to_str().unwrap(), "show-config"]).status.code(),
        Some(2)
    );
    let out = nlam(&[
        "-c",
        path.to_str().unwrap(),
        "--set",
        "delta=0.4",
        "--set",
        "tail_j0=32",
        "show-config",
    ]);
    let cfg = ExperimentConfig::parse(&stdout(&out)).unwrap();
    assert_eq!((cfg.epsilon, cfg.delta, cfg.radius), (0.2, 0.4, 64));
}

#[test]
fn simulate_fit_plot_and_restart() {
    let dir = tempfile::tempdir().unwrap();
    let out = small_sim(dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("3 seeds completed (0 reused"));
    let first = std::fs::read(dir.path().join("trace_seed1.csv")).unwrap();

    let again = small_sim(dir.path());
    assert!(stdout(&again).contains("(3 reused"));
    assert_eq!(std::fs::read(dir.path().join("trace_seed1.csv")).unwrap(), first);

    let d = dir.path().to_str().unwrap();
    let fit = nlam(&["fit", "-o", d, "--t-min", "5", "--t-max", "100"]);
    assert!(fit.status.success(), "{}", String::from_utf8_lossy(&fit.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fit.json")).unwrap()).unwrap();
    assert_eq!(json["seeds"].as_array().unwrap().len(), 3);
    assert!(json["median"]["kappa"].is_number());
    assert!(json["median_bootstrap"]["stderr"].as_f64().unwrap() >= 0.0);

    let plot = nlam(&["plot", "-o", d, "--t-min", "5", "--t-max", "100"]);
    assert!(plot.status.success());
    assert!(dir.path().join("diffusion_ensemble.csv").exists());
    assert!(dir.path().join("plot_diffusion.py").exists());
}

#[test]
fn normal_form_and_measure_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let nf = nlam(&["normal-form", "-o", d, "--epsilon", "1e-4", "--j0", "40", "--seed", "6"]);
    assert!(nf.status.success(), "{}", String::from_utf8_lossy(&nf.stderr));
    assert!(dir.path().join("normal_form_seed6.json").exists());
    assert!(dir.path().join("normal_form_seed6_step1.json").exists());

    let m = nlam(&[
        "measure",
        "-o",
        d,
        "--j0",
        "40",
        "--epsilon",
        "1e-4",
        "--kappa",
        "2",
        "--samples",
        "5000",
    ]);
    assert!(m.status.success(), "{}", String::from_utf8_lossy(&m.stderr));
    let csv = std::fs::read_to_string(dir.path().join("measure_census.csv")).unwrap();
    assert!(csv.starts_with("k,s,classes"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("measure_summary.json")).unwrap()).unwrap();
    assert!(summary["nonresonant_estimate"].as_f64().unwrap() > 0.0);
}

#[test]
fn tame_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = nlam(&[
        "tame-check",
        "-o",
        dir.path().to_str().unwrap(),
        "--j0",
        "20",
        "--states",
        "10",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("0 failures"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(nlam(&["show-config", "--set", "nonsense=1"]).status.code(), Some(2));
    assert_eq!(nlam(&["simulate", "-o", d, "--dt", "-1"]).status.code(), Some(2));
    // the paper schedule cannot contract at ε = 0.05, j0 = 40
    let nf = nlam(&["normal-form", "-o", d, "--profile", "paper", "--epsilon", "0.05"]);
    assert_eq!(nf.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&nf.stderr).contains("epsilon above threshold"));
    let missing = dir.path().join("absent");
    assert_eq!(
        nlam(&["fit", "--dir", missing.to_str().unwrap()]).status.code(),
        Some(4)
    );
}

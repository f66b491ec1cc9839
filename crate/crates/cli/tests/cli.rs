use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use semitoric_cli::config::{Command as Cmd, RunConfig};
use semitoric_cli::CliError;
use serde_json::Value;

fn semitoric(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semitoric"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("SEMITORIC_OUT")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn missing_flag_prints_usage() {
    let dir = tempfile::tempdir().unwrap();
    let o = semitoric(&["spectrum", "--hbar", "0.1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));
    let o = semitoric(&["polygon"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_exits_cleanly() {
    let o = Command::new(env!("CARGO_BIN_EXE_semitoric")).arg("--help").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    for sub in ["bifurcation", "monodromy", "taylor", "polygon", "dh", "spectrum", "invert", "converge", "reproduce-figures"] {
        assert!(text.contains(sub), "{sub}");
    }
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = semitoric(&["bifurcation", "--model", "double_pendulum"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("model"));

    let o = semitoric(&["converge", "--model", "spin_oscillator", "--hbar", "0.2,0.1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("hbar"));

    let cfg = dir.path().join("bad.json");
    fs::write(
        &cfg,
        r#"{"command": "spectrum", "model": {"model": "spherical_pendulum"}, "hbar": [0.1],
            "window": {"a_lo": 1.0, "a_hi": -1.0, "b_lo": 0.0, "b_hi": 1.0}}"#,
    )
    .unwrap();
    let o = semitoric(&["run", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("window.a_hi"), "{}", stderr(&o));

    fs::write(&cfg, r#"{"command": "spectrum", "colour": 3}"#).unwrap();
    let o = semitoric(&["run", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let csv = dir.path().join("broken.csv");
    fs::write(&csv, "hbar,mu,lambda,multiplicity\n0.1,0.0,oops,1\n").unwrap();
    let o = semitoric(&["invert", "--input", csv.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numeric_failures_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    // The pendulum has no compact polygon.
    let o = semitoric(&["polygon", "--model", "spherical_pendulum"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("cartography"));
}

#[test]
fn pendulum_spectrum_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = semitoric(
        &["spectrum", "--model", "spherical_pendulum", "--hbar", "0.1", "--L", "60"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("hbar,mu,lambda,multiplicity,trusted"));
    assert!(lines.count() > 300);
    let svg = fs::read_to_string(dir.path().join("spectrum.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));

    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["command"], "spectrum");
    assert_eq!(m["seed"], 42);
    assert_eq!(m["config"]["l_max"], 60);
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert!(m["versions"]["semitoric"].is_string());
    assert_eq!(m["outputs"], serde_json::json!(["spectrum.csv", "spectrum.svg"]));
}

#[test]
fn outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "dh", "--model", "coupled_angular_momenta", "--param", "b=1", "--mc-samples", "20000",
        "--resolution", "6", "--seed", "7",
    ];
    assert!(semitoric(&args, a.path()).status.success());
    assert!(semitoric(&args, b.path()).status.success());
    for f in ["dh.csv", "dh.json", "dh.svg"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    assert_eq!(json(&a.path().join("manifest.json"))["seed"], 7);
    let header = fs::read_to_string(a.path().join("dh.csv")).unwrap();
    assert!(header.starts_with("x,rho\n"));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_semitoric"))
        .args(["bifurcation", "--model", "toric_product"])
        .env("SEMITORIC_OUT", &target)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(target.join("bifurcation.csv")).unwrap();
    assert!(csv.starts_with("a,b,type_k,type_e,type_h,type_ff\n"));
    // Four elliptic-elliptic corners.
    assert_eq!(csv.lines().filter(|l| l.ends_with(",0,2,0,0")).count(), 4);
}

#[test]
fn polygon_json_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let o = semitoric(
        &["polygon", "--model", "coupled_angular_momenta", "--param", "b=1", "--eps", "-"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let p = json(&dir.path().join("polygon.json"));
    assert_eq!(p["epsilons"], serde_json::json!([-1]));
    assert_eq!(p["vertices"], serde_json::json!([["-2", "0"], ["0", "0"], ["2", "4"]]));
    assert_eq!(p["marked"][0]["c"][0], "0");
    let check = json(&dir.path().join("polygon_check.json"));
    assert_eq!(check["smooth_vertices"], serde_json::json!([true, false, true]));
    assert!(dir.path().join("polygon.svg").exists());
}

#[test]
fn monodromy_and_taylor() {
    let dir = tempfile::tempdir().unwrap();
    let o = semitoric(&["monodromy", "--model", "spherical_pendulum"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let m = json(&dir.path().join("monodromy.json"));
    assert_eq!(m["center"], serde_json::json!([0.0, 1.0]));
    assert_eq!(m["elementary_unipotent"], true);

    let o = semitoric(&["taylor", "--model", "spherical_pendulum", "--degree", "2"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let t = json(&dir.path().join("taylor.json"));
    assert_eq!(t["degree"], 2);
    assert!(t["coefficients"].as_array().unwrap().iter().all(|c| c["value"].is_string()));

    let o = semitoric(&["monodromy", "--model", "toric_product"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("center"));
}

#[test]
fn invert_reads_a_spectrum_csv() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec");
    let o = semitoric(&["spectrum", "--model", "spin_oscillator", "--hbar", "0.1"], &spec);
    assert!(o.status.success(), "{}", stderr(&o));
    let input = spec.join("spectrum.csv");
    let inv = dir.path().join("inv");
    let o = semitoric(&["invert", "--input", input.to_str().unwrap()], &inv);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&inv.join("inverse_report.json"));
    assert_eq!(r["mff_estimate"], 1);
    let f = &r["focus_estimates"][0];
    assert!((f["a"].as_f64().unwrap() - 1.0).abs() < 0.3);
    assert!(f["b"].as_f64().unwrap().abs() < 0.3);
}

#[test]
fn figures_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let o = semitoric(&["reproduce-figures"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    for f in [
        "figure1_classical_pendulum.svg",
        "figure2_quantum_pendulum.svg",
        "figure3_jaynes_cummings.svg",
        "figure2_pendulum_spectrum.csv",
        "figure3_jc_spectrum.csv",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn run_config_defaults_and_validation() {
    let cfg = RunConfig::new(Cmd::Polygon);
    assert_eq!(cfg.seed, 42);
    assert!(matches!(cfg.validate(), Err(CliError::Config(m)) if m.starts_with("model")));

    let cfg = RunConfig::from_json(
        r#"{"command": "taylor", "model": {"model": "spherical_pendulum"}, "tol": 0}"#,
    )
    .unwrap();
    assert!(matches!(cfg.validate(), Err(CliError::Config(m)) if m.starts_with("tol")));

    let cfg = RunConfig::from_json(r#"{"command": "dh", "model": {"model": "toric_product"}, "eps": [2]}"#).unwrap();
    assert!(matches!(cfg.validate(), Err(CliError::Config(m)) if m.starts_with("eps[0]")));

    let cfg = RunConfig::from_json(r#"{"command": "spectrum", "model": {"model": "spin_oscillator"}, "hbar": [1.5]}"#)
        .unwrap();
    assert!(matches!(cfg.validate(), Err(CliError::Config(m)) if m.starts_with("hbar[0]")));

    let ok = RunConfig::from_json(r#"{"command": "invert", "input": "x.csv"}"#).unwrap();
    assert!(ok.validate().is_ok());
    assert_eq!(RunConfig::from_json(&ok.to_json()).unwrap(), ok);
}

//! End-to-end tests against the compiled binary.

use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_hyperspdc");

const VALID_CONFIG: &str = r#"
seed = 7

[grid]
center_rad_per_ps = 1191.0
half_span_rad_per_ps = 12.0
n_points = 96

[model]
omega0_rad_per_ps = 1191.0
delta_rad_per_ps = 4.0
sigma_rad_per_ps = 0.5
pi_phase = true

[hom]
n_delays = 51
basis = "DA"
phi_rad = 0.0

[tofs]
dispersion_ps_per_nm = -1350.0
lambda_ref_nm = 1582.0
jitter_sigma_ps = 15.7
bin_width_ps = 100.0
n_pairs = 20000.0
"#;

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn validate_only_accepts_valid_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), VALID_CONFIG);
    let out = run(&[
        "simulate-jsa",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
        "--validate-only",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.path().join("out").exists(), "validate-only must not write");
}

#[test]
fn validation_reports_all_problems_not_just_the_first() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[grid]
center_rad_per_ps = 1191.0
half_span_rad_per_ps = -1.0
n_points = 96

[model]
omega0_rad_per_ps = 1191.0
delta_rad_per_ps = 4.0
sigma_rad_per_ps = -0.5
pi_phase = true
"#,
    );
    let out = run(&[
        "simulate-jsa",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
        "--validate-only",
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("grid.half_span_rad_per_ps"), "{stderr}");
    assert!(stderr.contains("model.sigma_rad_per_ps"), "{stderr}");
}

#[test]
fn missing_config_file_is_named() {
    let out = run(&[
        "schmidt",
        "--config",
        "/nonexistent/cfg.toml",
        "--out",
        "/tmp/unused",
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("/nonexistent/cfg.toml"), "{stderr}");
}

#[test]
fn missing_jsa_source_is_diagnosed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[hom]\nn_delays = 51\nmax_delay_ps = 20.0\n");
    let out = run(&[
        "hom-inter",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("missing jsa input"), "{stderr}");
}

#[test]
fn missing_input_file_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[inputs]\njsi_csv = \"no_such_measurement.csv\"\n",
    );
    let out = run(&[
        "schmidt",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("no_such_measurement.csv"), "{stderr}");
}

#[test]
fn identical_config_and_seed_give_byte_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), VALID_CONFIG);
    for sub in ["a", "b"] {
        let out = run(&[
            "tofs-roundtrip",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().join(sub).to_str().unwrap(),
            "--seed",
            "123",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["histogram.csv", "reconstructed_jsi.csv", "summary.toml"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), VALID_CONFIG);
    for (sub, seed) in [("a", "1"), ("b", "2")] {
        let out = run(&[
            "tofs-roundtrip",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().join(sub).to_str().unwrap(),
            "--seed",
            seed,
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(dir.path().join("a/histogram.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/histogram.csv")).unwrap();
    assert_ne!(a, b, "different seeds must change the sampled histogram");
}

#[test]
fn manifest_lists_every_written_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), VALID_CONFIG);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "hom-hyper",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let manifest: toml::Value =
        toml::from_str(&std::fs::read_to_string(out_dir.join("manifest.toml")).unwrap()).unwrap();
    let mut listed: Vec<String> = manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    let mut on_disk: Vec<String> = std::fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    listed.sort();
    on_disk.sort();
    assert_eq!(listed, on_disk);
    assert_eq!(manifest["seed"].as_integer(), Some(7));
    assert_eq!(manifest["experiment"].as_str(), Some("hom-hyper"));
}

#[test]
fn hom_hyper_writes_three_port_pair_traces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), VALID_CONFIG);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "hom-hyper",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in [
        "cross_pol_same_port.csv",
        "cross_pol_cross_port.csv",
        "same_pol_cross_port.csv",
    ] {
        let text = std::fs::read_to_string(out_dir.join(name)).unwrap();
        assert!(text.lines().count() > 50, "{name} looks truncated");
    }
}

#[test]
fn figure_repro_fig1c_writes_jsa_and_schmidt_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[figure]\nid = \"fig1c\"\n");
    let out_dir = dir.path().join("out");
    let out = run(&[
        "figure-repro",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("jsi.csv").exists());
    assert!(out_dir.join("marginals.csv").exists());
    let summary = std::fs::read_to_string(out_dir.join("summary.toml")).unwrap();
    assert!(summary.contains("schmidt_number"), "{summary}");
}

#[test]
fn schmidt_reads_an_external_jsi_file() {
    let dir = tempfile::tempdir().unwrap();
    // first produce a JSI with the model, then feed it back in as a file
    let cfg = write_config(dir.path(), VALID_CONFIG);
    let sim_dir = dir.path().join("sim");
    let out = run(&[
        "simulate-jsa",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        sim_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let cfg2 = dir.path().join("schmidt.toml");
    std::fs::write(
        &cfg2,
        format!("[inputs]\njsi_csv = \"{}\"\n", sim_dir.join("jsi.csv").display()),
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "schmidt",
        "--config",
        cfg2.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(out_dir.join("summary.toml")).unwrap();
    let value: toml::Value = toml::from_str(&summary).unwrap();
    let k = value["schmidt_number"].as_float().unwrap();
    assert!((k - 2.0).abs() < 0.05, "K = {k}");
}

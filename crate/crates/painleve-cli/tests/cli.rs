//! Black-box tests of the binary: exit codes, determinism of the emitted
//! artifacts, and the bundled scenario configs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_painleve"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn run(out_dir: &Path, args: &[&str]) -> Output {
    bin()
        .arg("--out-dir")
        .arg(out_dir)
        .args(args)
        .output()
        .expect("binary should run")
}

#[test]
fn missing_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["simulate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        "[body]\nalpha = 3.0\nmu = 1.4\nspin = 2.0\n\n[compliance]\nepsilon = 1e-3\ndelta = 1.0\n\n[initial]\ny = 0.0\nw = 0.0\ntheta = 1.0\nphi = 0.5\nv = 1.0\n\n[integration]\nt_end = 0.1\n",
    )
    .unwrap();
    let out = run(dir.path(), &["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("spin"), "stderr should name the bad key: {err}");
}

#[test]
fn invalid_tolerance_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["--tol", "-1e-9", "phase-map"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn subcritical_friction_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["phase-map", "--mu", "1.0"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("domain"), "stderr: {err}");
}

#[test]
fn invalid_worker_count_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("--out-dir")
        .arg(dir.path())
        .args(["phase-map"])
        .env("PAINLEVE_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn freefall_scenario_touches_down_at_the_ballistic_time() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["simulate", "--config", scenario("freefall.toml").to_str().unwrap()],
    );
    assert!(out.status.success());

    let events = std::fs::read_to_string(dir.path().join("events.csv")).unwrap();
    let onset = events
        .lines()
        .skip(1)
        .find(|l| l.split(',').nth(1) == Some("contact_onset"))
        .expect("an onset event");
    let t: f64 = onset.split(',').next().unwrap().parse().unwrap();
    assert!(
        (t - std::f64::consts::SQRT_2).abs() <= 1e-9,
        "onset at {t}, expected sqrt(2)"
    );
}

#[test]
fn inconsistent_scenario_reports_the_rebound_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["simulate", "--config", scenario("inconsistent.toml").to_str().unwrap()],
    );
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("impact without collision"), "{stdout}");
    assert!(stdout.contains("measured at contact loss"), "{stdout}");
    assert!(dir.path().join("summary.txt").exists());
}

#[test]
fn two_rod_scenario_grazes_above_and_rebounds_below() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["two-rod", "--config", scenario("two_rod.toml").to_str().unwrap()],
    );
    assert!(out.status.success());

    let y_at = |name: &str| -> Vec<f64> {
        std::fs::read_to_string(dir.path().join(name))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect()
    };
    let upper = y_at("two_rod_upper.csv");
    let lower = y_at("two_rod_lower.csv");
    assert!(upper.iter().all(|&y| y > 0.0), "upper rod must stay clear");

    let upper_events = std::fs::read_to_string(dir.path().join("two_rod_upper_events.csv")).unwrap();
    assert_eq!(upper_events.lines().count(), 1, "upper rod: header only");
    let lower_events = std::fs::read_to_string(dir.path().join("two_rod_lower_events.csv")).unwrap();
    assert!(lower_events.contains("contact_loss"), "lower rod must rebound");

    // the rebound throws the lower rod past the still-ballistic upper one,
    // so compare magnitudes: the pair starts 1e-3 apart and must spread
    let gap = (upper.last().unwrap() - lower.last().unwrap()).abs();
    assert!(gap > 0.05, "rods should separate, final gap {gap}");
}

#[test]
fn single_point_sweep_equals_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("one.toml");
    std::fs::write(
        &cfg,
        "[body]\nalpha = 3.0\nmu = 1.4\n\n[sweep]\nkind = \"theta\"\nstart = 1.0\nstop = 1.1\ncount = 1\ndelta = 1.0\n",
    )
    .unwrap();
    let out = run(dir.path(), &["sweep-e", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());

    let csv = std::fs::read_to_string(dir.path().join("sweep_e.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    let e_cf: f64 = row.split(',').nth(1).unwrap().parse().unwrap();

    let body = painleve::ClassicalRod::new(painleve::BodyParams::new(3.0, 1.4).unwrap());
    let lin = painleve::linearization(&body, 1.0).unwrap();
    let expected = painleve::restitution(&lin, 1.0).unwrap();
    assert_eq!(e_cf, expected, "printed value must round-trip exactly");
}

#[test]
fn reruns_are_bit_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(
        &cfg,
        "[body]\nalpha = 3.0\nmu = 1.4\n\n[sweep]\nkind = \"delta\"\nstart = 1e-2\nstop = 1e2\ncount = 31\nlog = true\ntheta0 = 1.05\n",
    )
    .unwrap();

    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    assert!(run(&out_a, &["sweep-e", "--config", cfg.to_str().unwrap()]).status.success());
    let second = bin()
        .arg("--out-dir")
        .arg(&out_b)
        .args(["sweep-e", "--config", cfg.to_str().unwrap()])
        .env("PAINLEVE_WORKERS", "1")
        .output()
        .unwrap();
    assert!(second.status.success());

    let a = std::fs::read(out_a.join("sweep_e.csv")).unwrap();
    let b = std::fs::read(out_b.join("sweep_e.csv")).unwrap();
    assert_eq!(a, b, "sweep must not depend on the worker pool");

    // the same holds for a full simulation rerun
    let sim_a = dir.path().join("sa");
    let sim_b = dir.path().join("sb");
    let sc = scenario("inconsistent.toml");
    assert!(run(&sim_a, &["simulate", "--config", sc.to_str().unwrap()]).status.success());
    assert!(run(&sim_b, &["simulate", "--config", sc.to_str().unwrap()]).status.success());
    assert_eq!(
        std::fs::read(sim_a.join("trajectory.csv")).unwrap(),
        std::fs::read(sim_b.join("trajectory.csv")).unwrap()
    );
}

#[test]
fn svg_output_is_written_when_requested() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "--format",
            "both",
            "simulate",
            "--config",
            scenario("inconsistent.toml").to_str().unwrap(),
        ],
    );
    assert!(out.status.success());
    let svg = std::fs::read_to_string(dir.path().join("simulate.svg")).unwrap();
    assert!(svg.starts_with("<svg"), "not an svg document");
    assert!(dir.path().join("trajectory.csv").exists());
}

#[test]
fn remaining_subcommands_emit_their_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), &["--format", "both", "kappa1"]).status.success());
    assert!(run(dir.path(), &["separatrix"]).status.success());
    assert!(run(dir.path(), &["--format", "both", "converge"]).status.success());
    assert!(run(dir.path(), &["--format", "both", "phase-map"]).status.success());
    for name in [
        "kappa1.csv",
        "kappa1.svg",
        "separatrix.csv",
        "converge.csv",
        "converge.svg",
        "phase_map.csv",
        "phase_map.svg",
    ] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }
}

//! End-to-end runs of the `semiclassics` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use semiclassics::cli::{Manifest, MANIFEST_NAME};
use semiclassics::io::read_grid;
use semiclassics::oracle::cubic::CubicClosedForm;
use semiclassics::symplectic::ChordVector;
use semiclassics::Orientation;
use tempfile::TempDir;

struct Run {
    code: i32,
    out: PathBuf,
    manifest: Manifest,
    _dir: TempDir,
}

fn run(subcommand: &str, config: &str, extra: &[&str]) -> Run {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, config).unwrap();
    let out = dir.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_semiclassics"))
        .arg(subcommand)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--quiet")
        .args(extra)
        .status()
        .unwrap();
    let manifest = serde_json::from_slice(&fs::read(out.join(MANIFEST_NAME)).unwrap()).unwrap();
    Run {
        code: status.code().unwrap(),
        out,
        manifest,
        _dir: dir,
    }
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(Result::unwrap).collect()
}

#[test]
fn oscillator_caustic_is_reported_at_half_period() {
    let r = run(
        "caustics",
        r#"{"hamiltonian": {"preset": {"name": "harmonic"}},
            "times": [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0],
            "caustics": {"source": {"orbit": [1.0, 0.0]}}}"#,
        &[],
    );
    assert_eq!(r.code, 0);
    let tc = r.manifest.diagnostics["first_centre_caustic"];
    assert!((tc - std::f64::consts::PI).abs() < 1e-6, "{tc}");
    let rows = csv_rows(&r.out.join("caustics.csv"));
    assert!(rows.iter().any(|row| &row[1] == "centre" && &row[4] == "2"), "{rows:?}");
}

#[test]
fn quadratic_oracle_comparison_passes() {
    let r = run(
        "oracle-compare",
        r#"{"hamiltonian": {"text": "0.5 2 0\n0.5 0 2\n0.2 1 1"},
            "grid": {"p": {"min": -2, "max": 2, "n": 9}, "q": {"min": -2, "max": 2, "n": 9}},
            "times": [0.4, 1.1],
            "oracle_compare": {"anchor": [0.3, -0.2]}}"#,
        &[],
    );
    assert_eq!(r.code, 0, "{:?}", r.manifest.failure);
    for key in ["oracle_centre_to_chord", "oracle_chord_to_centre"] {
        assert!(r.manifest.max_residuals[key] < 1e-6, "{key}: {}", r.manifest.max_residuals[key]);
    }
    assert!(r.out.join("diff_centre_to_chord_001.bin").exists());
}

#[test]
fn evolved_line_matches_the_parabola_closed_form() {
    let r = run(
        "evolve",
        r#"{"hamiltonian": {"preset": {"name": "cubic", "a": 1.0}},
            "chord_grid": {"p": {"min": -3, "max": 3, "n": 13}, "q": {"min": -2, "max": 2, "n": 5}},
            "times": [1.0],
            "evolve": {"initial": {"line": {"q0": 0.3}}}}"#,
        &[],
    );
    assert_eq!(r.code, 0, "{:?}", r.manifest.failure);
    let (meta, values) = read_grid(&r.out.join("chord_000")).unwrap();
    let grid = meta.grid().unwrap();
    let cf = CubicClosedForm::new(1.0, 1.0);
    let mut compared = 0;
    for k in 0..grid.len() {
        let [xp, xq] = grid.point(k);
        if xp.abs() < 0.2 {
            continue;
        }
        let want = cf.chord_function(0.3, &ChordVector::pq(xp, xq), 1.0).unwrap();
        assert!((values[k] - want).norm() < 1e-6 * want.norm(), "{:?}: {} vs {want}", [xp, xq], values[k]);
        compared += 1;
    }
    assert_eq!(compared, 60);
}

#[test]
fn convention_override_is_recorded() {
    let doc = r#"{"hamiltonian": {"preset": {"name": "quartic"}}, "times": [0.5],
        "trajectory": {"initial": [0.5, 1.0]}}"#;
    let a = run("trajectory", doc, &[]);
    let b = run("trajectory", doc, &["--seed-convention", "B"]);
    assert_eq!((a.code, b.code), (0, 0));
    assert_eq!(a.manifest.convention, Some(Orientation::Forward));
    assert_eq!(b.manifest.convention, Some(Orientation::Backward));
    assert_eq!(a.manifest.config_hash, b.manifest.config_hash);
    // backward flow of p²/2 + q⁴/4 from (0.5, 1): q decreases
    let q = |r: &Run| csv_rows(&r.out.join("trajectory.csv"))[1][2].parse::<f64>().unwrap();
    assert!(q(&a) > 1.0 && q(&b) < 1.0, "{} {}", q(&a), q(&b));
}

#[test]
fn unknown_key_is_a_config_error() {
    let r = run(
        "trajectory",
        r#"{"hamiltonian": {"preset": {"name": "quartic"}}, "times": [0.5], "tolerance": {}}"#,
        &[],
    );
    assert_eq!(r.code, 2);
    let failure = r.manifest.failure.unwrap();
    assert_eq!(failure.stage, "parse-config");
    assert!(failure.message.contains("tolerance"), "{}", failure.message);
}

#[test]
fn hamiltonian_file_with_comments_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("h.txt"), "# harmonic oscillator\n0.5 2 0  # kinetic\n0.5 0 2\n").unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"hamiltonian": {"file": "h.txt"}, "times": [1.0], "output": "results",
            "trajectory": {"initial": [0.0, 1.0]}}"#,
    )
    .unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_semiclassics"))
        .args(["trajectory", "--quiet", "--config"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let rows = csv_rows(&dir.path().join("results").join("trajectory.csv"));
    let p: f64 = rows[1][1].parse().unwrap();
    assert!((p + 1f64.sin()).abs() < 1e-8, "{p}");
}

#[test]
fn residual_guard_fails_with_the_numerical_exit_code() {
    let r = run(
        "hj-residual",
        r#"{"hamiltonian": {"preset": {"name": "quartic"}},
            "grid": {"p": {"min": -1, "max": 1, "n": 9}, "q": {"min": -1, "max": 1, "n": 9}},
            "times": [0.5],
            "tolerances": {"hj_residual": 1e-30},
            "hj_residual": {"equation": "marinov"}}"#,
        &[],
    );
    assert_eq!(r.code, 3, "{:?}", r.manifest.failure);
    assert!(r.manifest.failure.is_some());
    assert!(r.manifest.max_residuals.contains_key("hj_residual"), "{:?}", r.manifest.max_residuals);
}

#[test]
fn caustic_abort_uses_its_own_exit_code() {
    let r = run(
        "kernel",
        r#"{"hamiltonian": {"preset": {"name": "harmonic"}},
            "grid": {"p": {"min": -1, "max": 1, "n": 5}, "q": {"min": -1, "max": 1, "n": 5}},
            "times": [3.141592653589793],
            "tolerances": {"abort_on_caustic": true},
            "kernel": {"kind": "weyl"}}"#,
        &[],
    );
    assert_eq!(r.code, 4, "{:?}", r.manifest.failure);
    assert_eq!(r.manifest.failure.unwrap().stage, "kernel");
}

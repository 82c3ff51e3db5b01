//! End-to-end tests of the `flatconn` binary: schema handling, exit codes,
//! output round-trips, and byte-identical repeated runs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_flatconn"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn flatnorm_dipole_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "flatnorm",
            "--domain",
            fixture("disc720.json").to_str().unwrap(),
            "--atoms",
            fixture("dipole_pair.csv").to_str().unwrap(),
            "--beta",
            "2",
            "--out",
            "result.json",
        ],
    );
    assert_success(&out);
    let text = std::fs::read_to_string(dir.path().join("result.json")).unwrap();
    let parsed: flatconn::io::FlatnormOutput = serde_json::from_str(&text).unwrap();
    assert!((parsed.value - 0.4).abs() < 1e-9, "value {}", parsed.value);
    assert_eq!(parsed.beta, 2.0);
    assert_eq!(parsed.s.len(), 1);
    assert!(parsed.r.is_empty());
    let report = parsed.structure_report.expect("beta=2 report present");
    assert_eq!(report.mass_identity, "pass");
}

#[test]
fn flatnorm_empty_atoms_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "flatnorm",
            "--domain",
            fixture("unit_square.json").to_str().unwrap(),
            "--atoms",
            fixture("empty_atoms.csv").to_str().unwrap(),
        ],
    );
    assert_success(&out);
    let parsed: flatconn::io::FlatnormOutput =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("flatnorm.json")).unwrap())
            .unwrap();
    assert_eq!(parsed.value, 0.0);
}

#[test]
fn schema_violations_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{\"outer\": 7}").unwrap();
    let out = run_in(
        dir.path(),
        &[
            "flatnorm",
            "--domain",
            "bad.json",
            "--atoms",
            fixture("dipole_pair.csv").to_str().unwrap(),
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("schema"), "{err}");

    std::fs::write(dir.path().join("bad.csv"), "0.1,zzz,1\n").unwrap();
    let out = run_in(
        dir.path(),
        &[
            "flatnorm",
            "--domain",
            fixture("unit_square.json").to_str().unwrap(),
            "--atoms",
            "bad.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 1"), "{err}");
}

#[test]
fn bruteforce_guard_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("x,y,multiplicity\n");
    for i in 0..9 {
        csv.push_str(&format!(
            "{},0.2,{}\n",
            0.1 + 0.08 * i as f64,
            if i % 2 == 0 { 1 } else { -1 }
        ));
    }
    std::fs::write(dir.path().join("many.csv"), csv).unwrap();
    let out = run_in(
        dir.path(),
        &[
            "flatnorm",
            "--domain",
            fixture("unit_square.json").to_str().unwrap(),
            "--atoms",
            "many.csv",
            "--solver",
            "bruteforce",
        ],
    );
    assert_eq!(out.status.code(), Some(3));
    // The matching solver accepts the same instance.
    let out = run_in(
        dir.path(),
        &[
            "flatnorm",
            "--domain",
            fixture("unit_square.json").to_str().unwrap(),
            "--atoms",
            "many.csv",
        ],
    );
    assert_success(&out);
}

#[test]
fn area_vortex_benchmark() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "area",
            "--domain",
            fixture("disc720.json").to_str().unwrap(),
            "--map",
            fixture("vortex.json").to_str().unwrap(),
        ],
    );
    assert_success(&out);
    let report: flatconn::AreaReport =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("area.json")).unwrap())
            .unwrap();
    let exact = std::f64::consts::PI * (std::f64::consts::SQRT_2 + 1.0f64.asinh() + 1.0);
    assert!(
        (report.upper_bound - exact).abs() / exact < 1e-4,
        "upper bound {} vs {}",
        report.upper_bound,
        exact
    );
    let csv = std::fs::read_to_string(dir.path().join("area.csv")).unwrap();
    assert!(csv.starts_with("dirichlet_area,singular_term,upper_bound"));
}

#[test]
fn flatnorm_accepts_pairs_json() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("pairs.json"),
        r#"{"pairs":[{"x":[-0.1,0.0],"y":[0.1,0.0]}]}"#,
    )
    .unwrap();
    let out = run_in(
        dir.path(),
        &[
            "flatnorm",
            "--domain",
            fixture("disc720.json").to_str().unwrap(),
            "--atoms",
            "pairs.json",
        ],
    );
    assert_success(&out);
    let parsed: flatconn::io::FlatnormOutput =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("flatnorm.json")).unwrap())
            .unwrap();
    assert!((parsed.value - 0.4).abs() < 1e-9);
}

#[test]
fn dual_command_emits_report_and_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "dual",
            "--domain",
            fixture("disc720.json").to_str().unwrap(),
            "--atoms",
            fixture("dipole_pair.csv").to_str().unwrap(),
            "--grid",
            "32x32",
            "--out",
            "dual.json",
        ],
    );
    assert_success(&out);
    let report: flatconn::io::DualOutput =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("dual.json")).unwrap())
            .unwrap();
    assert!(report.gap <= 1e-9);
    assert!(report.optimal);
    let csv = std::fs::read_to_string(dir.path().join("dual.csv")).unwrap();
    assert!(csv.starts_with("nx,ny,xmin,xmax,ymin,ymax\n32,32,"));
    assert_eq!(csv.lines().count(), 2 + 32 * 32);
}

#[test]
fn jacobian_command_extracts_dipole() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "jacobian",
            "--domain",
            fixture("unit_square.json").to_str().unwrap(),
            "--map",
            fixture("dipole_map.json").to_str().unwrap(),
            "--grid",
            "128x128",
            "--out",
            "jac.json",
        ],
    );
    // Dipole poles at (-0.3, 0) and (0.3, 0) are outside [0,1]^2; use the
    // square [-1,1]^2 instead.
    drop(out);
    std::fs::write(
        dir.path().join("box.json"),
        r#"{"outer": [[-1.0,-1.0],[1.0,-1.0],[1.0,1.0],[-1.0,1.0]]}"#,
    )
    .unwrap();
    let out = run_in(
        dir.path(),
        &[
            "jacobian",
            "--domain",
            "box.json",
            "--map",
            fixture("dipole_map.json").to_str().unwrap(),
            "--grid",
            "128x128",
            "--out",
            "jac.json",
        ],
    );
    assert_success(&out);
    let parsed: flatconn::io::JacobianOutput =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("jac.json")).unwrap())
            .unwrap();
    assert_eq!(parsed.total_winding, 0);
    assert_eq!(parsed.windings.len(), 2);
    assert!(dir.path().join("jac.csv").exists());
}

#[test]
fn envelope_table_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "envelope",
            "--domain",
            fixture("disc720.json").to_str().unwrap(),
            "--map",
            fixture("two_vortices.json").to_str().unwrap(),
            "--eps",
            "0.1",
        ],
    );
    assert_success(&out);
    let parsed: flatconn::io::EnvelopeOutput =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("envelope.json")).unwrap())
            .unwrap();
    assert!(!parsed.table.is_empty());
    for w in parsed.table.windows(2) {
        assert!(w[1].upper_bound <= w[0].upper_bound + 1e-12);
    }
    let last = parsed.table.last().unwrap();
    assert_eq!(last.singular_term, 0.0);
    assert!((last.upper_bound - parsed.dirichlet_area).abs() < 1e-12);
}

/// Criterion 9: two consecutive selftest runs produce byte-identical JSON
/// artifacts.
#[test]
fn selftest_json_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = run_in(dir.path(), &["selftest", "--seed", "0", "--out", "a.json"]);
    assert_success(&out1);
    let out2 = run_in(dir.path(), &["selftest", "--seed", "0", "--out", "b.json"]);
    assert_success(&out2);
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "selftest artifacts differ between runs");
    let parsed: flatconn::io::SelftestOutput =
        serde_json::from_str(&String::from_utf8(a).unwrap()).unwrap();
    assert!(parsed.all_passed);
    assert_eq!(parsed.criteria.len(), 8);
}

//! End-to-end runs of the `pseudo-id` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pseudo_id::identify::{scan_curve, Grid, ScanMode};
use pseudo_id::simulate::{draw_panel, DgpSpec, Variant};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pseudo-id"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    let out = bin().args(args).arg("--out-dir").arg(dir).output().unwrap();
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

/// `# zero:` locations from a curve CSV.
fn zeros(csv: &str) -> Vec<f64> {
    csv.lines()
        .filter_map(|l| l.strip_prefix("# zero: "))
        .map(|l| l.split_whitespace().next().unwrap().parse().unwrap())
        .collect()
}

#[test]
fn simulate_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [a.path(), b.path()] {
        run(d, &["simulate", "--out", "p.csv", "--seed", "1", "--n-firms", "300"]);
    }
    let (pa, pb) = (std::fs::read(a.path().join("p.csv")).unwrap(), std::fs::read(b.path().join("p.csv")).unwrap());
    assert_eq!(pa, pb);
    assert_eq!(String::from_utf8(pa).unwrap().lines().count(), 1 + 300 * 5);
    let other = tempfile::tempdir().unwrap();
    run(other.path(), &["simulate", "--out", "p.csv", "--seed", "2", "--n-firms", "300"]);
    assert_ne!(read(other.path().join("p.csv")), read(a.path().join("p.csv")));
}

#[test]
fn figure_one_writes_three_rescaled_curves() {
    let d = tempfile::tempdir().unwrap();
    run(d.path(), &["figure", "--which", "1", "--seed", "7"]);
    let names = ["theta2_0", "theta2_0.5", "theta2_1"];
    for n in names {
        let csv = read(d.path().join(format!("fig1_{n}.csv")));
        // Rescaled to |m| = 1 at beta = 0.
        let first = csv.lines().nth(1).unwrap();
        assert!(first == "0,-1,1" || first == "0,1,1", "{n}: {first}");
        let z = zeros(&csv);
        assert_eq!(z.len(), 2, "{n}: {z:?}");
        // Sampling sd of each location is about 0.04 at 200,000 observations.
        assert!((z[0] - 0.6).abs() < 0.12 && (z[1] - 1.6).abs() < 0.12, "{n}: {z:?}");
    }
    let summary = read(d.path().join("fig1_summary.csv"));
    assert_eq!(summary.lines().filter(|l| l.contains(",zero,")).count(), 6);

    // The benchmark member matches a direct library scan exactly.
    let spec = DgpSpec::new(Variant::Benchmark).with_seed(7);
    let c = scan_curve(&draw_panel(&spec).unwrap(), ScanMode::ConcentratedBeta, &Grid::default_beta()).unwrap();
    let want: Vec<f64> = c.zeros.iter().map(|z| z.location).collect();
    assert_eq!(zeros(&read(d.path().join("fig1_theta2_0.csv"))), want);
}

#[test]
fn figure_three_reports_the_nonstationary_member() {
    let d = tempfile::tempdir().unwrap();
    run(d.path(), &["figure", "--which", "3", "--n-firms", "2000", "--grid", "0:2:0.05"]);
    let summary = read(d.path().join("fig3_summary.csv"));
    let rejected: Vec<&str> = summary.lines().filter(|l| l.contains(",rejected,")).collect();
    assert_eq!(rejected.len(), 1, "{summary}");
    assert!(rejected[0].starts_with("rho2_x_0.5,") && rejected[0].contains("not stationary"));
    assert!(d.path().join("fig3_benchmark.csv").exists());
    assert!(d.path().join("fig3_rho2_x_0.02.csv").exists());
    assert!(!d.path().join("fig3_rho2_x_0.5.csv").exists());
}

#[test]
fn two_step_estimate_picks_the_truth() {
    let d = tempfile::tempdir().unwrap();
    run(d.path(), &["estimate", "--method", "two-step", "--sign-theta", "positive"]);
    let csv = read(d.path().join("estimate.csv"));
    let chosen = csv.lines().find(|l| l.starts_with("chosen,")).unwrap();
    let beta: f64 = chosen.split(',').nth(1).unwrap().parse().unwrap();
    assert!((beta - 0.6).abs() < 0.1, "{csv}");
    assert!(csv.contains("# selection_rule: theta_positive"));
    assert!(read(d.path().join("moments.csv")).starts_with("name,value\n"));

    let neg = tempfile::tempdir().unwrap();
    run(neg.path(), &["estimate", "--sign-theta", "negative"]);
    let csv = read(neg.path().join("estimate.csv"));
    let rejected = csv.lines().find(|l| l.starts_with("rejected,")).unwrap();
    assert_eq!(&rejected["rejected".len()..], &chosen["chosen".len()..]);
}

#[test]
fn warm_start_methods() {
    let d = tempfile::tempdir().unwrap();
    run(d.path(), &["estimate", "--method", "predetermined-start", "--variant", "predetermined", "--n-firms", "20000"]);
    let csv = read(d.path().join("warm_start.csv"));
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[3], "false");
    let beta: f64 = row[1].parse().unwrap();
    assert!((beta - 0.6).abs() < 0.1, "{csv}");
}

#[test]
fn unknown_config_keys_fail_with_an_error_record() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.toml");
    std::fs::write(&cfg, "command = \"simulate\"\n[dgp.structural]\nbeta = 0.6\nbetta = 1.0\n").unwrap();
    let out = bin().arg("--config").arg(&cfg).arg("--out-dir").arg(d.path()).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    let rec: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(rec["error"]["module"], "config");
    assert!(rec["error"]["message"].as_str().unwrap().contains("betta"));
    assert!(!d.path().join("run.manifest").exists());
}

#[test]
fn downstream_errors_carry_their_module() {
    let d = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["simulate", "--n-periods", "2", "--out-dir"])
        .arg(d.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let rec: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(rec["error"]["module"], "simulate");
    assert_eq!(rec["error"]["kind"], "validation");
}

fn manifest_outputs(dir: &Path) -> Vec<(PathBuf, String)> {
    let m: toml::Table = read(dir.join("run.manifest")).parse().unwrap();
    m["manifest"]["outputs"]
        .as_table()
        .unwrap()
        .iter()
        .map(|(k, v)| (PathBuf::from(k), v.as_str().unwrap().to_string()))
        .collect()
}

#[test]
fn manifest_reproduces_every_output() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.toml");
    std::fs::write(
        &cfg,
        "command = \"diagnose\"\n[dgp]\nn_firms = 3000\nseed = 11\n[scan]\ngrid = \"0:2:0.02\"\n",
    )
    .unwrap();
    let first = d.path().join("first");
    let out = bin().arg("--config").arg(&cfg).arg("--out-dir").arg(&first).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let outputs = manifest_outputs(&first);
    assert_eq!(outputs.len(), 2);

    let second = d.path().join("second");
    let out = bin()
        .arg("--config")
        .arg(first.join("run.manifest"))
        .arg("--out-dir")
        .arg(&second)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(manifest_outputs(&second), outputs);
    for (name, _) in &outputs {
        assert_eq!(std::fs::read(first.join(name)).unwrap(), std::fs::read(second.join(name)).unwrap());
    }
}

#[test]
fn scan_reads_an_observed_panel() {
    let d = tempfile::tempdir().unwrap();
    run(d.path(), &["simulate", "--n-firms", "4000", "--seed", "3"]);
    let panel = d.path().join("panel.csv");
    let from_file = d.path().join("file");
    let out = bin()
        .args(["scan", "--grid", "0:2:0.02", "--input"])
        .arg(&panel)
        .arg("--out-dir")
        .arg(&from_file)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sim = d.path().join("sim");
    run(&sim, &["scan", "--grid", "0:2:0.02", "--n-firms", "4000", "--seed", "3"]);
    assert_eq!(read(from_file.join("curve.csv")), read(sim.join("curve.csv")));
}

#[test]
fn diagnose_flags_equal_persistence() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.toml");
    std::fs::write(&cfg, "command = \"diagnose\"\n[dgp.structural]\nrho_omega = 0.5\n").unwrap();
    let out = bin().arg("--config").arg(&cfg).arg("--out-dir").arg(d.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(d.path().join("diagnostics.csv"));
    assert!(csv.starts_with("point,check,statistic,standard_error,verdict,rule\n"));
    assert!(csv.lines().any(|l| l.contains("equal_rho_warning")), "{csv}");
}

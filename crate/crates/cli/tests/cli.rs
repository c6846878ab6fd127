use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_coulomb-spectral"));
    c.env("RUST_LOG", "error");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV report as `column -> cell` maps.
fn csv_rows(text: &str) -> Vec<std::collections::HashMap<String, String>> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<String> = lines.next().expect("header row").split(',').map(String::from).collect();
    lines.map(|l| header.iter().cloned().zip(l.split(',').map(String::from)).collect()).collect()
}

fn header_field<'a>(text: &'a str, key: &str) -> &'a str {
    let prefix = format!("# {key}: ");
    text.lines().find_map(|l| l.strip_prefix(prefix.as_str())).unwrap_or_else(|| panic!("no {key} header"))
}

fn body(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with("# generated_unix")).collect::<Vec<_>>().join("\n")
}

#[test]
fn single_shell_density_is_exponential() {
    let o = run(&["density", "--beta", "0", "--nmax", "1", "--rmax", "10", "--gridpoints", "11"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 11);
    for row in rows {
        assert_eq!(row["claim_id"], "1.21");
        let r: f64 = row["r"].parse().unwrap();
        let v: f64 = row["value"].parse().unwrap();
        let exact = (-r).exp() / (8.0 * PI);
        assert!((v - exact).abs() <= 1e-14 * exact, "r = {r}: {v} vs {exact}");
    }
}

#[test]
fn density_origin_approaches_zeta3_over_8pi() {
    let o = run(&["density", "--beta", "0", "--nmax", "40", "--rmax", "50", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let origin = v["rows"][0]["value"].as_f64().unwrap();
    let zeta3 = 1.202_056_903_159_594_3;
    // the shells beyond 40 carry Σ n⁻³ ≈ 1/(2·40²)
    assert!((origin - zeta3 / (8.0 * PI)).abs() / (zeta3 / (8.0 * PI)) < 3e-4);
    assert_eq!(v["claim_id"], "1.21");
    assert_eq!(v["pass"], true);
}

#[test]
fn usage_errors_exit_with_two() {
    let o = run(&["density", "--nmax", "1"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--beta"));
    assert_eq!(code(&run(&["density", "--beta", "0", "--bogus", "1"])), 2);
    assert_eq!(code(&run(&["nonexistent"])), 2);
    assert_eq!(code(&run(&["bounds", "--claim", "Z.9"])), 2);
    assert_eq!(code(&run(&["bounds", "--claim", "A.26", "--l", "1", "--lfrac", "0.5"])), 2);
    assert_eq!(code(&run(&["sumrule", "--support", "4"])), 2);
    let o =
        bin().env("COULOMB_SPECTRAL_THREADS", "zero").args(["density", "--beta", "0", "--nmax", "1"]).output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn config_file_keys_are_validated_and_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# single shell\nbeta = 0\nnmax = 3\nrmax = 2\ngridpoints = 3\nformat = json\n").unwrap();
    let cfg_s = cfg.to_str().unwrap();

    let o = run(&["density", "--config", cfg_s, "--nmax", "1"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["provenance"]["parameters"]["nmax"], 1);
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);

    // the same resolved parameters hash identically however they are supplied
    let flags = run(&["density", "--beta", "0", "--nmax", "1", "--rmax", "2", "--gridpoints", "3", "--format", "json"]);
    let w: Value = serde_json::from_str(&stdout(&flags)).unwrap();
    assert_eq!(v["provenance"]["config_hash"], w["provenance"]["config_hash"]);

    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "beta = 0\nvarsigma = 0.1\n").unwrap();
    let o = run(&["density", "--config", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("varsigma"));
}

#[test]
fn report_bodies_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = ["projector", "--n", "3", "--l", "1", "--varsigma", "0.001", "--samples", "4", "--seed", "11"];
    for (path, threads) in [(&a, "1"), (&b, "2")] {
        let o = bin()
            .env("COULOMB_SPECTRAL_THREADS", threads)
            .args(args)
            .args(["--out", path.to_str().unwrap()])
            .output()
            .unwrap();
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let read = |p: &Path| std::fs::read_to_string(p).unwrap();
    assert_eq!(body(&read(&a)), body(&read(&b)));
    let text = read(&a);
    assert_eq!(header_field(&text, "claim_id"), "3.13");
    assert_eq!(header_field(&text, "tool"), concat!("coulomb-spectral ", env!("CARGO_PKG_VERSION")));
    assert_eq!(header_field(&text, "config_hash").len(), 64);
    assert!(header_field(&text, "grid").contains("\"step\":0.25"));
    // one channel pair plus four random pairs, three norms each
    assert_eq!(csv_rows(&text).len(), 15);

    let other = run(&["projector", "--n", "3", "--l", "1", "--varsigma", "0.001", "--samples", "4", "--seed", "12"]);
    assert_ne!(body(&stdout(&other)), body(&text));
}

#[test]
fn relativistic_clusters_hold_n_squared_states() {
    let o = run(&["clusters", "--beta", "0.05", "--nmax", "8"]);
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&stdout(&o));
    let counts: Vec<u32> = rows.iter().map(|r| r["count"].parse().unwrap()).collect();
    assert_eq!(counts, [1, 4, 9, 16, 25, 36, 49, 64]);
    assert!(rows.iter().all(|r| r["claim_id"] == "B.7"));
}

#[test]
fn sum_rule_defect_is_small() {
    let o = run(&["sumrule", "--varsigma", "0.001", "--support", "4", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["summary"]["relative_defect"].as_f64().unwrap() <= 1e-4);
    assert_eq!(v["claim_id"], "3.18");
}

#[test]
fn envelope_claim_passes_and_a_failing_claim_exits_one() {
    let o = run(&["bounds", "--claim", "A.26", "--nmin", "6", "--nmax", "20", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["summary"]["fitted_exponent"].as_f64().unwrap() + 1.5).abs() <= 0.1);
    assert!(!v["rows"].as_array().unwrap().is_empty());

    // the supremum over r ≤ 2r* decays like n^(-4/3), outside -3/2 ± 0.1
    let o = run(&["bounds", "--claim", "A.44", "--nmin", "6", "--nmax", "20"]);
    assert_eq!(code(&o), 1);
    let text = stdout(&o);
    assert_eq!(header_field(&text, "pass"), "false");
    assert_eq!(header_field(&text, "claim_id"), "A.44");
}

#[test]
fn unperturbed_weyl_midgap_counts_are_exact() {
    let o = run(&["weyl", "--nmax", "6"]);
    assert_eq!(code(&o), 0);
    let exact: Vec<f64> = csv_rows(&stdout(&o)).iter().map(|r| r["exact"].parse().unwrap()).collect();
    assert_eq!(exact, [1.0, 5.0, 14.0, 30.0, 55.0, 91.0]);
}

#[test]
fn perturbed_clusters_report_shift_ratios() {
    let o = run(&["perturb", "--beta", "0", "--nmax", "4", "--varsigma", "0.001", "--support", "4"]);
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 4);
    for r in rows {
        let shift: f64 = r["shift_sum"].parse().unwrap();
        let scale: f64 = r["reference_scale"].parse().unwrap();
        // an attractive well lowers every cluster
        assert!(shift < 0.0 && shift.abs() <= scale);
    }
    assert_eq!(code(&run(&["perturb", "--beta", "0", "--nmax", "4"])), 2);
}

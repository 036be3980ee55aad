//! End-to-end tests of the command-line interface: exit codes, file
//! schemas, and determinism.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nemcell"))
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("reading {path:?}: {e}"))
}

#[test]
fn solve_ee_writes_profile_and_is_deterministic() {
    let dir = tempdir("solve-ee");
    let run = |out: &str| {
        let status = bin()
            .args([
                "solve", "--theta", "-8", "--lambda", "1", "--mode", "ee", "--grid", "251",
                "--out",
            ])
            .arg(dir.join(out))
            .status()
            .unwrap();
        assert!(status.success());
        read(&dir.join(out).join("profile.csv"))
    };
    let csv1 = run("a");
    let csv2 = run("b");
    assert_eq!(csv1, csv2, "identical invocations must be byte-identical");

    let mut lines = csv1.lines();
    assert_eq!(lines.next().unwrap(), "x,q1,q2,q3");
    let mut n = 0;
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(cols.len(), 4);
        assert!((cols[1] - 2.0 / 3.0).abs() < 1e-8, "q1 drifted: {}", cols[1]);
        assert_eq!(cols[3], 0.0);
        n += 1;
    }
    assert_eq!(n, 251);

    let record: serde_json::Value =
        serde_json::from_str(&read(&dir.join("a").join("run.json"))).unwrap();
    assert_eq!(record["schema_version"], 1);
    assert_eq!(record["command"], "solve");
    assert_eq!(record["parameters"]["grid_nodes"], 251);
    assert_eq!(record["outcome"]["converged"], true);
    assert!(record["wall_time_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn usage_errors_exit_with_code_2() {
    for args in [
        vec!["solve", "--theta", "2", "--lambda", "1"],
        vec!["solve", "--theta", "-8", "--lambda", "-1"],
        vec!["solve", "--theta", "-8", "--lambda", "1", "--grid", "100"],
        vec!["solve", "--theta", "-8"],
        vec!["frobnicate"],
    ] {
        let out = bin().args(&args).output().unwrap();
        assert_eq!(
            out.status.code(),
            Some(2),
            "args {args:?} gave {:?}",
            out.status.code()
        );
    }
}

#[test]
fn bifurcate_report_is_consistent_with_the_diagram() {
    let dir = tempdir("bifurcate");
    let status = bin()
        .args([
            "bifurcate",
            "--theta",
            "-8",
            "--lambda-max",
            "2",
            "--grid",
            "301",
            "--t-max",
            "0.4",
            "--out",
        ])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());

    let report: serde_json::Value =
        serde_json::from_str(&read(&dir.join("report.json"))).unwrap();
    assert_eq!(report["condition_i"], true);
    assert_eq!(report["condition_ii"], true);
    let lambda_c = report["lambda_c"].as_f64().unwrap();
    assert!((0.5..1.5).contains(&lambda_c));
    assert!(report["mu_slope_at_lambda_c"].as_f64().unwrap() < 0.0);
    let sym = &report["symmetry_residuals"];
    assert!(sym["lambda_mismatch"].as_f64().unwrap() < 1e-8);
    assert!(sym["profile_mismatch"].as_f64().unwrap() < 1e-8);
    assert!(sym["energy_mismatch"].as_f64().unwrap() < 1e-10);

    // the recorded mu values must change sign exactly where the report says
    let csv = read(&dir.join("diagram.csv"));
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "branch_id,lambda,t,energy,nu,mu,q3_mid"
    );
    let mut crossing: Option<(f64, f64)> = None;
    let mut prev: Option<(f64, f64)> = None;
    let mut bd_rows = 0;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        let lambda: f64 = cols[1].parse().unwrap();
        match cols[0] {
            "EE" => {
                let mu: f64 = cols[5].parse().unwrap();
                let nu: f64 = cols[4].parse().unwrap();
                assert!(nu > 0.0);
                if let Some((pl, pm)) = prev {
                    if pm > 0.0 && mu <= 0.0 {
                        crossing = Some((pl, lambda));
                    }
                }
                prev = Some((lambda, mu));
            }
            "BD+" | "BD-" => {
                bd_rows += 1;
                assert!(cols[4].is_empty() && cols[5].is_empty());
                assert!(lambda >= lambda_c - 1e-6);
            }
            other => panic!("unexpected branch id {other}"),
        }
    }
    let (lo, hi) = crossing.expect("mu never changed sign in the diagram");
    assert!(
        (lo..=hi).contains(&lambda_c),
        "lambda_c {lambda_c} outside the diagram crossing [{lo}, {hi}]"
    );
    assert!(bd_rows >= 8);
}

#[test]
fn certify_emits_a_consistent_certificate() {
    let dir = tempdir("certify");
    let status = bin()
        .args(["certify", "--theta", "-12", "--grid", "101", "--out"])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let cert: serde_json::Value =
        serde_json::from_str(&read(&dir.join("certificate.json"))).unwrap();
    assert_eq!(cert["schema_version"], 1);
    let c1 = cert["c1"].as_f64().unwrap();
    let c2 = cert["c2"].as_f64().unwrap();
    let lambda0 = cert["lambda0"].as_f64().unwrap();
    assert!((lambda0 - (c1 / (2.0 * c2)).sqrt()).abs() < 1e-15);
    assert!(cert.get("verification").is_none());

    // colder temperature gives the smaller radius
    let dir8 = tempdir("certify8");
    let status = bin()
        .args(["certify", "--theta", "-8", "--grid", "101", "--out"])
        .arg(&dir8)
        .status()
        .unwrap();
    assert!(status.success());
    let cert8: serde_json::Value =
        serde_json::from_str(&read(&dir8.join("certificate.json"))).unwrap();
    assert!(lambda0 < cert8["lambda0"].as_f64().unwrap());
}

#[test]
fn limits_table_shows_the_uniaxial_approach() {
    let dir = tempdir("limits");
    let status = bin()
        .args([
            "limits", "--theta", "-8", "--lambdas", "10,5,20", "--grid", "301", "--jobs", "2",
            "--out",
        ])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = read(&dir.join("limits.csv"));
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "lambda,energy,q3_mid,h1_distance_to_uniaxial_limit"
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    // ordered by thickness regardless of input or completion order
    assert_eq!(rows[0][0], 5.0);
    assert_eq!(rows[1][0], 10.0);
    assert_eq!(rows[2][0], 20.0);
    for w in rows.windows(2) {
        assert!(
            w[1][3] < w[0][3],
            "distance must decrease with thickness: {:?}",
            rows
        );
    }
    for r in &rows {
        assert!(r[3] >= 0.0);
        assert!(r[2] > 0.0, "q3(0) branch selection failed");
    }
}

#[test]
fn jobs_env_var_is_the_fallback() {
    let dir = tempdir("limits-env");
    let status = bin()
        .env("NEMCELL_JOBS", "2")
        .args([
            "limits", "--theta", "-8", "--lambdas", "5,10", "--grid", "201", "--out",
        ])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let record: serde_json::Value =
        serde_json::from_str(&read(&dir.join("run.json"))).unwrap();
    assert_eq!(record["parameters"]["jobs"], 2);
}

fn tempdir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("nemcell-cli-test-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

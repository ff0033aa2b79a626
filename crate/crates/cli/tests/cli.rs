use std::path::Path;
use std::process::{Command, Output};

use blexpo_core::dsbs::{fig1_data, DsbsParams};
use blexpo_core::surfaces::{phi_surfaces, SurfaceConfig};
use blexpo_core::JointDist;

const ASYM: &str = r#"{"pxy": [[0.3, 0.1, 0.05], [0.05, 0.2, 0.3]]}"#;

fn blexpo(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_blexpo"));
    cmd.args(args).env_remove("BLEXPO_WORKERS");
    if let Some(w) = workers {
        cmd.env("BLEXPO_WORKERS", w);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn parse(s: &str) -> f64 {
    match s {
        "inf" => f64::INFINITY,
        "-inf" => f64::NEG_INFINITY,
        _ => s.parse().unwrap_or_else(|_| panic!("not a number: {s}")),
    }
}

/// Header and numeric rows of a CSV table.
fn read_csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(parse).collect()).collect();
    (header, rows)
}

fn write_dist(dir: &Path, text: &str) -> String {
    let p = dir.join("dist.json");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol
}

#[test]
fn coupling_example_value() {
    let out = blexpo(&["coupling", "--dsbs", "0.9", "--qx", "0.25,0.75", "--qy", "0.25,0.75", "--base", "2"], None);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let value_line = text.lines().skip_while(|l| !l.starts_with("value,")).nth(1).unwrap();
    let value = parse(value_line.split(',').next().unwrap());
    assert!((value - 0.19898).abs() < 1e-4, "{value}");
}

#[test]
fn theta_example_is_exact() {
    let out = blexpo(&["theta", "--dsbs", "0.9", "--alpha", "0.3", "--beta", "0", "--base", "2"], None);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "alpha,beta,theta_lower\n0.3,0,0.3\n");
}

#[test]
fn fig1_writes_four_tables_in_bits() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("fig");
    let out = blexpo(&["fig1", "--dsbs", "0.9", "--resolution", "101", "--out", out_dir.to_str().unwrap()], None);
    assert_eq!(code(&out), 0);
    let data = fig1_data(&DsbsParams::new(0.9).unwrap(), 101, 2.0).unwrap();
    for (name, grid) in [
        ("phi_lower.csv", &data.phi_lower),
        ("theta_lower.csv", &data.theta_lower),
        ("theta_upper.csv", &data.theta_upper),
        ("theta_qprime.csv", &data.theta_qprime),
    ] {
        let (header, rows) = read_csv(&std::fs::read_to_string(out_dir.join(name)).unwrap());
        assert_eq!(header.len(), if grid.is_2d() { 3 } else { 2 }, "{name}");
        assert_eq!(rows.len(), grid.values.len(), "{name}");
        for (row, want) in rows.iter().zip(&grid.values) {
            assert!(close(*row.last().unwrap(), *want, 1e-12), "{name}: {row:?} vs {want}");
        }
        assert_eq!(rows.last().unwrap()[0], 1.0, "{name} axis is in bits");
    }
}

#[test]
fn surface_csv_round_trips() {
    let out = blexpo(&["surface", "--dsbs", "0.8", "--resolution", "21", "--which", "lower"], None);
    assert_eq!(code(&out), 0);
    let (header, rows) = read_csv(&stdout(&out));
    assert_eq!(header, ["s", "t", "phi_lower"]);
    let cfg = SurfaceConfig { resolution: 21, ..SurfaceConfig::default() };
    let g = phi_surfaces(&JointDist::dsbs(0.8).unwrap(), &cfg).unwrap().phi_lower;
    assert_eq!(rows.len(), g.values.len());
    let nt = g.axes[1].len();
    for (k, row) in rows.iter().enumerate() {
        let (i, j) = (k / nt, k % nt);
        assert!(close(row[0], g.axes[0][i], 1e-12) && close(row[1], g.axes[1][j], 1e-12), "row {k} is not row-major");
        assert!(close(row[2], g.values[k], 1e-12), "row {k}: {} vs {}", row[2], g.values[k]);
    }
}

#[test]
fn base_two_rescales_only() {
    let e = blexpo(&["theta", "--dsbs", "0.8", "--which", "r", "--r", "2", "--resolution", "21"], None);
    let b = blexpo(&["theta", "--dsbs", "0.8", "--which", "r", "--r", "2", "--resolution", "21", "--base", "2"], None);
    let (_, re) = read_csv(&stdout(&e));
    let (_, rb) = read_csv(&stdout(&b));
    assert_eq!(re.len(), rb.len());
    for (x, y) in re.iter().zip(&rb) {
        for (u, v) in x.iter().zip(y) {
            assert!(close(u / std::f64::consts::LN_2, *v, 1e-11), "{u} nats vs {v} bits");
        }
    }
}

#[test]
fn output_is_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let dist = write_dist(dir.path(), ASYM);
    let runs: [&[&str]; 3] = [
        &["surface", "--dist", &dist, "--resolution", "15"],
        &["verify-sse", "--dsbs", "0.8", "--n", "2", "--resolution", "21"],
        &["qstab", "--dist", &dist, "--q", "-1", "--n", "2", "--resolution", "15"],
    ];
    for args in runs {
        let one = blexpo(args, Some("1"));
        let many = blexpo(&[args, &["--workers", "4"]].concat(), Some("1"));
        let env_many = blexpo(args, Some("3"));
        assert_eq!(code(&one), 0, "{args:?}: {}", String::from_utf8_lossy(&one.stderr));
        assert_eq!(one.stdout, many.stdout, "{args:?}");
        assert_eq!(one.stdout, env_many.stdout, "{args:?}");
    }
}

#[test]
fn verification_commands_pass_and_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let dist = write_dist(dir.path(), ASYM);
    let summary = dir.path().join("summary.json");
    let s = summary.to_str().unwrap();
    for args in [
        vec!["verify-sse", "--dist", &dist, "--n", "2", "--samples", "300", "--resolution", "41", "--summary", s],
        vec!["qstab", "--dsbs", "0.9", "--q", "2", "--n", "3", "--resolution", "41", "--summary", s],
        vec!["qstab", "--dist", &dist, "--q", "4", "--n", "2", "--resolution", "41", "--summary", s],
        vec!["selftest", "--summary", s],
    ] {
        let out = blexpo(&args, None);
        assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
        assert_eq!(json["failures"], 0, "{args:?}");
        assert_eq!(json["command"], args[0]);
        assert_eq!(json["config"]["resolution"], args.iter().position(|&a| a == "--resolution").map_or(201, |i| args[i + 1].parse::<u64>().unwrap()));
    }
}

#[test]
fn construct_gap_shrinks() {
    let out = blexpo(
        &["construct", "--dsbs", "0.9", "--p", "2", "--phat", "1", "--q", "2", "--qhat", "1", "--alpha", "0.1", "--beta", "0.1", "--ns", "16,128", "--resolution", "41"],
        None,
    );
    assert_eq!(code(&out), 0);
    let (header, rows) = read_csv(&stdout(&out));
    assert_eq!(header.last().unwrap(), "gap");
    assert_eq!(rows.len(), 2);
    assert!(rows[1][5] < rows[0][5], "{rows:?}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad_json = write_dist(dir.path(), "{ not json");
    let marginal = dir.path().join("marginal.json");
    std::fs::write(&marginal, r#"{"p": [0.5, 0.5]}"#).unwrap();
    let unnormalized = dir.path().join("mass.json");
    std::fs::write(&unnormalized, r#"{"pxy": [[0.5, 0.5], [0.5, 0.5]]}"#).unwrap();
    let m = marginal.to_str().unwrap();
    let u = unnormalized.to_str().unwrap();
    let cases: Vec<(Vec<&str>, i32)> = vec![
        (vec!["--help"], 0),
        (vec![], 1),
        (vec!["frobnicate"], 1),
        (vec!["surface", "--dsbs", "0.9", "--resolution", "5"], 1),
        (vec!["surface", "--dsbs", "0.9", "--tol", "0.5"], 1),
        (vec!["surface"], 1),
        (vec!["surface", "--dsbs", "0.9", "--dist", m], 1),
        (vec!["fig1", "--dist", m], 1),
        (vec!["surface", "--dsbs", "1.5"], 3),
        (vec!["surface", "--dist", &bad_json], 3),
        (vec!["surface", "--dist", m], 3),
        (vec!["surface", "--dist", u], 3),
        (vec!["surface", "--dist", "/nonexistent/dist.json"], 3),
        (vec!["coupling", "--dsbs", "0.9", "--qx", "0.5,0.6", "--qy", "0.5,0.5"], 3),
        (vec!["qstab", "--dsbs", "0.9", "--q", "1"], 3),
        (vec!["theta", "--dsbs", "0.9", "--alpha", "5", "--resolution", "21"], 3),
        (vec!["coupling", "--dsbs", "0.9", "--qx", "0.3,0.7", "--qy", "0.6,0.4", "--max-iter", "1", "--tol", "1e-12"], 2),
    ];
    for (args, want) in cases {
        let out = blexpo(&args, None);
        assert_eq!(code(&out), want, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn failed_checks_exit_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let dist = write_dist(dir.path(), ASYM);
    let summary = dir.path().join("s.json");
    let out = blexpo(
        &["qstab", "--dist", &dist, "--q", "4", "--n", "2", "--resolution", "41", "--tol", "1e-300", "--summary", summary.to_str().unwrap()],
        None,
    );
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    let failures = json["failures"].as_u64().unwrap();
    assert!(failures > 0, "rounding-level margins should fail at tol 1e-300");
    assert_eq!(code(&out), 4);
    assert!(stdout(&out).contains(",false"));
}

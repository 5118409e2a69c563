use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const RUN_CONFIG: &str = r#"
mode = "synthetic"
seed = 3
lookback = 20
horizon = 30
predictors = ["flat", "linear", "nn", "oracle"]
compare = ["nn", "flat"]

[synthetic]
length = 12000
process = { kind = "heteroskedastic_martingale", x0 = 1.0, sigma = 0.1, vol_params = { omega = 0.001, alpha = 0.1, beta = 0.8 } }
"#;

fn trajrisk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trajrisk"))
        .args(args)
        .env_remove("TRAJRISK_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_is_byte_identical_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, RUN_CONFIG).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = trajrisk(&["run", "-c", s(&cfg), "-o", s(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["summary.json", "manifest.txt", "losses.csv", "predictor_linear.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name} differs");
    }
    // a flag override changes the result
    let c = dir.path().join("c");
    assert!(trajrisk(&["run", "-c", s(&cfg), "-o", s(&c), "--seed", "4"]).status.success());
    assert_ne!(fs::read(a.join("summary.json")).unwrap(), fs::read(c.join("summary.json")).unwrap());
}

#[test]
fn verify_bounds_is_byte_identical_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = trajrisk(&["verify-bounds", "--quick", "-o", s(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).contains("[PASS] ratio_tail"));
    }
    assert_eq!(fs::read(a.join("summary.json")).unwrap(), fs::read(b.join("summary.json")).unwrap());
    let o = trajrisk(&["report", s(&a)]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("bounds seed="));
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, RUN_CONFIG.replace("horizon = 30", "horizon = 0")).unwrap();
    let o = trajrisk(&["run", "-c", s(&cfg), "-o", s(&dir.path().join("x"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("horizon"));

    assert_eq!(trajrisk(&["run", "--bogus"]).status.code(), Some(1));

    let ticks = dir.path().join("ticks.csv");
    fs::write(&ticks, "timestamp,price\n0,1.0\n30,oops\n").unwrap();
    let o = trajrisk(&["ingest", "--data", s(&ticks), "-o", s(&dir.path().join("y"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    let o = trajrisk(&["report", s(&dir.path().join("missing"))]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn output_dir_defaults_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_trajrisk"))
        .args(["simulate", "--length", "100", "--seed", "9"])
        .env("TRAJRISK_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("path.csv")).unwrap();
    assert!(text.starts_with("# model="));
    assert_eq!(text.lines().count(), 2 + 100);
    assert!(fs::read_to_string(dir.path().join("manifest.txt")).unwrap().contains("path.csv"));
}

#[test]
fn ingest_writes_sessions() {
    let dir = tempfile::tempdir().unwrap();
    let ticks = dir.path().join("ticks.csv");
    let mut body = String::from("ts,px\n");
    for k in 0..700 {
        body.push_str(&format!("{},{}\n", 13 * 3600 - 10 + 30 * k, 1.0 + k as f64 * 1e-4));
    }
    fs::write(&ticks, body).unwrap();
    let out = dir.path().join("out");
    let o = trajrisk(&[
        "ingest",
        "--data",
        s(&ticks),
        "--timestamp-column",
        "ts",
        "--price-column",
        "px",
        "-o",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sessions = fs::read_to_string(out.join("sessions.csv")).unwrap();
    let rows: Vec<&str> = sessions.lines().collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1].split(',').count(), 1 + 601);
    assert!(rows[1].starts_with("1970-01-01,"));
}

use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_digitrange"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn digitrange")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV document, skipping `#` comment lines and the header.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn weights_table_and_root() {
    let o = run(&["weights", "--model", "luroth", "--k-max", "5", "--solve-s", "2"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert_eq!(r[0], ["p", "1", "0.5"]);
    let s2: f64 = r.iter().find(|r| r[0] == "s_K").unwrap()[2].parse().unwrap();
    assert!((s2 - 0.601).abs() < 1e-3);
}

#[test]
fn weights_tail() {
    let o = run(&["weights", "--model", "luroth", "--tail", "5"]);
    let r = rows(&stdout(&o));
    let tail = r.iter().find(|r| r[0] == "tail").unwrap();
    assert_eq!(tail[2], "0.2");
}

#[test]
fn bad_model_is_usage_error() {
    let o = run(&["weights", "--model", "power", "--rho", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["weights", "--model", "zeta"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_single_digit() {
    let o = run(&["simulate", "--n", "1", "--trials", "10", "--seed", "5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("# seed=5\n"));
    assert!(text.lines().nth(1).unwrap().starts_with("n,checkpoint,mean,sd,exact_expectation,karlin_constant"));
    let r = rows(&text);
    assert_eq!(r.len(), 1);
    assert_eq!(r[0][2], "1");
    assert!(text.ends_with('\n'));
}

#[test]
fn simulate_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let common = ["simulate", "--n", "5000", "--trials", "40", "--seed", "42"];
    let o1 = bin().args(common).args(["--threads", "1", "--out"]).arg(&a).output().unwrap();
    let o2 = bin().args(common).args(["--threads", "4", "--out"]).arg(&b).output().unwrap();
    assert!(o1.status.success() && o2.status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn linear_trace_sandwich() {
    let depth = 10u64;
    let o = run(&["construct", "linear", "--theta", "1/2", "--depth", "10", "--seed", "1", "--points", "2"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 2 * ((1u64 << (depth + 1)) - 2) as usize);
    for row in &r {
        let n: u64 = row[1].parse().unwrap();
        let d: u64 = row[2].parse().unwrap();
        // n/2 ≤ D_n < n/2 + J
        assert!(n <= 2 * d && 2 * d < n + 2 * depth, "{row:?}");
    }
}

#[test]
fn linear_theta_zero_rejected() {
    let o = run(&["construct", "linear", "--theta", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn linear_words_and_schedule_files() {
    let dir = tempfile::tempdir().unwrap();
    let words = dir.path().join("w.txt");
    let sched = dir.path().join("s.json");
    let o = bin()
        .args(["construct", "linear", "--theta", "0.3", "--depth", "6", "--points", "3", "--words"])
        .arg(&words)
        .arg("--schedule")
        .arg(&sched)
        .output()
        .unwrap();
    assert!(o.status.success());
    let text = std::fs::read_to_string(&words).unwrap();
    let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(lines.len(), 3);
    for l in lines {
        let w: digitrange::DigitWord = l.parse().unwrap();
        assert_eq!(w.len(), 126);
    }
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&sched).unwrap()).unwrap();
    assert_eq!(json["levels"].as_array().unwrap().len(), 6);
}

#[test]
fn sublinear_trace_sandwich() {
    let o = run(&["construct", "sublinear", "--profile", "sqrt", "--t", "0.9", "--n", "20000", "--seed", "1"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 20_000);
    for row in &r {
        let n: u64 = row[1].parse().unwrap();
        let (f, k, d): (u64, u64, u64) = (row[5].parse().unwrap(), row[6].parse().unwrap(), row[7].parse().unwrap());
        assert_eq!(f, n.isqrt());
        assert!(f <= d && d <= f + k, "{row:?}");
    }
}

#[test]
fn sublinear_bad_t_rejected() {
    let o = run(&["construct", "sublinear", "--t", "1", "--n", "100"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cylsum_uniform_example() {
    let o = run(&["cylsum", "--finite", "0.5,0.5", "--n", "4", "--s", "0.5", "--theta", "1"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert_eq!(r[0][3], "exact-enumeration");
    let v: f64 = r[0][4].parse().unwrap();
    assert!((v - 3.5).abs() < 1e-12);
}

#[test]
fn cylsum_mc_json() {
    let o = run(&[
        "cylsum", "--n", "6", "--s", "0.75", "--theta", "1", "--mode", "mc", "--trials", "2000", "--bound-chain", "--format", "json",
    ]);
    assert!(o.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(json["records"][0]["mode"], "monte-carlo");
    assert_eq!(json["chains"][0]["r_n"], 2);
    assert!(json["seed"].is_u64());
}

#[test]
fn cylsum_enumeration_limit_is_validation_error() {
    let o = run(&["cylsum", "--n", "12", "--s", "0.75", "--theta", "1", "--cap", "6"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn verify_quick_and_fail_inject() {
    let o = run(&["verify", "quick"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| l.starts_with("PASS")));
    let o = run(&["verify", "quick", "--fail-inject"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains("FAIL harness.fail-inject"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("harness.fail-inject"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"model": {"kind": "power", "rho": 3.0}, "seed": 9, "format": "json"}"#).unwrap();
    let o = bin().args(["weights", "--k-max", "2", "--config"]).arg(&cfg).output().unwrap();
    assert!(o.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(json["model"]["kind"], "power");
    let p1 = json["rows"][0]["p"].as_f64().unwrap();
    assert!((p1 - 1.0 / 1.202_056_903_159_594).abs() < 1e-12);
    let o = bin().args(["weights", "--k-max", "2", "--rho", "2", "--format", "csv", "--config"]).arg(&cfg).output().unwrap();
    let r = rows(&stdout(&o));
    let p1: f64 = r[0][2].parse().unwrap();
    assert!((p1 - 6.0 / std::f64::consts::PI.powi(2)).abs() < 1e-12);
    std::fs::write(&cfg, r#"{"threads": 0}"#).unwrap();
    let o = bin().args(["weights", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

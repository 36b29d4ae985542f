use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_krylov-rmt")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn predict_halting_iterations() {
    let o = run(&["predict", "--alg", "cg-residual", "--d", "0.5", "--eps", "1e-3"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "20");
    let o = run(&["predict", "--alg", "minres", "--d", "0.5", "--eps", "1e-3"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "19");
}

#[test]
fn predict_rows() {
    let o = run(&["predict", "--alg", "cg", "--d", "0.5", "--k", "1"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let row: Vec<f64> = out.lines().nth(1).unwrap().split(',').map(|f| f.parse().unwrap()).collect();
    assert_eq!(row[0], 1.0);
    assert!((row[1] - 0.5).abs() < 1e-12);
    assert!((row[3] - 1.5).abs() < 1e-9);
}

#[test]
fn verify_small_instances() {
    let o = run(&["verify", "--n", "50", "--m", "100", "--seed", "7"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let last = out.lines().last().unwrap();
    let err: f64 = last.strip_prefix("max relative error ").unwrap().parse().unwrap();
    assert!(err < 1e-6);
}

#[test]
fn usage_and_validation_errors_exit_1() {
    let o = run(&["solve", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--kmax"));
    assert_eq!(run(&["solve", "--n", "10", "--m", "5"]).status.code(), Some(1));
    assert_eq!(run(&["predict", "--d", "1.5", "--eps", "1e-3"]).status.code(), Some(1));
    assert_eq!(run(&["halting", "--mode", "chi", "--ensemble", "bernoulli"]).status.code(), Some(1));
    assert_eq!(run(&["sample", "--n", "500", "--m", "1000", "--trials", "100000000"]).status.code(), Some(1));
}

#[test]
fn io_failure_exits_2() {
    let o = run(&["solve", "--n", "10", "--m", "20", "--out", "/nonexistent-dir/t.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solve_writes_trace_with_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let o = run(&["solve", "--n", "30", "--m", "60", "--alg", "cg,minres", "--kmax", "5", "--seed", "3", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config {"));
    assert!(text.contains("\"seed\":3"));
    assert_eq!(lines.next().unwrap(), "algorithm,k,norm");
    let cg: Vec<f64> = text.lines().filter(|l| l.starts_with("cg_residual,")).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    let mr: Vec<f64> = text.lines().filter(|l| l.starts_with("minres_residual,")).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(cg.len(), 6);
    assert_eq!(cg[0], 1.0);
    for (c, m) in cg.iter().zip(&mr) {
        assert!(m <= &(c * (1.0 + 1e-12)));
    }
}

#[test]
fn seed_determines_output() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (p, jobs) in [(&a, "1"), (&b, "3")] {
        let o = run(&["sample", "--n", "20", "--m", "40", "--kmax", "3", "--trials", "50", "--seed", "9", "--jobs", jobs, "--out", p.to_str().unwrap()]);
        assert!(o.status.success());
    }
    let (ta, tb) = (std::fs::read_to_string(&a).unwrap(), std::fs::read_to_string(&b).unwrap());
    let body = |t: &str| t.lines().skip(1).map(str::to_owned).collect::<Vec<_>>();
    assert_eq!(body(&ta), body(&tb));
    assert_eq!(body(&ta).len(), 1 + 50 * 4);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# halting run\nn = 40\nm = 80\ntrials = 30\nseed = 5\nmode = chi\nalg = cg,minres\nkmax 8\n").unwrap();
    let out = dir.path().join("h.json");
    let o = run(&["halting", "--config", cfg.to_str().unwrap(), "--seed", "6", "--format", "json", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["config"]["seed"], 6);
    assert_eq!(v["config"]["ensemble"]["n"], 40);
    assert_eq!(v["config"]["mode"], "chi");
    let total: u64 = v["halting"].as_array().unwrap().iter().filter(|h| h["algorithm"] == "cg_residual").map(|h| h["count"].as_u64().unwrap()).sum();
    assert_eq!(total, 30);
    assert!(stdout(&o).contains("predicted"));

    std::fs::write(&cfg, "nope = 1\n").unwrap();
    assert_eq!(run(&["halting", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn table1_prints_prediction_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t1.csv");
    let o = run(&["table1", "--n", "40", "--m", "80", "--trials", "200", "--kmax", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let first = text.lines().nth(1).unwrap();
    assert!(first.split_whitespace().nth(1).unwrap().starts_with("1.5"));
    let file = std::fs::read_to_string(&out).unwrap();
    assert_eq!(file.matches("# config ").count(), 3);
}

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_peelbound"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().expect("spawn");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into(), String::from_utf8_lossy(&out.stderr).into())
}

#[test]
fn bound_prints_threshold() {
    let (code, out, _) = run(&["bound", "--n", "1000", "--r", "0.1", "--delta", "0.25", "--beta", "0.5", "--s", "3"]);
    assert_eq!(code, 0);
    assert!(out.contains("threshold"));
}

#[test]
fn bound_rejects_bad_grid() {
    let (code, _, err) = run(&["bound", "--n", "1000", "--r", "0.5", "--delta", "0.25", "--beta", "0.5", "--s", "3"]);
    assert_eq!(code, 2);
    assert!(err.contains("error"));
}

#[test]
fn expect_reports_both_sides() {
    let (code, out, _) = run(&["expect", "--n", "10000", "--sigma", "0.25"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["upper"]["value"].as_f64().unwrap() > v["lower"]["raw"].as_f64().unwrap());
}

#[test]
fn simulate_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let json = dir.path().join("out.json");
    let (code, out, err) = run(&[
        "simulate",
        "--class",
        "halfline",
        "--ns",
        "100,200,400",
        "--reps",
        "5",
        "--seed",
        "3",
        "--csv",
        csv.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("sup.q50"));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("study,class,n,rep,statistic,value,seed"));
    let rows = peelbound::lab::parse_csv(&text).unwrap();
    assert_eq!(rows.iter().filter(|r| r.rep != "summary").count(), 15);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["spec"]["seed"], 3);
}

#[test]
fn same_seed_same_csv() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = (0..2).map(|i| dir.path().join(format!("{i}.csv"))).collect();
    for (p, w) in paths.iter().zip(["1", "3"]) {
        let (code, _, err) = run(&[
            "--workers", w, "simulate", "--class", "intervals", "--ns", "100,1000", "--reps", "6", "--csv", p.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
    }
    assert_eq!(std::fs::read(&paths[0]).unwrap(), std::fs::read(&paths[1]).unwrap());
}

#[test]
fn config_file_drives_study() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.toml");
    std::fs::write(&cfg, "[study]\nkind = \"margin\"\nns = [200, 400, 800]\nreps = 3\nseed = 5\n").unwrap();
    let (code, out, err) = run(&["margin", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("sup_m.q50"));
}

#[test]
fn bad_config_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.toml");
    std::fs::write(&cfg, "# nothing here\n").unwrap();
    let (code, _, err) = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("no study specified"));
    std::fs::write(&cfg, "[study]\nkind = \"ratio-scaling\"\nns = [1000, 100]\nclass = \"halfline\"\n").unwrap();
    let (code, _, err) = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("increasing"));
}

#[test]
fn rates_fits_slope() {
    let (code, out, err) = run(&["rates", "--class", "halfline", "--ns", "1000,4000,16000", "--reps", "8"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("slope of sup.q50"));
}

#[test]
fn erm_runs_and_certifies() {
    let (code, out, err) = run(&["erm", "--problem", "isotonic", "--ns", "200,400", "--reps", "3"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("excess.mean"));
    let (code, out, err) = run(&["erm", "--problem", "classification", "--ns", "10000", "--certificate", "--param", "h=0.3"]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["r_star"].as_f64().unwrap() > 0.0);
}

#[test]
fn oracle_table() {
    let (code, out, _) = run(&["oracle", "--probs", "0.5,0.5", "--n", "2"]);
    assert_eq!(code, 0);
    assert!(out.contains("expectation"));
}

#[test]
fn verify_subset_exit_code() {
    let (code, out, _) = run(&["verify", "--only", "1,2"]);
    assert_eq!(code, 0);
    assert_eq!(out.matches("[PASS]").count(), 2);
}

use std::process::{Command, Output};

fn gtlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gtlab")).args(args).output().unwrap()
}

#[test]
fn help_exits_cleanly() {
    assert_eq!(gtlab(&["--help"]).status.code(), Some(0));
}

#[test]
fn bad_parameters_exit_with_one() {
    assert_eq!(gtlab(&["simulate", "--n", "10", "--k", "20"]).status.code(), Some(1));
    assert_eq!(gtlab(&["simulate", "--decoder", "magic"]).status.code(), Some(1));
    assert_eq!(gtlab(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.cfg");
    std::fs::write(&cfg, "n = 100\nk = 3\ntests = 30\ntrials = 7\ndecoder = dd\n").unwrap();
    let out = gtlab(&["simulate", "--config", cfg.to_str().unwrap(), "--trials", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(String::from_utf8_lossy(&out.stderr).contains("n=100 k=3 T=30 trials=4"));
}

#[test]
fn design_round_trips_through_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.txt");
    let out = gtlab(&["gen-design", "--n", "60", "--k", "4", "--tests", "25", "--design", "ncc", "--seed", "3",
        "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let design = format!("file:{}", path.display());
    let out = gtlab(&["simulate", "--design", &design, "--n", "60", "--k", "4", "--trials", "10", "--decoder", "comp"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn oracle_suites_pass() {
    let out = gtlab(&["oracle-check", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().filter(|l| l.starts_with("PASS")).count(), 5);
}

#[test]
fn masking_writes_one_row_per_rate() {
    let out = gtlab(&["masking", "--n", "500", "--k", "10", "--rates", "0.4,0.6", "--trials", "20"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 3);
}

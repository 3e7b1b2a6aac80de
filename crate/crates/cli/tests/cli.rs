use std::fs;
use std::process::{Command, Output};

fn erw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_erw"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn csv_column(text: &str, name: &str) -> Vec<f64> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn fixed_seed_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let path = dir.path().join(name);
        let out = erw(&[
            "simulate", "--alpha", "0.6", "--beta", "0.2", "--gamma", "0.4", "--n", "5000",
            "--trials", "300", "--seed", "42", "--threads", threads,
            "--out", path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{out:?}");
        fs::read(path).unwrap()
    };
    let a = run("a.csv", "1");
    assert_eq!(a, run("b.csv", "1"));
    assert_eq!(a, run("c.csv", "2"));
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with(
        "seed,n,trials,mean_T,var_T,mean_S,var_S,se_mean_S,mean_sign_changes,var_sign_changes\n"
    ));
    assert_eq!(text.lines().count(), 21);
}

#[test]
fn missing_seed_is_logged() {
    let out = erw(&["simulate", "--n", "200", "--trials", "10"]);
    assert!(out.status.success());
    let log = String::from_utf8_lossy(&out.stderr).to_string();
    let seed = log.split("using seed ").nth(1).unwrap().trim();
    let column = stdout(&out).lines().nth(1).unwrap().split(',').next().unwrap().to_string();
    assert_eq!(seed, column);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["simulate", "--gamma", "0", "--seed", "1"][..],
        &["moments", "--alpha", "1.5"],
        &["moments", "--n", "0"],
        &["simulate", "--seed", "1", "--n", "100", "--checkpoints", "50,200"],
        &["simulate", "--seed", "1", "--trials", "0"],
        &["simulate", "--bogus"],
        &["moments", "--alpha", "0.8", "--gamma", "0.5", "--limit"],
    ] {
        assert_eq!(erw(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn exact_moments_examples() {
    let out = erw(&["moments", "--alpha", "0", "--beta", "1", "--gamma", "0.5", "--n", "1000"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(csv_column(&text, "mean_S").iter().all(|m| (m - 1.0).abs() <= 1e-12));
    let out = erw(&["moments", "--alpha", "0", "--beta", "1", "--gamma", "1", "--n", "1000", "--limit"]);
    assert!(out.status.success());
    assert!(csv_column(&stdout(&out), "limit_mean_S").iter().all(|m| (m - 1.0).abs() <= 1e-12));

    let out = erw(&["moments", "--alpha", "0.5", "--beta", "1", "--n", "3", "--checkpoints", "3"]);
    let mean_t = csv_column(&stdout(&out), "mean_T");
    assert!((mean_t[0] - 1.875).abs() <= 1e-12);
}

#[test]
fn limit_is_omitted_outside_the_convergent_regime() {
    let out = erw(&["moments", "--alpha", "0.8", "--beta", "1", "--gamma", "0.5", "--n", "100", "--format", "jsonl"]);
    assert!(out.status.success());
    for line in stdout(&out).lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["record"], "moments");
        assert!(v["limit_mean_S"].is_null());
    }
}

#[test]
fn flags_override_config_file_and_saved_config_reproduces_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# pilot\nalpha=0.2\ngamma=0.7\nn=2000\ntrials=50\ncheckpoints=500,2000\n").unwrap();
    let saved = dir.path().join("saved.cfg");
    let first = erw(&[
        "simulate", "--config", cfg.to_str().unwrap(), "--trials", "80",
        "--save-config", saved.to_str().unwrap(),
    ]);
    assert!(first.status.success());
    let text = stdout(&first);
    assert!(csv_column(&text, "trials").iter().all(|&t| t == 80.0));
    assert_eq!(csv_column(&text, "n"), vec![500.0, 2000.0]);

    let saved_text = fs::read_to_string(&saved).unwrap();
    assert!(saved_text.contains("trials=80\n") && saved_text.contains("alpha=0.2\n"));
    let again = erw(&["simulate", "--config", saved.to_str().unwrap()]);
    assert_eq!(first.stdout, again.stdout);
}

#[test]
fn bad_config_file_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "alpha=0.2\nwidth=3\n").unwrap();
    assert_eq!(erw(&["moments", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    let missing = dir.path().join("missing.cfg");
    assert_eq!(erw(&["moments", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn phase_point_and_sweep() {
    let out = erw(&["phase", "--alpha", "-0.5", "--gamma", "0.25"]);
    assert!(stdout(&out).lines().nth(1).unwrap().contains(",gamma_0,"));
    let out = erw(&["phase", "--alpha", "0.25", "--gamma", "0.75"]);
    assert!(stdout(&out).contains(",convergent,"));

    let sweep = erw(&["phase", "--sweep"]);
    assert!(sweep.status.success());
    let text = stdout(&sweep);
    assert_eq!(text.lines().count(), 1 + 101 * 101);
    for region in ["oscillatory", "diverges_monotone", "convergent", "critical_line", "gamma_0"] {
        assert!(text.contains(&format!(",{region},")), "{region}");
    }
    assert_eq!(text, stdout(&erw(&["phase", "--sweep"])));
}

#[test]
fn quick_verification_passes() {
    let out = erw(&["verify", "--quick"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], true);
    let ids: Vec<u64> = report["criteria"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["id"].as_u64().unwrap())
        .collect();
    assert_eq!(ids, vec![1, 2, 3, 5, 10, 12]);
}

//! End-to-end checks of the `dngd` binary: subcommand output and exit
//! codes (0 ok, 1 violation/divergence, 2 usage/IO).

use std::process::Command;

fn dngd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dngd"))
}

#[test]
fn sigma_prints_reference_values() {
    let out = dngd()
        .args(["sigma", "--graph", "grid2d:5x5", "--weights", "laplacian"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let sigma: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!((sigma - 0.92361).abs() < 1e-3);

    let out = dngd()
        .args(["sigma", "--graph", "k_cycle:100,20"])
        .output()
        .unwrap();
    let sigma: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!((sigma - 0.74566).abs() < 1e-3);
}

#[test]
fn presets_list_contains_published_entry() {
    let out = dngd().args(["presets", "list"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("fig1_random_acc_dngd_sc"));
    assert!(text.contains("0.00017"));
    assert!(text.contains("0.011821"));
    assert!(text.lines().count() >= 60);
}

#[test]
fn certify_exits_zero_without_violations() {
    let out = dngd()
        .args([
            "certify", "--lemma", "8-10", "--sigma", "0.7", "--l", "2.0", "--samples", "50",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("0 violation(s)"));
}

#[test]
fn run_reports_missing_config_on_stderr_with_code_2() {
    let out = dngd()
        .args(["run", "--config", "/definitely/not/here.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    assert!(out.stdout.is_empty());
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = dngd().args(["run", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_and_divergence_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        r#"
[graph]
family = "grid2d"
rows = 3
cols = 3

[weights]
method = "laplacian"

[objective]
case = "case1"
samples_per_agent = 10

[run]
iterations = 300
record_every = 50
seed = 9

[[algorithm]]
name = "acc_dngd_sc"
step = { eta_over_l = 0.1 }
"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = dngd()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("acc_dngd_sc.csv").exists());
    assert!(out_dir.join("summary.csv").exists());
    assert!(out_dir.join("meta.toml").exists());

    // an over-stepped centralized method diverges -> exit 1
    let cfg2 = dir.path().join("div.toml");
    std::fs::write(
        &cfg2,
        std::fs::read_to_string(&cfg)
            .unwrap()
            .replace("name = \"acc_dngd_sc\"", "name = \"cgd\"")
            .replace("step = { eta_over_l = 0.1 }", "step = { eta = 1.0 }")
            .replace("iterations = 300", "iterations = 2000"),
    )
    .unwrap();
    let out = dngd()
        .args(["run", "--config"])
        .arg(&cfg2)
        .arg("--out")
        .arg(dir.path().join("out2"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("DIVERGED"));
}

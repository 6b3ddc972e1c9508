use std::process::Command;

use cpg_core::harness::presets::preset;

fn cpg() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cpg"))
}

fn write_small_config(dir: &std::path::Path) -> std::path::PathBuf {
    let mut cfg = preset("dgww_cpgae").unwrap();
    cfg.algorithm.iterations = 25;
    cfg.run.num_seeds = 2;
    cfg.run.output_dir = "out".into();
    let path = dir.join("small.toml");
    std::fs::write(&path, cfg.to_toml_string().unwrap()).unwrap();
    path
}

#[test]
fn run_aggregate_and_plotdata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let out = cpg().arg("run").arg(&cfg).env("CPG_OUTPUT_ROOT", dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let root = dir.path().join("out");
    assert!(root.join("base/seed_0.jsonl").exists());
    assert!(root.join("summary.json").exists());

    let agg = cpg().arg("aggregate").arg(&root).output().unwrap();
    assert!(agg.status.success());
    assert!(String::from_utf8_lossy(&agg.stdout).contains("cost_1"));

    let plot = cpg()
        .args(["plotdata", root.to_str().unwrap(), "--quantity", "cost_1", "--x", "rollouts"])
        .output()
        .unwrap();
    assert!(plot.status.success(), "{}", String::from_utf8_lossy(&plot.stderr));
    let text = std::fs::read_to_string(root.join("base/plot_cost_1_rollouts.csv")).unwrap();
    assert!(text.starts_with("rollouts,mean,ci_low,ci_high,threshold"));

    let bad = cpg()
        .args(["plotdata", root.to_str().unwrap(), "--quantity", "nonsense"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(!root.join("base/plot_nonsense_iterations.csv").exists());
}

#[test]
fn validate_reports_errors_with_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_small_config(dir.path());
    assert!(cpg().arg("validate").arg(&good).status().unwrap().success());
    assert!(cpg().args(["validate", "robotworld_cpgpe"]).status().unwrap().success());

    let text = std::fs::read_to_string(&good).unwrap().replace("batch_size = 10", "batch_size = 10\nbatchsize = 3");
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, text).unwrap();
    let out = cpg().arg("validate").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("batchsize"));
}

#[test]
fn check_suite_passes() {
    let out = cpg().args(["check", "--samples", "20000"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn presets_are_listed() {
    let out = cpg().arg("presets").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().count(), 7);
    let one = cpg().args(["presets", "dgww_cpgae"]).output().unwrap();
    assert!(String::from_utf8_lossy(&one.stdout).contains("kind = \"dgww\""));
}

use std::path::Path;

use cpg_core::harness::config::ExperimentConfig;
use cpg_core::harness::presets::preset;
use cpg_core::harness::run::{load_records, summarize, summarize_dir, SUMMARY_FILE};
use cpg_core::harness::{aggregate, emit_plot_data, read_record, run_experiment_in, XAxis};
use cpg_core::optimizer::RunStatus;

fn small_dgww() -> ExperimentConfig {
    let mut cfg = preset("dgww_cpgae").unwrap();
    cfg.algorithm.iterations = 40;
    cfg.run.num_seeds = 3;
    cfg.run.final_window = 10;
    cfg
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn run_writes_one_record_per_seed_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_dgww();
    let summary = run_experiment_in(&cfg, dir.path()).unwrap();
    assert!(summary.success());
    assert_eq!(summary.cells.len(), 1);
    let cell = &summary.cells[0];
    assert_eq!(cell.label, "base");
    assert_eq!(cell.runs.len(), 3);
    for s in 0..3 {
        assert!(dir.path().join(format!("base/seed_{s}.jsonl")).exists());
        assert!(dir.path().join(format!("base/seed_{s}.csv")).exists());
    }
    assert!(dir.path().join(SUMMARY_FILE).exists());
    assert_eq!(cell.checks.len(), 3);
    assert!(cell.final_window.contains_key("cost_1"));
    assert!(cell.deployment.contains_key("deterministic_cost_1"));

    let (header, record) = read_record(&dir.path().join("base/seed_1.jsonl")).unwrap();
    assert_eq!(header.config, cfg);
    assert_eq!(record.rows.len(), 40);
    assert_eq!(record.rows.last().unwrap().rollouts, 40 * 2 * 10);
    assert!(record.rows[0].deterministic.is_some() && record.rows[39].deterministic.is_some());

    let csv = std::fs::read_to_string(dir.path().join("base/seed_1.csv")).unwrap();
    let mut lines = csv.lines();
    let head: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(head[..4], ["iteration", "rollouts", "return", "objective"]);
    assert!(lines.all(|l| l.split(',').count() == head.len()));
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = small_dgww();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment_in(&cfg, a.path()).unwrap();
    run_experiment_in(&cfg, b.path()).unwrap();
    for f in ["base/seed_0.jsonl", "base/seed_2.csv", SUMMARY_FILE] {
        assert_eq!(read(&a.path().join(f)), read(&b.path().join(f)), "{f}");
    }
    let mut other = cfg.clone();
    other.run.master_seed = 1;
    let c = tempfile::tempdir().unwrap();
    run_experiment_in(&other, c.path()).unwrap();
    assert_ne!(read(&a.path().join("base/seed_0.jsonl")), read(&c.path().join("base/seed_0.jsonl")));
}

#[test]
fn aggregate_dir_reproduces_summary_and_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_dgww();
    let first = run_experiment_in(&cfg, dir.path()).unwrap();
    let before = read(&dir.path().join(SUMMARY_FILE));
    let again = summarize_dir(dir.path()).unwrap();
    assert_eq!(again, first);
    assert_eq!(read(&dir.path().join(SUMMARY_FILE)), before);

    let (_, _, grouped) = load_records(dir.path()).unwrap();
    let records: Vec<_> = grouped[0].iter().map(|(_, r)| r.clone()).collect();
    let series = aggregate(&records).unwrap();
    let out = dir.path().join("cost.csv");
    emit_plot_data(&series, "cost_1", XAxis::Rollouts, &out).unwrap();
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("rollouts,mean,ci_low,ci_high,threshold\n"));
    assert_eq!(text.lines().count(), 41);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",0.2")));
}

#[test]
fn aborted_seed_is_flagged_and_excluded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_dgww();
    run_experiment_in(&cfg, dir.path()).unwrap();
    let (cfg, cells, mut grouped) = load_records(dir.path()).unwrap();
    let bad_seed = grouped[0][1].1.seed;
    let victim = &mut grouped[0][1].1;
    victim.rows.truncate(7);
    victim.status = RunStatus::Aborted { iteration: 7, reason: "non-finite value in primal gradient".into() };
    let summary = summarize(&cfg, &cells, grouped).unwrap();
    assert!(!summary.all_completed);
    assert!(!summary.success());
    let cell = &summary.cells[0];
    assert_eq!(cell.aborted_seeds, vec![bad_seed]);
    assert_eq!(cell.final_window["cost_1"].runs, 2);
    let series = cell.series.as_ref().unwrap();
    assert_eq!(series.runs, 2);
    assert_eq!(series.quantities["return"].mean.len(), 40);
}

#[test]
fn sweep_runs_every_cell() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = preset("costlqr_sensitivity").unwrap();
    cfg.algorithm.iterations = 3;
    cfg.algorithm.batch_size = 4;
    cfg.run.num_seeds = 2;
    let summary = run_experiment_in(&cfg, dir.path()).unwrap();
    assert_eq!(summary.cells.len(), 6);
    let labels: Vec<&str> = summary.cells.iter().map(|c| c.label.as_str()).collect();
    assert!(labels.contains(&"omega-0e0_mode-ab"));
    for c in &summary.cells {
        assert_eq!(c.runs.len(), 2);
        assert!(dir.path().join(&c.label).join("seed_1.jsonl").exists());
    }
    let seeds: std::collections::BTreeSet<u64> =
        summary.cells.iter().flat_map(|c| c.runs.iter().map(|r| r.seed)).collect();
    assert_eq!(seeds.len(), 12);
}

//! Seeded execution of the run matrix and the experiment summary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{variance_bound_audit, CheckReport};
use crate::error::{Error, Result};
use crate::harness::aggregate::{aggregate, ci_half_width, mean, AggregateSeries};
use crate::harness::config::{Cell, ExperimentConfig, SweepParameter, SweepValue};
use crate::harness::records::{read_record, write_record, RecordHeader};
use crate::optimizer::{run_cpg, IterationRow, RunRecord, RunStatus};
use crate::rng::derive_seed;

pub const SUMMARY_FILE: &str = "summary.json";

/// Seed of run `seed_index` in sweep cell `cell_index`.
pub fn run_seed(master_seed: u64, cell_index: usize, seed_index: usize) -> u64 {
    derive_seed(&[master_seed, cell_index as u64, seed_index as u64])
}

/// Mean over runs of a per-run statistic, with its 95% half-width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowStat {
    pub mean: f64,
    pub half_width: f64,
    pub runs: usize,
}

impl WindowStat {
    fn from_values(values: &[f64]) -> Option<Self> {
        (!values.is_empty()).then(|| Self {
            mean: mean(values),
            half_width: ci_half_width(values),
            runs: values.len(),
        })
    }

    pub fn low(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn high(&self) -> f64 {
        self.mean + self.half_width
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub seed_index: usize,
    pub seed: u64,
    /// Record path relative to the output directory.
    pub record: String,
    #[serde(flatten)]
    pub status: RunStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub index: usize,
    pub label: String,
    pub overrides: Vec<(SweepParameter, SweepValue)>,
    pub runs: Vec<RunEntry>,
    /// Seeds whose runs aborted and are left out of every statistic.
    pub aborted_seeds: Vec<u64>,
    /// Iterations averaged per run for the window statistics.
    pub window: usize,
    /// Per-run means over the last `window` iterations, aggregated over runs.
    pub final_window: BTreeMap<String, WindowStat>,
    /// Stochastic against deterministic-deployment estimates over the same
    /// final window.
    pub deployment: BTreeMap<String, WindowStat>,
    pub checks: Vec<CheckReport>,
    pub series: Option<AggregateSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub cells: Vec<CellSummary>,
    pub all_completed: bool,
    pub all_checks_passed: bool,
}

impl ExperimentSummary {
    pub fn success(&self) -> bool {
        self.all_completed && self.all_checks_passed
    }

    pub fn cell(&self, label: &str) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.label == label)
    }
}

fn record_path(cell: &Cell, seed_index: usize) -> String {
    format!("{}/seed_{seed_index}.jsonl", cell.label)
}

fn run_one(cfg: &ExperimentConfig, cell: &Cell, seed_index: usize) -> (RecordHeader, RunRecord) {
    let seed = run_seed(cfg.run.master_seed, cell.index, seed_index);
    let outcome = cfg
        .build_environment(&cell.algorithm)
        .and_then(|env| Ok((env.spec().thresholds.clone(), run_cpg(env.as_ref(), &cell.algorithm, seed)?)));
    let (thresholds, record) = match outcome {
        Ok(x) => x,
        Err(e) => (
            vec![],
            RunRecord {
                seed,
                mode: cell.algorithm.mode,
                thresholds: vec![],
                rows: vec![],
                final_params: vec![],
                final_lambda: vec![],
                status: RunStatus::Aborted { iteration: 0, reason: e.to_string() },
            },
        ),
    };
    let header = RecordHeader {
        config: cfg.clone(),
        cell: cell.clone(),
        seed_index,
        seed,
        mode: cell.algorithm.mode,
        thresholds,
    };
    (header, record)
}

/// Runs every (cell, seed) pair in parallel, writes one record per pair under
/// `<output>/<cell label>/seed_<i>.jsonl` (plus a CSV mirror) and a summary
/// at `<output>/summary.json`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary> {
    run_experiment_in(cfg, &cfg.output_dir())
}

/// [`run_experiment`] with an explicit output directory.
pub fn run_experiment_in(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let cells = cfg.cells()?;
    for cell in &cells {
        std::fs::create_dir_all(out.join(&cell.label))
            .map_err(|e| Error::Io(format!("{}: {e}", out.join(&cell.label).display())))?;
    }
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.run.num_seeds).map(move |s| (c, s)))
        .collect();
    let results: Vec<Result<(RecordHeader, RunRecord)>> = jobs
        .par_iter()
        .map(|&(c, s)| {
            let (header, record) = run_one(cfg, &cells[c], s);
            let jsonl = out.join(record_path(&cells[c], s));
            write_record(&jsonl, &jsonl.with_extension("csv"), &header, &record)?;
            Ok((header, record))
        })
        .collect();
    let mut grouped: Vec<Vec<(RecordHeader, RunRecord)>> = vec![vec![]; cells.len()];
    for (r, &(c, _)) in results.into_iter().zip(&jobs) {
        grouped[c].push(r?);
    }
    let summary = summarize(cfg, &cells, grouped)?;
    write_summary(out, &summary)?;
    Ok(summary)
}

pub fn write_summary(out: &Path, summary: &ExperimentSummary) -> Result<PathBuf> {
    let path = out.join(SUMMARY_FILE);
    let text = serde_json::to_string_pretty(summary)?;
    std::fs::write(&path, text + "\n")?;
    Ok(path)
}

/// Loads every record under an output directory, grouped by cell in sweep
/// order. The configuration is taken from the first record's header.
pub fn load_records(dir: &Path) -> Result<(ExperimentConfig, Vec<Cell>, Vec<Vec<(RecordHeader, RunRecord)>>)> {
    let mut found = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    for entry in entries {
        let sub = entry?.path();
        if !sub.is_dir() {
            continue;
        }
        for file in std::fs::read_dir(&sub)? {
            let p = file?.path();
            let is_record = p.extension().is_some_and(|e| e == "jsonl")
                && p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("seed_"));
            if is_record {
                found.push(read_record(&p)?);
            }
        }
    }
    let cfg = found
        .first()
        .map(|(h, _)| h.config.clone())
        .ok_or_else(|| Error::Io(format!("{}: no record files found", dir.display())))?;
    let cells = cfg.cells()?;
    let mut grouped: Vec<Vec<(RecordHeader, RunRecord)>> = vec![vec![]; cells.len()];
    for (h, r) in found {
        if h.config != cfg {
            return Err(Error::InvalidConfig(format!(
                "records in {} come from different configurations",
                dir.display()
            )));
        }
        let slot = grouped
            .get_mut(h.cell.index)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown cell index {}", h.cell.index)))?;
        slot.push((h, r));
    }
    for g in &mut grouped {
        g.sort_by_key(|(h, _)| h.seed_index);
    }
    Ok((cfg, cells, grouped))
}

/// Recomputes the summary from the records in `dir` and rewrites it.
pub fn summarize_dir(dir: &Path) -> Result<ExperimentSummary> {
    let (cfg, cells, grouped) = load_records(dir)?;
    let summary = summarize(&cfg, &cells, grouped)?;
    write_summary(dir, &summary)?;
    Ok(summary)
}

fn window_mean(rows: &[IterationRow], f: impl Fn(&IterationRow) -> Option<f64>) -> Option<f64> {
    let v: Vec<f64> = rows.iter().filter_map(f).collect();
    (!v.is_empty()).then(|| mean(&v))
}

/// Builds the summary for records grouped by cell.
pub fn summarize(
    cfg: &ExperimentConfig,
    cells: &[Cell],
    grouped: Vec<Vec<(RecordHeader, RunRecord)>>,
) -> Result<ExperimentSummary> {
    let mut out = Vec::with_capacity(cells.len());
    for (cell, runs) in cells.iter().zip(grouped) {
        let env = cfg.build_environment(&cell.algorithm)?;
        let spec = env.spec();
        let u = spec.num_constraints();
        let entries = runs
            .iter()
            .map(|(h, r)| RunEntry {
                seed_index: h.seed_index,
                seed: h.seed,
                record: record_path(cell, h.seed_index),
                status: r.status.clone(),
            })
            .collect();
        let records: Vec<RunRecord> = runs.into_iter().map(|(_, r)| r).collect();
        let done: Vec<&RunRecord> = records.iter().filter(|r| r.completed()).collect();

        let mut checks = Vec::new();
        if cfg.run.audit_variance {
            for r in &done {
                let vars: Vec<f64> = r.rows.iter().filter_map(|row| row.dual_grad_variance).collect();
                let mut rep =
                    variance_bound_audit(&vars, u, spec.constraint_j_max(), cell.algorithm.batch_size);
                rep.name = format!("{} [{} seed {}]", rep.name, cell.label, r.seed);
                checks.push(rep);
            }
        }

        let window = cfg.run.final_window;
        let mut final_window = BTreeMap::new();
        let mut deployment = BTreeMap::new();
        let stat = |map: &mut BTreeMap<String, WindowStat>,
                        name: String,
                        f: &dyn Fn(&IterationRow) -> Option<f64>| {
            let vals: Vec<f64> = done
                .iter()
                .filter_map(|r| window_mean(&r.rows[r.rows.len().saturating_sub(window)..], f))
                .collect();
            if let Some(s) = WindowStat::from_values(&vals) {
                map.insert(name, s);
            }
        };
        stat(&mut final_window, "return".into(), &|r| Some(r.ret));
        stat(&mut final_window, "lagrangian".into(), &|r| Some(r.lagrangian));
        stat(&mut final_window, "lambda_norm".into(), &|r| {
            Some(r.lambda.iter().map(|v| v * v).sum::<f64>().sqrt())
        });
        for i in 1..=u {
            stat(&mut final_window, format!("cost_{i}"), &|r| Some(r.j[i]));
            stat(&mut final_window, format!("lambda_{i}"), &|r| Some(r.lambda[i - 1]));
        }
        for i in 0..=u {
            let name = if i == 0 { "objective".to_string() } else { format!("cost_{i}") };
            stat(&mut deployment, format!("stochastic_{name}"), &|r| {
                r.deterministic.as_ref().map(|_| r.j[i])
            });
            stat(&mut deployment, format!("deterministic_{name}"), &|r| {
                r.deterministic.as_ref().map(|d| d[i])
            });
        }

        let series = if done.is_empty() { None } else { Some(aggregate(&records)?) };
        out.push(CellSummary {
            index: cell.index,
            label: cell.label.clone(),
            overrides: cell.overrides.clone(),
            runs: entries,
            aborted_seeds: records.iter().filter(|r| !r.completed()).map(|r| r.seed).collect(),
            window,
            final_window,
            deployment,
            checks,
            series,
        });
    }
    let all_completed = out.iter().all(|c| c.aborted_seeds.is_empty() && !c.runs.is_empty());
    let all_checks_passed = out.iter().flat_map(|c| &c.checks).all(|c| c.passed);
    Ok(ExperimentSummary {
        name: cfg.name.clone(),
        cells: out,
        all_completed,
        all_checks_passed,
    })
}

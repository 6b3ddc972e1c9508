//! Record files: one JSON object per line (header, iterations, final) plus
//! a CSV mirror of the per-iteration scalars.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::ExplorationMode;
use crate::harness::config::{Cell, ExperimentConfig};
use crate::optimizer::{IterationRow, RunRecord, RunStatus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordHeader {
    pub config: ExperimentConfig,
    pub cell: Cell,
    pub seed_index: usize,
    pub seed: u64,
    pub mode: ExplorationMode,
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordFinal {
    pub final_params: Vec<f64>,
    pub final_lambda: Vec<f64>,
    #[serde(flatten)]
    pub status: RunStatus,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Header(Box<RecordHeader>),
    Iteration(IterationRow),
    Final(RecordFinal),
}

/// Writes `record` as line-delimited JSON to `jsonl` and its scalars to
/// `csv`.
pub fn write_record(jsonl: &Path, csv: &Path, header: &RecordHeader, record: &RunRecord) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(jsonl)?);
    let mut emit = |line: &Line| -> Result<()> {
        serde_json::to_writer(&mut out, line)?;
        out.write_all(b"\n")?;
        Ok(())
    };
    emit(&Line::Header(Box::new(header.clone())))?;
    for row in &record.rows {
        emit(&Line::Iteration(row.clone()))?;
    }
    emit(&Line::Final(RecordFinal {
        final_params: record.final_params.clone(),
        final_lambda: record.final_lambda.clone(),
        status: record.status.clone(),
    }))?;
    out.flush()?;
    std::fs::write(csv, csv_text(record, header.thresholds.len()))?;
    Ok(())
}

fn csv_text(record: &RunRecord, u: usize) -> String {
    let mut s = String::from("iteration,rollouts,return,objective");
    for i in 1..=u {
        let _ = write!(s, ",cost_{i}");
    }
    for i in 1..=u {
        let _ = write!(s, ",lambda_{i}");
    }
    s.push_str(",lagrangian,primal_rate,dual_rate,primal_grad_norm,primal_step_norm,dual_grad_variance,det_return,det_objective");
    for i in 1..=u {
        let _ = write!(s, ",det_cost_{i}");
    }
    s.push('\n');
    let num = |v: f64| v.to_string();
    for r in &record.rows {
        let mut cols = vec![r.iteration.to_string(), r.rollouts.to_string(), num(r.ret)];
        cols.extend(r.j.iter().map(|v| num(*v)));
        cols.extend(r.lambda.iter().map(|v| num(*v)));
        cols.extend([
            num(r.lagrangian),
            num(r.primal_rate),
            num(r.dual_rate),
            num(r.primal_grad_norm),
            num(r.primal_step_norm),
            r.dual_grad_variance.map(num).unwrap_or_default(),
        ]);
        match &r.deterministic {
            Some(d) => {
                cols.push(num(-d[0]));
                cols.extend(d.iter().map(|v| num(*v)));
            }
            None => cols.extend(std::iter::repeat_n(String::new(), u + 2)),
        }
        s.push_str(&cols.join(","));
        s.push('\n');
    }
    s
}

/// Reads a record written by [`write_record`].
pub fn read_record(path: &Path) -> Result<(RecordHeader, RunRecord)> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut header = None;
    let mut rows = Vec::new();
    let mut fin = None;
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), k + 1)))?;
        match parsed {
            Line::Header(h) => header = Some(*h),
            Line::Iteration(r) => rows.push(r),
            Line::Final(f) => fin = Some(f),
        }
    }
    let header = header.ok_or_else(|| Error::Parse(format!("{}: missing header", path.display())))?;
    let fin = fin.ok_or_else(|| Error::Parse(format!("{}: missing final line", path.display())))?;
    let record = RunRecord {
        seed: header.seed,
        mode: header.mode,
        thresholds: header.thresholds.clone(),
        rows,
        final_params: fin.final_params,
        final_lambda: fin.final_lambda,
        status: fin.status,
    };
    Ok((header, record))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::presets::preset;

    #[test]
    fn write_then_read_is_lossless() {
        let mut cfg = preset("costlqr_cpgpe").unwrap();
        cfg.algorithm.iterations = 12;
        cfg.algorithm.batch_size = 5;
        let cell = cfg.cells().unwrap().remove(0);
        let env = cfg.build_environment(&cell.algorithm).unwrap();
        let record = crate::optimizer::run_cpg(env.as_ref(), &cell.algorithm, 99).unwrap();
        let header = RecordHeader {
            config: cfg.clone(),
            cell,
            seed_index: 0,
            seed: 99,
            mode: record.mode,
            thresholds: record.thresholds.clone(),
        };
        let dir = tempfile::tempdir().unwrap();
        let (j, c) = (dir.path().join("r.jsonl"), dir.path().join("r.csv"));
        write_record(&j, &c, &header, &record).unwrap();
        let (h2, r2) = read_record(&j).unwrap();
        assert_eq!(h2, header);
        assert_eq!(r2, record);
        let text = std::fs::read_to_string(&c).unwrap();
        assert_eq!(text.lines().count(), 13);
        assert!(text.lines().next().unwrap().contains("det_cost_1"));
    }

    #[test]
    fn aborted_status_round_trips() {
        let fin = RecordFinal {
            final_params: vec![1.0],
            final_lambda: vec![],
            status: RunStatus::Aborted { iteration: 3, reason: "x".into() },
        };
        let text = serde_json::to_string(&Line::Final(fin.clone())).unwrap();
        match serde_json::from_str::<Line>(&text).unwrap() {
            Line::Final(f) => assert_eq!(f, fin),
            _ => panic!("wrong line"),
        }
        assert!(read_record(Path::new("/nonexistent/x.jsonl")).is_err());
    }
}

//! Across-seed aggregation with Student-t confidence intervals, and plot
//! data emission.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::optimizer::{IterationRow, RunRecord};

/// Mean and 95% half-width at each point of one quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub iterations: Vec<usize>,
    pub rollouts: Vec<u64>,
    pub mean: Vec<f64>,
    pub half_width: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateSeries {
    /// Number of completed runs aggregated.
    pub runs: usize,
    /// Seeds left out because their run aborted.
    pub excluded_seeds: Vec<u64>,
    /// True when fewer than two runs are available and the interval is
    /// reported as zero width.
    pub degenerate: bool,
    pub thresholds: Vec<f64>,
    pub quantities: BTreeMap<String, Series>,
}

/// `t_{0.975, n-1} * s / sqrt(n)` for `n >= 2`, zero otherwise.
pub fn ci_half_width(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    t_quantile_975(n - 1) * var.sqrt() / nf.sqrt()
}

pub fn t_quantile_975(dof: usize) -> f64 {
    StudentsT::new(0.0, 1.0, dof as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

type Extractor = Box<dyn Fn(&IterationRow) -> Option<f64>>;

/// Quantities that can be aggregated and plotted for `u` constraints.
pub fn quantity_names(u: usize) -> Vec<String> {
    let mut names = vec!["return".to_string(), "objective".into(), "lagrangian".into()];
    for i in 1..=u {
        names.push(format!("cost_{i}"));
        names.push(format!("lambda_{i}"));
    }
    names.push("det_return".into());
    names.push("det_objective".into());
    for i in 1..=u {
        names.push(format!("det_cost_{i}"));
    }
    names
}

fn extractor(name: &str, u: usize) -> Option<Extractor> {
    let index = |prefix: &str| {
        name.strip_prefix(prefix)
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|i| (1..=u).contains(i))
    };
    Some(match name {
        "return" => Box::new(|r: &IterationRow| Some(r.ret)),
        "objective" => Box::new(|r: &IterationRow| Some(r.j[0])),
        "lagrangian" => Box::new(|r: &IterationRow| Some(r.lagrangian)),
        "det_return" => Box::new(|r: &IterationRow| r.deterministic.as_ref().map(|d| -d[0])),
        "det_objective" => Box::new(|r: &IterationRow| r.deterministic.as_ref().map(|d| d[0])),
        _ => {
            if let Some(i) = index("det_cost_") {
                Box::new(move |r: &IterationRow| r.deterministic.as_ref().map(|d| d[i]))
            } else if let Some(i) = index("cost_") {
                Box::new(move |r: &IterationRow| Some(r.j[i]))
            } else if let Some(i) = index("lambda_") {
                Box::new(move |r: &IterationRow| Some(r.lambda[i - 1]))
            } else {
                return None;
            }
        }
    })
}

/// Pointwise mean and confidence half-width over the completed records.
pub fn aggregate(records: &[RunRecord]) -> Result<AggregateSeries> {
    let (done, aborted): (Vec<&RunRecord>, Vec<&RunRecord>) =
        records.iter().partition(|r| r.completed());
    let first = *done.first().ok_or(Error::EmptySeries)?;
    let u = first.thresholds.len();
    for r in &done[1..] {
        let aligned = r.rows.len() == first.rows.len()
            && r.thresholds.len() == u
            && r.rows.iter().zip(&first.rows).all(|(a, b)| {
                a.iteration == b.iteration
                    && a.rollouts == b.rollouts
                    && a.deterministic.is_some() == b.deterministic.is_some()
            });
        if !aligned {
            return Err(Error::MisalignedGrids);
        }
    }
    let mut quantities = BTreeMap::new();
    for name in quantity_names(u) {
        let f = extractor(&name, u).expect("listed quantity");
        let mut series = Series {
            iterations: vec![],
            rollouts: vec![],
            mean: vec![],
            half_width: vec![],
        };
        let mut values = Vec::with_capacity(done.len());
        for (k, row) in first.rows.iter().enumerate() {
            if f(row).is_none() {
                continue;
            }
            values.clear();
            values.extend(done.iter().filter_map(|r| f(&r.rows[k])));
            series.iterations.push(row.iteration);
            series.rollouts.push(row.rollouts);
            series.mean.push(mean(&values));
            series.half_width.push(ci_half_width(&values));
        }
        quantities.insert(name, series);
    }
    Ok(AggregateSeries {
        runs: done.len(),
        excluded_seeds: aborted.iter().map(|r| r.seed).collect(),
        degenerate: done.len() < 2,
        thresholds: first.thresholds.clone(),
        quantities,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XAxis {
    Iterations,
    Rollouts,
}

/// Threshold overlaid on a quantity's plot, if it is a constraint cost.
fn threshold_for(name: &str, thresholds: &[f64]) -> Option<f64> {
    let i: usize = name
        .strip_prefix("det_cost_")
        .or_else(|| name.strip_prefix("cost_"))?
        .parse()
        .ok()?;
    thresholds.get(i.checked_sub(1)?).copied()
}

/// Writes `x,mean,ci_low,ci_high[,threshold]` rows for one quantity.
pub fn emit_plot_data(series: &AggregateSeries, quantity: &str, x: XAxis, path: &Path) -> Result<()> {
    let s = series
        .quantities
        .get(quantity)
        .ok_or_else(|| Error::UnknownQuantity(quantity.to_string()))?;
    if s.mean.is_empty() {
        return Err(Error::EmptySeries);
    }
    let threshold = threshold_for(quantity, &series.thresholds);
    let mut out = String::new();
    out.push_str(match x {
        XAxis::Iterations => "iteration",
        XAxis::Rollouts => "rollouts",
    });
    out.push_str(",mean,ci_low,ci_high");
    if threshold.is_some() {
        out.push_str(",threshold");
    }
    out.push('\n');
    for k in 0..s.mean.len() {
        let xv = match x {
            XAxis::Iterations => s.iterations[k] as u64,
            XAxis::Rollouts => s.rollouts[k],
        };
        let (m, h) = (s.mean[k], s.half_width[k]);
        let _ = write!(out, "{xv},{m},{},{}", m - h, m + h);
        if let Some(b) = threshold {
            let _ = write!(out, ",{b}");
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

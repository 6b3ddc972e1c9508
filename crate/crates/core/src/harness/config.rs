//! Experiment configuration: parsing, validation and sweep expansion.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cmdp::Environment;
use crate::envs::{build_environment, EnergyCostConfig, EnvironmentConfig};
use crate::error::{Error, Result};
use crate::estimators::ExplorationMode;
use crate::optimizer::{AlgorithmConfig, Learner};

/// Environment variable overriding the root that relative output
/// directories are resolved against.
pub const OUTPUT_ROOT_ENV: &str = "CPG_OUTPUT_ROOT";

fn default_window() -> usize {
    100
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub num_seeds: usize,
    #[serde(default)]
    pub master_seed: u64,
    pub output_dir: PathBuf,
    /// Iterations averaged for the final-window statistics in the summary.
    #[serde(default = "default_window")]
    pub final_window: usize,
    /// Audit every dual-gradient variance against its theoretical bound.
    #[serde(default = "default_true")]
    pub audit_variance: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Omega,
    Sigma2,
    Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepValue {
    Number(f64),
    Text(String),
}

impl SweepValue {
    fn label(&self) -> String {
        match self {
            SweepValue::Number(v) => format!("{v:e}"),
            SweepValue::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub parameter: SweepParameter,
    pub values: Vec<SweepValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub environment: EnvironmentConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_cost: Option<EnergyCostConfig>,
    pub algorithm: AlgorithmConfig,
    pub run: RunConfig,
    /// Axes combined as a cartesian product, first axis outermost.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepAxis>,
}

/// One point of the sweep grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub index: usize,
    pub label: String,
    pub overrides: Vec<(SweepParameter, SweepValue)>,
    pub algorithm: AlgorithmConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn build_environment(&self, algorithm: &AlgorithmConfig) -> Result<Box<dyn Environment>> {
        build_environment(&self.environment, self.energy_cost.as_ref(), algorithm.cost_aggregation)
    }

    /// Checks every field and every sweep cell before anything runs.
    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::InvalidConfig("`name` must be non-empty".into()));
        }
        if self.run.num_seeds == 0 {
            return Err(Error::InvalidConfig("run.num_seeds must be at least 1".into()));
        }
        if self.run.final_window == 0 {
            return Err(Error::InvalidConfig("run.final_window must be at least 1".into()));
        }
        if self.energy_cost.is_some() && self.environment.is_tabular() {
            return Err(Error::InvalidConfig(
                "energy_cost applies to continuous environments only".into(),
            ));
        }
        for axis in &self.sweep {
            if axis.values.is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "sweep over {:?} has no values",
                    axis.parameter
                )));
            }
        }
        for cell in self.cells()? {
            let env = self.build_environment(&cell.algorithm).map_err(|e| {
                Error::InvalidConfig(format!("environment (cell `{}`): {e}", cell.label))
            })?;
            Learner::for_env(env.as_ref(), &cell.algorithm).map_err(|e| {
                Error::InvalidConfig(format!("algorithm (cell `{}`): {e}", cell.label))
            })?;
        }
        Ok(())
    }

    /// Expands the sweep into cells; a config without a sweep has one cell.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let mut combos: Vec<Vec<(SweepParameter, SweepValue)>> = vec![vec![]];
        for axis in &self.sweep {
            let mut next = Vec::with_capacity(combos.len() * axis.values.len());
            for c in &combos {
                for v in &axis.values {
                    let mut c = c.clone();
                    c.push((axis.parameter, v.clone()));
                    next.push(c);
                }
            }
            combos = next;
        }
        combos
            .into_iter()
            .enumerate()
            .map(|(index, overrides)| {
                let mut algorithm = self.algorithm.clone();
                for (p, v) in &overrides {
                    apply_override(&mut algorithm, *p, v)?;
                }
                let label = if overrides.is_empty() {
                    "base".to_string()
                } else {
                    overrides
                        .iter()
                        .map(|(p, v)| format!("{}-{}", parameter_name(*p), v.label()))
                        .collect::<Vec<_>>()
                        .join("_")
                };
                Ok(Cell { index, label, overrides, algorithm })
            })
            .collect()
    }

    /// Output directory with relative paths resolved against
    /// `CPG_OUTPUT_ROOT` when set.
    pub fn output_dir(&self) -> PathBuf {
        resolve_output(&self.run.output_dir, std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from))
    }
}

fn resolve_output(dir: &Path, root: Option<PathBuf>) -> PathBuf {
    match root {
        Some(root) if dir.is_relative() => root.join(dir),
        _ => dir.to_path_buf(),
    }
}

pub fn parameter_name(p: SweepParameter) -> &'static str {
    match p {
        SweepParameter::Omega => "omega",
        SweepParameter::Sigma2 => "sigma2",
        SweepParameter::Mode => "mode",
    }
}

fn apply_override(alg: &mut AlgorithmConfig, p: SweepParameter, v: &SweepValue) -> Result<()> {
    let wrong = |kind: &str| {
        Err(Error::InvalidConfig(format!(
            "sweep over {} expects {kind} values, got {v:?}",
            parameter_name(p)
        )))
    };
    match (p, v) {
        (SweepParameter::Omega, SweepValue::Number(x)) => alg.omega = *x,
        (SweepParameter::Sigma2, SweepValue::Number(x)) => alg.sigma2 = Some(*x),
        (SweepParameter::Mode, SweepValue::Text(s)) => {
            alg.mode = match s.as_str() {
                "ab" => ExplorationMode::ActionBased,
                "pb" => ExplorationMode::ParameterBased,
                _ => return wrong("`ab` or `pb`"),
            }
        }
        (SweepParameter::Mode, _) => return wrong("text"),
        _ => return wrong("numeric"),
    }
    Ok(())
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    ExperimentConfig::from_toml_str(&text)
        .map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
}

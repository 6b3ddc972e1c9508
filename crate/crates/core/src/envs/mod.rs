//! Benchmark environments.

pub mod dgww;
pub mod energy;
pub mod lqr;
pub mod robot_world;

use serde::{Deserialize, Serialize};

use crate::cmdp::{CostAggregation, Environment};
use crate::error::Result;

pub use dgww::{make_dgww, Dgww, DgwwConfig};
pub use energy::{energy_cost_wrapper, EnergyCostWrapper};
pub use lqr::{make_cost_lqr, CostLqr, LqrConfig};
pub use robot_world::{make_robot_world, RobotWorld, RobotWorldConfig};

/// Environment section of an experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvironmentConfig {
    Dgww(DgwwConfig),
    CostLqr(LqrConfig),
    RobotWorld(RobotWorldConfig),
}

/// Optional action-energy cost appended to a continuous environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyCostConfig {
    pub a_min: f64,
    pub a_max: f64,
    pub threshold: f64,
}

impl EnvironmentConfig {
    pub fn is_tabular(&self) -> bool {
        matches!(self, EnvironmentConfig::Dgww(_))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            EnvironmentConfig::Dgww(_) => "dgww",
            EnvironmentConfig::CostLqr(_) => "cost_lqr",
            EnvironmentConfig::RobotWorld(_) => "robot_world",
        }
    }
}

/// Instantiates the configured environment, optionally wrapped with the
/// energy cost.
pub fn build_environment(
    cfg: &EnvironmentConfig,
    energy: Option<&EnergyCostConfig>,
    aggregation: Option<CostAggregation>,
) -> Result<Box<dyn Environment>> {
    fn wrap<E: Environment + 'static>(
        env: E,
        energy: Option<&EnergyCostConfig>,
    ) -> Result<Box<dyn Environment>> {
        Ok(match energy {
            Some(e) => Box::new(energy_cost_wrapper(env, e.a_min, e.a_max, e.threshold)?),
            None => Box::new(env),
        })
    }
    match cfg {
        EnvironmentConfig::Dgww(c) => wrap(make_dgww(c, aggregation)?, energy),
        EnvironmentConfig::CostLqr(c) => wrap(make_cost_lqr(c, aggregation)?, energy),
        EnvironmentConfig::RobotWorld(c) => wrap(make_robot_world(c, aggregation)?, energy),
    }
}

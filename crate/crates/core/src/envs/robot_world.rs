//! Planar double integrator with absolute-value reward and quadratic cost.
//!
//! State is `(x, y, vx, vy)`, action `(ax, ay)`. With the default matrices
//! positions integrate velocities and velocities integrate the commanded
//! accelerations, both with a unit time step.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cmdp::{CmdpSpec, CostAggregation, Environment, StepOutcome};
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::rng::StreamRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotWorldConfig {
    #[serde(default = "default_g1")]
    pub g1: Vec<f64>,
    #[serde(default = "default_g2")]
    pub g2: Vec<f64>,
    #[serde(default = "default_r")]
    pub r1: Vec<f64>,
    #[serde(default = "default_r")]
    pub r2: Vec<f64>,
    #[serde(default = "default_a")]
    pub a: Matrix,
    #[serde(default = "default_b")]
    pub b: Matrix,
    #[serde(default = "default_init")]
    pub init_range: [f64; 2],
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
}

fn default_g1() -> Vec<f64> {
    vec![-1.0, -1.0, -0.001, -0.001]
}
fn default_g2() -> Vec<f64> {
    vec![-0.001, -0.001, -1.0, -1.0]
}
fn default_r() -> Vec<f64> {
    vec![-0.01, -0.01]
}
fn default_a() -> Matrix {
    Matrix::from_rows(vec![
        vec![1.0, 0.0, 1.0, 0.0],
        vec![0.0, 1.0, 0.0, 1.0],
        vec![0.0, 0.0, 1.0, 0.0],
        vec![0.0, 0.0, 0.0, 1.0],
    ])
    .expect("static matrix")
}
fn default_b() -> Matrix {
    Matrix::from_rows(vec![
        vec![0.0, 0.0],
        vec![0.0, 0.0],
        vec![1.0, 0.0],
        vec![0.0, 1.0],
    ])
    .expect("static matrix")
}
fn default_init() -> [f64; 2] {
    [-1.0, 1.0]
}
fn default_horizon() -> usize {
    100
}
fn one() -> f64 {
    1.0
}
fn default_thresholds() -> Vec<f64> {
    vec![1000.0]
}

impl Default for RobotWorldConfig {
    fn default() -> Self {
        Self {
            g1: default_g1(),
            g2: default_g2(),
            r1: default_r(),
            r2: default_r(),
            a: default_a(),
            b: default_b(),
            init_range: default_init(),
            horizon: default_horizon(),
            gamma: one(),
            thresholds: default_thresholds(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RobotWorld {
    spec: CmdpSpec,
    cfg: RobotWorldConfig,
}

pub fn make_robot_world(
    cfg: &RobotWorldConfig,
    aggregation: Option<CostAggregation>,
) -> Result<RobotWorld> {
    let check = |name: &str, v: &[f64], n: usize| {
        if v.len() == n {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!("{name} must have length {n}, got {}", v.len())))
        }
    };
    check("g1", &cfg.g1, 4)?;
    check("g2", &cfg.g2, 4)?;
    check("r1", &cfg.r1, 2)?;
    check("r2", &cfg.r2, 2)?;
    cfg.a.check_shape("A", 4, 4)?;
    cfg.b.check_shape("B", 4, 2)?;
    let [lo, hi] = cfg.init_range;
    if !(lo <= hi) {
        return Err(Error::InvalidSpec(format!("empty initial range [{lo}, {hi}]")));
    }
    if cfg.thresholds.len() != 1 {
        return Err(Error::InvalidSpec("robot world has exactly one constraint".into()));
    }
    let spec = CmdpSpec::new(
        4,
        2,
        cfg.thresholds.clone(),
        cfg.gamma,
        cfg.horizon,
        aggregation.unwrap_or_default(),
        f64::INFINITY,
    )?;
    Ok(RobotWorld { spec, cfg: cfg.clone() })
}

impl RobotWorld {
    /// `<G1, |s|> + <R1, |a|> - ||a||^2 / 2`
    pub fn reward(&self, s: &[f64], a: &[f64]) -> f64 {
        let abs_s: f64 = self.cfg.g1.iter().zip(s).map(|(g, x)| g * x.abs()).sum();
        let abs_a: f64 = self.cfg.r1.iter().zip(a).map(|(g, x)| g * x.abs()).sum();
        abs_s + abs_a - 0.5 * dot(a, a)
    }

    /// `<G2, s^2> + <R2, a^2>`
    pub fn cost(&self, s: &[f64], a: &[f64]) -> f64 {
        let sq_s: f64 = self.cfg.g2.iter().zip(s).map(|(g, x)| g * x * x).sum();
        let sq_a: f64 = self.cfg.r2.iter().zip(a).map(|(g, x)| g * x * x).sum();
        sq_s + sq_a
    }
}

impl Environment for RobotWorld {
    fn spec(&self) -> &CmdpSpec {
        &self.spec
    }

    fn sample_initial_state(&self, rng: &mut StreamRng, state: &mut [f64]) {
        let [lo, hi] = self.cfg.init_range;
        for s in state.iter_mut() {
            *s = if lo == hi { lo } else { rng.random_range(lo..hi) };
        }
    }

    fn step(
        &self,
        state: &[f64],
        action: &[f64],
        _rng: &mut StreamRng,
        next: &mut [f64],
        costs: &mut [f64],
    ) -> StepOutcome {
        next.iter_mut().for_each(|v| *v = 0.0);
        self.cfg.a.mul_vec_add(state, next);
        self.cfg.b.mul_vec_add(action, next);
        costs[0] = self.cost(state, action);
        StepOutcome {
            reward: self.reward(state, action),
        }
    }

    fn name(&self) -> &str {
        "robot_world"
    }
}

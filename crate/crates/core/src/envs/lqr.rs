//! Linear dynamics with a quadratic state penalty as reward and a quadratic
//! action cost as the constraint signal.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cmdp::{CmdpSpec, CostAggregation, Environment, StepOutcome};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::StreamRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LqrConfig {
    #[serde(default = "scaled_identity")]
    pub a: Matrix,
    #[serde(default = "scaled_identity")]
    pub b: Matrix,
    /// Action cost matrix (`d_A x d_A`).
    #[serde(default = "default_q")]
    pub q: Matrix,
    /// State penalty matrix (`d_S x d_S`).
    #[serde(default = "default_r")]
    pub r: Matrix,
    /// Uniform initial-state range, shared by every component.
    #[serde(default = "default_init")]
    pub init_range: [f64; 2],
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
}

fn scaled_identity() -> Matrix {
    Matrix::identity(2).scaled(0.9)
}
fn default_q() -> Matrix {
    Matrix::diagonal(&[0.9, 0.1])
}
fn default_r() -> Matrix {
    Matrix::diagonal(&[0.1, 0.9])
}
fn default_init() -> [f64; 2] {
    [-3.0, 3.0]
}
fn default_horizon() -> usize {
    50
}
fn one() -> f64 {
    1.0
}
fn default_thresholds() -> Vec<f64> {
    vec![0.9]
}

impl LqrConfig {
    /// The bidimensional benchmark instance: `A = B = 0.9 I`,
    /// `Q = diag(0.9, 0.1)`, `R = diag(0.1, 0.9)`, `s_0 ~ U[-3, 3]^2`.
    pub fn benchmark(horizon: usize, threshold: f64) -> Self {
        Self {
            a: scaled_identity(),
            b: scaled_identity(),
            q: default_q(),
            r: default_r(),
            init_range: default_init(),
            horizon,
            gamma: one(),
            thresholds: vec![threshold],
        }
    }
}

impl Default for LqrConfig {
    fn default() -> Self {
        Self::benchmark(default_horizon(), 0.9)
    }
}

#[derive(Debug, Clone)]
pub struct CostLqr {
    spec: CmdpSpec,
    cfg: LqrConfig,
}

pub fn make_cost_lqr(cfg: &LqrConfig, aggregation: Option<CostAggregation>) -> Result<CostLqr> {
    let ds = cfg.a.rows();
    let da = cfg.b.cols();
    cfg.a.check_shape("A", ds, ds)?;
    cfg.b.check_shape("B", ds, da)?;
    cfg.q.check_shape("Q", da, da)?;
    cfg.r.check_shape("R", ds, ds)?;
    let [lo, hi] = cfg.init_range;
    if !(lo <= hi) {
        return Err(Error::InvalidSpec(format!("empty initial range [{lo}, {hi}]")));
    }
    if cfg.thresholds.len() != 1 {
        return Err(Error::InvalidSpec("the cost LQR has exactly one constraint".into()));
    }
    let spec = CmdpSpec::new(
        ds,
        da,
        cfg.thresholds.clone(),
        cfg.gamma,
        cfg.horizon,
        aggregation.unwrap_or_default(),
        f64::INFINITY,
    )?;
    Ok(CostLqr { spec, cfg: cfg.clone() })
}

impl CostLqr {
    pub fn config(&self) -> &LqrConfig {
        &self.cfg
    }
}

impl Environment for CostLqr {
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
        costs[0] = self.cfg.q.quadratic_form(action);
        StepOutcome {
            reward: -self.cfg.r.quadratic_form(state),
        }
    }

    fn name(&self) -> &str {
        "cost_lqr"
    }
}

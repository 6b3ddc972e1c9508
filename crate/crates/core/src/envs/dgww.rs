//! Discrete grid world with a U-shaped wall around the goal.
//!
//! States are integer cells `(x, y)` with `y` growing downwards, carried as a
//! one-component state vector holding the cell index `y * side + x`. Actions
//! are indices `0..4` meaning up, right, left and down. Reward and cost are
//! computed on the cell the agent lands in.

use serde::{Deserialize, Serialize};

use crate::cmdp::{CmdpSpec, CostAggregation, DiscreteLayout, Environment, StepOutcome};
use crate::error::{Error, Result};
use crate::rng::StreamRng;
use rand::Rng;

pub const UP: usize = 0;
pub const RIGHT: usize = 1;
pub const LEFT: usize = 2;
pub const DOWN: usize = 3;
pub const NUM_ACTIONS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgwwConfig {
    #[serde(default = "default_side")]
    pub side_length: usize,
    /// Wall cells as `[x, y]`; `None` places the default U around the goal.
    #[serde(default)]
    pub walls: Option<Vec<[usize; 2]>>,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
}

fn default_side() -> usize {
    7
}
fn default_horizon() -> usize {
    100
}
fn default_gamma() -> f64 {
    1.0
}
fn default_thresholds() -> Vec<f64> {
    vec![0.2]
}

impl Default for DgwwConfig {
    fn default() -> Self {
        Self {
            side_length: default_side(),
            walls: None,
            horizon: default_horizon(),
            gamma: default_gamma(),
            thresholds: default_thresholds(),
        }
    }
}

/// The U one ring outside the goal: both cells beside it and the three cells
/// below, leaving the cell above the goal open.
pub fn default_walls(side: usize) -> Vec<[usize; 2]> {
    let c = side / 2;
    vec![[c - 1, c], [c + 1, c], [c - 1, c + 1], [c, c + 1], [c + 1, c + 1]]
}

#[derive(Debug, Clone)]
pub struct Dgww {
    spec: CmdpSpec,
    side: usize,
    wall: Vec<bool>,
    max_distance: f64,
}

/// Builds the grid world. The single constraint uses per-step-mean
/// aggregation unless `aggregation` overrides it.
pub fn make_dgww(cfg: &DgwwConfig, aggregation: Option<CostAggregation>) -> Result<Dgww> {
    let side = cfg.side_length;
    if side < 5 || side % 2 == 0 {
        return Err(Error::InvalidSpec(format!(
            "grid side length must be odd and at least 5, got {side}"
        )));
    }
    let walls = cfg.walls.clone().unwrap_or_else(|| default_walls(side));
    let center = side / 2;
    let mut wall = vec![false; side * side];
    for &[x, y] in &walls {
        if x >= side || y >= side {
            return Err(Error::InvalidSpec(format!("wall cell ({x}, {y}) is off-grid")));
        }
        if x == center && y == center {
            return Err(Error::InvalidSpec("the goal cell cannot be a wall".into()));
        }
        wall[y * side + x] = true;
    }
    if cfg.thresholds.len() != 1 {
        return Err(Error::InvalidSpec("the grid world has exactly one constraint".into()));
    }
    let spec = CmdpSpec::new(
        1,
        1,
        cfg.thresholds.clone(),
        cfg.gamma,
        cfg.horizon,
        aggregation.unwrap_or(CostAggregation::PerStepMean),
        1.0,
    )?;
    Ok(Dgww {
        spec,
        side,
        wall,
        max_distance: center as f64 * std::f64::consts::SQRT_2,
    })
}

impl Dgww {
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn num_states(&self) -> usize {
        self.side * self.side
    }

    pub fn center(&self) -> (usize, usize) {
        (self.side / 2, self.side / 2)
    }

    pub fn cell_index(&self, x: usize, y: usize) -> usize {
        y * self.side + x
    }

    /// Inverse of [`Dgww::cell_index`].
    pub fn cell_of(&self, index: usize) -> (usize, usize) {
        (index % self.side, index / self.side)
    }

    pub fn is_wall(&self, x: usize, y: usize) -> bool {
        self.wall[y * self.side + x]
    }

    /// Reward for occupying cell `(x, y)`: `-distance / max_distance`.
    pub fn reward_at(&self, x: usize, y: usize) -> f64 {
        let (cx, cy) = self.center();
        let dx = x as f64 - cx as f64;
        let dy = y as f64 - cy as f64;
        -(dx * dx + dy * dy).sqrt() / self.max_distance
    }

    /// Cell reached from `(x, y)` by `action`, clamped to the border.
    pub fn move_cell(&self, x: usize, y: usize, action: usize) -> (usize, usize) {
        let last = self.side - 1;
        match action {
            UP => (x, y.saturating_sub(1)),
            RIGHT => ((x + 1).min(last), y),
            LEFT => (x.saturating_sub(1), y),
            _ => (x, (y + 1).min(last)),
        }
    }
}

impl Environment for Dgww {
    fn spec(&self) -> &CmdpSpec {
        &self.spec
    }

    fn sample_initial_state(&self, rng: &mut StreamRng, state: &mut [f64]) {
        let last = self.side - 1;
        let corner = rng.random_range(0..4usize);
        let x = if corner & 1 == 0 { 0 } else { last };
        let y = if corner & 2 == 0 { 0 } else { last };
        state[0] = self.cell_index(x, y) as f64;
    }

    fn step(
        &self,
        state: &[f64],
        action: &[f64],
        _rng: &mut StreamRng,
        next: &mut [f64],
        costs: &mut [f64],
    ) -> StepOutcome {
        let (x, y) = self.cell_of(state[0] as usize);
        let a = (action[0].max(0.0) as usize).min(NUM_ACTIONS - 1);
        let (nx, ny) = self.move_cell(x, y, a);
        next[0] = self.cell_index(nx, ny) as f64;
        costs[0] = if self.is_wall(nx, ny) { 1.0 } else { 0.0 };
        StepOutcome {
            reward: self.reward_at(nx, ny),
        }
    }

    fn discrete_layout(&self) -> Option<DiscreteLayout> {
        Some(DiscreteLayout {
            num_states: self.num_states(),
            num_actions: NUM_ACTIONS,
        })
    }

    fn name(&self) -> &str {
        "dgww"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmdp::{rollout, FnSource};
    use crate::rng::stream;

    fn env() -> Dgww {
        make_dgww(&DgwwConfig::default(), None).unwrap()
    }

    fn step_to(env: &Dgww, from: (usize, usize), a: usize) -> ((usize, usize), f64, f64) {
        let mut next = vec![0.0; 1];
        let mut costs = vec![0.0; 1];
        let out = env.step(
            &[env.cell_index(from.0, from.1) as f64],
            &[a as f64],
            &mut stream(&[0]),
            &mut next,
            &mut costs,
        );
        (env.cell_of(next[0] as usize), out.reward, costs[0])
    }

    #[test]
    fn default_grid_has_49_states() {
        let e = env();
        assert_eq!(e.num_states(), 49);
        assert_eq!(e.discrete_layout().unwrap().num_actions, 4);
    }

    #[test]
    fn landing_on_a_wall_costs_one() {
        let e = env();
        // (2, 4) is the lower-left corner of the U
        let (next, _, cost) = step_to(&e, (2, 5), UP);
        assert_eq!(next, (2, 4));
        assert_eq!(cost, 1.0);
        let (_, _, cost) = step_to(&e, (0, 0), RIGHT);
        assert_eq!(cost, 0.0);
    }

    #[test]
    fn goal_has_zero_reward_and_is_open_from_above() {
        let e = env();
        let (next, reward, cost) = step_to(&e, (3, 2), DOWN);
        assert_eq!(next, (3, 3));
        assert_eq!(reward, 0.0);
        assert_eq!(cost, 0.0);
        assert!(!e.is_wall(3, 2));
        for (x, y) in [(2, 3), (4, 3), (2, 4), (3, 4), (4, 4)] {
            assert!(e.is_wall(x, y));
        }
    }

    #[test]
    fn rewards_are_nonpositive_and_zero_only_at_center() {
        let e = env();
        for y in 0..7 {
            for x in 0..7 {
                let r = e.reward_at(x, y);
                assert!((-1.0..=0.0).contains(&r));
                assert_eq!(r == 0.0, (x, y) == (3, 3));
            }
        }
        assert!((e.reward_at(0, 0) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn always_up_traces_a_clipped_vertical_path() {
        let mut cfg = DgwwConfig::default();
        cfg.horizon = 8;
        let e = make_dgww(&cfg, None).unwrap();
        let mut up = FnSource::new(1, |_: &[f64], _, _: &mut StreamRng, a: &mut [f64]| {
            a[0] = UP as f64
        });
        let mut rng = stream(&[3]);
        let traj = rollout(&e, &mut up, &mut rng).unwrap();
        let (x0, mut y) = e.cell_of(traj.state(0)[0] as usize);
        // hand simulation: x fixed, y decreases by one per step until row 0
        for t in 0..5 {
            assert_eq!(e.cell_of(traj.state(t)[0] as usize), (x0, y));
            y = y.saturating_sub(1);
        }
    }

    #[test]
    fn invalid_sizes_rejected() {
        for side in [3, 4, 6, 8] {
            let cfg = DgwwConfig { side_length: side, ..DgwwConfig::default() };
            assert!(make_dgww(&cfg, None).is_err());
        }
    }

    #[test]
    fn initial_states_are_corners() {
        let e = env();
        let mut rng = stream(&[9]);
        let mut seen = [false; 4];
        let mut s = [0.0; 1];
        for _ in 0..200 {
            e.sample_initial_state(&mut rng, &mut s);
            let (x, y) = e.cell_of(s[0] as usize);
            assert!(x == 0 || x == 6);
            assert!(y == 0 || y == 6);
            seen[(x > 0) as usize + 2 * (y > 0) as usize] = true;
        }
        assert!(seen.iter().all(|&b| b));
    }
}

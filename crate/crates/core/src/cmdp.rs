//! Constrained MDP abstraction, trajectory storage and return/cost functionals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// How a constraint cost column is collapsed into a trajectory cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CostAggregation {
    /// `sum_t gamma^t c_t`
    #[default]
    CumulativeDiscounted,
    /// `(1/T) sum_t c_t`
    PerStepMean,
}

/// Static description of a CMDP: dimensions, constraint thresholds and horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmdpSpec {
    pub state_dim: usize,
    pub action_dim: usize,
    /// Thresholds `b_1..b_U`; the number of constraints is their length.
    pub thresholds: Vec<f64>,
    pub gamma: f64,
    pub horizon: usize,
    pub cost_aggregation: CostAggregation,
    /// Upper bound on a single per-step cost. Metadata only; costs are never
    /// clipped. Unbounded quadratic costs use `f64::INFINITY`.
    pub cost_bound: f64,
}

impl CmdpSpec {
    pub fn new(
        state_dim: usize,
        action_dim: usize,
        thresholds: Vec<f64>,
        gamma: f64,
        horizon: usize,
        cost_aggregation: CostAggregation,
        cost_bound: f64,
    ) -> Result<Self> {
        let spec = Self {
            state_dim,
            action_dim,
            thresholds,
            gamma,
            horizon,
            cost_aggregation,
            cost_bound,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.state_dim == 0 || self.action_dim == 0 {
            return Err(Error::InvalidSpec("state and action dimensions must be positive".into()));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidSpec("horizon must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidSpec(format!("discount {} outside [0, 1]", self.gamma)));
        }
        if !(self.cost_bound > 0.0) {
            return Err(Error::InvalidSpec("cost bound must be positive".into()));
        }
        let cap = self.cost_bound * self.constraint_j_max();
        for (i, &b) in self.thresholds.iter().enumerate() {
            if !(b >= 0.0 && b <= cap) {
                return Err(Error::InvalidSpec(format!(
                    "threshold b_{} = {b} outside [0, {cap}]",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// Number of constraints `U`.
    pub fn num_constraints(&self) -> usize {
        self.thresholds.len()
    }

    /// `J_max` for the horizon and discount.
    pub fn j_max(&self) -> f64 {
        // horizon is finite by construction
        j_max(self.gamma, Some(self.horizon)).unwrap_or(self.horizon as f64)
    }

    /// Largest attainable constraint value for unit per-step costs under the
    /// configured aggregation: `J_max` when cumulative, 1 for per-step means.
    pub fn constraint_j_max(&self) -> f64 {
        match self.cost_aggregation {
            CostAggregation::CumulativeDiscounted => self.j_max(),
            CostAggregation::PerStepMean => 1.0,
        }
    }
}

/// Maximum discounted cumulative sum of unit per-step values.
///
/// `horizon = None` stands for an infinite horizon.
pub fn j_max(gamma: f64, horizon: Option<usize>) -> Result<f64> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidSpec(format!("discount {gamma} outside [0, 1]")));
    }
    match horizon {
        Some(0) => Err(Error::InvalidSpec("horizon must be at least 1".into())),
        Some(t) if gamma == 1.0 => Ok(t as f64),
        Some(t) => Ok((1.0 - gamma.powi(t as i32)) / (1.0 - gamma)),
        None if gamma == 1.0 => Err(Error::UnboundedHorizon),
        None => Ok(1.0 / (1.0 - gamma)),
    }
}

/// Output of a single environment transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
}

/// Layout of a finite state/action space embedded in the vector interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiscreteLayout {
    pub num_states: usize,
    pub num_actions: usize,
}

/// A CMDP simulator. Implementations are immutable; all mutable rollout state
/// lives in the caller's buffers and RNG. Tabular environments carry the
/// state index as the single state component and the action index as the
/// single action component.
pub trait Environment: Send + Sync {
    fn spec(&self) -> &CmdpSpec;

    /// Draws `s_0 ~ phi_0` into `state`.
    fn sample_initial_state(&self, rng: &mut StreamRng, state: &mut [f64]);

    /// Applies `action` in `state`, writing the successor into `next` and the
    /// `U` per-step costs into `costs`.
    fn step(
        &self,
        state: &[f64],
        action: &[f64],
        rng: &mut StreamRng,
        next: &mut [f64],
        costs: &mut [f64],
    ) -> StepOutcome;

    /// Finite-space layout, if the environment is tabular.
    fn discrete_layout(&self) -> Option<DiscreteLayout> {
        None
    }

    fn name(&self) -> &str;
}

/// One rollout: `T` states, actions, rewards and a `T x U` cost matrix, all
/// stored flat and row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    state_dim: usize,
    action_dim: usize,
    num_costs: usize,
    states: Vec<f64>,
    actions: Vec<f64>,
    rewards: Vec<f64>,
    costs: Vec<f64>,
}

impl Trajectory {
    pub fn from_parts(
        state_dim: usize,
        action_dim: usize,
        num_costs: usize,
        states: Vec<f64>,
        actions: Vec<f64>,
        rewards: Vec<f64>,
        costs: Vec<f64>,
    ) -> Result<Self> {
        let t = rewards.len();
        let check = |context, expected, actual| {
            if expected == actual {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { context, expected, actual })
            }
        };
        check("trajectory states", t * state_dim, states.len())?;
        check("trajectory actions", t * action_dim, actions.len())?;
        check("trajectory costs", t * num_costs, costs.len())?;
        Ok(Self {
            state_dim,
            action_dim,
            num_costs,
            states,
            actions,
            rewards,
            costs,
        })
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn num_costs(&self) -> usize {
        self.num_costs
    }

    pub fn state(&self, t: usize) -> &[f64] {
        &self.states[t * self.state_dim..(t + 1) * self.state_dim]
    }

    pub fn action(&self, t: usize) -> &[f64] {
        &self.actions[t * self.action_dim..(t + 1) * self.action_dim]
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    /// Per-step costs at step `t` (length `U`).
    pub fn costs_at(&self, t: usize) -> &[f64] {
        &self.costs[t * self.num_costs..(t + 1) * self.num_costs]
    }

    /// Cost column for constraint `i` in `1..=U`.
    pub fn cost_column(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        let u = self.num_costs;
        self.costs.iter().skip(i - 1).step_by(u.max(1)).copied()
    }
}

/// `sum_t gamma^t r_t`
pub fn discounted_return(traj: &Trajectory, gamma: f64) -> f64 {
    discounted_sum(traj.rewards.iter().copied(), gamma)
}

/// `C_0(tau) = -R(tau)`
pub fn cost0(traj: &Trajectory, gamma: f64) -> f64 {
    -discounted_return(traj, gamma)
}

/// Trajectory cost `C_i` for constraint `i` in `1..=U`.
pub fn discounted_cost(
    traj: &Trajectory,
    i: usize,
    gamma: f64,
    aggregation: CostAggregation,
) -> Result<f64> {
    if i == 0 || i > traj.num_costs {
        return Err(Error::ConstraintIndex { index: i, max: traj.num_costs });
    }
    Ok(match aggregation {
        CostAggregation::CumulativeDiscounted => discounted_sum(traj.cost_column(i), gamma),
        CostAggregation::PerStepMean => {
            traj.cost_column(i).sum::<f64>() / traj.len() as f64
        }
    })
}

/// `C_i(tau)` for any `i` in `0..=U` (`C_0` is the negated return).
pub fn trajectory_cost(traj: &Trajectory, i: usize, spec: &CmdpSpec) -> Result<f64> {
    if i == 0 {
        Ok(cost0(traj, spec.gamma))
    } else {
        discounted_cost(traj, i, spec.gamma, spec.cost_aggregation)
    }
}

fn discounted_sum(values: impl Iterator<Item = f64>, gamma: f64) -> f64 {
    let mut discount = 1.0;
    let mut total = 0.0;
    for v in values {
        total += discount * v;
        discount *= gamma;
    }
    total
}

/// Anything that picks an action for a state at a given step.
pub trait ActionSource {
    fn action_dim(&self) -> usize;
    fn act(&mut self, state: &[f64], step: usize, rng: &mut StreamRng, action: &mut [f64]);
}

/// Adapts a closure into an [`ActionSource`] with a declared action dimension.
pub struct FnSource<F> {
    dim: usize,
    f: F,
}

impl<F> FnSource<F>
where
    F: FnMut(&[f64], usize, &mut StreamRng, &mut [f64]),
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> ActionSource for FnSource<F>
where
    F: FnMut(&[f64], usize, &mut StreamRng, &mut [f64]),
{
    fn action_dim(&self) -> usize {
        self.dim
    }

    fn act(&mut self, state: &[f64], step: usize, rng: &mut StreamRng, action: &mut [f64]) {
        (self.f)(state, step, rng, action)
    }
}

/// Simulates one trajectory of exactly `T` steps.
pub fn rollout<A: ActionSource + ?Sized>(
    env: &dyn Environment,
    source: &mut A,
    rng: &mut StreamRng,
) -> Result<Trajectory> {
    let spec = env.spec();
    let (ds, da, u, horizon) = (
        spec.state_dim,
        spec.action_dim,
        spec.num_constraints(),
        spec.horizon,
    );
    if source.action_dim() != da {
        return Err(Error::DimensionMismatch {
            context: "action source",
            expected: da,
            actual: source.action_dim(),
        });
    }
    let mut states = vec![0.0; horizon * ds];
    let mut actions = vec![0.0; horizon * da];
    let mut rewards = vec![0.0; horizon];
    let mut costs = vec![0.0; horizon * u];
    let mut current = vec![0.0; ds];
    let mut next = vec![0.0; ds];
    env.sample_initial_state(rng, &mut current);
    for t in 0..horizon {
        states[t * ds..(t + 1) * ds].copy_from_slice(&current);
        let action = &mut actions[t * da..(t + 1) * da];
        source.act(&current, t, rng, action);
        let outcome = env.step(&current, action, rng, &mut next, &mut costs[t * u..(t + 1) * u]);
        rewards[t] = outcome.reward;
        std::mem::swap(&mut current, &mut next);
    }
    Ok(Trajectory {
        state_dim: ds,
        action_dim: da,
        num_costs: u,
        states,
        actions,
        rewards,
        costs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(rewards: Vec<f64>, costs: Vec<f64>, u: usize) -> Trajectory {
        let t = rewards.len();
        Trajectory::from_parts(1, 1, u, vec![0.0; t], vec![0.0; t], rewards, costs).unwrap()
    }

    fn loop_sum(values: &[f64], gamma: f64) -> f64 {
        (0..values.len()).map(|t| values[t] * gamma.powi(t as i32)).sum()
    }

    #[test]
    fn j_max_examples() {
        assert_eq!(j_max(1.0, Some(100)).unwrap(), 100.0);
        assert_eq!(j_max(0.5, Some(2)).unwrap(), 1.5);
        let oracle: f64 = (0..1000).map(|t| 0.99f64.powi(t)).sum();
        let got = j_max(0.99, Some(1000)).unwrap();
        assert!((got - oracle).abs() < 1e-9);
        assert!((got - 99.9957).abs() < 1e-4);
        assert_eq!(j_max(1.0, None), Err(Error::UnboundedHorizon));
    }

    #[test]
    fn j_max_is_monotone() {
        let gammas = [0.0, 0.3, 0.9, 0.99, 1.0];
        for w in gammas.windows(2) {
            for t in [1, 2, 10, 100] {
                assert!(j_max(w[0], Some(t)).unwrap() <= j_max(w[1], Some(t)).unwrap());
            }
        }
        for g in gammas {
            for t in 1..50 {
                assert!(j_max(g, Some(t)).unwrap() <= j_max(g, Some(t + 1)).unwrap());
            }
        }
    }

    #[test]
    fn returns_and_costs() {
        assert_eq!(discounted_return(&traj(vec![-1.0; 3], vec![], 0), 1.0), -3.0);
        assert_eq!(discounted_return(&traj(vec![0.0; 3], vec![], 0), 0.7), 0.0);
        let t = traj(vec![-1.0, -0.5], vec![], 0);
        assert_eq!(discounted_return(&t, 0.5), loop_sum(&[-1.0, -0.5], 0.5));
        assert_eq!(discounted_return(&t, 0.5), -1.25);

        assert_eq!(cost0(&traj(vec![-1.0, -1.0], vec![], 0), 1.0), 2.0);
        assert_eq!(cost0(&traj(vec![0.0], vec![], 0), 1.0), 0.0);
        let c = cost0(&traj(vec![-0.3, -0.7], vec![], 0), 0.5);
        assert!((c - 0.65).abs() < 1e-15);

        let ones = traj(vec![0.0; 100], vec![1.0; 100], 1);
        let cum = CostAggregation::CumulativeDiscounted;
        assert_eq!(discounted_cost(&ones, 1, 1.0, cum).unwrap(), 100.0);
        assert_eq!(
            discounted_cost(&ones, 1, 1.0, CostAggregation::PerStepMean).unwrap(),
            1.0
        );
        let t = traj(vec![0.0; 3], vec![1.0, 0.0, 1.0], 1);
        let got = discounted_cost(&t, 1, 0.9, cum).unwrap();
        assert!((got - loop_sum(&[1.0, 0.0, 1.0], 0.9)).abs() < 1e-15);
        assert!((got - 1.81).abs() < 1e-12);
        assert!(matches!(
            discounted_cost(&t, 2, 0.9, cum),
            Err(Error::ConstraintIndex { .. })
        ));
        assert!(discounted_cost(&t, 0, 0.9, cum).is_err());
    }

    #[test]
    fn cost_columns_pick_the_right_constraint() {
        let t = traj(vec![0.0; 2], vec![1.0, 2.0, 3.0, 4.0], 2);
        let cum = CostAggregation::CumulativeDiscounted;
        assert_eq!(discounted_cost(&t, 1, 1.0, cum).unwrap(), 4.0);
        assert_eq!(discounted_cost(&t, 2, 1.0, cum).unwrap(), 6.0);
    }

    #[test]
    fn spec_rejects_zero_horizon_and_bad_thresholds() {
        let cum = CostAggregation::CumulativeDiscounted;
        assert!(CmdpSpec::new(2, 2, vec![], 1.0, 0, cum, 1.0).is_err());
        assert!(CmdpSpec::new(2, 2, vec![-0.1], 1.0, 10, cum, 1.0).is_err());
        assert!(CmdpSpec::new(2, 2, vec![11.0], 1.0, 10, cum, 1.0).is_err());
        assert!(CmdpSpec::new(2, 2, vec![10.0], 1.0, 10, cum, 1.0).is_ok());
        assert!(CmdpSpec::new(2, 2, vec![0.5], 1.0, 10, CostAggregation::PerStepMean, 1.0).is_ok());
        assert!(CmdpSpec::new(2, 2, vec![2.0], 1.0, 10, CostAggregation::PerStepMean, 1.0).is_err());
        assert!(CmdpSpec::new(2, 2, vec![1e6], 1.0, 10, cum, f64::INFINITY).is_ok());
    }
}

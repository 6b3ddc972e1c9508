//! Sample-based estimates of performance indices and of the regularized
//! Lagrangian gradients, for both exploration paradigms.

use serde::{Deserialize, Serialize};

use crate::cmdp::{trajectory_cost, CmdpSpec, CostAggregation, Trajectory};
use crate::error::{Error, Result};
use crate::policies::{GaussianHyperpolicy, ScorePolicy};

/// Where exploration noise enters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExplorationMode {
    /// Per-step action noise from a stochastic policy.
    #[serde(rename = "ab")]
    ActionBased,
    /// Per-trajectory parameter noise from a hyperpolicy.
    #[serde(rename = "pb")]
    ParameterBased,
}

impl ExplorationMode {
    pub fn label(self) -> &'static str {
        match self {
            ExplorationMode::ActionBased => "ab",
            ExplorationMode::ParameterBased => "pb",
        }
    }
}

/// `N` trajectories, plus the sampled parameters in parameter-based mode.
#[derive(Debug, Clone)]
pub struct Batch {
    trajectories: Vec<Trajectory>,
    thetas: Option<Vec<Vec<f64>>>,
}

impl Batch {
    pub fn action_based(trajectories: Vec<Trajectory>) -> Result<Self> {
        if trajectories.is_empty() {
            return Err(Error::EmptyBatch);
        }
        Ok(Self { trajectories, thetas: None })
    }

    pub fn parameter_based(trajectories: Vec<Trajectory>, thetas: Vec<Vec<f64>>) -> Result<Self> {
        if trajectories.is_empty() {
            return Err(Error::EmptyBatch);
        }
        if thetas.len() != trajectories.len() {
            return Err(Error::DimensionMismatch {
                context: "sampled parameters per trajectory",
                expected: trajectories.len(),
                actual: thetas.len(),
            });
        }
        Ok(Self { trajectories, thetas: Some(thetas) })
    }

    pub fn mode(&self) -> ExplorationMode {
        match self.thetas {
            Some(_) => ExplorationMode::ParameterBased,
            None => ExplorationMode::ActionBased,
        }
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn thetas(&self) -> Option<&[Vec<f64>]> {
        self.thetas.as_deref()
    }
}

/// A batch-mean estimate together with its per-sample rows.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub value: Vec<f64>,
    /// `batch_size x dim`, row-major.
    pub per_sample: Vec<f64>,
    pub batch_size: usize,
}

impl GradientEstimate {
    /// Builds an estimate whose value is the column mean of `per_sample`.
    pub fn from_rows(per_sample: Vec<f64>, batch_size: usize) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::EmptyBatch);
        }
        if per_sample.len() % batch_size != 0 {
            return Err(Error::DimensionMismatch {
                context: "per-sample rows",
                expected: batch_size,
                actual: per_sample.len(),
            });
        }
        let dim = per_sample.len() / batch_size;
        let mut value = vec![0.0; dim];
        for row in per_sample.chunks_exact(dim.max(1)).take(batch_size) {
            value.iter_mut().zip(row).for_each(|(v, r)| *v += r);
        }
        let n = batch_size as f64;
        value.iter_mut().for_each(|v| *v /= n);
        Ok(Self { value, per_sample, batch_size })
    }

    pub fn dim(&self) -> usize {
        self.value.len()
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let d = self.dim();
        &self.per_sample[j * d..(j + 1) * d]
    }
}

/// Batch mean of `C_i(tau_j)`; index 0 is the negated return.
pub fn estimate_j(batch: &Batch, i: usize, spec: &CmdpSpec) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut total = 0.0;
    for traj in batch.trajectories() {
        total += trajectory_cost(traj, i, spec)?;
    }
    Ok(total / batch.len() as f64)
}

/// All `U + 1` index estimates of a batch.
pub fn estimate_all(batch: &Batch, spec: &CmdpSpec) -> Result<Vec<f64>> {
    (0..=spec.num_constraints()).map(|i| estimate_j(batch, i, spec)).collect()
}

/// Per-step weights whose sum is `C_i(tau)`.
fn step_weights(traj: &Trajectory, i: usize, spec: &CmdpSpec, out: &mut Vec<f64>) -> Result<()> {
    let u = traj.num_costs();
    if i > u {
        return Err(Error::ConstraintIndex { index: i, max: u });
    }
    out.clear();
    let t_len = traj.len();
    if i > 0 && spec.cost_aggregation == CostAggregation::PerStepMean {
        let inv = 1.0 / t_len as f64;
        out.extend(traj.cost_column(i).map(|c| c * inv));
        return Ok(());
    }
    let mut discount = 1.0;
    for t in 0..t_len {
        let c = if i == 0 { -traj.rewards()[t] } else { traj.costs_at(t)[i - 1] };
        out.push(discount * c);
        discount *= spec.gamma;
    }
    Ok(())
}

/// GPOMDP estimate of `grad J_i` from an action-based batch.
///
/// Uses the equivalent reward-to-go form
/// `sum_l score_l * sum_{t >= l} w_t`.
pub fn gpomdp_grad(
    batch: &Batch,
    policy: &dyn ScorePolicy,
    i: usize,
    spec: &CmdpSpec,
) -> Result<GradientEstimate> {
    gpomdp_weighted(batch, policy, spec, &index_weights(i, spec.num_constraints())?)
}

fn index_weights(i: usize, u: usize) -> Result<Vec<f64>> {
    if i > u {
        return Err(Error::ConstraintIndex { index: i, max: u });
    }
    let mut w = vec![0.0; u + 1];
    w[i] = 1.0;
    Ok(w)
}

/// GPOMDP estimate of `grad sum_i coef_i J_i` computed in one pass.
fn gpomdp_weighted(
    batch: &Batch,
    policy: &dyn ScorePolicy,
    spec: &CmdpSpec,
    coef: &[f64],
) -> Result<GradientEstimate> {
    if batch.mode() != ExplorationMode::ActionBased {
        return Err(Error::ModeMismatch { expected: "action-based batch" });
    }
    let dim = policy.param_dim();
    let n = batch.len();
    let mut rows = vec![0.0; n * dim];
    let mut weights = Vec::new();
    let mut combined = Vec::new();
    for (traj, row) in batch.trajectories().iter().zip(rows.chunks_exact_mut(dim)) {
        combined.clear();
        combined.resize(traj.len(), 0.0);
        for (i, &k) in coef.iter().enumerate() {
            if k == 0.0 {
                continue;
            }
            step_weights(traj, i, spec, &mut weights)?;
            combined.iter_mut().zip(&weights).for_each(|(c, w)| *c += k * w);
        }
        let mut to_go = 0.0;
        for t in (0..traj.len()).rev() {
            to_go += combined[t];
            if to_go != 0.0 {
                policy.accumulate_score(traj.state(t), traj.action(t), to_go, row);
            }
        }
    }
    GradientEstimate::from_rows(rows, n)
}

/// PGPE estimate of `grad_rho J_i` from a parameter-based batch.
pub fn pgpe_grad(
    batch: &Batch,
    hyperpolicy: &GaussianHyperpolicy,
    i: usize,
    spec: &CmdpSpec,
) -> Result<GradientEstimate> {
    pgpe_weighted(batch, hyperpolicy, spec, &index_weights(i, spec.num_constraints())?)
}

fn pgpe_weighted(
    batch: &Batch,
    hyperpolicy: &GaussianHyperpolicy,
    spec: &CmdpSpec,
    coef: &[f64],
) -> Result<GradientEstimate> {
    let thetas = batch
        .thetas()
        .ok_or(Error::ModeMismatch { expected: "parameter-based batch" })?;
    let dim = hyperpolicy.dim();
    let n = batch.len();
    let mut rows = Vec::with_capacity(n * dim);
    for (traj, theta) in batch.trajectories().iter().zip(thetas) {
        if theta.len() != dim {
            return Err(Error::DimensionMismatch {
                context: "sampled parameter",
                expected: dim,
                actual: theta.len(),
            });
        }
        let mut cost = 0.0;
        for (i, &k) in coef.iter().enumerate() {
            if k != 0.0 {
                cost += k * trajectory_cost(traj, i, spec)?;
            }
        }
        rows.extend(hyperpolicy.score(theta).into_iter().map(|s| s * cost));
    }
    GradientEstimate::from_rows(rows, n)
}

/// The differentiable object behind a batch.
#[derive(Clone, Copy)]
pub enum Model<'a> {
    Policy(&'a dyn ScorePolicy),
    Hyperpolicy(&'a GaussianHyperpolicy),
}

/// Gradient of `J_i` for whichever paradigm `model` belongs to.
pub fn index_grad(batch: &Batch, model: Model<'_>, i: usize, spec: &CmdpSpec) -> Result<GradientEstimate> {
    match model {
        Model::Policy(p) => gpomdp_grad(batch, p, i, spec),
        Model::Hyperpolicy(h) => pgpe_grad(batch, h, i, spec),
    }
}

/// `grad J_0 + sum_u lambda_u grad J_u`, combined from per-index estimates
/// computed on the same batch.
pub fn primal_lagrangian_grad(
    batch: &Batch,
    model: Model<'_>,
    lambda: &[f64],
    spec: &CmdpSpec,
) -> Result<GradientEstimate> {
    let u = spec.num_constraints();
    if lambda.len() != u {
        return Err(Error::DimensionMismatch {
            context: "multipliers",
            expected: u,
            actual: lambda.len(),
        });
    }
    let per_index = (0..=u)
        .map(|i| index_grad(batch, model, i, spec))
        .collect::<Result<Vec<_>>>()?;
    Ok(combine_lagrangian(&per_index, lambda))
}

/// `g_0 + sum_u lambda_u g_u` on cached per-index estimates.
pub fn combine_lagrangian(per_index: &[GradientEstimate], lambda: &[f64]) -> GradientEstimate {
    let mut rows = per_index[0].per_sample.clone();
    for (g, &l) in per_index[1..].iter().zip(lambda) {
        rows.iter_mut().zip(&g.per_sample).for_each(|(r, v)| *r += l * v);
    }
    let mut value = per_index[0].value.clone();
    for (g, &l) in per_index[1..].iter().zip(lambda) {
        value.iter_mut().zip(&g.value).for_each(|(r, v)| *r += l * v);
    }
    GradientEstimate {
        value,
        per_sample: rows,
        batch_size: per_index[0].batch_size,
    }
}

/// Single-pass primal gradient: the composite cost `c_0 + sum lambda_u c_u`
/// is differentiated directly. Agrees with [`primal_lagrangian_grad`] up to
/// rounding and is what the training loop uses.
pub fn primal_lagrangian_grad_fused(
    batch: &Batch,
    model: Model<'_>,
    lambda: &[f64],
    spec: &CmdpSpec,
) -> Result<GradientEstimate> {
    let u = spec.num_constraints();
    if lambda.len() != u {
        return Err(Error::DimensionMismatch {
            context: "multipliers",
            expected: u,
            actual: lambda.len(),
        });
    }
    let mut coef = Vec::with_capacity(u + 1);
    coef.push(1.0);
    coef.extend_from_slice(lambda);
    match model {
        Model::Policy(p) => gpomdp_weighted(batch, p, spec, &coef),
        Model::Hyperpolicy(h) => pgpe_weighted(batch, h, spec, &coef),
    }
}

/// Component `i`: `J_hat_i - b_i - omega * lambda_i`, with per-sample rows.
pub fn dual_lagrangian_grad(
    batch: &Batch,
    spec: &CmdpSpec,
    omega: f64,
    lambda: &[f64],
) -> Result<GradientEstimate> {
    let u = spec.num_constraints();
    if lambda.len() != u {
        return Err(Error::DimensionMismatch {
            context: "multipliers",
            expected: u,
            actual: lambda.len(),
        });
    }
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut rows = Vec::with_capacity(batch.len() * u);
    for traj in batch.trajectories() {
        for i in 1..=u {
            let c = trajectory_cost(traj, i, spec)?;
            rows.push(c - spec.thresholds[i - 1] - omega * lambda[i - 1]);
        }
    }
    GradientEstimate::from_rows(rows, batch.len())
}

/// Trace of the unbiased sample covariance of the per-sample rows.
pub fn estimator_variance(est: &GradientEstimate) -> Result<f64> {
    let n = est.batch_size;
    if n < 2 {
        return Err(Error::NotEnoughSamples { required: 2, actual: n });
    }
    let dim = est.dim();
    let mut total = 0.0;
    for k in 0..dim {
        let mean = est.value[k];
        let ss: f64 = (0..n)
            .map(|j| {
                let d = est.per_sample[j * dim + k] - mean;
                d * d
            })
            .sum();
        total += ss / (n - 1) as f64;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmdp::Trajectory;
    use crate::policies::TabularSoftmaxPolicy;
    use crate::rng::stream;
    use rand::Rng;

    fn bandit_spec(u: usize) -> CmdpSpec {
        CmdpSpec::new(1, 1, vec![0.5; u], 1.0, 1, CostAggregation::CumulativeDiscounted, 1.0)
            .unwrap()
    }

    fn bandit_traj(action: usize, reward: f64, costs: &[f64]) -> Trajectory {
        Trajectory::from_parts(
            1,
            1,
            costs.len(),
            vec![0.0],
            vec![action as f64],
            vec![reward],
            costs.to_vec(),
        )
        .unwrap()
    }

    fn grid_traj(wall_steps: usize, t: usize) -> Trajectory {
        let costs = (0..t).map(|k| if k < wall_steps { 1.0 } else { 0.0 }).collect();
        Trajectory::from_parts(1, 1, 1, vec![0.0; t], vec![0.0; t], vec![0.0; t], costs).unwrap()
    }

    #[test]
    fn estimate_j_counts_wall_fraction() {
        let spec =
            CmdpSpec::new(1, 1, vec![0.2], 1.0, 100, CostAggregation::PerStepMean, 1.0).unwrap();
        let batch = Batch::action_based(vec![grid_traj(20, 100)]).unwrap();
        assert!((estimate_j(&batch, 1, &spec).unwrap() - 0.2).abs() < 1e-15);
        let zero = Batch::action_based(vec![grid_traj(0, 100); 3]).unwrap();
        assert_eq!(estimate_j(&zero, 1, &spec).unwrap(), 0.0);
        assert!(Batch::action_based(vec![]).is_err());
    }

    #[test]
    fn gpomdp_zero_costs_give_zero_gradient() {
        let spec = bandit_spec(1);
        let p = TabularSoftmaxPolicy::with_params(1, 2, 1.0, vec![0.3, -0.1]).unwrap();
        let batch = Batch::action_based(vec![bandit_traj(0, 0.0, &[0.0]), bandit_traj(1, 0.0, &[0.0])])
            .unwrap();
        for i in 0..=1 {
            let g = gpomdp_grad(&batch, &p, i, &spec).unwrap();
            assert!(g.value.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn gpomdp_matches_hand_computed_multistep() {
        // two steps, gamma 0.5; score of step 0 affects both costs,
        // score of step 1 only the second
        let spec =
            CmdpSpec::new(1, 1, vec![1.0], 0.5, 2, CostAggregation::CumulativeDiscounted, 1.0)
                .unwrap();
        let p = TabularSoftmaxPolicy::with_params(1, 2, 1.0, vec![0.0, 0.0]).unwrap();
        let traj = Trajectory::from_parts(
            1,
            1,
            1,
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, 0.0],
            vec![2.0, 4.0],
        )
        .unwrap();
        let batch = Batch::action_based(vec![traj]).unwrap();
        let g = gpomdp_grad(&batch, &p, 1, &spec).unwrap();
        let s0 = p.score(0, 0);
        let s1 = p.score(0, 1);
        // sum_t (sum_{l<=t} s_l) gamma^t c_t
        let expected: Vec<f64> =
            (0..2).map(|k| s0[k] * 2.0 + (s0[k] + s1[k]) * 0.5 * 4.0).collect();
        for (a, b) in g.value.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn gpomdp_is_linear_in_costs() {
        let spec = bandit_spec(1);
        let p = TabularSoftmaxPolicy::with_params(1, 2, 1.0, vec![0.3, -0.1]).unwrap();
        let base = Batch::action_based(vec![bandit_traj(0, 0.0, &[0.75]), bandit_traj(1, 0.0, &[0.25])])
            .unwrap();
        let scaled = Batch::action_based(vec![bandit_traj(0, 0.0, &[1.5]), bandit_traj(1, 0.0, &[0.5])])
            .unwrap();
        let g = gpomdp_grad(&base, &p, 1, &spec).unwrap();
        let h = gpomdp_grad(&scaled, &p, 1, &spec).unwrap();
        for (a, b) in g.per_sample.iter().zip(&h.per_sample) {
            assert_eq!(2.0 * a, *b);
        }
    }

    /// Exact bandit gradient `sum_a c(a) pi(a) score(a)` by enumeration.
    fn bandit_exact(p: &TabularSoftmaxPolicy, cost: &[f64]) -> Vec<f64> {
        let probs = p.action_probs(0);
        let mut g = vec![0.0; 2];
        for a in 0..2 {
            let s = p.score(0, a);
            for k in 0..2 {
                g[k] += cost[a] * probs[a] * s[k];
            }
        }
        g
    }

    fn sample_bandit_batches(
        p: &TabularSoftmaxPolicy,
        cost: impl Fn(usize) -> (f64, f64),
        n: usize,
    ) -> Vec<Batch> {
        let mut rng = stream(&[17]);
        (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                let a = if u < p.action_probs(0)[0] { 0 } else { 1 };
                let (r, c) = cost(a);
                Batch::action_based(vec![bandit_traj(a, r, &[c])]).unwrap()
            })
            .collect()
    }

    fn mean_and_se(samples: &[Vec<f64>], k: usize) -> (f64, f64) {
        let n = samples.len() as f64;
        let m = samples.iter().map(|s| s[k]).sum::<f64>() / n;
        let v = samples.iter().map(|s| (s[k] - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    }

    #[test]
    fn primal_gradient_bandit_oracle() {
        let spec = bandit_spec(1);
        let p = TabularSoftmaxPolicy::with_params(1, 2, 1.0, vec![0.4, -0.2]).unwrap();
        let reward = [-0.2, -0.9];
        let cost = [0.8, 0.1];
        let lambda = [1.5];
        let composite: Vec<f64> = (0..2).map(|a| -reward[a] + lambda[0] * cost[a]).collect();
        let exact = bandit_exact(&p, &composite);
        let batches = sample_bandit_batches(&p, |a| (reward[a], cost[a]), 20_000);
        let samples: Vec<Vec<f64>> = batches
            .iter()
            .map(|b| primal_lagrangian_grad(b, Model::Policy(&p), &lambda, &spec).unwrap().value)
            .collect();
        for k in 0..2 {
            let (m, se) = mean_and_se(&samples, k);
            assert!((m - exact[k]).abs() <= 4.0 * se, "{m} vs {}", exact[k]);
        }
    }

    #[test]
    fn primal_gradient_is_affine_in_lambda() {
        let spec = bandit_spec(1);
        let p = TabularSoftmaxPolicy::with_params(1, 2, 1.0, vec![0.4, -0.2]).unwrap();
        let batch = Batch::action_based(vec![
            bandit_traj(0, -0.3, &[0.8]),
            bandit_traj(1, -0.7, &[0.1]),
        ])
        .unwrap();
        let g0 = gpomdp_grad(&batch, &p, 0, &spec).unwrap();
        let g1 = gpomdp_grad(&batch, &p, 1, &spec).unwrap();
        let zero = primal_lagrangian_grad(&batch, Model::Policy(&p), &[0.0], &spec).unwrap();
        assert_eq!(zero.value, g0.value);
        let two = primal_lagrangian_grad(&batch, Model::Policy(&p), &[2.0], &spec).unwrap();
        let expected: Vec<f64> = g0.value.iter().zip(&g1.value).map(|(a, b)| a + 2.0 * b).collect();
        assert_eq!(two.value, expected);
        let fused = primal_lagrangian_grad_fused(&batch, Model::Policy(&p), &[2.0], &spec).unwrap();
        for (a, b) in fused.value.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(primal_lagrangian_grad(&batch, Model::Policy(&p), &[1.0, 1.0], &spec).is_err());
    }

    #[test]
    fn mode_mismatch_is_rejected() {
        let spec = bandit_spec(1);
        let p = TabularSoftmaxPolicy::new(1, 2, 1.0).unwrap();
        let h = GaussianHyperpolicy::new(vec![0.0], 1.0).unwrap();
        let ab = Batch::action_based(vec![bandit_traj(0, 0.0, &[0.0])]).unwrap();
        let pb = Batch::parameter_based(vec![bandit_traj(0, 0.0, &[0.0])], vec![vec![0.0]]).unwrap();
        assert!(matches!(pgpe_grad(&ab, &h, 0, &spec), Err(Error::ModeMismatch { .. })));
        assert!(matches!(gpomdp_grad(&pb, &p, 0, &spec), Err(Error::ModeMismatch { .. })));
        assert!(Batch::parameter_based(vec![bandit_traj(0, 0.0, &[0.0])], vec![]).is_err());
    }

    #[test]
    fn pgpe_zero_cost_and_zero_noise() {
        let spec = bandit_spec(1);
        let h = GaussianHyperpolicy::new(vec![0.7], 0.5).unwrap();
        let b = Batch::parameter_based(
            vec![bandit_traj(0, 0.0, &[0.0]), bandit_traj(0, 0.0, &[0.0])],
            vec![vec![1.0], vec![-2.0]],
        )
        .unwrap();
        assert_eq!(pgpe_grad(&b, &h, 1, &spec).unwrap().value, vec![0.0]);
        let b = Batch::parameter_based(
            vec![bandit_traj(0, -3.0, &[5.0]), bandit_traj(0, -1.0, &[2.0])],
            vec![vec![0.7], vec![0.7]],
        )
        .unwrap();
        for i in 0..=1 {
            assert_eq!(pgpe_grad(&b, &h, i, &spec).unwrap().value, vec![0.0]);
        }
    }

    #[test]
    fn pgpe_identity_cost_oracle() {
        // C(tau) = theta, theta ~ N(rho, sigma^2): exact gradient 1
        let spec = bandit_spec(1);
        let h = GaussianHyperpolicy::new(vec![0.3], 0.5).unwrap();
        let mut rng = stream(&[23]);
        let samples: Vec<Vec<f64>> = (0..20_000)
            .map(|_| {
                let th = h.sample(&mut rng);
                let b = Batch::parameter_based(vec![bandit_traj(0, 0.0, &[th[0]])], vec![th]).unwrap();
                pgpe_grad(&b, &h, 1, &spec).unwrap().value
            })
            .collect();
        let (m, se) = mean_and_se(&samples, 0);
        assert!((m - 1.0).abs() <= 4.0 * se);
    }

    #[test]
    fn dual_gradient_examples() {
        let spec =
            CmdpSpec::new(1, 1, vec![0.2], 1.0, 100, CostAggregation::PerStepMean, 1.0).unwrap();
        let batch = Batch::action_based(vec![grid_traj(50, 100)]).unwrap();
        let g = dual_lagrangian_grad(&batch, &spec, 0.1, &[1.0]).unwrap();
        assert!((g.value[0] - 0.2).abs() < 1e-15);
        let g = dual_lagrangian_grad(&batch, &spec, 0.0, &[1.0]).unwrap();
        assert!((g.value[0] - 0.3).abs() < 1e-15);
        let at_b = Batch::action_based(vec![grid_traj(20, 100)]).unwrap();
        let g = dual_lagrangian_grad(&at_b, &spec, 0.5, &[0.0]).unwrap();
        assert!(g.value[0].abs() < 1e-15);
    }

    #[test]
    fn variance_examples() {
        let est = GradientEstimate::from_rows(vec![0.0, 2.0], 2).unwrap();
        assert_eq!(est.value, vec![1.0]);
        assert_eq!(estimator_variance(&est).unwrap(), 2.0);
        let flat = GradientEstimate::from_rows(vec![1.0, 3.0, 1.0, 3.0, 1.0, 3.0], 3).unwrap();
        assert_eq!(estimator_variance(&flat).unwrap(), 0.0);
        let single = GradientEstimate::from_rows(vec![1.0], 1).unwrap();
        assert!(matches!(estimator_variance(&single), Err(Error::NotEnoughSamples { .. })));
    }

    #[test]
    fn per_step_mean_gradient_weights_by_horizon() {
        let spec =
            CmdpSpec::new(1, 1, vec![0.2], 1.0, 4, CostAggregation::PerStepMean, 1.0).unwrap();
        let p = TabularSoftmaxPolicy::new(1, 2, 1.0).unwrap();
        let traj = Trajectory::from_parts(
            1,
            1,
            1,
            vec![0.0; 4],
            vec![0.0; 4],
            vec![0.0; 4],
            vec![0.0, 0.0, 0.0, 1.0],
        )
        .unwrap();
        let batch = Batch::action_based(vec![traj]).unwrap();
        let g = gpomdp_grad(&batch, &p, 1, &spec).unwrap();
        // four identical scores (0.5, -0.5) times a weight of 1/4
        assert!((g.value[0] - 0.5).abs() < 1e-15);
        assert!((g.value[1] + 0.5).abs() < 1e-15);
    }
}

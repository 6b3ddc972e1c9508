//! The alternate descent-ascent training loop and the deterministic
//! deployment study.

use serde::{Deserialize, Serialize};

use crate::cmdp::{rollout, trajectory_cost, ActionSource, CmdpSpec, CostAggregation, Environment, Trajectory};
use crate::error::{Error, Result};
use crate::estimators::{
    dual_lagrangian_grad, estimate_all, estimator_variance, primal_lagrangian_grad_fused, Batch,
    ExplorationMode, Model,
};
use crate::lagrangian::{lagrangian_value, lambda_radius};
use crate::linalg::norm2;
use crate::policies::{
    GaussianHyperpolicy, LinearDeterministicPolicy, LinearGaussianPolicy, ScorePolicy,
    TabularSoftmaxPolicy,
};
use crate::rng::{derive_seed, stream, Phase, StreamRng};
use crate::schedule::{dual_update, primal_update, ParamBox, ScheduleKind, StepState};
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyFamily {
    TabularSoftmax,
    Linear,
}

fn default_temperature() -> f64 {
    1.0
}
fn default_lambda_cap() -> f64 {
    1e4
}
fn default_eval_interval() -> usize {
    10
}

/// Everything the training loop needs besides the environment and the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub mode: ExplorationMode,
    pub policy: PolicyFamily,
    /// Exploration variance of the Gaussian policy or hyperpolicy.
    #[serde(default)]
    pub sigma2: Option<f64>,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    pub omega: f64,
    /// Multiplier norm cap used in place of the radius when `omega = 0`.
    #[serde(default = "default_lambda_cap")]
    pub lambda_cap: f64,
    pub iterations: usize,
    pub batch_size: usize,
    pub schedule: ScheduleKind,
    pub primal_rate: f64,
    pub dual_rate: f64,
    #[serde(default = "default_eval_interval")]
    pub eval_interval: usize,
    /// Deterministic evaluation rollouts; defaults to the batch size.
    #[serde(default)]
    pub eval_rollouts: Option<usize>,
    /// Overrides the environment's default constraint aggregation.
    #[serde(default)]
    pub cost_aggregation: Option<CostAggregation>,
    #[serde(default)]
    pub param_box: Option<ParamBox>,
    /// Starting parameters (policy or hyperpolicy mean); zeros by default.
    #[serde(default)]
    pub initial_params: Option<Vec<f64>>,
}

impl AlgorithmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if self.eval_interval == 0 {
            return bad("eval_interval must be at least 1".into());
        }
        if self.eval_rollouts == Some(0) {
            return bad("eval_rollouts must be at least 1".into());
        }
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return bad(format!("omega must be non-negative, got {}", self.omega));
        }
        if self.omega == 0.0 && !(self.lambda_cap > 0.0 && self.lambda_cap.is_finite()) {
            return bad("omega = 0 requires a positive finite lambda_cap".into());
        }
        for (name, rate) in [("primal_rate", self.primal_rate), ("dual_rate", self.dual_rate)] {
            if !(rate > 0.0 && rate.is_finite()) {
                return bad(format!("{name} must be positive, got {rate}"));
            }
        }
        match (self.policy, self.mode) {
            (PolicyFamily::TabularSoftmax, ExplorationMode::ParameterBased) => {
                return bad("tabular_softmax policies only support action-based exploration".into())
            }
            (PolicyFamily::TabularSoftmax, _) => {
                if !(self.temperature > 0.0 && self.temperature.is_finite()) {
                    return bad("temperature must be positive".into());
                }
                if self.sigma2.is_some() {
                    return bad("sigma2 does not apply to tabular_softmax policies".into());
                }
            }
            (PolicyFamily::Linear, _) => match self.sigma2 {
                Some(v) if v > 0.0 && v.is_finite() => {}
                Some(v) => return bad(format!("sigma2 must be positive, got {v}")),
                None => return bad("linear policies need sigma2".into()),
            },
        }
        if let Some(b) = self.param_box {
            if !(b.low < b.high) {
                return bad("param_box needs low < high".into());
            }
        }
        Ok(())
    }

    pub fn eval_rollouts(&self) -> usize {
        self.eval_rollouts.unwrap_or(self.batch_size)
    }

    pub fn sigma(&self) -> Option<f64> {
        self.sigma2.map(f64::sqrt)
    }
}

/// The object being optimized.
#[derive(Debug, Clone)]
pub enum Learner {
    Softmax(TabularSoftmaxPolicy),
    Gaussian(LinearGaussianPolicy),
    Hyper {
        hyperpolicy: GaussianHyperpolicy,
        action_dim: usize,
        state_dim: usize,
    },
}

impl Learner {
    /// Builds the learner matching `cfg` for `env`, checking compatibility.
    pub fn for_env(env: &dyn Environment, cfg: &AlgorithmConfig) -> Result<Self> {
        cfg.validate()?;
        let spec = env.spec();
        let learner = match cfg.policy {
            PolicyFamily::TabularSoftmax => {
                let layout = env.discrete_layout().ok_or_else(|| {
                    Error::InvalidConfig(format!(
                        "tabular_softmax needs a discrete environment, `{}` is continuous",
                        env.name()
                    ))
                })?;
                Learner::Softmax(TabularSoftmaxPolicy::new(
                    layout.num_states,
                    layout.num_actions,
                    cfg.temperature,
                )?)
            }
            PolicyFamily::Linear => {
                if env.discrete_layout().is_some() {
                    return Err(Error::InvalidConfig(format!(
                        "`{}` is discrete and needs the tabular_softmax policy",
                        env.name()
                    )));
                }
                let (da, ds) = (spec.action_dim, spec.state_dim);
                let sigma = cfg.sigma().unwrap_or(1.0);
                match cfg.mode {
                    ExplorationMode::ActionBased => Learner::Gaussian(LinearGaussianPolicy::new(
                        da,
                        ds,
                        vec![0.0; da * ds],
                        sigma,
                    )?),
                    ExplorationMode::ParameterBased => Learner::Hyper {
                        hyperpolicy: GaussianHyperpolicy::new(vec![0.0; da * ds], sigma)?,
                        action_dim: da,
                        state_dim: ds,
                    },
                }
            }
        };
        let mut learner = learner;
        if let Some(init) = &cfg.initial_params {
            learner.set_params(init)?;
        }
        Ok(learner)
    }

    pub fn mode(&self) -> ExplorationMode {
        match self {
            Learner::Hyper { .. } => ExplorationMode::ParameterBased,
            _ => ExplorationMode::ActionBased,
        }
    }

    pub fn params(&self) -> &[f64] {
        match self {
            Learner::Softmax(p) => p.params(),
            Learner::Gaussian(p) => p.params(),
            Learner::Hyper { hyperpolicy, .. } => hyperpolicy.mean(),
        }
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        match self {
            Learner::Softmax(p) => p.set_params(params),
            Learner::Gaussian(p) => p.set_params(params),
            Learner::Hyper { hyperpolicy, .. } => hyperpolicy.set_mean(params),
        }
    }

    pub fn model(&self) -> Model<'_> {
        match self {
            Learner::Softmax(p) => Model::Policy(p),
            Learner::Gaussian(p) => Model::Policy(p),
            Learner::Hyper { hyperpolicy, .. } => Model::Hyperpolicy(hyperpolicy),
        }
    }

    /// Draws `n` trajectories, each from its own stream derived from
    /// `parts` plus the trajectory index.
    pub fn sample_batch(&self, env: &dyn Environment, n: usize, parts: &[u64]) -> Result<Batch> {
        let mut key = parts.to_vec();
        key.push(0);
        let last = key.len() - 1;
        match self {
            Learner::Softmax(_) | Learner::Gaussian(_) => {
                let policy: &dyn ScorePolicy = match self {
                    Learner::Softmax(p) => p,
                    Learner::Gaussian(p) => p,
                    Learner::Hyper { .. } => unreachable!(),
                };
                let mut source = StochasticSource { policy };
                let mut trajs = Vec::with_capacity(n);
                for j in 0..n {
                    key[last] = j as u64;
                    trajs.push(rollout(env, &mut source, &mut stream(&key))?);
                }
                Batch::action_based(trajs)
            }
            Learner::Hyper { hyperpolicy, action_dim, state_dim } => {
                let mut trajs = Vec::with_capacity(n);
                let mut thetas = Vec::with_capacity(n);
                for j in 0..n {
                    key[last] = j as u64;
                    let mut rng = stream(&key);
                    let theta = hyperpolicy.sample(&mut rng);
                    let det = LinearDeterministicPolicy::new(*action_dim, *state_dim, theta.clone())?;
                    trajs.push(rollout(env, &mut DeterministicSource(&det), &mut rng)?);
                    thetas.push(theta);
                }
                Batch::parameter_based(trajs, thetas)
            }
        }
    }

    /// The noise-free policy: the linear mean for Gaussian families and the
    /// greedy action for softmax.
    pub fn deterministic(&self) -> Result<Deployed> {
        Ok(match self {
            Learner::Softmax(p) => Deployed::Greedy(p.clone()),
            Learner::Gaussian(p) => Deployed::Linear(p.mean_policy().clone()),
            Learner::Hyper { hyperpolicy, action_dim, state_dim } => Deployed::Linear(
                LinearDeterministicPolicy::new(*action_dim, *state_dim, hyperpolicy.mean().to_vec())?,
            ),
        })
    }
}

/// A deployed deterministic policy.
#[derive(Debug, Clone)]
pub enum Deployed {
    Linear(LinearDeterministicPolicy),
    Greedy(TabularSoftmaxPolicy),
}

impl ActionSource for Deployed {
    fn action_dim(&self) -> usize {
        match self {
            Deployed::Linear(p) => p.action_dim(),
            Deployed::Greedy(_) => 1,
        }
    }

    fn act(&mut self, state: &[f64], _step: usize, _rng: &mut StreamRng, action: &mut [f64]) {
        match self {
            Deployed::Linear(p) => p.act(state, action),
            Deployed::Greedy(p) => action[0] = p.greedy_action(state[0] as usize) as f64,
        }
    }
}

struct StochasticSource<'a> {
    policy: &'a dyn ScorePolicy,
}

impl ActionSource for StochasticSource<'_> {
    fn action_dim(&self) -> usize {
        self.policy.action_dim()
    }

    fn act(&mut self, state: &[f64], _step: usize, rng: &mut StreamRng, action: &mut [f64]) {
        self.policy.sample_action(state, rng, action)
    }
}

struct DeterministicSource<'a>(&'a LinearDeterministicPolicy);

impl ActionSource for DeterministicSource<'_> {
    fn action_dim(&self) -> usize {
        self.0.action_dim()
    }

    fn act(&mut self, state: &[f64], _step: usize, _rng: &mut StreamRng, action: &mut [f64]) {
        self.0.act(state, action)
    }
}

/// Mean of every index over `m` rollouts of `policy`.
pub fn evaluate(env: &dyn Environment, policy: &mut dyn ActionSource, m: usize, parts: &[u64]) -> Result<Vec<f64>> {
    let spec = env.spec();
    let u = spec.num_constraints();
    let mut sums = vec![0.0; u + 1];
    let mut key = parts.to_vec();
    key.push(0);
    let last = key.len() - 1;
    for j in 0..m {
        key[last] = j as u64;
        let traj = rollout(env, policy, &mut stream(&key))?;
        for (i, s) in sums.iter_mut().enumerate() {
            *s += trajectory_cost(&traj, i, spec)?;
        }
    }
    sums.iter_mut().for_each(|s| *s /= m as f64);
    Ok(sums)
}

/// One logged iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub iteration: usize,
    /// Estimated `J_0..J_U` on the primal batch (`J_0` is the negated return).
    pub j: Vec<f64>,
    /// Estimated return, `-J_0`.
    #[serde(rename = "return")]
    pub ret: f64,
    /// Multipliers used at this iteration.
    pub lambda: Vec<f64>,
    pub lagrangian: f64,
    pub primal_rate: f64,
    pub dual_rate: f64,
    pub primal_grad_norm: f64,
    pub primal_step_norm: f64,
    /// Unbiased per-sample variance (trace) of the dual gradient estimate.
    pub dual_grad_variance: Option<f64>,
    /// Trajectories consumed by learning so far, dual batches included.
    pub rollouts: u64,
    /// Deterministic-deployment estimates of `J_0..J_U`, on evaluation
    /// iterations only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deterministic: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Aborted { iteration: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub mode: ExplorationMode,
    pub thresholds: Vec<f64>,
    pub rows: Vec<IterationRow>,
    pub final_params: Vec<f64>,
    pub final_lambda: Vec<f64>,
    pub status: RunStatus,
}

impl RunRecord {
    pub fn completed(&self) -> bool {
        self.status == RunStatus::Completed
    }
}

fn finite_or_abort(values: &[f64], context: &'static str, iteration: usize) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { context, iteration: Some(iteration) })
    }
}

/// Runs `cfg.iterations` alternate descent-ascent iterations.
///
/// Each iteration samples a batch at the current primal variable, takes a
/// primal descent step on the Lagrangian, samples a fresh batch at the
/// updated primal variable and takes a projected dual ascent step. Any
/// non-finite quantity stops the run and marks the record aborted.
pub fn run_cpg(env: &dyn Environment, cfg: &AlgorithmConfig, seed: u64) -> Result<RunRecord> {
    let mut learner = Learner::for_env(env, cfg)?;
    let spec = env.spec().clone();
    let u = spec.num_constraints();
    let radius = lambda_radius(u, spec.constraint_j_max(), cfg.omega, cfg.lambda_cap)?;
    let mut lambda = vec![0.0; u];
    let dim = learner.params().len();
    let mut primal_state = StepState::new(cfg.schedule, cfg.primal_rate, dim)?;
    let mut dual_state = StepState::new(cfg.schedule, cfg.dual_rate, u)?;
    let n = cfg.batch_size;
    let mut rows = Vec::with_capacity(cfg.iterations);
    let mut rollouts = 0u64;
    let mut status = RunStatus::Completed;

    for k in 0..cfg.iterations {
        match iterate(
            env, cfg, &spec, &mut learner, &mut lambda, &mut primal_state, &mut dual_state, radius,
            seed, k, &mut rollouts,
        ) {
            Ok(row) => rows.push(row),
            Err(e) => {
                status = RunStatus::Aborted { iteration: k, reason: e.to_string() };
                break;
            }
        }
    }
    debug_assert!(rollouts % n as u64 == 0);
    Ok(RunRecord {
        seed,
        mode: cfg.mode,
        thresholds: spec.thresholds.clone(),
        rows,
        final_params: learner.params().to_vec(),
        final_lambda: lambda,
        status,
    })
}

#[allow(clippy::too_many_arguments)]
fn iterate(
    env: &dyn Environment,
    cfg: &AlgorithmConfig,
    spec: &CmdpSpec,
    learner: &mut Learner,
    lambda: &mut Vec<f64>,
    primal_state: &mut StepState,
    dual_state: &mut StepState,
    radius: f64,
    seed: u64,
    k: usize,
    rollouts: &mut u64,
) -> Result<IterationRow> {
    let n = cfg.batch_size;
    let kk = k as u64;

    let deterministic = if k % cfg.eval_interval == 0 || k + 1 == cfg.iterations {
        let mut det = learner.deterministic()?;
        let values = evaluate(env, &mut det, cfg.eval_rollouts(), &[seed, kk, Phase::Evaluation as u64])?;
        finite_or_abort(&values, "deterministic evaluation", k)?;
        Some(values)
    } else {
        None
    };

    let batch = learner.sample_batch(env, n, &[seed, kk, Phase::Primal as u64])?;
    *rollouts += n as u64;
    let j = estimate_all(&batch, spec)?;
    finite_or_abort(&j, "performance estimate", k)?;
    let lagrangian = lagrangian_value(&j, lambda, cfg.omega, &spec.thresholds)?;
    let grad = primal_lagrangian_grad_fused(&batch, learner.model(), lambda, spec)?;
    finite_or_abort(&grad.value, "primal gradient", k)?;
    let mut params = learner.params().to_vec();
    let step_norm = primal_update(&mut params, &grad.value, primal_state, cfg.param_box)
        .map_err(|e| with_iteration(e, k))?;
    finite_or_abort(&params, "primal parameters", k)?;
    learner.set_params(&params)?;

    let dual_batch = learner.sample_batch(env, n, &[seed, kk, Phase::Dual as u64])?;
    *rollouts += n as u64;
    let dual_grad = dual_lagrangian_grad(&dual_batch, spec, cfg.omega, lambda)?;
    finite_or_abort(&dual_grad.value, "dual gradient", k)?;
    let dual_grad_variance = if n >= 2 { Some(estimator_variance(&dual_grad)?) } else { None };
    let used_lambda = lambda.clone();
    *lambda = dual_update(lambda, &dual_grad.value, dual_state, radius).map_err(|e| with_iteration(e, k))?;

    Ok(IterationRow {
        iteration: k,
        ret: -j[0],
        j,
        lambda: used_lambda,
        lagrangian,
        primal_rate: primal_state.rate(),
        dual_rate: dual_state.rate(),
        primal_grad_norm: norm2(&grad.value),
        primal_step_norm: step_norm,
        dual_grad_variance,
        rollouts: *rollouts,
        deterministic,
    })
}

fn with_iteration(e: Error, k: usize) -> Error {
    match e {
        Error::NonFinite { context, .. } => Error::NonFinite { context, iteration: Some(k) },
        other => other,
    }
}

/// One row of the deterministic deployment study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub sigma: f64,
    pub stochastic: Vec<f64>,
    pub deterministic: Vec<f64>,
    /// `|stochastic_i - deterministic_i|` per index.
    pub gap: Vec<f64>,
    /// Standard error of the paired per-rollout differences.
    pub gap_se: Vec<f64>,
    /// `(1 + ||lambda||_1) * lipschitz * sigma * sqrt(d)` when a Lipschitz
    /// constant is supplied.
    pub envelope: Option<f64>,
}

/// Options for [`deterministic_gap`].
#[derive(Debug, Clone, Copy)]
pub struct GapOptions<'a> {
    pub mode: ExplorationMode,
    pub rollouts: usize,
    pub seed: u64,
    pub lipschitz: Option<f64>,
    pub lambda: &'a [f64],
}

/// Compares the stochastic (hyper)policy at each `sigma` against its
/// deterministic counterpart with fixed linear parameters `params`.
///
/// Rollout `j` uses the same initial state and transition stream at every
/// noise level and for the deterministic policy, and the stochastic
/// rollouts share one standard-normal stream scaled by `sigma`, so the
/// differences are paired.
pub fn deterministic_gap(
    env: &dyn Environment,
    params: &[f64],
    sigmas: &[f64],
    opts: GapOptions<'_>,
) -> Result<Vec<GapRow>> {
    let spec = env.spec();
    let (da, ds) = (spec.action_dim, spec.state_dim);
    let det = LinearDeterministicPolicy::new(da, ds, params.to_vec())?;
    if opts.rollouts == 0 {
        return Err(Error::NotEnoughSamples { required: 1, actual: 0 });
    }
    if let Some(&s) = sigmas.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(Error::InvalidConfig(format!("noise levels must be positive, got {s}")));
    }
    let u = spec.num_constraints();
    let m = opts.rollouts;
    let env_key = |j: usize| [opts.seed, j as u64, 0];
    let noise_key = |j: usize| derive_seed(&[opts.seed, j as u64, 1]);

    let mut det_costs = vec![vec![0.0; u + 1]; m];
    for (j, row) in det_costs.iter_mut().enumerate() {
        let traj = rollout(env, &mut DeterministicSource(&det), &mut stream(&env_key(j)))?;
        fill_costs(&traj, spec, row)?;
    }
    let det_mean = column_means(&det_costs);
    let d_total = (match opts.mode {
        ExplorationMode::ActionBased => da,
        ExplorationMode::ParameterBased => da * ds,
    }) as f64;
    let lambda_l1: f64 = opts.lambda.iter().map(|l| l.abs()).sum();

    let mut out = Vec::with_capacity(sigmas.len());
    let mut costs = vec![0.0; u + 1];
    for &sigma in sigmas {
        let mut sum = vec![0.0; u + 1];
        let mut diff_sum = vec![0.0; u + 1];
        let mut diff_sq = vec![0.0; u + 1];
        for j in 0..m {
            let mut noise = stream(&[noise_key(j)]);
            let mut env_rng = stream(&env_key(j));
            let traj = match opts.mode {
                ExplorationMode::ActionBased => {
                    let mut src = NoisyLinear { policy: &det, sigma, noise: &mut noise };
                    rollout(env, &mut src, &mut env_rng)?
                }
                ExplorationMode::ParameterBased => {
                    let theta: Vec<f64> = params
                        .iter()
                        .map(|p| {
                            let z: f64 = StandardNormal.sample(&mut noise);
                            p + sigma * z
                        })
                        .collect();
                    let perturbed = LinearDeterministicPolicy::new(da, ds, theta)?;
                    rollout(env, &mut DeterministicSource(&perturbed), &mut env_rng)?
                }
            };
            fill_costs(&traj, spec, &mut costs)?;
            for i in 0..=u {
                sum[i] += costs[i];
                let d = costs[i] - det_costs[j][i];
                diff_sum[i] += d;
                diff_sq[i] += d * d;
            }
        }
        let mf = m as f64;
        let stochastic: Vec<f64> = sum.iter().map(|s| s / mf).collect();
        let gap = stochastic.iter().zip(&det_mean).map(|(s, d)| (s - d).abs()).collect();
        let gap_se = (0..=u)
            .map(|i| {
                if m < 2 {
                    return f64::INFINITY;
                }
                let mean = diff_sum[i] / mf;
                let var = ((diff_sq[i] - mf * mean * mean) / (mf - 1.0)).max(0.0);
                (var / mf).sqrt()
            })
            .collect();
        out.push(GapRow {
            sigma,
            stochastic,
            deterministic: det_mean.clone(),
            gap,
            gap_se,
            envelope: opts
                .lipschitz
                .map(|l| (1.0 + lambda_l1) * l * sigma * d_total.sqrt()),
        });
    }
    Ok(out)
}

struct NoisyLinear<'a> {
    policy: &'a LinearDeterministicPolicy,
    sigma: f64,
    noise: &'a mut StreamRng,
}

impl ActionSource for NoisyLinear<'_> {
    fn action_dim(&self) -> usize {
        self.policy.action_dim()
    }

    fn act(&mut self, state: &[f64], _step: usize, _rng: &mut StreamRng, action: &mut [f64]) {
        self.policy.act(state, action);
        for a in action.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut *self.noise);
            *a += self.sigma * z;
        }
    }
}

fn fill_costs(traj: &Trajectory, spec: &CmdpSpec, out: &mut [f64]) -> Result<()> {
    for (i, o) in out.iter_mut().enumerate() {
        *o = trajectory_cost(traj, i, spec)?;
    }
    Ok(())
}

fn column_means(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len() as f64;
    let mut m = vec![0.0; rows[0].len()];
    for r in rows {
        m.iter_mut().zip(r).for_each(|(a, b)| *a += b);
    }
    m.iter_mut().for_each(|a| *a /= n);
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{make_cost_lqr, make_dgww, DgwwConfig, LqrConfig};
    use crate::lagrangian::lagrangian_value;

    fn lqr_cfg(mode: ExplorationMode) -> AlgorithmConfig {
        AlgorithmConfig {
            mode,
            policy: PolicyFamily::Linear,
            sigma2: Some(1e-3),
            temperature: 1.0,
            omega: 1e-4,
            lambda_cap: 1e4,
            iterations: 20,
            batch_size: 10,
            schedule: ScheduleKind::adam(),
            primal_rate: 1e-3,
            dual_rate: 1e-2,
            eval_interval: 10,
            eval_rollouts: None,
            cost_aggregation: None,
            param_box: None,
            initial_params: None,
        }
    }

    #[test]
    fn descent_ascent_signs_on_quadratic_toy() {
        // J0(v) = v^2, J1(v) = -v + 0.5, b = 0 with exact gradients
        let (omega, b) = (0.1, [0.0]);
        let j = |v: f64| [v * v, -v + 0.5];
        let (v0, l0) = (0.2f64, [1.0]);
        let l_at = |v: f64, l: &[f64]| lagrangian_value(&j(v), l, omega, &b).unwrap();
        // primal: dL/dv = 2v - lambda; stable for zeta < 1 (curvature 2)
        let mut v = [v0];
        let mut st = StepState::new(ScheduleKind::Constant, 0.1, 1).unwrap();
        primal_update(&mut v, &[2.0 * v0 - l0[0]], &mut st, None).unwrap();
        assert!(l_at(v[0], &l0) < l_at(v0, &l0));
        // dual: dL/dlambda = J1 - b - omega lambda; stable for zeta < 2 / omega
        let g = j(v[0])[1] - b[0] - omega * l0[0];
        let mut dst = StepState::new(ScheduleKind::Constant, 0.1, 1).unwrap();
        let l1 = dual_update(&l0, &[g], &mut dst, 100.0).unwrap();
        assert!(l_at(v[0], &l1) > l_at(v[0], &l0));
    }

    #[test]
    fn runs_are_reproducible_and_account_rollouts() {
        let env = make_cost_lqr(&LqrConfig::benchmark(10, 0.9), None).unwrap();
        for mode in [ExplorationMode::ActionBased, ExplorationMode::ParameterBased] {
            let cfg = lqr_cfg(mode);
            let a = run_cpg(&env, &cfg, 7).unwrap();
            let b = run_cpg(&env, &cfg, 7).unwrap();
            assert_eq!(a, b);
            assert!(a.completed());
            assert_eq!(a.rows.len(), 20);
            for (k, r) in a.rows.iter().enumerate() {
                assert_eq!(r.iteration, k);
                assert_eq!(r.rollouts, 20 * (k as u64 + 1));
                assert_eq!(r.deterministic.is_some(), k % 10 == 0 || k == 19);
            }
            let c = run_cpg(&env, &cfg, 8).unwrap();
            assert_ne!(a.rows[0].j, c.rows[0].j);
        }
    }

    #[test]
    fn multipliers_stay_at_zero_when_slack() {
        // with a huge threshold every dual gradient is negative
        let env = make_cost_lqr(&LqrConfig::benchmark(5, 1e6), None).unwrap();
        let mut cfg = lqr_cfg(ExplorationMode::ActionBased);
        cfg.schedule = ScheduleKind::Constant;
        cfg.primal_rate = 1e-12;
        cfg.dual_rate = 1e-3;
        cfg.initial_params = None;
        let rec = run_cpg(&env, &cfg, 1).unwrap();
        assert!(rec.rows.iter().all(|r| r.lambda[0] == 0.0));
    }

    #[test]
    fn multipliers_stay_feasible_and_rise_under_violation() {
        let env = make_dgww(&DgwwConfig { thresholds: vec![0.0], ..DgwwConfig::default() }, None).unwrap();
        let cfg = AlgorithmConfig {
            mode: ExplorationMode::ActionBased,
            policy: PolicyFamily::TabularSoftmax,
            sigma2: None,
            temperature: 1.0,
            omega: 1e-4,
            lambda_cap: 1e4,
            iterations: 30,
            batch_size: 5,
            schedule: ScheduleKind::Constant,
            primal_rate: 0.01,
            dual_rate: 0.1,
            eval_interval: 10,
            eval_rollouts: Some(2),
            cost_aggregation: None,
            param_box: None,
            initial_params: None,
        };
        let rec = run_cpg(&env, &cfg, 3).unwrap();
        assert!(rec.final_lambda[0] > 0.0);
        assert!(rec.rows.iter().all(|r| r.lambda[0] >= 0.0 && r.lambda[0] <= 1.0 / 1e-4));
        assert!(rec.rows.iter().all(|r| r.dual_grad_variance.unwrap() <= 1.0));
    }

    #[test]
    fn incompatible_policy_is_rejected() {
        let env = make_dgww(&DgwwConfig::default(), None).unwrap();
        assert!(run_cpg(&env, &lqr_cfg(ExplorationMode::ActionBased), 0).is_err());
        let mut cfg = lqr_cfg(ExplorationMode::ParameterBased);
        cfg.policy = PolicyFamily::TabularSoftmax;
        cfg.sigma2 = None;
        assert!(cfg.validate().is_err());
        let lqr = make_cost_lqr(&LqrConfig::benchmark(5, 0.9), None).unwrap();
        cfg.mode = ExplorationMode::ActionBased;
        assert!(run_cpg(&lqr, &cfg, 0).is_err());
    }

    #[test]
    fn divergence_aborts_with_iteration() {
        let env = make_cost_lqr(&LqrConfig::benchmark(50, 0.9), None).unwrap();
        let mut cfg = lqr_cfg(ExplorationMode::ActionBased);
        // explosive closed loop: A + B theta has spectral radius ~ 0.9 * 1e80
        cfg.initial_params = Some(vec![1e80, 0.0, 0.0, 1e80]);
        let rec = run_cpg(&env, &cfg, 0).unwrap();
        match rec.status {
            RunStatus::Aborted { iteration, .. } => assert_eq!(iteration, 0),
            RunStatus::Completed => panic!("expected an abort"),
        }
    }

    #[test]
    fn gap_vanishes_with_noise_and_grows_with_it() {
        let env = make_cost_lqr(&LqrConfig::benchmark(20, 0.9), None).unwrap();
        let params = vec![-0.5, 0.0, 0.0, -0.5];
        for mode in [ExplorationMode::ActionBased, ExplorationMode::ParameterBased] {
            let opts = GapOptions { mode, rollouts: 200, seed: 5, lipschitz: Some(1.0), lambda: &[2.0] };
            let rows = deterministic_gap(&env, &params, &[1e-4, 0.1, 1.0], opts).unwrap();
            for i in 0..2 {
                assert!(rows[0].gap[i] <= 2.0 * rows[0].gap_se[i] + 1e-9);
                assert!(rows[2].gap[i] > rows[1].gap[i]);
            }
            assert_eq!(rows[0].deterministic, rows[2].deterministic);
            let d: f64 = if mode == ExplorationMode::ActionBased { 2.0 } else { 4.0 };
            assert!((rows[1].envelope.unwrap() - 3.0 * 0.1 * d.sqrt()).abs() < 1e-12);
        }
    }
}

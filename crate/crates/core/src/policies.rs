//! Policy and hyperpolicy families with their score functions.
//!
//! Linear parameters are stored row-major with the action dimension outer:
//! entry `(k, j)` of `theta` multiplies state component `j` in action
//! component `k`. Hyperpolicy means use the same flattening, so deploying a
//! hyperpolicy mean as a deterministic policy is a pure relabeling.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// A flat parameter vector with its logical shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl ParamVector {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != values.len() {
            return Err(Error::DimensionMismatch {
                context: "parameter vector",
                expected,
                actual: values.len(),
            });
        }
        Ok(Self { shape, values })
    }
}

/// A stochastic action-based policy exposing `grad log pi`.
pub trait ScorePolicy: Send + Sync {
    fn param_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn params(&self) -> &[f64];
    fn set_params(&mut self, params: &[f64]) -> Result<()>;
    fn sample_action(&self, state: &[f64], rng: &mut StreamRng, action: &mut [f64]);
    fn log_prob(&self, state: &[f64], action: &[f64]) -> f64;
    /// `grad += weight * grad_theta log pi(action | state)`
    fn accumulate_score(&self, state: &[f64], action: &[f64], weight: f64, grad: &mut [f64]);
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { context, expected, actual })
    }
}

// ---------------------------------------------------------------------------
// Tabular softmax

#[derive(Debug, Clone, PartialEq)]
pub struct TabularSoftmaxPolicy {
    num_states: usize,
    num_actions: usize,
    theta: Vec<f64>,
    temperature: f64,
}

impl TabularSoftmaxPolicy {
    pub fn new(num_states: usize, num_actions: usize, temperature: f64) -> Result<Self> {
        Self::with_params(num_states, num_actions, temperature, vec![0.0; num_states * num_actions])
    }

    pub fn with_params(
        num_states: usize,
        num_actions: usize,
        temperature: f64,
        theta: Vec<f64>,
    ) -> Result<Self> {
        check_positive("temperature", temperature)?;
        if num_states == 0 || num_actions == 0 {
            return Err(Error::InvalidSpec("softmax needs at least one state and action".into()));
        }
        check_len("softmax parameters", num_states * num_actions, theta.len())?;
        Ok(Self {
            num_states,
            num_actions,
            theta,
            temperature,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    fn row(&self, s: usize) -> &[f64] {
        &self.theta[s * self.num_actions..(s + 1) * self.num_actions]
    }

    /// Action probabilities at state `s`, computed with the row maximum
    /// subtracted before exponentiation.
    pub fn action_probs(&self, s: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.num_actions];
        self.probs_into(s, &mut p);
        p
    }

    fn probs_into(&self, s: usize, p: &mut [f64]) {
        let row = self.row(s);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (pj, &t) in p.iter_mut().zip(row) {
            *pj = ((t - max) / self.temperature).exp();
            total += *pj;
        }
        p.iter_mut().for_each(|v| *v /= total);
    }

    /// Score matrix (same shape as `theta`) for the pair `(s, a)`.
    pub fn score(&self, s: usize, a: usize) -> Vec<f64> {
        let mut g = vec![0.0; self.theta.len()];
        self.add_score(s, a, 1.0, &mut g);
        g
    }

    fn add_score(&self, s: usize, a: usize, weight: f64, grad: &mut [f64]) {
        let na = self.num_actions;
        let row = self.row(s);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = row.iter().map(|&t| ((t - max) / self.temperature).exp()).sum();
        let scale = weight / self.temperature;
        for (j, (g, &t)) in grad[s * na..(s + 1) * na].iter_mut().zip(row).enumerate() {
            let p = ((t - max) / self.temperature).exp() / total;
            let indicator = if j == a { 1.0 } else { 0.0 };
            *g += scale * (indicator - p);
        }
    }

    /// Greedy action (lowest index among ties): the zero-temperature limit.
    pub fn greedy_action(&self, s: usize) -> usize {
        let row = self.row(s);
        let mut best = 0;
        for (j, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = j;
            }
        }
        best
    }
}

impl ScorePolicy for TabularSoftmaxPolicy {
    fn param_dim(&self) -> usize {
        self.theta.len()
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn params(&self) -> &[f64] {
        &self.theta
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        check_len("softmax parameters", self.theta.len(), params.len())?;
        self.theta.copy_from_slice(params);
        Ok(())
    }

    fn sample_action(&self, state: &[f64], rng: &mut StreamRng, action: &mut [f64]) {
        let s = state[0] as usize;
        let mut p = [0.0; 16];
        let na = self.num_actions;
        let chosen = if na <= p.len() {
            self.probs_into(s, &mut p[..na]);
            sample_categorical(&p[..na], rng)
        } else {
            sample_categorical(&self.action_probs(s), rng)
        };
        action[0] = chosen as f64;
    }

    fn log_prob(&self, state: &[f64], action: &[f64]) -> f64 {
        let s = state[0] as usize;
        let a = action[0] as usize;
        let row = self.row(s);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = row
            .iter()
            .map(|&t| ((t - max) / self.temperature).exp())
            .sum::<f64>()
            .ln();
        (row[a] - max) / self.temperature - lse
    }

    fn accumulate_score(&self, state: &[f64], action: &[f64], weight: f64, grad: &mut [f64]) {
        self.add_score(state[0] as usize, action[0] as usize, weight, grad)
    }
}

fn sample_categorical(p: &[f64], rng: &mut StreamRng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (j, &pj) in p.iter().enumerate() {
        acc += pj;
        if u < acc {
            return j;
        }
    }
    p.len() - 1
}

// ---------------------------------------------------------------------------
// Linear policies

/// `a = theta s` with `theta` stored `d_A x d_S` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearDeterministicPolicy {
    action_dim: usize,
    state_dim: usize,
    theta: Vec<f64>,
}

impl LinearDeterministicPolicy {
    pub fn new(action_dim: usize, state_dim: usize, theta: Vec<f64>) -> Result<Self> {
        check_len("linear policy parameters", action_dim * state_dim, theta.len())?;
        Ok(Self { action_dim, state_dim, theta })
    }

    pub fn params(&self) -> &[f64] {
        &self.theta
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn act(&self, state: &[f64], action: &mut [f64]) {
        linear_map(&self.theta, self.state_dim, state, action)
    }
}

fn linear_map(theta: &[f64], state_dim: usize, state: &[f64], out: &mut [f64]) {
    for (o, row) in out.iter_mut().zip(theta.chunks_exact(state_dim)) {
        *o = row.iter().zip(state).map(|(w, s)| w * s).sum();
    }
}

/// `a ~ N(theta s, sigma^2 I)` with fresh noise at every step.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGaussianPolicy {
    mean: LinearDeterministicPolicy,
    sigma: f64,
}

impl LinearGaussianPolicy {
    pub fn new(action_dim: usize, state_dim: usize, theta: Vec<f64>, sigma: f64) -> Result<Self> {
        check_positive("policy standard deviation", sigma)?;
        Ok(Self {
            mean: LinearDeterministicPolicy::new(action_dim, state_dim, theta)?,
            sigma,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn mean_policy(&self) -> &LinearDeterministicPolicy {
        &self.mean
    }

    pub fn mean_action(&self, state: &[f64], out: &mut [f64]) {
        self.mean.act(state, out)
    }

    /// Action with a caller-supplied standard-normal draw: `theta s + sigma z`.
    pub fn action_from_noise(&self, state: &[f64], z: &[f64], out: &mut [f64]) {
        self.mean.act(state, out);
        for (o, zi) in out.iter_mut().zip(z) {
            *o += self.sigma * zi;
        }
    }
}

impl ScorePolicy for LinearGaussianPolicy {
    fn param_dim(&self) -> usize {
        self.mean.theta.len()
    }

    fn action_dim(&self) -> usize {
        self.mean.action_dim
    }

    fn params(&self) -> &[f64] {
        &self.mean.theta
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        check_len("linear policy parameters", self.mean.theta.len(), params.len())?;
        self.mean.theta.copy_from_slice(params);
        Ok(())
    }

    fn sample_action(&self, state: &[f64], rng: &mut StreamRng, action: &mut [f64]) {
        self.mean.act(state, action);
        for a in action.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *a += self.sigma * z;
        }
    }

    fn log_prob(&self, state: &[f64], action: &[f64]) -> f64 {
        let mut mu = vec![0.0; self.mean.action_dim];
        self.mean.act(state, &mut mu);
        let var = self.sigma * self.sigma;
        let sq: f64 = action.iter().zip(&mu).map(|(a, m)| (a - m) * (a - m)).sum();
        let d = self.mean.action_dim as f64;
        -sq / (2.0 * var) - 0.5 * d * (2.0 * std::f64::consts::PI * var).ln()
    }

    fn accumulate_score(&self, state: &[f64], action: &[f64], weight: f64, grad: &mut [f64]) {
        let ds = self.mean.state_dim;
        let inv_var = weight / (self.sigma * self.sigma);
        for ((row, g), &a) in self
            .mean
            .theta
            .chunks_exact(ds)
            .zip(grad.chunks_exact_mut(ds))
            .zip(action)
        {
            let mu: f64 = row.iter().zip(state).map(|(w, s)| w * s).sum();
            let resid = (a - mu) * inv_var;
            for (gj, sj) in g.iter_mut().zip(state) {
                *gj += resid * sj;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Hyperpolicy

/// `theta ~ N(rho, sigma^2 I)`, drawn once per trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianHyperpolicy {
    rho: Vec<f64>,
    sigma: f64,
}

impl GaussianHyperpolicy {
    pub fn new(rho: Vec<f64>, sigma: f64) -> Result<Self> {
        check_positive("hyperpolicy standard deviation", sigma)?;
        if rho.is_empty() {
            return Err(Error::InvalidSpec("hyperpolicy mean must be non-empty".into()));
        }
        Ok(Self { rho, sigma })
    }

    pub fn mean(&self) -> &[f64] {
        &self.rho
    }

    pub fn set_mean(&mut self, rho: &[f64]) -> Result<()> {
        check_len("hyperpolicy mean", self.rho.len(), rho.len())?;
        self.rho.copy_from_slice(rho);
        Ok(())
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.rho.len()
    }

    pub fn sample(&self, rng: &mut StreamRng) -> Vec<f64> {
        self.rho
            .iter()
            .map(|&r| {
                let z: f64 = rng.sample(StandardNormal);
                r + self.sigma * z
            })
            .collect()
    }

    /// `grad_rho log nu_rho(theta) = (theta - rho) / sigma^2`
    pub fn score(&self, theta: &[f64]) -> Vec<f64> {
        let inv_var = 1.0 / (self.sigma * self.sigma);
        theta.iter().zip(&self.rho).map(|(t, r)| (t - r) * inv_var).collect()
    }

    pub fn log_density(&self, theta: &[f64]) -> f64 {
        let var = self.sigma * self.sigma;
        let sq: f64 = theta.iter().zip(&self.rho).map(|(t, r)| (t - r) * (t - r)).sum();
        -sq / (2.0 * var) - 0.5 * self.rho.len() as f64 * (2.0 * std::f64::consts::PI * var).ln()
    }
}

// ---------------------------------------------------------------------------
// Deterministic deployment

/// The source of a deterministic deployment.
#[derive(Debug, Clone, Copy)]
pub enum DeploySource<'a> {
    Policy(&'a LinearGaussianPolicy),
    /// Hyperpolicy with the `(action_dim, state_dim)` layout of the
    /// underlying linear policy.
    Hyperpolicy(&'a GaussianHyperpolicy, usize, usize),
}

/// Drops the exploration noise and returns the underlying linear policy.
pub fn deploy_deterministic(source: DeploySource<'_>) -> Result<LinearDeterministicPolicy> {
    match source {
        DeploySource::Policy(p) => Ok(p.mean.clone()),
        DeploySource::Hyperpolicy(h, da, ds) => {
            LinearDeterministicPolicy::new(da, ds, h.rho.clone())
        }
    }
}

//! Numerical checks: finite differences, unbiasedness and the variance
//! bound of the dual gradient.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cmdp::{CmdpSpec, CostAggregation, Trajectory};
use crate::error::{Error, Result};
use crate::estimators::{gpomdp_grad, pgpe_grad, Batch};
use crate::lagrangian::lagrangian_value;
use crate::policies::{GaussianHyperpolicy, LinearGaussianPolicy, ScorePolicy, TabularSoftmaxPolicy};
use crate::rng::stream;

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    /// Worst-case measured quantity.
    pub measured: f64,
    /// Bound or tolerance the measured quantity is compared against.
    pub bound: f64,
    pub passed: bool,
    pub sample_size: usize,
}

impl CheckReport {
    fn new(name: impl Into<String>, measured: f64, bound: f64, sample_size: usize) -> Self {
        Self {
            name: name.into(),
            measured,
            bound,
            passed: measured <= bound,
            sample_size,
        }
    }
}

/// Central-difference check of `analytic` against `f` at `point`.
///
/// Passes when the largest deviation is at most `10 h^2 + 1e-8` relative to
/// `max(1, |analytic|)`.
pub fn finite_diff_check(
    name: &str,
    f: impl Fn(&[f64]) -> f64,
    analytic: &[f64],
    point: &[f64],
    h: f64,
) -> Result<CheckReport> {
    if !(h > 0.0) {
        return Err(Error::InvalidConfig(format!("step must be positive, got {h}")));
    }
    if analytic.len() != point.len() {
        return Err(Error::DimensionMismatch {
            context: "analytic gradient",
            expected: point.len(),
            actual: analytic.len(),
        });
    }
    let mut x = point.to_vec();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for k in 0..point.len() {
        x[k] = point[k] + h;
        let up = f(&x);
        x[k] = point[k] - h;
        let down = f(&x);
        x[k] = point[k];
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFinite { context: "finite-difference evaluation", iteration: None });
        }
        let fd = (up - down) / (2.0 * h);
        worst = worst.max((fd - analytic[k]).abs());
        scale = scale.max(analytic[k].abs());
    }
    let tol = (10.0 * h * h + 1e-8) * scale;
    Ok(CheckReport::new(name, worst, tol, point.len()))
}

/// Checks that the mean of `samples` (one row per draw) matches `exact`
/// within four standard errors in every component.
///
/// The reported `measured` value is the largest `|mean - exact| / SE`
/// ratio, compared against 4. A component with zero spread must match
/// exactly.
pub fn unbiasedness_check(name: &str, samples: &[Vec<f64>], exact: &[f64]) -> Result<CheckReport> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::NotEnoughSamples { required: 2, actual: n });
    }
    let nf = n as f64;
    let mut worst: f64 = 0.0;
    for (k, &target) in exact.iter().enumerate() {
        let mean = samples.iter().map(|s| s[k]).sum::<f64>() / nf;
        let var = samples.iter().map(|s| (s[k] - mean).powi(2)).sum::<f64>() / (nf - 1.0);
        let se = (var / nf).sqrt();
        let dev = (mean - target).abs();
        let ratio = if se > 0.0 {
            dev / se
        } else if dev <= 1e-12_f64.max(1e-9 * target.abs()) {
            0.0
        } else {
            f64::INFINITY
        };
        worst = worst.max(ratio);
    }
    Ok(CheckReport::new(name, worst, 4.0, n))
}

/// Largest value of a single constraint's aggregated cost: `1` under
/// per-step averaging of unit-bounded costs, otherwise the discounted
/// horizon length.
pub fn aggregated_j_max(j_max: f64, per_step_mean: bool) -> f64 {
    if per_step_mean {
        1.0
    } else {
        j_max
    }
}

/// Audits every recorded dual-gradient variance against `U * J_max^2 / N`
/// for the variance of the batch-mean estimator.
///
/// `per_sample_variances` are traces of the per-sample covariance; the
/// batch-mean variance is that divided by `batch_size`.
pub fn variance_bound_audit(
    per_sample_variances: &[f64],
    num_constraints: usize,
    j_max: f64,
    batch_size: usize,
) -> CheckReport {
    let n = batch_size.max(1) as f64;
    let bound = num_constraints as f64 * j_max * j_max / n;
    let worst = per_sample_variances
        .iter()
        .map(|v| v / n)
        .fold(0.0_f64, |a, b| if b.is_nan() { f64::INFINITY } else { a.max(b) });
    CheckReport::new("dual gradient variance bound", worst, bound, per_sample_variances.len())
}

fn bandit_spec() -> Result<CmdpSpec> {
    CmdpSpec::new(1, 1, vec![0.5], 1.0, 1, CostAggregation::CumulativeDiscounted, f64::INFINITY)
}

fn one_step(action: f64, reward: f64, cost: f64) -> Result<Trajectory> {
    Trajectory::from_parts(1, 1, 1, vec![0.0], vec![action], vec![reward], vec![cost])
}

/// Single-sample GPOMDP estimates of the constraint gradient on a one-state,
/// two-action softmax bandit, checked against the exact gradient
/// `sum_a c(a) pi(a) grad log pi(a)` obtained by enumeration.
///
/// `offset` is added to the exact gradient; a nonzero value gives a
/// negative control that must fail.
pub fn gpomdp_bandit_check(samples: usize, seed: u64, offset: f64) -> Result<CheckReport> {
    let spec = bandit_spec()?;
    let policy = TabularSoftmaxPolicy::with_params(1, 2, 1.0, vec![0.4, -0.2])?;
    let cost = [0.8, 0.1];
    let probs = policy.action_probs(0);
    let mut exact = vec![offset; 2];
    for a in 0..2 {
        let score = policy.score(0, a);
        for k in 0..2 {
            exact[k] += cost[a] * probs[a] * score[k];
        }
    }
    let mut rng = stream(&[seed, 1]);
    let mut action = [0.0];
    let rows = (0..samples)
        .map(|_| {
            policy.sample_action(&[0.0], &mut rng, &mut action);
            let batch = Batch::action_based(vec![one_step(action[0], 0.0, cost[action[0] as usize])?])?;
            Ok(gpomdp_grad(&batch, &policy, 1, &spec)?.value)
        })
        .collect::<Result<Vec<_>>>()?;
    unbiasedness_check("GPOMDP softmax bandit vs enumeration", &rows, &exact)
}

/// Single-sample PGPE estimates for the cost `C(theta) = theta` under
/// `theta ~ N(rho, sigma^2)`, whose exact gradient is 1.
pub fn pgpe_identity_check(samples: usize, seed: u64, offset: f64) -> Result<CheckReport> {
    let spec = bandit_spec()?;
    let hyper = GaussianHyperpolicy::new(vec![0.3], 0.5)?;
    let mut rng = stream(&[seed, 2]);
    let rows = (0..samples)
        .map(|_| {
            let theta = hyper.sample(&mut rng);
            let batch = Batch::parameter_based(vec![one_step(0.0, 0.0, theta[0])?], vec![theta])?;
            Ok(pgpe_grad(&batch, &hyper, 1, &spec)?.value)
        })
        .collect::<Result<Vec<_>>>()?;
    unbiasedness_check("PGPE identity cost vs analytic", &rows, &[1.0 + offset])
}

fn negative_control(mut inner: CheckReport) -> CheckReport {
    inner.name = format!("negative control rejected: {}", inner.name);
    inner.passed = !inner.passed;
    inner
}

/// The diagnostics suite: estimator unbiasedness at `samples` draws,
/// finite-difference checks of every score function and of the Lagrangian's
/// multiplier gradient, and negative controls that must be rejected.
pub fn standard_suite(samples: usize, seed: u64) -> Result<Vec<CheckReport>> {
    let mut reports = vec![
        gpomdp_bandit_check(samples, seed, 0.0)?,
        pgpe_identity_check(samples, seed, 0.0)?,
        negative_control(gpomdp_bandit_check(samples, seed, 0.2)?),
        negative_control(pgpe_identity_check(samples, seed, 0.2)?),
    ];
    let mut rng = stream(&[seed, 3]);
    let h = 1e-5;

    let theta: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
    let softmax = TabularSoftmaxPolicy::with_params(2, 3, 0.7, theta.clone())?;
    let f = |th: &[f64]| {
        TabularSoftmaxPolicy::with_params(2, 3, 0.7, th.to_vec())
            .map(|p| p.log_prob(&[1.0], &[2.0]))
            .unwrap_or(f64::NAN)
    };
    let score = softmax.score(1, 2);
    reports.push(finite_diff_check("softmax score", f, &score, &theta, h)?);
    let doubled: Vec<f64> = score.iter().map(|v| 2.0 * v).collect();
    reports.push(negative_control(finite_diff_check("softmax score doubled", f, &doubled, &theta, h)?));

    let (da, ds) = (2, 3);
    let theta: Vec<f64> = (0..da * ds).map(|_| rng.random_range(-1.0..1.0)).collect();
    let state: Vec<f64> = (0..ds).map(|_| rng.random_range(-1.0..1.0)).collect();
    let action: Vec<f64> = (0..da).map(|_| rng.random_range(-1.0..1.0)).collect();
    let gaussian = LinearGaussianPolicy::new(da, ds, theta.clone(), 0.6)?;
    let mut score = vec![0.0; theta.len()];
    gaussian.accumulate_score(&state, &action, 1.0, &mut score);
    let f = |th: &[f64]| {
        LinearGaussianPolicy::new(da, ds, th.to_vec(), 0.6)
            .map(|p| p.log_prob(&state, &action))
            .unwrap_or(f64::NAN)
    };
    reports.push(finite_diff_check("linear Gaussian score", f, &score, &theta, h)?);

    let rho: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
    let draw: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
    let hyper = GaussianHyperpolicy::new(rho.clone(), 0.4)?;
    let f = |r: &[f64]| {
        GaussianHyperpolicy::new(r.to_vec(), 0.4)
            .map(|p| p.log_density(&draw))
            .unwrap_or(f64::NAN)
    };
    reports.push(finite_diff_check("hyperpolicy score", f, &hyper.score(&draw), &rho, h)?);

    let (j, b, omega) = ([-3.0, 0.7, 0.1], [0.5, 0.4], 0.3);
    let lambda = [0.8, 1.7];
    let grad: Vec<f64> = (0..2).map(|i| j[i + 1] - b[i] - omega * lambda[i]).collect();
    let f = |l: &[f64]| lagrangian_value(&j, l, omega, &b).unwrap_or(f64::NAN);
    reports.push(finite_diff_check("Lagrangian multiplier gradient", f, &grad, &lambda, h)?);
    Ok(reports)
}

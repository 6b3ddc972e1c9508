//! Step-size schedules and the primal and dual update rules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lagrangian::project_lambda;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamParams {
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub epsilon: f64,
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            beta1: default_beta1(),
            beta2: default_beta2(),
            epsilon: default_eps(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleKind {
    Constant,
    Adam {
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_eps")]
        epsilon: f64,
    },
}

impl ScheduleKind {
    pub fn adam() -> Self {
        let p = AdamParams::default();
        ScheduleKind::Adam {
            beta1: p.beta1,
            beta2: p.beta2,
            epsilon: p.epsilon,
        }
    }
}

/// Per-variable step-size state. Primal and dual variables each own one.
#[derive(Debug, Clone, PartialEq)]
pub enum StepState {
    Constant { rate: f64 },
    Adam {
        rate: f64,
        params: AdamParams,
        m: Vec<f64>,
        v: Vec<f64>,
        t: u64,
    },
}

impl StepState {
    pub fn new(kind: ScheduleKind, rate: f64, dim: usize) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidConfig(format!("learning rate must be positive, got {rate}")));
        }
        Ok(match kind {
            ScheduleKind::Constant => StepState::Constant { rate },
            ScheduleKind::Adam { beta1, beta2, epsilon } => {
                if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || epsilon <= 0.0 {
                    return Err(Error::InvalidConfig(
                        "Adam needs beta1, beta2 in [0, 1) and epsilon > 0".into(),
                    ));
                }
                StepState::Adam {
                    rate,
                    params: AdamParams { beta1, beta2, epsilon },
                    m: vec![0.0; dim],
                    v: vec![0.0; dim],
                    t: 0,
                }
            }
        })
    }

    /// Nominal learning rate.
    pub fn rate(&self) -> f64 {
        match self {
            StepState::Constant { rate } | StepState::Adam { rate, .. } => *rate,
        }
    }

    /// Turns a raw gradient into the displacement to apply, advancing the
    /// internal state.
    pub fn step(&mut self, grad: &[f64], out: &mut [f64]) {
        match self {
            StepState::Constant { rate } => {
                out.iter_mut().zip(grad).for_each(|(o, g)| *o = *rate * g);
            }
            StepState::Adam { rate, params, m, v, t } => {
                *t += 1;
                let bc1 = 1.0 - params.beta1.powi(*t as i32);
                let bc2 = 1.0 - params.beta2.powi(*t as i32);
                for k in 0..grad.len() {
                    let g = grad[k];
                    m[k] = params.beta1 * m[k] + (1.0 - params.beta1) * g;
                    v[k] = params.beta2 * v[k] + (1.0 - params.beta2) * g * g;
                    let m_hat = m[k] / bc1;
                    let v_hat = v[k] / bc2;
                    out[k] = *rate * m_hat / (v_hat.sqrt() + params.epsilon);
                }
            }
        }
    }
}

/// Optional per-coordinate box for primal parameters; identity when absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamBox {
    pub low: f64,
    pub high: f64,
}

fn check_finite(grad: &[f64], context: &'static str) -> Result<()> {
    if grad.iter().all(|g| g.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { context, iteration: None })
    }
}

fn check_shape(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { context, expected, actual })
    }
}

/// Descent: `params <- box(params - step(grad))`. Returns the displacement
/// norm.
pub fn primal_update(
    params: &mut [f64],
    grad: &[f64],
    state: &mut StepState,
    bounds: Option<ParamBox>,
) -> Result<f64> {
    check_shape("primal gradient", params.len(), grad.len())?;
    check_finite(grad, "primal gradient")?;
    let mut delta = vec![0.0; grad.len()];
    state.step(grad, &mut delta);
    let mut sq = 0.0;
    for (p, d) in params.iter_mut().zip(&delta) {
        *p -= d;
        if let Some(b) = bounds {
            *p = p.clamp(b.low, b.high);
        }
        sq += d * d;
    }
    Ok(sq.sqrt())
}

/// Ascent followed by projection onto the multiplier set.
pub fn dual_update(
    lambda: &[f64],
    grad: &[f64],
    state: &mut StepState,
    radius: f64,
) -> Result<Vec<f64>> {
    check_shape("dual gradient", lambda.len(), grad.len())?;
    check_finite(grad, "dual gradient")?;
    let mut delta = vec![0.0; grad.len()];
    state.step(grad, &mut delta);
    let moved: Vec<f64> = lambda.iter().zip(&delta).map(|(l, d)| l + d).collect();
    Ok(project_lambda(&moved, radius))
}

//! Regularized Lagrangian, its closed-form primal function and multipliers,
//! and the projection onto the feasible multiplier set.

use crate::error::{Error, Result};
use crate::linalg::norm2;

/// Radius of the feasible multiplier set: `sqrt(U) * j_max / omega`, or the
/// explicit `cap` in the unregularized case.
pub fn lambda_radius(num_constraints: usize, j_max: f64, omega: f64, cap: f64) -> Result<f64> {
    if omega < 0.0 || !omega.is_finite() {
        return Err(Error::InvalidConfig(format!("omega must be non-negative, got {omega}")));
    }
    if omega == 0.0 {
        if !(cap > 0.0 && cap.is_finite()) {
            return Err(Error::InvalidConfig(
                "omega = 0 needs a positive finite multiplier cap".into(),
            ));
        }
        return Ok(cap);
    }
    Ok((num_constraints as f64).sqrt() * j_max / omega)
}

fn check_dims(j: &[f64], b: &[f64], lambda: Option<&[f64]>) -> Result<()> {
    if j.len() != b.len() + 1 {
        return Err(Error::DimensionMismatch {
            context: "performance vector (objective plus constraints)",
            expected: b.len() + 1,
            actual: j.len(),
        });
    }
    if let Some(l) = lambda {
        if l.len() != b.len() {
            return Err(Error::DimensionMismatch {
                context: "multipliers",
                expected: b.len(),
                actual: l.len(),
            });
        }
    }
    Ok(())
}

/// `J_0 + <lambda, J_{1..U} - b> - (omega/2) ||lambda||^2`
pub fn lagrangian_value(j: &[f64], lambda: &[f64], omega: f64, b: &[f64]) -> Result<f64> {
    check_dims(j, b, Some(lambda))?;
    let mut value = j[0];
    let mut sq = 0.0;
    for ((ji, bi), li) in j[1..].iter().zip(b).zip(lambda) {
        value += li * (ji - bi);
        sq += li * li;
    }
    Ok(value - 0.5 * omega * sq)
}

/// `J_0 + ||(J_{1..U} - b)^+||^2 / (2 omega)`, the maximum of the Lagrangian
/// over multipliers.
pub fn primal_function_h(j: &[f64], omega: f64, b: &[f64]) -> Result<f64> {
    check_dims(j, b, None)?;
    if omega <= 0.0 {
        return Err(Error::ZeroRegularization);
    }
    let sq: f64 = j[1..]
        .iter()
        .zip(b)
        .map(|(ji, bi)| (ji - bi).max(0.0).powi(2))
        .sum();
    Ok(j[0] + sq / (2.0 * omega))
}

/// `(J_{1..U} - b)^+ / omega`
pub fn optimal_lambda(j: &[f64], omega: f64, b: &[f64]) -> Result<Vec<f64>> {
    check_dims(j, b, None)?;
    if omega <= 0.0 {
        return Err(Error::ZeroRegularization);
    }
    Ok(j[1..].iter().zip(b).map(|(ji, bi)| (ji - bi).max(0.0) / omega).collect())
}

/// Euclidean projection onto `{lambda >= 0, ||lambda|| <= radius}`:
/// clip at zero, then rescale onto the ball if outside.
pub fn project_lambda(x: &[f64], radius: f64) -> Vec<f64> {
    let mut y: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    let n = norm2(&y);
    if n > radius {
        let k = radius / n;
        y.iter_mut().for_each(|v| *v *= k);
    }
    y
}

/// `(epsilon + (omega/2) n^2, 4 epsilon + omega n)` where `n` is a
/// user-supplied estimate of the unregularized optimal multiplier norm.
pub fn regularization_bounds(epsilon: f64, omega: f64, lambda0_norm: f64) -> (f64, f64) {
    (
        epsilon + 0.5 * omega * lambda0_norm * lambda0_norm,
        4.0 * epsilon + omega * lambda0_norm,
    )
}

/// Thresholds tightened by the violation bound, floored at zero.
pub fn conservative_thresholds(b: &[f64], epsilon: f64, omega: f64, lambda0_norm: f64) -> Vec<f64> {
    let (_, violation) = regularization_bounds(epsilon, omega, lambda0_norm);
    b.iter().map(|bi| (bi - violation).max(0.0)).collect()
}

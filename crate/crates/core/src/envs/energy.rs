//! Action-energy cost wrapper: clips actions into a box, forwards the clipped
//! action and appends the clipping distance as an extra constraint cost.

use crate::cmdp::{CmdpSpec, DiscreteLayout, Environment, StepOutcome};
use crate::error::{Error, Result};
use crate::rng::StreamRng;

pub struct EnergyCostWrapper<E> {
    inner: E,
    spec: CmdpSpec,
    a_min: f64,
    a_max: f64,
}

/// Wraps `inner`, appending a cost `||a - clip(a, a_min, a_max)||_2` with
/// threshold `threshold`.
pub fn energy_cost_wrapper<E: Environment>(
    inner: E,
    a_min: f64,
    a_max: f64,
    threshold: f64,
) -> Result<EnergyCostWrapper<E>> {
    if !(a_min < a_max) {
        return Err(Error::InvalidSpec(format!(
            "action bounds must satisfy a_min < a_max, got [{a_min}, {a_max}]"
        )));
    }
    let mut spec = inner.spec().clone();
    spec.thresholds.push(threshold);
    spec.cost_bound = f64::INFINITY;
    spec.validate()?;
    Ok(EnergyCostWrapper { inner, spec, a_min, a_max })
}

impl<E> EnergyCostWrapper<E> {
    pub fn inner(&self) -> &E {
        &self.inner
    }

    /// Writes the clipped action into `out` and returns the clipping distance.
    pub fn clip(&self, action: &[f64], out: &mut [f64]) -> f64 {
        let mut sq = 0.0;
        for (o, &a) in out.iter_mut().zip(action) {
            *o = a.clamp(self.a_min, self.a_max);
            sq += (a - *o) * (a - *o);
        }
        sq.sqrt()
    }
}

impl<E: Environment> Environment for EnergyCostWrapper<E> {
    fn spec(&self) -> &CmdpSpec {
        &self.spec
    }

    fn sample_initial_state(&self, rng: &mut StreamRng, state: &mut [f64]) {
        self.inner.sample_initial_state(rng, state)
    }

    fn step(
        &self,
        state: &[f64],
        action: &[f64],
        rng: &mut StreamRng,
        next: &mut [f64],
        costs: &mut [f64],
    ) -> StepOutcome {
        let mut clipped = vec![0.0; action.len()];
        let energy = self.clip(action, &mut clipped);
        let (inner_costs, own) = costs.split_at_mut(costs.len() - 1);
        own[0] = energy;
        self.inner.step(state, &clipped, rng, next, inner_costs)
    }

    fn discrete_layout(&self) -> Option<DiscreteLayout> {
        self.inner.discrete_layout()
    }

    fn name(&self) -> &str {
        self.inner.name()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::lqr::{make_cost_lqr, LqrConfig};
    use crate::rng::stream;
    use proptest::prelude::*;

    fn wrapped() -> EnergyCostWrapper<crate::envs::lqr::CostLqr> {
        let lqr = make_cost_lqr(&LqrConfig::benchmark(10, 0.9), None).unwrap();
        energy_cost_wrapper(lqr, -1.0, 1.0, 50.0).unwrap()
    }

    #[test]
    fn in_bounds_action_is_free_and_unchanged() {
        let w = wrapped();
        let mut out = [0.0; 2];
        assert_eq!(w.clip(&[0.3, -1.0], &mut out), 0.0);
        assert_eq!(out, [0.3, -1.0]);
    }

    #[test]
    fn out_of_bounds_examples() {
        let w = wrapped();
        let mut out = [0.0; 2];
        assert_eq!(w.clip(&[2.0, 0.0], &mut out), 1.0);
        assert_eq!(out, [1.0, 0.0]);
        assert!((w.clip(&[2.0, 2.0], &mut out) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn forwards_clipped_action_and_appends_cost() {
        let w = wrapped();
        assert_eq!(w.spec().num_constraints(), 2);
        assert_eq!(w.spec().thresholds, vec![0.9, 50.0]);
        let mut next = [0.0; 2];
        let mut costs = [0.0; 2];
        w.step(&[0.0, 0.0], &[2.0, 0.0], &mut stream(&[0]), &mut next, &mut costs);
        // inner sees a = (1, 0): s' = 0.9 a, c = 0.9
        assert_eq!(next, [0.9, 0.0]);
        assert!((costs[0] - 0.9).abs() < 1e-15);
        assert_eq!(costs[1], 1.0);
    }

    #[test]
    fn rejects_empty_box() {
        let lqr = make_cost_lqr(&LqrConfig::benchmark(10, 0.9), None).unwrap();
        assert!(energy_cost_wrapper(lqr, 1.0, 1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn zero_cost_iff_within_bounds(a in proptest::collection::vec(-3.0f64..3.0, 2)) {
            let w = wrapped();
            let mut out = [0.0; 2];
            let c = w.clip(&a, &mut out);
            let inside = a.iter().all(|v| (-1.0..=1.0).contains(v));
            prop_assert_eq!(c == 0.0, inside);
        }

        #[test]
        fn composition_with_identical_bounds_is_idempotent(
            a in proptest::collection::vec(-3.0f64..3.0, 2),
            s in proptest::collection::vec(-3.0f64..3.0, 2),
        ) {
            let once = wrapped();
            let twice = energy_cost_wrapper(wrapped(), -1.0, 1.0, 50.0).unwrap();
            let mut n1 = [0.0; 2];
            let mut n2 = [0.0; 2];
            let mut c1 = [0.0; 2];
            let mut c2 = [0.0; 3];
            let r1 = once.step(&s, &a, &mut stream(&[0]), &mut n1, &mut c1);
            let r2 = twice.step(&s, &a, &mut stream(&[0]), &mut n2, &mut c2);
            prop_assert_eq!(n1, n2);
            prop_assert_eq!(r1, r2);
            // inner wrapper only ever sees clipped actions
            prop_assert_eq!(c2[1], 0.0);
            prop_assert_eq!(c1[0], c2[0]);
            prop_assert_eq!(c1[1], c2[2]);
        }
    }
}

//! Exact solvers on known MDPs: policy evaluation, optimal policies and
//! maximal reach-avoid probabilities.

use crate::error::{invalid, Error, Result};
use crate::mdp::qualitative::{almost_sure_states, reach_avoid_candidates};
use crate::mdp::{Mdp, TabularPolicy};
use crate::scalar::{argmax_by, Real};

/// Sweep cap shared by every fixed-point solver in the crate.
pub const MAX_SWEEPS: usize = 100_000;

const MAX_IMPROVEMENT_ROUNDS: usize = 1_000;

/// State values and state-action values of a policy.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueTable<T> {
    num_actions: usize,
    v: Vec<T>,
    q: Vec<T>,
}

impl<T: Real> ValueTable<T> {
    pub(crate) fn new(num_actions: usize, v: Vec<T>, q: Vec<T>) -> Self {
        Self { num_actions, v, q }
    }

    #[inline]
    pub fn v(&self, s: usize) -> T {
        self.v[s]
    }

    /// Action value; zero for unavailable pairs.
    #[inline]
    pub fn q(&self, s: usize, a: usize) -> T {
        self.q[s * self.num_actions + a]
    }

    pub fn values(&self) -> &[T] {
        &self.v
    }

    pub fn action_values(&self) -> &[T] {
        &self.q
    }
}

/// Optimal reach-avoid probabilities per state and per state-action pair.
#[derive(Clone, Debug, PartialEq)]
pub struct ReachAvoidTable<T> {
    num_actions: usize,
    v: Vec<T>,
    q: Vec<T>,
}

impl<T: Real> ReachAvoidTable<T> {
    pub(crate) fn new(num_actions: usize, v: Vec<T>, q: Vec<T>) -> Self {
        Self { num_actions, v, q }
    }

    #[inline]
    pub fn v(&self, s: usize) -> T {
        self.v[s]
    }

    /// Probability when taking `a` first; equals `v(s)` on target and unsafe
    /// states, zero for unavailable pairs.
    #[inline]
    pub fn q(&self, s: usize, a: usize) -> T {
        self.q[s * self.num_actions + a]
    }

    pub fn values(&self) -> &[T] {
        &self.v
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }
}

fn check_tol<T: Real>(tol: T) -> Result<()> {
    if tol > T::zero() && tol.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("tolerance must be positive, got {tol}")))
    }
}

/// Sup-norm change between sweeps below which a discounted sweep is within
/// `tol` of its fixed point.
fn discounted_stop<T: Real>(tol: T, gamma: T) -> T {
    if gamma > T::zero() {
        tol * (T::one() - gamma) / gamma
    } else {
        T::infinity()
    }
}

/// Policy-weighted support per state, skipping zero-probability actions.
pub(crate) fn policy_support<T: Real>(
    mdp: &Mdp<T>,
    policy: &TabularPolicy<T>,
) -> Vec<Vec<(usize, T)>> {
    (0..mdp.num_states())
        .map(|s| {
            mdp.available(s)
                .iter()
                .map(|&a| (a, policy.prob(s, a)))
                .filter(|&(_, p)| p > T::zero())
                .collect()
        })
        .collect()
}

/// Gauss-Seidel evaluation of `policy`, optionally warm-started.
pub(crate) fn evaluate_values<T: Real>(
    mdp: &Mdp<T>,
    policy: &TabularPolicy<T>,
    tol: T,
    warm: Option<&[T]>,
) -> Result<Vec<T>> {
    let gamma = mdp.discount();
    let mix = policy_support(mdp, policy);
    let mut v = match warm {
        Some(w) if w.len() == mdp.num_states() => w.to_vec(),
        _ => vec![T::zero(); mdp.num_states()],
    };
    let stop = discounted_stop(tol, gamma);
    let mut residual = T::infinity();
    for _ in 0..MAX_SWEEPS {
        residual = T::zero();
        for s in 0..mdp.num_states() {
            let mut acc = T::zero();
            for &(a, pa) in &mix[s] {
                let mut next = T::zero();
                for &(t, p) in mdp.row(s, a) {
                    next += p * v[t];
                }
                acc += pa * (mdp.reward(s, a) + gamma * next);
            }
            residual = residual.max((acc - v[s]).abs());
            v[s] = acc;
        }
        if residual <= stop {
            return Ok(v);
        }
    }
    Err(Error::NoConvergence {
        solver: "policy evaluation",
        iterations: MAX_SWEEPS,
        residual: residual.as_f64(),
    })
}

/// One-step lookahead `R(s,a) + γ Σ T(s'|s,a) v(s')` on available pairs.
pub(crate) fn action_values<T: Real>(mdp: &Mdp<T>, v: &[T]) -> Vec<T> {
    let gamma = mdp.discount();
    let mut q = vec![T::zero(); mdp.shape().num_pairs()];
    for s in 0..mdp.num_states() {
        for &a in mdp.available(s) {
            let next: T = mdp.row(s, a).iter().map(|&(t, p)| p * v[t]).sum();
            q[mdp.shape().pair(s, a)] = mdp.reward(s, a) + gamma * next;
        }
    }
    q
}

/// Value of `policy` on `mdp`, accurate to `tol` in sup-norm.
pub fn policy_evaluation<T: Real>(
    mdp: &Mdp<T>,
    policy: &TabularPolicy<T>,
    tol: T,
) -> Result<ValueTable<T>> {
    check_tol(tol)?;
    policy.validate_for(mdp.shape())?;
    let v = evaluate_values(mdp, policy, tol, None)?;
    let q = action_values(mdp, &v);
    Ok(ValueTable::new(mdp.num_actions(), v, q))
}

/// Expected discounted return from the initial state.
pub fn performance<T: Real>(mdp: &Mdp<T>, policy: &TabularPolicy<T>) -> Result<T> {
    Ok(policy_evaluation(mdp, policy, T::solver_tol())?.v(mdp.initial_state()))
}

/// Deterministic optimal policy by policy iteration.
///
/// A state switches action only when another action improves its value by
/// more than `tol`; the replacement is the lowest-index maximiser.
pub fn optimal_policy<T: Real>(mdp: &Mdp<T>, tol: T) -> Result<(TabularPolicy<T>, ValueTable<T>)> {
    check_tol(tol)?;
    let shape = mdp.shape();
    let mut actions: Vec<usize> = (0..mdp.num_states()).map(|s| mdp.available(s)[0]).collect();
    let mut v: Option<Vec<T>> = None;
    for _ in 0..MAX_IMPROVEMENT_ROUNDS {
        let policy = TabularPolicy::deterministic(shape, &actions)?;
        let values = evaluate_values(mdp, &policy, tol, v.as_deref())?;
        let q = action_values(mdp, &values);
        let mut changed = false;
        for s in 0..mdp.num_states() {
            let best = argmax_by(mdp.available(s).iter().copied(), |a| q[shape.pair(s, a)])
                .expect("every state has an available action");
            if q[shape.pair(s, best)] > q[shape.pair(s, actions[s])] + tol {
                actions[s] = best;
                changed = true;
            }
        }
        if !changed {
            return Ok((policy, ValueTable::new(mdp.num_actions(), values, q)));
        }
        v = Some(values);
    }
    Err(Error::NoConvergence {
        solver: "policy iteration",
        iterations: MAX_IMPROVEMENT_ROUNDS,
        residual: f64::NAN,
    })
}

/// Maximal probability of reaching a target state while avoiding unsafe
/// states, with the solver defaults.
pub fn exact_reach_avoid<T: Real>(mdp: &Mdp<T>) -> Result<ReachAvoidTable<T>> {
    exact_reach_avoid_with(mdp, T::solver_tol(), MAX_SWEEPS)
}

/// Undiscounted value iteration from the zero vector (least fixed point).
pub fn exact_reach_avoid_with<T: Real>(
    mdp: &Mdp<T>,
    tol: T,
    max_iter: usize,
) -> Result<ReachAvoidTable<T>> {
    check_tol(tol)?;
    let shape = mdp.shape();
    let graph = mdp.graph();
    let candidates = reach_avoid_candidates(shape, &graph);
    let sure = almost_sure_states(shape, &graph);
    let interior: Vec<usize> = (0..mdp.num_states())
        .filter(|&s| candidates[s] && !sure[s] && !shape.is_labelled(s))
        .collect();
    let mut v: Vec<T> = (0..mdp.num_states())
        .map(|s| if sure[s] { T::one() } else { T::zero() })
        .collect();
    let lookahead =
        |v: &[T], s: usize, a: usize| -> T { mdp.row(s, a).iter().map(|&(t, p)| p * v[t]).sum() };
    let mut converged = interior.is_empty();
    let mut residual = T::zero();
    for _ in 0..max_iter {
        if converged {
            break;
        }
        residual = T::zero();
        for &s in &interior {
            let best = mdp
                .available(s)
                .iter()
                .map(|&a| lookahead(&v, s, a))
                .fold(T::zero(), T::max)
                .min(T::one());
            residual = residual.max(best - v[s]);
            v[s] = best;
        }
        converged = residual <= tol;
    }
    if !converged {
        return Err(Error::NoConvergence {
            solver: "reach-avoid value iteration",
            iterations: max_iter,
            residual: residual.as_f64(),
        });
    }
    let mut q = vec![T::zero(); shape.num_pairs()];
    for s in 0..mdp.num_states() {
        for &a in mdp.available(s) {
            q[shape.pair(s, a)] = if shape.is_labelled(s) {
                v[s]
            } else {
                lookahead(&v, s, a).min(T::one())
            };
        }
    }
    Ok(ReachAvoidTable::new(mdp.num_actions(), v, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::MdpBuilder;

    fn self_loop(reward: f64, gamma: f64) -> Mdp<f64> {
        let mut b = MdpBuilder::new(1, 1, gamma, 0);
        b.transition(0, 0, 0, 1.0).reward(0, 0, reward);
        b.build().unwrap()
    }

    #[test]
    fn zero_reward_fixed_point() {
        let mdp = self_loop(0.0, 0.95);
        let p = TabularPolicy::uniform(mdp.shape());
        let vt = policy_evaluation(&mdp, &p, 1e-8).unwrap();
        assert_eq!(vt.v(0), 0.0);
        assert_eq!(performance(&mdp, &p).unwrap(), 0.0);
    }

    #[test]
    fn geometric_series() {
        let mdp = self_loop(1.0, 0.95);
        let p = TabularPolicy::uniform(mdp.shape());
        let vt = policy_evaluation(&mdp, &p, 1e-8).unwrap();
        assert!((vt.v(0) - 20.0).abs() <= 1e-8);
        assert!((vt.q(0, 0) - 20.0).abs() <= 1e-8);
    }

    #[test]
    fn zero_discount_is_one_step() {
        let mdp = self_loop(3.0, 0.0);
        let p = TabularPolicy::uniform(mdp.shape());
        assert_eq!(performance(&mdp, &p).unwrap(), 3.0);
    }

    #[test]
    fn rejects_bad_policy_and_tolerance() {
        let mdp = self_loop(1.0, 0.5);
        let p = TabularPolicy::uniform(mdp.shape());
        assert!(policy_evaluation(&mdp, &p, 0.0).is_err());
        let wide = TabularPolicy::from_rows(vec![vec![0.5, 0.5]]).unwrap();
        assert!(policy_evaluation(&mdp, &wide, 1e-8).is_err());
    }

    #[test]
    fn dominant_action_is_chosen() {
        let mut b = MdpBuilder::new(2, 3, 0.9, 0);
        for s in 0..2 {
            for a in 0..3 {
                b.transition(s, a, 1 - s, 1.0)
                    .reward(s, a, if a == 2 { 1.0 } else { 0.0 });
            }
        }
        let mdp = b.build().unwrap();
        let (pi, _) = optimal_policy(&mdp, 1e-8).unwrap();
        assert_eq!(pi.deterministic_action(0), Some(2));
        assert_eq!(pi.deterministic_action(1), Some(2));
    }

    #[test]
    fn optimal_avoids_trap() {
        // Action 0 walks to a rewarding absorbing state, action 1 to a trap.
        let mut b = MdpBuilder::new(3, 2, 0.9, 0);
        b.transition(0, 0, 1, 1.0)
            .reward(0, 0, 1.0)
            .transition(0, 1, 2, 1.0)
            .reward(0, 1, -10.0)
            .transition(1, 0, 1, 1.0)
            .transition(2, 0, 2, 1.0);
        let mdp = b.build().unwrap();
        let (pi, vt) = optimal_policy(&mdp, 1e-8).unwrap();
        assert_eq!(pi.deterministic_action(0), Some(0));
        assert!((vt.v(0) - 1.0_f64).abs() < 1e-8);
    }

    #[test]
    fn reach_avoid_boundaries() {
        let mut b = MdpBuilder::new(2, 1, 0.9, 0);
        b.transition(0, 0, 1, 1.0)
            .transition(1, 0, 1, 1.0)
            .target(0);
        let ra = exact_reach_avoid(&b.build().unwrap()).unwrap();
        assert_eq!(ra.v(0), 1.0);
        assert_eq!(ra.v(1), 0.0);

        let mut b = MdpBuilder::new(2, 1, 0.9, 0);
        b.transition(0, 0, 1, 1.0)
            .transition(1, 0, 1, 1.0)
            .unsafe_state(0)
            .target(1);
        let ra = exact_reach_avoid(&b.build().unwrap()).unwrap();
        assert_eq!(ra.v(0), 0.0);
        assert_eq!(ra.v(1), 1.0);
    }

    #[test]
    fn reach_avoid_three_state_example() {
        // s0 -a-> target 0.7 / unsafe 0.3; s0 -b-> target 0.4 / s0 0.6.
        let mut b = MdpBuilder::new(3, 2, 0.9, 0);
        b.transition(0, 0, 1, 0.7)
            .transition(0, 0, 2, 0.3)
            .transition(0, 1, 1, 0.4)
            .transition(0, 1, 0, 0.6)
            .transition(1, 0, 1, 1.0)
            .transition(2, 0, 2, 1.0)
            .target(1)
            .unsafe_state(2);
        let mdp = b.build().unwrap();
        let ra = exact_reach_avoid_with(&mdp, 1e-12, MAX_SWEEPS).unwrap();
        // Oracle: enumerate both stationary deterministic policies.
        let pol_a = 0.7;
        let pol_b = 0.4 / (1.0 - 0.6);
        let oracle = f64::max(pol_a, pol_b);
        assert!((ra.v(0) - oracle).abs() < 1e-9, "{} vs {}", ra.v(0), oracle);
        assert!((ra.q(0, 0) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn unreachable_target_gives_zero() {
        let mut b = MdpBuilder::new(3, 1, 0.9, 0);
        b.transition(0, 0, 0, 1.0)
            .transition(1, 0, 1, 1.0)
            .transition(2, 0, 2, 1.0)
            .target(1);
        let ra = exact_reach_avoid(&b.build().unwrap()).unwrap();
        assert_eq!(ra.values(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn works_in_single_precision() {
        let mut b = MdpBuilder::<f32>::new(1, 1, 0.5, 0);
        b.transition(0, 0, 0, 1.0).reward(0, 0, 1.0);
        let mdp = b.build().unwrap();
        let p = TabularPolicy::uniform(mdp.shape());
        let v = performance(&mdp, &p).unwrap();
        assert!((v - 2.0).abs() < 1e-4);
    }
}

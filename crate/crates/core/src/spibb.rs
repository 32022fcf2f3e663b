//! SPIBB: policy iteration constrained to follow the baseline on pairs with
//! too little data, optionally combined with a shield.

use crate::data::{count, estimate_baseline, mle_model, CountTable, Dataset};
use crate::error::{invalid, Error, Result};
use crate::mdp::{action_values, evaluate_values, Mdp, ModelShape, TabularPolicy};
use crate::scalar::{argmax_by, Real};
use crate::shield::{shield_baseline, shield_mdp, synthesize_shield, Shield, ShieldConfig};

const MAX_ROUNDS: usize = 1_000;

/// State-action pairs on which SPIBB must copy the baseline.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BootstrappedSet {
    num_actions: usize,
    member: Vec<bool>,
    n_wedge: u64,
    shield_applied: bool,
}

impl BootstrappedSet {
    #[inline]
    pub fn contains(&self, s: usize, a: usize) -> bool {
        self.member[s * self.num_actions + a]
    }

    pub fn n_wedge(&self) -> u64 {
        self.n_wedge
    }

    pub fn shield_applied(&self) -> bool {
        self.shield_applied
    }

    pub fn num_states(&self) -> usize {
        self.member.len() / self.num_actions.max(1)
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// Available actions at `s` outside the set.
    pub fn free_actions<'a>(
        &'a self,
        shape: &'a ModelShape,
        s: usize,
    ) -> impl Iterator<Item = usize> + 'a {
        shape
            .available(s)
            .iter()
            .copied()
            .filter(move |&a| !self.contains(s, a))
    }
}

/// `(s, a)` is bootstrapped iff `N(s, a) <= n_wedge`, or the shield blocks `a`.
pub fn bootstrapped_set<T: Real>(
    counts: &CountTable,
    n_wedge: u64,
    shield: Option<&Shield<T>>,
) -> Result<BootstrappedSet> {
    let (n, m) = (counts.num_states(), counts.num_actions());
    if let Some(sh) = shield {
        if sh.num_states() != n || sh.num_actions() != m {
            return Err(invalid("shield and count table dimensions differ"));
        }
    }
    let mut member = Vec::with_capacity(n * m);
    for s in 0..n {
        for a in 0..m {
            let blocked = shield.is_some_and(|sh| !sh.is_allowed(s, a));
            member.push(counts.n_sa(s, a) <= n_wedge || blocked);
        }
    }
    Ok(BootstrappedSet {
        num_actions: m,
        member,
        n_wedge,
        shield_applied: shield.is_some(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpibbOutcome<T> {
    pub policy: TabularPolicy<T>,
    /// Improvement rounds until the policy stopped changing.
    pub rounds: usize,
    /// Performance on the model of the policy evaluated in each round.
    pub trace: Vec<T>,
}

/// Constrained policy iteration on an estimated model.
///
/// Each round evaluates the current policy, then at every state copies the
/// baseline on bootstrapped actions and puts the baseline's remaining mass
/// on the best free action. The current greedy action is kept unless
/// another free action beats it by more than `10 * tol`.
pub fn spibb_policy_iteration<T: Real>(
    model: &Mdp<T>,
    baseline: &TabularPolicy<T>,
    bset: &BootstrappedSet,
    tol: T,
) -> Result<SpibbOutcome<T>> {
    if !(tol > T::zero()) {
        return Err(invalid("tolerance must be positive"));
    }
    let shape = model.shape();
    baseline.validate_for(shape)?;
    if bset.num_states() != model.num_states() || bset.num_actions() != model.num_actions() {
        return Err(invalid("bootstrapped set and model dimensions differ"));
    }
    let keep = tol * T::of(10.0);
    let mut policy = baseline.clone();
    let mut greedy: Vec<Option<usize>> = vec![None; model.num_states()];
    let mut warm: Option<Vec<T>> = None;
    let mut trace = Vec::new();
    for round in 1..=MAX_ROUNDS {
        let v = evaluate_values(model, &policy, tol, warm.as_deref())?;
        trace.push(v[model.initial_state()]);
        let q = action_values(model, &v);
        let mut next = policy.clone();
        for s in 0..model.num_states() {
            let free: Vec<usize> = bset.free_actions(shape, s).collect();
            if free.is_empty() {
                continue;
            }
            let qs = |a: usize| q[shape.pair(s, a)];
            let mut best = argmax_by(free.iter().copied(), qs).expect("non-empty");
            if let Some(g) = greedy[s] {
                if qs(g) >= qs(best) - keep {
                    best = g;
                }
            }
            greedy[s] = Some(best);
            let mass: T = free.iter().map(|&a| baseline.prob(s, a)).sum();
            let row = next.row_mut(s);
            for &a in shape.available(s) {
                row[a] = if bset.contains(s, a) {
                    baseline.prob(s, a)
                } else {
                    T::zero()
                };
            }
            row[best] = mass;
        }
        if next == policy {
            return Ok(SpibbOutcome {
                policy,
                rounds: round,
                trace,
            });
        }
        policy = next;
        warm = Some(v);
    }
    Err(Error::NoConvergence {
        solver: "SPIBB policy iteration",
        iterations: MAX_ROUNDS,
        residual: f64::NAN,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpibbConfig<T> {
    pub n_wedge: u64,
    /// Shield pipeline parameters; `None` runs plain SPIBB.
    pub shield: Option<ShieldConfig<T>>,
    pub tol: T,
}

#[derive(Clone, Debug)]
pub struct SpibbRun<T> {
    pub policy: TabularPolicy<T>,
    pub shield: Option<Shield<T>>,
    pub rounds: usize,
}

/// SPIBB on a dataset with a shield computed from the same data.
///
/// `reference` supplies the known structure: states, actions, labels,
/// rewards, discount and transition support. Its probabilities are unused.
pub fn run_spibb<T: Real>(
    dataset: &Dataset,
    reference: &Mdp<T>,
    config: &SpibbConfig<T>,
) -> Result<SpibbRun<T>> {
    let counts = count(dataset, reference.shape())?;
    let shield = match &config.shield {
        Some(sc) => {
            Some(synthesize_shield(&counts, reference.shape(), &reference.graph(), sc)?.shield)
        }
        None => None,
    };
    let baseline = estimate_baseline(&counts, reference.shape())?;
    let out = spibb_with_counts(
        &counts,
        &baseline,
        shield.as_ref(),
        reference,
        config.n_wedge,
        config.tol,
    )?;
    Ok(SpibbRun {
        policy: out.policy,
        shield,
        rounds: out.rounds,
    })
}

/// SPIBB from precomputed counts, baseline and optional shield. The baseline
/// is shielded here when a shield is given.
pub fn spibb_with_counts<T: Real>(
    counts: &CountTable,
    baseline: &TabularPolicy<T>,
    shield: Option<&Shield<T>>,
    reference: &Mdp<T>,
    n_wedge: u64,
    tol: T,
) -> Result<SpibbOutcome<T>> {
    let mle = mle_model(counts).to_mdp(reference)?;
    let bset = bootstrapped_set(counts, n_wedge, shield)?;
    match shield {
        Some(sh) => {
            let model = shield_mdp(&mle, sh)?;
            let base = shield_baseline(baseline, sh)?;
            spibb_policy_iteration(&model, &base, &bset, tol)
        }
        None => spibb_policy_iteration(&mle, baseline, &bset, tol),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{optimal_policy, MdpBuilder};

    fn two_state() -> Mdp<f64> {
        // Action 1 at state 0 earns more.
        let mut b = MdpBuilder::new(2, 2, 0.9, 0);
        b.transition(0, 0, 0, 1.0)
            .transition(0, 1, 1, 1.0)
            .transition(1, 0, 0, 1.0)
            .transition(1, 1, 1, 1.0)
            .reward(0, 1, 1.0)
            .reward(1, 0, 0.5);
        b.build().unwrap()
    }

    fn full_counts(n: u64) -> CountTable {
        let mut c = CountTable::zeros(2, 2);
        for s in 0..2 {
            c.add(s, 0, 0, n);
            c.add(s, 1, 1, n);
        }
        c
    }

    #[test]
    fn membership_is_inclusive() {
        let mut c = CountTable::zeros(1, 2);
        c.add(0, 0, 0, 3);
        c.add(0, 1, 0, 4);
        let b = bootstrapped_set::<f64>(&c, 3, None).unwrap();
        assert!(b.contains(0, 0));
        assert!(!b.contains(0, 1));
    }

    #[test]
    fn fully_bootstrapped_returns_baseline() {
        let mdp = two_state();
        let base = TabularPolicy::uniform(mdp.shape());
        let bset = bootstrapped_set::<f64>(&full_counts(2), 5, None).unwrap();
        let out = spibb_policy_iteration(&mdp, &base, &bset, 1e-8).unwrap();
        assert_eq!(out.policy, base);
        assert_eq!(out.rounds, 1);
    }

    #[test]
    fn empty_set_gives_optimal_policy() {
        let mdp = two_state();
        let base = TabularPolicy::uniform(mdp.shape());
        let bset = bootstrapped_set::<f64>(&full_counts(10), 3, None).unwrap();
        let out = spibb_policy_iteration(&mdp, &base, &bset, 1e-8).unwrap();
        let (opt, _) = optimal_policy(&mdp, 1e-8).unwrap();
        assert_eq!(out.policy, opt);
        for w in out.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-7);
        }
    }
}

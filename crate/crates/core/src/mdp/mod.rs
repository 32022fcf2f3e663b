//! Explicit tabular MDPs with reach-avoid labels.
//!
//! An [`Mdp`] stores, for every available state-action pair, a sparse
//! successor distribution sorted by successor index. Unavailable pairs have
//! an empty row. Rewards are per state-action pair.

mod policy;
mod qualitative;
mod solve;
pub(crate) mod text;

pub use policy::TabularPolicy;
pub use qualitative::{almost_sure_states, reach_avoid_candidates};
pub(crate) use solve::{action_values, evaluate_values, policy_support};
pub use solve::{
    exact_reach_avoid, exact_reach_avoid_with, optimal_policy, performance, policy_evaluation,
    ReachAvoidTable, ValueTable, MAX_SWEEPS,
};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Reach-avoid role of a state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum StateLabel {
    #[default]
    Plain,
    Target,
    Unsafe,
}

/// States, actions, availability and labels shared by every model over the
/// same environment (true MDP, estimated MDPs, interval MDPs).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelShape {
    num_states: usize,
    num_actions: usize,
    initial_state: usize,
    available: Vec<Vec<usize>>,
    labels: Vec<StateLabel>,
}

impl ModelShape {
    pub fn new(
        num_states: usize,
        num_actions: usize,
        initial_state: usize,
        mut available: Vec<Vec<usize>>,
        labels: Vec<StateLabel>,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(invalid("model needs at least one state and one action"));
        }
        if initial_state >= num_states {
            return Err(invalid(format!(
                "initial state {initial_state} out of range for {num_states} states"
            )));
        }
        if available.len() != num_states || labels.len() != num_states {
            return Err(invalid(
                "availability and label tables must cover every state",
            ));
        }
        for (s, acts) in available.iter_mut().enumerate() {
            acts.sort_unstable();
            acts.dedup();
            if acts.is_empty() {
                return Err(invalid(format!("state {s} has no available action")));
            }
            if let Some(&a) = acts.iter().find(|&&a| a >= num_actions) {
                return Err(invalid(format!("action {a} out of range at state {s}")));
            }
        }
        Ok(Self {
            num_states,
            num_actions,
            initial_state,
            available,
            labels,
        })
    }

    #[inline]
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    #[inline]
    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    /// Sorted list of actions available at `s`.
    #[inline]
    pub fn available(&self, s: usize) -> &[usize] {
        &self.available[s]
    }

    #[inline]
    pub fn is_available(&self, s: usize, a: usize) -> bool {
        a < self.num_actions && self.available[s].binary_search(&a).is_ok()
    }

    #[inline]
    pub fn label(&self, s: usize) -> StateLabel {
        self.labels[s]
    }

    #[inline]
    pub fn is_target(&self, s: usize) -> bool {
        self.labels[s] == StateLabel::Target
    }

    #[inline]
    pub fn is_unsafe(&self, s: usize) -> bool {
        self.labels[s] == StateLabel::Unsafe
    }

    /// Target or unsafe.
    #[inline]
    pub fn is_labelled(&self, s: usize) -> bool {
        self.labels[s] != StateLabel::Plain
    }

    pub fn target_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_states).filter(move |&s| self.is_target(s))
    }

    pub fn unsafe_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_states).filter(move |&s| self.is_unsafe(s))
    }

    /// Flat index of the pair `(s, a)` in per-pair tables.
    #[inline]
    pub fn pair(&self, s: usize, a: usize) -> usize {
        s * self.num_actions + a
    }

    #[inline]
    pub fn num_pairs(&self) -> usize {
        self.num_states * self.num_actions
    }

    pub(crate) fn with_available(&self, available: Vec<Vec<usize>>) -> Result<Self> {
        Self::new(
            self.num_states,
            self.num_actions,
            self.initial_state,
            available,
            self.labels.clone(),
        )
    }

    pub(crate) fn check_state(&self, s: usize) -> Result<()> {
        if s < self.num_states {
            Ok(())
        } else {
            Err(invalid(format!("state {s} out of range")))
        }
    }
}

/// Known transition support: which successors each available pair can reach.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    num_states: usize,
    num_actions: usize,
    support: Vec<Vec<usize>>,
}

impl Graph {
    /// `support` is indexed by `s * num_actions + a`; successor lists are
    /// sorted and deduplicated on construction.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        mut support: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if support.len() != num_states * num_actions {
            return Err(invalid("graph support must cover every state-action pair"));
        }
        for succ in support.iter_mut() {
            succ.sort_unstable();
            succ.dedup();
            if succ.iter().any(|&t| t >= num_states) {
                return Err(invalid("graph successor out of range"));
            }
        }
        Ok(Self {
            num_states,
            num_actions,
            support,
        })
    }

    #[inline]
    pub fn successors(&self, s: usize, a: usize) -> &[usize] {
        &self.support[s * self.num_actions + a]
    }

    #[inline]
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    #[inline]
    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// Total number of `(s, a, s')` triples with positive probability.
    pub fn num_transitions(&self) -> usize {
        self.support.iter().map(Vec::len).sum()
    }
}

/// Tabular MDP with target and unsafe labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Mdp<T> {
    shape: ModelShape,
    rows: Vec<Vec<(usize, T)>>,
    rewards: Vec<T>,
    discount: T,
}

impl<T: Real> Mdp<T> {
    /// Assembles an MDP from validated parts. Rows are indexed by pair and
    /// must be non-empty exactly on available pairs.
    pub fn from_parts(
        shape: ModelShape,
        mut rows: Vec<Vec<(usize, T)>>,
        rewards: Vec<T>,
        discount: T,
    ) -> Result<Self> {
        let n = shape.num_pairs();
        if rows.len() != n || rewards.len() != n {
            return Err(invalid(
                "transition and reward tables must cover every pair",
            ));
        }
        if !(discount >= T::zero() && discount < T::one()) {
            return Err(invalid(format!("discount {discount} outside [0, 1)")));
        }
        let tol = T::stochastic_tol();
        for s in 0..shape.num_states() {
            for a in 0..shape.num_actions() {
                let idx = shape.pair(s, a);
                let row = &mut rows[idx];
                if !rewards[idx].is_finite() {
                    return Err(invalid(format!("non-finite reward at ({s}, {a})")));
                }
                if !shape.is_available(s, a) {
                    if !row.is_empty() {
                        return Err(invalid(format!(
                            "transitions given for unavailable pair ({s}, {a})"
                        )));
                    }
                    continue;
                }
                normalize_row(row);
                let mut sum = T::zero();
                for &(t, p) in row.iter() {
                    if t >= shape.num_states() {
                        return Err(invalid(format!("successor {t} out of range at ({s}, {a})")));
                    }
                    if !(p >= T::zero() && p <= T::one() + tol) {
                        return Err(Error::NotStochastic {
                            state: s,
                            action: a,
                            detail: format!("entry {p} for successor {t}"),
                        });
                    }
                    sum += p;
                }
                if (sum - T::one()).abs() > tol {
                    return Err(Error::NotStochastic {
                        state: s,
                        action: a,
                        detail: format!("row sums to {sum}"),
                    });
                }
            }
        }
        Ok(Self {
            shape,
            rows,
            rewards,
            discount,
        })
    }

    #[inline]
    pub fn shape(&self) -> &ModelShape {
        &self.shape
    }

    #[inline]
    pub fn num_states(&self) -> usize {
        self.shape.num_states
    }

    #[inline]
    pub fn num_actions(&self) -> usize {
        self.shape.num_actions
    }

    #[inline]
    pub fn initial_state(&self) -> usize {
        self.shape.initial_state
    }

    #[inline]
    pub fn available(&self, s: usize) -> &[usize] {
        self.shape.available(s)
    }

    #[inline]
    pub fn discount(&self) -> T {
        self.discount
    }

    /// Sparse successor distribution of `(s, a)`; empty if unavailable.
    #[inline]
    pub fn row(&self, s: usize, a: usize) -> &[(usize, T)] {
        &self.rows[self.shape.pair(s, a)]
    }

    /// Probability of `s -> t` under action `a`.
    pub fn prob(&self, s: usize, a: usize, t: usize) -> T {
        let row = self.row(s, a);
        match row.binary_search_by_key(&t, |&(x, _)| x) {
            Ok(i) => row[i].1,
            Err(_) => T::zero(),
        }
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize) -> T {
        self.rewards[self.shape.pair(s, a)]
    }

    pub fn rewards(&self) -> &[T] {
        &self.rewards
    }

    pub fn graph(&self) -> Graph {
        let support = self
            .rows
            .iter()
            .map(|row| row.iter().map(|&(t, _)| t).collect())
            .collect();
        Graph {
            num_states: self.num_states(),
            num_actions: self.num_actions(),
            support,
        }
    }

    /// Same states, labels and rewards with new dynamics.
    pub fn with_rows(&self, rows: Vec<Vec<(usize, T)>>) -> Result<Self> {
        Self::from_parts(
            self.shape.clone(),
            rows,
            self.rewards.clone(),
            self.discount,
        )
    }

    /// Keeps only the listed actions per state; rows of removed pairs are
    /// dropped.
    pub fn restrict_actions(&self, allowed: &[Vec<usize>]) -> Result<Self> {
        if allowed.len() != self.num_states() {
            return Err(invalid("restriction must list actions for every state"));
        }
        for (s, acts) in allowed.iter().enumerate() {
            if let Some(a) = acts.iter().find(|&&a| !self.shape.is_available(s, a)) {
                return Err(invalid(format!("action {a} is not available at state {s}")));
            }
        }
        let shape = self.shape.with_available(allowed.to_vec())?;
        let mut rows = self.rows.clone();
        for s in 0..self.num_states() {
            for a in 0..self.num_actions() {
                if !shape.is_available(s, a) {
                    rows[shape.pair(s, a)].clear();
                }
            }
        }
        Ok(Self {
            shape,
            rows,
            rewards: self.rewards.clone(),
            discount: self.discount,
        })
    }

    /// Converts every probability, reward and the discount to another
    /// scalar type.
    pub fn cast<U: Real>(&self) -> Mdp<U> {
        Mdp {
            shape: self.shape.clone(),
            rows: self
                .rows
                .iter()
                .map(|row| row.iter().map(|&(t, p)| (t, U::of(p.as_f64()))).collect())
                .collect(),
            rewards: self.rewards.iter().map(|r| U::of(r.as_f64())).collect(),
            discount: U::of(self.discount.as_f64()),
        }
    }
}

/// Sorts by successor, merges duplicates and drops zero entries.
fn normalize_row<T: Real>(row: &mut Vec<(usize, T)>) {
    row.sort_by_key(|&(t, _)| t);
    let mut out: Vec<(usize, T)> = Vec::with_capacity(row.len());
    for &(t, p) in row.iter() {
        match out.last_mut() {
            Some(last) if last.0 == t => last.1 += p,
            _ => out.push((t, p)),
        }
    }
    out.retain(|&(_, p)| p != T::zero());
    *row = out;
}

/// Incremental construction of an [`Mdp`]. Pairs that receive at least one
/// transition become available.
#[derive(Clone, Debug)]
pub struct MdpBuilder<T> {
    num_states: usize,
    num_actions: usize,
    initial_state: usize,
    discount: T,
    rows: Vec<Vec<(usize, T)>>,
    rewards: Vec<T>,
    labels: Vec<StateLabel>,
    first_error: Option<Error>,
}

impl<T: Real> MdpBuilder<T> {
    pub fn new(num_states: usize, num_actions: usize, discount: T, initial_state: usize) -> Self {
        Self {
            num_states,
            num_actions,
            initial_state,
            discount,
            rows: vec![Vec::new(); num_states * num_actions],
            rewards: vec![T::zero(); num_states * num_actions],
            labels: vec![StateLabel::Plain; num_states],
            first_error: None,
        }
    }

    fn fail(&mut self, msg: String) {
        if self.first_error.is_none() {
            self.first_error = Some(Error::InvalidInput(msg));
        }
    }

    fn pair_ok(&mut self, s: usize, a: usize) -> bool {
        if s >= self.num_states || a >= self.num_actions {
            self.fail(format!("pair ({s}, {a}) out of range"));
            false
        } else {
            true
        }
    }

    /// Adds `p` to the probability of `s -> t` under `a`.
    pub fn transition(&mut self, s: usize, a: usize, t: usize, p: T) -> &mut Self {
        if self.pair_ok(s, a) {
            if t >= self.num_states {
                self.fail(format!("successor {t} out of range"));
            } else {
                self.rows[s * self.num_actions + a].push((t, p));
            }
        }
        self
    }

    pub fn reward(&mut self, s: usize, a: usize, r: T) -> &mut Self {
        if self.pair_ok(s, a) {
            self.rewards[s * self.num_actions + a] = r;
        }
        self
    }

    pub fn label(&mut self, s: usize, label: StateLabel) -> &mut Self {
        if s >= self.num_states {
            self.fail(format!("labelled state {s} out of range"));
        } else if self.labels[s] != StateLabel::Plain && self.labels[s] != label {
            self.fail(format!("state {s} cannot be both target and unsafe"));
        } else {
            self.labels[s] = label;
        }
        self
    }

    pub fn target(&mut self, s: usize) -> &mut Self {
        self.label(s, StateLabel::Target)
    }

    pub fn unsafe_state(&mut self, s: usize) -> &mut Self {
        self.label(s, StateLabel::Unsafe)
    }

    pub fn build(self) -> Result<Mdp<T>> {
        if let Some(e) = self.first_error {
            return Err(e);
        }
        let available = (0..self.num_states)
            .map(|s| {
                (0..self.num_actions)
                    .filter(|&a| !self.rows[s * self.num_actions + a].is_empty())
                    .collect()
            })
            .collect();
        let shape = ModelShape::new(
            self.num_states,
            self.num_actions,
            self.initial_state,
            available,
            self.labels,
        )?;
        Mdp::from_parts(shape, self.rows, self.rewards, self.discount)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> MdpBuilder<f64> {
        let mut b = MdpBuilder::new(2, 2, 0.9, 0);
        b.transition(0, 0, 1, 1.0)
            .transition(0, 1, 0, 0.5)
            .transition(0, 1, 1, 0.5)
            .transition(1, 0, 1, 1.0);
        b
    }

    #[test]
    fn builder_derives_availability() {
        let mdp = two_state().build().unwrap();
        assert_eq!(mdp.available(0), &[0, 1]);
        assert_eq!(mdp.available(1), &[0]);
        assert!(mdp.row(1, 1).is_empty());
        assert_eq!(mdp.prob(0, 1, 1), 0.5);
        assert_eq!(mdp.graph().num_transitions(), 4);
    }

    #[test]
    fn rejects_non_stochastic_rows() {
        let mut b = two_state();
        b.transition(1, 1, 0, 0.3);
        assert!(matches!(
            b.build(),
            Err(Error::NotStochastic {
                state: 1,
                action: 1,
                ..
            })
        ));
    }

    #[test]
    fn rejects_overlapping_labels() {
        let mut b = two_state();
        b.target(1).unsafe_state(1);
        assert!(b.build().is_err());
    }

    #[test]
    fn rejects_bad_initial_state_and_discount() {
        let mut b = MdpBuilder::new(1, 1, 0.9, 3);
        b.transition(0, 0, 0, 1.0);
        assert!(b.build().is_err());
        let mut b = MdpBuilder::new(1, 1, 1.0, 0);
        b.transition(0, 0, 0, 1.0);
        assert!(b.build().is_err());
    }

    #[test]
    fn rejects_state_without_actions() {
        let mut b = MdpBuilder::<f64>::new(2, 1, 0.9, 0);
        b.transition(0, 0, 0, 1.0);
        assert!(b.build().is_err());
    }

    #[test]
    fn duplicate_transitions_are_merged() {
        let mut b = MdpBuilder::new(2, 1, 0.5, 0);
        b.transition(0, 0, 1, 0.25)
            .transition(0, 0, 1, 0.75)
            .transition(1, 0, 1, 1.0);
        let mdp = b.build().unwrap();
        assert_eq!(mdp.row(0, 0), &[(1, 1.0)]);
    }

    #[test]
    fn restriction_drops_rows() {
        let mdp = two_state().build().unwrap();
        let r = mdp.restrict_actions(&[vec![1], vec![0]]).unwrap();
        assert_eq!(r.available(0), &[1]);
        assert!(r.row(0, 0).is_empty());
        assert!(mdp.restrict_actions(&[vec![], vec![0]]).is_err());
        assert!(mdp.restrict_actions(&[vec![0], vec![1]]).is_err());
    }

    #[test]
    fn cast_preserves_structure() {
        let mdp = two_state().build().unwrap();
        let m32: Mdp<f32> = mdp.cast();
        assert_eq!(m32.prob(0, 1, 0), 0.5f32);
        assert_eq!(m32.graph(), mdp.graph());
    }
}

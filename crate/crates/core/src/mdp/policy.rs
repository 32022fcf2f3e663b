use crate::error::{invalid, Result};
use crate::mdp::ModelShape;
use crate::scalar::Real;

/// Stochastic memoryless policy stored as a dense state-by-action table.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularPolicy<T> {
    num_states: usize,
    num_actions: usize,
    probs: Vec<T>,
}

impl<T: Real> TabularPolicy<T> {
    /// Checks that every row is a probability distribution.
    pub fn new(num_states: usize, num_actions: usize, probs: Vec<T>) -> Result<Self> {
        if probs.len() != num_states * num_actions {
            return Err(invalid("policy table has the wrong size"));
        }
        let p = Self {
            num_states,
            num_actions,
            probs,
        };
        p.check_stochastic()?;
        Ok(p)
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let num_states = rows.len();
        let num_actions = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != num_actions) {
            return Err(invalid("policy rows have different lengths"));
        }
        Self::new(
            num_states,
            num_actions,
            rows.into_iter().flatten().collect(),
        )
    }

    /// Uniform over the available actions of each state.
    pub fn uniform(shape: &ModelShape) -> Self {
        let mut probs = vec![T::zero(); shape.num_pairs()];
        for s in 0..shape.num_states() {
            let acts = shape.available(s);
            let w = T::one() / T::of(acts.len() as f64);
            for &a in acts {
                probs[shape.pair(s, a)] = w;
            }
        }
        Self {
            num_states: shape.num_states(),
            num_actions: shape.num_actions(),
            probs,
        }
    }

    /// Deterministic policy choosing `actions[s]` in state `s`.
    pub fn deterministic(shape: &ModelShape, actions: &[usize]) -> Result<Self> {
        if actions.len() != shape.num_states() {
            return Err(invalid("one action per state required"));
        }
        let mut probs = vec![T::zero(); shape.num_pairs()];
        for (s, &a) in actions.iter().enumerate() {
            if !shape.is_available(s, a) {
                return Err(invalid(format!("action {a} is not available at state {s}")));
            }
            probs[shape.pair(s, a)] = T::one();
        }
        Ok(Self {
            num_states: shape.num_states(),
            num_actions: shape.num_actions(),
            probs,
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
    pub fn prob(&self, s: usize, a: usize) -> T {
        self.probs[s * self.num_actions + a]
    }

    #[inline]
    pub fn row(&self, s: usize) -> &[T] {
        &self.probs[s * self.num_actions..(s + 1) * self.num_actions]
    }

    pub(crate) fn row_mut(&mut self, s: usize) -> &mut [T] {
        &mut self.probs[s * self.num_actions..(s + 1) * self.num_actions]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.probs
    }

    /// Actions with positive probability at `s`.
    pub fn support(&self, s: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(s)
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > T::zero())
            .map(|(a, _)| a)
    }

    /// The action with all the mass at `s`, if the row is deterministic.
    pub fn deterministic_action(&self, s: usize) -> Option<usize> {
        let mut it = self.support(s);
        match (it.next(), it.next()) {
            (Some(a), None) if self.prob(s, a) == T::one() => Some(a),
            _ => None,
        }
    }

    fn check_stochastic(&self) -> Result<()> {
        let tol = T::stochastic_tol();
        for s in 0..self.num_states {
            let row = self.row(s);
            if row
                .iter()
                .any(|&p| !(p >= T::zero() && p <= T::one() + tol))
            {
                return Err(invalid(format!(
                    "policy row {s} has an entry outside [0, 1]"
                )));
            }
            let sum: T = row.iter().copied().sum();
            if (sum - T::one()).abs() > tol {
                return Err(invalid(format!("policy row {s} sums to {sum}")));
            }
        }
        Ok(())
    }

    /// Checks dimensions, stochasticity and that the support stays within
    /// the available actions of `shape`.
    pub fn validate_for(&self, shape: &ModelShape) -> Result<()> {
        if self.num_states != shape.num_states() || self.num_actions != shape.num_actions() {
            return Err(invalid(format!(
                "policy is {}x{} but the model is {}x{}",
                self.num_states,
                self.num_actions,
                shape.num_states(),
                shape.num_actions()
            )));
        }
        self.check_stochastic()?;
        for s in 0..self.num_states {
            if let Some(a) = self.support(s).find(|&a| !shape.is_available(s, a)) {
                return Err(invalid(format!(
                    "policy puts mass on unavailable action {a} at state {s}"
                )));
            }
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> TabularPolicy<U> {
        TabularPolicy {
            num_states: self.num_states,
            num_actions: self.num_actions,
            probs: self.probs.iter().map(|p| U::of(p.as_f64())).collect(),
        }
    }
}

//! Logged trajectories, count tables and model/baseline estimators.

mod counts;
mod estimate;
mod text;

pub use counts::{count, CountTable};
pub(crate) use estimate::{check_dims, observed_within_support};
pub use estimate::{
    estimate_baseline, map_model, mixture_baseline, mle_model, EstimatedModel, Estimator,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::mdp::{Mdp, TabularPolicy};
use crate::scalar::Real;

/// Episode length cap for episodic benchmarks.
pub const DEFAULT_HORIZON: usize = 200;

/// Seeded generator used for every random draw in the crate.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws an index from non-negative weights summing to (about) one.
///
/// Falls back to the last positive weight when rounding leaves the uniform
/// draw past the cumulative sum.
pub fn sample_index<T: Real>(
    rng: &mut impl Rng,
    weights: impl IntoIterator<Item = (usize, T)>,
) -> Option<usize> {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = None;
    for (i, w) in weights {
        let w = w.as_f64();
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = Some(i);
        if u < acc {
            return Some(i);
        }
    }
    last
}

/// A state-action sequence `s0 a0 s1 a1 ... sH`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trajectory {
    states: Vec<usize>,
    actions: Vec<usize>,
}

impl Trajectory {
    pub fn new(states: Vec<usize>, actions: Vec<usize>) -> Result<Self> {
        if states.len() != actions.len() + 1 {
            return Err(invalid(
                "a trajectory has exactly one more state than actions",
            ));
        }
        Ok(Self { states, actions })
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// `(s_t, a_t, s_{t+1})` triples.
    pub fn transitions(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.actions
            .iter()
            .enumerate()
            .map(move |(t, &a)| (self.states[t], a, self.states[t + 1]))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Dataset {
    trajectories: Vec<Trajectory>,
    episodic: bool,
    seed: u64,
}

impl Dataset {
    pub fn new(trajectories: Vec<Trajectory>, episodic: bool, seed: u64) -> Self {
        Self {
            trajectories,
            episodic,
            seed,
        }
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn episodic(&self) -> bool {
        self.episodic
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn total_transitions(&self) -> usize {
        self.trajectories.iter().map(Trajectory::len).sum()
    }

    pub fn transitions(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.trajectories.iter().flat_map(Trajectory::transitions)
    }

    /// Appends the trajectories of `other`; flags and seed of `self` are kept.
    pub fn concat(mut self, other: &Dataset) -> Self {
        self.trajectories.extend(other.trajectories.iter().cloned());
        self
    }
}

/// Rolls out `behavior` on `mdp`.
///
/// Episodic: `budget` trajectories, each stopped on entering a target or
/// unsafe state or after `horizon` steps. Continuing: a single trajectory of
/// exactly `budget` transitions.
pub fn sample_trajectories<T: Real>(
    mdp: &Mdp<T>,
    behavior: &TabularPolicy<T>,
    budget: usize,
    horizon: usize,
    episodic: bool,
    seed: u64,
) -> Result<Dataset> {
    if budget == 0 || horizon == 0 {
        return Err(invalid("budget and horizon must be at least one"));
    }
    behavior.validate_for(mdp.shape())?;
    let mut rng = rng_from_seed(seed);
    let shape = mdp.shape();
    let step = |s: usize, rng: &mut SimRng| -> (usize, usize) {
        let a = sample_index(
            rng,
            shape.available(s).iter().map(|&a| (a, behavior.prob(s, a))),
        )
        .expect("validated policy has support");
        let t = sample_index(rng, mdp.row(s, a).iter().copied())
            .expect("available rows are stochastic");
        (a, t)
    };
    let trajectories = if episodic {
        (0..budget)
            .map(|_| {
                let mut s = mdp.initial_state();
                let mut states = vec![s];
                let mut actions = Vec::new();
                while actions.len() < horizon && !shape.is_labelled(s) {
                    let (a, t) = step(s, &mut rng);
                    actions.push(a);
                    states.push(t);
                    s = t;
                }
                Trajectory { states, actions }
            })
            .collect()
    } else {
        let mut s = mdp.initial_state();
        let mut states = Vec::with_capacity(budget + 1);
        let mut actions = Vec::with_capacity(budget);
        states.push(s);
        for _ in 0..budget {
            let (a, t) = step(s, &mut rng);
            actions.push(a);
            states.push(t);
            s = t;
        }
        vec![Trajectory { states, actions }]
    };
    Ok(Dataset {
        trajectories,
        episodic,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::MdpBuilder;

    fn chain() -> Mdp<f64> {
        let mut b = MdpBuilder::new(4, 1, 0.9, 0);
        b.transition(0, 0, 1, 1.0)
            .transition(1, 0, 2, 1.0)
            .transition(2, 0, 3, 1.0)
            .transition(3, 0, 3, 1.0);
        b.build().unwrap()
    }

    #[test]
    fn deterministic_chain_gives_unique_path() {
        let mdp = chain();
        let pi = TabularPolicy::uniform(mdp.shape());
        let d = sample_trajectories(&mdp, &pi, 1, 3, true, 7).unwrap();
        assert_eq!(d.trajectories().len(), 1);
        assert_eq!(d.trajectories()[0].states(), &[0, 1, 2, 3]);
        assert_eq!(d.trajectories()[0].actions(), &[0, 0, 0]);
    }

    #[test]
    fn episodes_stop_at_labels() {
        let mut b = MdpBuilder::new(3, 1, 0.9, 0);
        b.transition(0, 0, 1, 1.0)
            .transition(1, 0, 2, 1.0)
            .transition(2, 0, 2, 1.0)
            .target(1);
        let mdp = b.build().unwrap();
        let pi = TabularPolicy::uniform(mdp.shape());
        let d = sample_trajectories(&mdp, &pi, 5, 50, true, 1).unwrap();
        assert_eq!(d.trajectories().len(), 5);
        assert!(d.trajectories().iter().all(|t| t.states() == [0, 1]));
        assert_eq!(d.total_transitions(), 5);
    }

    #[test]
    fn continuing_stream_has_exact_budget() {
        let mdp = chain();
        let pi = TabularPolicy::uniform(mdp.shape());
        let d = sample_trajectories(&mdp, &pi, 17, 1, false, 3).unwrap();
        assert_eq!(d.trajectories().len(), 1);
        assert_eq!(d.total_transitions(), 17);
    }

    #[test]
    fn same_seed_same_data() {
        let mut b = MdpBuilder::new(2, 2, 0.9, 0);
        for s in 0..2 {
            for a in 0..2 {
                b.transition(s, a, 0, 0.3).transition(s, a, 1, 0.7);
            }
        }
        let mdp = b.build().unwrap();
        let pi = TabularPolicy::uniform(mdp.shape());
        let x = sample_trajectories(&mdp, &pi, 10, 20, true, 42).unwrap();
        let y = sample_trajectories(&mdp, &pi, 10, 20, true, 42).unwrap();
        let z = sample_trajectories(&mdp, &pi, 10, 20, true, 43).unwrap();
        assert_eq!(x, y);
        assert_ne!(x, z);
    }

    #[test]
    fn rejects_bad_arguments() {
        let mdp = chain();
        let pi = TabularPolicy::uniform(mdp.shape());
        assert!(sample_trajectories(&mdp, &pi, 0, 3, true, 0).is_err());
        assert!(sample_trajectories(&mdp, &pi, 1, 0, true, 0).is_err());
        let wide = TabularPolicy::from_rows(vec![vec![1.0]; 3]).unwrap();
        assert!(sample_trajectories(&mdp, &wide, 1, 3, true, 0).is_err());
    }

    #[test]
    fn sample_index_skips_zero_weights() {
        let mut rng = rng_from_seed(0);
        for _ in 0..100 {
            let i = sample_index(&mut rng, [(0, 0.0), (1, 1.0), (2, 0.0)]).unwrap();
            assert_eq!(i, 1);
        }
        assert_eq!(sample_index::<f64>(&mut rng, []), None);
    }
}

use std::collections::VecDeque;

use rand::seq::index::sample;
use rand::Rng;

use crate::data::rng_from_seed;
use crate::envs::Benchmark;
use crate::error::{invalid, Error, Result};
use crate::mdp::{optimal_policy, Mdp, MdpBuilder};
use crate::scalar::Real;

const MAX_ATTEMPTS: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct RandomMdpParams {
    pub num_states: usize,
    pub num_actions: usize,
    /// Distinct successors per state-action pair.
    pub branching: usize,
    pub num_traps: usize,
    pub goal_reward: f64,
    pub trap_reward: f64,
    pub discount: f64,
}

impl Default for RandomMdpParams {
    fn default() -> Self {
        Self {
            num_states: 50,
            num_actions: 4,
            branching: 4,
            num_traps: 5,
            goal_reward: 1.0,
            trap_reward: -10.0,
            discount: 0.95,
        }
    }
}

type Rows = Vec<Vec<(usize, f64)>>;

fn reachable(rows: &Rows, m: usize, from: usize, sinks: &[bool]) -> Vec<bool> {
    let n = sinks.len();
    let mut seen = vec![false; n];
    seen[from] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(s) = queue.pop_front() {
        if sinks[s] {
            continue;
        }
        for a in 0..m {
            for &(t, _) in &rows[s * m + a] {
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
    }
    seen
}

fn assemble(p: &RandomMdpParams, rows: &Rows, traps: &[usize], goal: usize) -> Result<Mdp<f64>> {
    let (n, m) = (p.num_states, p.num_actions);
    let mut b = MdpBuilder::new(n, m, p.discount, 0);
    for s in 0..n {
        if s == goal || traps.contains(&s) {
            b.transition(s, 0, s, 1.0);
            continue;
        }
        for a in 0..m {
            let mut reward = 0.0;
            for &(t, w) in &rows[s * m + a] {
                b.transition(s, a, t, w);
                if t == goal {
                    reward += w * p.goal_reward;
                } else if traps.contains(&t) {
                    reward += w * p.trap_reward;
                }
            }
            b.reward(s, a, reward);
        }
    }
    b.target(goal);
    for &t in traps {
        b.unsafe_state(t);
    }
    b.build()
}

/// Random MDP in the style of garnets: every pair moves to `branching`
/// distinct random states with random weights. `num_traps` random states
/// become unsafe sinks that stay reachable from state 0, and the goal sink is
/// the reachable state whose choice minimises the optimal value of state 0.
/// The heuristic is an optimal policy.
pub fn random_mdp<T: Real>(params: &RandomMdpParams, seed: u64) -> Result<Benchmark<T>> {
    let (n, m, k) = (params.num_states, params.num_actions, params.branching);
    if n < params.num_traps + 2 || m == 0 || k == 0 || k > n {
        return Err(invalid(format!(
            "cannot build a random MDP with {n} states, {m} actions, branching {k} and {} traps",
            params.num_traps
        )));
    }
    let mut rng = rng_from_seed(seed);
    for _ in 0..MAX_ATTEMPTS {
        let mut rows: Rows = Vec::with_capacity(n * m);
        for _ in 0..n * m {
            let succ = sample(&mut rng, n, k).into_vec();
            let w: Vec<f64> = (0..k).map(|_| 1.0 - rng.gen::<f64>()).collect();
            let total: f64 = w.iter().sum();
            let mut row: Vec<(usize, f64)> = succ
                .into_iter()
                .zip(w.into_iter().map(|x| x / total))
                .collect();
            row.sort_by_key(|&(t, _)| t);
            rows.push(row);
        }
        let traps: Vec<usize> = sample(&mut rng, n - 1, params.num_traps)
            .into_iter()
            .map(|i| i + 1)
            .collect();
        let mut sinks = vec![false; n];
        for &t in &traps {
            sinks[t] = true;
        }
        let reach = reachable(&rows, m, 0, &sinks);
        if traps.iter().any(|&t| !reach[t]) {
            continue;
        }
        let mut best: Option<(f64, usize)> = None;
        for goal in 1..n {
            if sinks[goal] || !reach[goal] {
                continue;
            }
            let mut with_goal = sinks.clone();
            with_goal[goal] = true;
            let reach_goal = reachable(&rows, m, 0, &with_goal);
            if traps.iter().any(|&t| !reach_goal[t]) {
                continue;
            }
            let mdp = assemble(params, &rows, &traps, goal)?;
            let (_, values) = optimal_policy(&mdp, 1e-8)?;
            let v0 = values.v(0);
            if best.is_none_or(|(bv, _)| v0 < bv) {
                best = Some((v0, goal));
            }
        }
        let Some((_, goal)) = best else { continue };
        let mdp = assemble(params, &rows, &traps, goal)?;
        let (heuristic, _) = optimal_policy(&mdp, 1e-8)?;
        return Benchmark::new("random", mdp.cast(), heuristic.cast(), true);
    }
    Err(Error::Generation(format!(
        "no random MDP with reachable traps after {MAX_ATTEMPTS} attempts (seed {seed})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_instance() {
        let bench = random_mdp::<f64>(&RandomMdpParams::default(), 7).unwrap();
        let mdp = &bench.mdp;
        assert_eq!(mdp.num_states(), 50);
        assert_eq!(mdp.shape().unsafe_states().count(), 5);
        assert_eq!(mdp.shape().target_states().count(), 1);
        for t in mdp.shape().unsafe_states() {
            assert_eq!(mdp.available(t), &[0]);
            assert_eq!(mdp.row(t, 0), &[(t, 1.0)]);
        }
        let again = random_mdp::<f64>(&RandomMdpParams::default(), 7).unwrap();
        assert_eq!(again.mdp, bench.mdp);
    }
}

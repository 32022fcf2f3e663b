#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shieldspi::data::CountTable;
use shieldspi::mdp::{Mdp, MdpBuilder, TabularPolicy};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense random MDP without labels.
pub fn random_mdp(r: &mut ChaCha8Rng, n: usize, m: usize, gamma: f64) -> Mdp<f64> {
    let mut b = MdpBuilder::new(n, m, gamma, 0);
    for s in 0..n {
        for a in 0..m {
            let k = r.gen_range(1..=n);
            let succ = rand::seq::index::sample(r, n, k).into_vec();
            let w: Vec<f64> = (0..k).map(|_| r.gen_range(0.1..1.0)).collect();
            let total: f64 = w.iter().sum();
            for (t, x) in succ.into_iter().zip(w) {
                b.transition(s, a, t, x / total);
            }
            b.reward(s, a, r.gen_range(-1.0..1.0));
        }
    }
    b.build().unwrap()
}

/// Random rewarded MDP whose last two states are an absorbing target and an
/// absorbing unsafe state.
pub fn random_reach_avoid_mdp(r: &mut ChaCha8Rng, interior: usize, m: usize) -> Mdp<f64> {
    let n = interior + 2;
    let mut b = MdpBuilder::new(n, m, 0.95, 0);
    for s in 0..interior {
        for a in 0..m {
            let k = r.gen_range(1..=n.min(4));
            let succ = rand::seq::index::sample(r, n, k).into_vec();
            let w: Vec<f64> = (0..k).map(|_| r.gen_range(0.1..1.0)).collect();
            let total: f64 = w.iter().sum();
            for (t, x) in succ.into_iter().zip(w) {
                b.transition(s, a, t, x / total);
            }
            b.reward(s, a, r.gen_range(-1.0..1.0));
        }
    }
    b.transition(interior, 0, interior, 1.0);
    b.transition(interior + 1, 0, interior + 1, 1.0);
    b.target(interior).unsafe_state(interior + 1);
    b.build().unwrap()
}

pub fn random_policy(r: &mut ChaCha8Rng, mdp: &Mdp<f64>) -> TabularPolicy<f64> {
    let m = mdp.num_actions();
    let rows = (0..mdp.num_states())
        .map(|s| {
            let mut row = vec![0.0; m];
            for &a in mdp.available(s) {
                row[a] = r.gen_range(0.05..1.0);
            }
            let total: f64 = row.iter().sum();
            row.into_iter().map(|x| x / total).collect()
        })
        .collect();
    TabularPolicy::from_rows(rows).unwrap()
}

pub fn sample_from(r: &mut ChaCha8Rng, row: &[(usize, f64)]) -> usize {
    let mut u: f64 = r.gen();
    for &(t, p) in row {
        if u < p {
            return t;
        }
        u -= p;
    }
    row.last().unwrap().0
}

/// `per_pair` samples of every available pair.
pub fn sample_counts(
    r: &mut ChaCha8Rng,
    mdp: &Mdp<f64>,
    per_pair: std::ops::RangeInclusive<u64>,
) -> CountTable {
    let mut c = CountTable::zeros(mdp.num_states(), mdp.num_actions());
    for s in 0..mdp.num_states() {
        for &a in mdp.available(s) {
            for _ in 0..r.gen_range(per_pair.clone()) {
                c.add(s, a, sample_from(r, mdp.row(s, a)), 1);
            }
        }
    }
    c
}

/// `V = (I - g P_pi)^-1 R_pi` by dense LU.
pub fn dense_policy_value(mdp: &Mdp<f64>, policy: &TabularPolicy<f64>) -> Vec<f64> {
    let n = mdp.num_states();
    let g = mdp.discount();
    let mut a = DMatrix::<f64>::identity(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for s in 0..n {
        for &act in mdp.available(s) {
            let p = policy.prob(s, act);
            b[s] += p * mdp.reward(s, act);
            for &(t, q) in mdp.row(s, act) {
                a[(s, t)] -= g * p * q;
            }
        }
    }
    a.lu().solve(&b).unwrap().iter().copied().collect()
}

/// Reach-avoid probability of a deterministic memoryless policy: the
/// absorption probability into the target, with states that cannot reach it
/// fixed at zero so the linear system is nonsingular.
pub fn dense_reach_probability(mdp: &Mdp<f64>, actions: &[usize]) -> Vec<f64> {
    let n = mdp.num_states();
    let shape = mdp.shape();
    // States that reach the target under the policy.
    let mut reach = vec![false; n];
    for s in shape.target_states() {
        reach[s] = true;
    }
    loop {
        let mut changed = false;
        for s in 0..n {
            if !reach[s]
                && !shape.is_labelled(s)
                && mdp
                    .row(s, actions[s])
                    .iter()
                    .any(|&(t, p)| p > 0.0 && reach[t])
            {
                reach[s] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut a = DMatrix::<f64>::identity(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for s in 0..n {
        if shape.is_target(s) {
            b[s] = 1.0;
        } else if !shape.is_labelled(s) && reach[s] {
            for &(t, p) in mdp.row(s, actions[s]) {
                a[(s, t)] -= p;
            }
        }
    }
    a.lu().solve(&b).unwrap().iter().copied().collect()
}

/// Every deterministic memoryless policy over the available actions.
pub fn all_deterministic(mdp: &Mdp<f64>) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for s in 0..mdp.num_states() {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                mdp.available(s).iter().map(move |&a| {
                    let mut p = prefix.clone();
                    p.push(a);
                    p
                })
            })
            .collect();
    }
    out
}

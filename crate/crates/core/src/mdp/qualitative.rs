//! Graph-based precomputation for reach-avoid objectives.
//!
//! Both routines only look at which transitions have positive probability,
//! so they apply unchanged to interval models whose lower bounds are
//! strictly positive.

use std::collections::VecDeque;

use crate::mdp::{Graph, ModelShape};

fn predecessors(shape: &ModelShape, graph: &Graph, within: &[bool]) -> Vec<Vec<(usize, usize)>> {
    let mut preds = vec![Vec::new(); shape.num_states()];
    for s in 0..shape.num_states() {
        if shape.is_labelled(s) || !within[s] {
            continue;
        }
        for &a in shape.available(s) {
            for &t in graph.successors(s, a) {
                preds[t].push((s, a));
            }
        }
    }
    preds
}

/// States from which some path reaches a target state without visiting an
/// unsafe one. Every other state has reach-avoid probability zero under any
/// policy and any realisation with the same support.
pub fn reach_avoid_candidates(shape: &ModelShape, graph: &Graph) -> Vec<bool> {
    let n = shape.num_states();
    let preds = predecessors(shape, graph, &vec![true; n]);
    let mut reach = vec![false; n];
    let mut queue: VecDeque<usize> = shape.target_states().collect();
    for &t in &queue {
        reach[t] = true;
    }
    while let Some(t) = queue.pop_front() {
        for &(s, _) in &preds[t] {
            if !reach[s] {
                reach[s] = true;
                queue.push_back(s);
            }
        }
    }
    reach
}

/// States from which some memoryless policy reaches a target state while
/// avoiding unsafe states with probability one, whatever the positive
/// probabilities on the support are.
pub fn almost_sure_states(shape: &ModelShape, graph: &Graph) -> Vec<bool> {
    let n = shape.num_states();
    let mut keep = reach_avoid_candidates(shape, graph);
    loop {
        // Actions that cannot leave the current candidate set.
        let closed =
            |s: usize, a: usize, keep: &[bool]| graph.successors(s, a).iter().all(|&t| keep[t]);
        let mut win = vec![false; n];
        let mut queue: VecDeque<usize> = shape.target_states().filter(|&t| keep[t]).collect();
        for &t in &queue {
            win[t] = true;
        }
        let preds = predecessors(shape, graph, &keep);
        while let Some(t) = queue.pop_front() {
            for &(s, a) in &preds[t] {
                if !win[s] && closed(s, a, &keep) {
                    win[s] = true;
                    queue.push_back(s);
                }
            }
        }
        if win == keep {
            return win;
        }
        keep = win;
    }
}

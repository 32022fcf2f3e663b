//! Robust (max-min) reach-avoid probabilities on interval MDPs.
//!
//! Plain value iteration from zero creeps towards the fixed point by about
//! `xi` per sweep whenever the adversary can keep mass inside a cycle, so a
//! change-based stopping rule can halt far below the answer. The solver
//! therefore uses value iteration only as a warm start and then runs
//! strategy iteration with exact linear solves for both players.

use std::collections::VecDeque;

use crate::error::{invalid, Error, Result};
use crate::imdp::inner::pour;
use crate::imdp::IntervalMdp;
use crate::linalg::solve_dense;
use crate::mdp::{almost_sure_states, reach_avoid_candidates, ReachAvoidTable, MAX_SWEEPS};
use crate::scalar::{argmax_by, Real};

/// Largest number of undecided states handled with dense linear algebra.
/// Bigger models are solved by value iteration alone.
pub const DENSE_LIMIT: usize = 1_500;

const MAX_STRATEGY_ROUNDS: usize = 1_000;
const WARM_START_SWEEPS: usize = 1_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RobustOptions<T> {
    pub tol: T,
    pub max_iter: usize,
    /// Keep the minimising distribution of every state-action pair.
    pub keep_witness: bool,
}

impl<T: Real> Default for RobustOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::solver_tol(),
            max_iter: MAX_SWEEPS,
            keep_witness: false,
        }
    }
}

/// Robust reach-avoid values with optional adversarial witness.
#[derive(Clone, Debug, PartialEq)]
pub struct RobustReachAvoidTable<T> {
    table: ReachAvoidTable<T>,
    witness: Option<Vec<Vec<(usize, T)>>>,
    sweeps: usize,
    rounds: usize,
}

impl<T: Real> RobustReachAvoidTable<T> {
    #[inline]
    pub fn v(&self, s: usize) -> T {
        self.table.v(s)
    }

    #[inline]
    pub fn q(&self, s: usize, a: usize) -> T {
        self.table.q(s, a)
    }

    pub fn table(&self) -> &ReachAvoidTable<T> {
        &self.table
    }

    pub fn into_table(self) -> ReachAvoidTable<T> {
        self.table
    }

    /// Minimising distribution for `(s, a)`, if requested.
    pub fn witness(&self, s: usize, a: usize) -> Option<&[(usize, T)]> {
        self.witness
            .as_ref()
            .map(|w| w[s * self.table.num_actions() + a].as_slice())
    }

    /// Value-iteration sweeps performed.
    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Strategy-improvement rounds performed after the warm start.
    pub fn rounds(&self) -> usize {
        self.rounds
    }
}

/// Gauss-Seidel robust value iteration, exposed sweep by sweep.
///
/// Starts from zero except on states that reach the target almost surely,
/// which are fixed at one, so iterates are nondecreasing.
pub struct IntervalValueIteration<'a, T> {
    imdp: &'a IntervalMdp<T>,
    interior: Vec<usize>,
    v: Vec<T>,
    order: Vec<usize>,
    buf: Vec<T>,
    sweeps: usize,
}

impl<'a, T: Real> IntervalValueIteration<'a, T> {
    pub fn new(imdp: &'a IntervalMdp<T>) -> Self {
        let shape = imdp.shape();
        let graph = imdp.graph();
        let candidates = reach_avoid_candidates(shape, &graph);
        let sure = almost_sure_states(shape, &graph);
        let interior = (0..imdp.num_states())
            .filter(|&s| candidates[s] && !sure[s] && !shape.is_labelled(s))
            .collect();
        let v = sure
            .iter()
            .map(|&w| if w { T::one() } else { T::zero() })
            .collect();
        Self {
            imdp,
            interior,
            v,
            order: Vec::new(),
            buf: Vec::new(),
            sweeps: 0,
        }
    }

    /// One in-place sweep; returns the largest increase.
    pub fn sweep(&mut self) -> T {
        let mut residual = T::zero();
        for k in 0..self.interior.len() {
            let s = self.interior[k];
            let mut best = T::zero();
            for &a in self.imdp.shape().available(s) {
                best = best.max(self.lookahead(s, a));
            }
            let best = best.min(T::one());
            residual = residual.max((best - self.v[s]).abs());
            self.v[s] = best;
        }
        self.sweeps += 1;
        residual
    }

    pub fn values(&self) -> &[T] {
        &self.v
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    fn lookahead(&mut self, s: usize, a: usize) -> T {
        let row = self.imdp.row(s, a);
        let v = &self.v;
        pour(row, |t| v[t], &mut self.order, &mut self.buf);
        row.iter()
            .zip(&self.buf)
            .map(|(iv, &p)| p * v[iv.successor])
            .sum()
    }
}

/// Robust reach-avoid values with default options.
pub fn robust_reach_avoid<T: Real>(imdp: &IntervalMdp<T>) -> Result<RobustReachAvoidTable<T>> {
    robust_reach_avoid_with(imdp, &RobustOptions::default())
}

/// Least fixed point of
/// `V(s) = max_a min_{T in T_I(s, a)} sum_s' T(s') V(s')` with `V = 1` on
/// targets and `V = 0` on unsafe states.
pub fn robust_reach_avoid_with<T: Real>(
    imdp: &IntervalMdp<T>,
    opts: &RobustOptions<T>,
) -> Result<RobustReachAvoidTable<T>> {
    if !(opts.tol > T::zero()) || opts.max_iter == 0 {
        return Err(invalid("tolerance must be positive and max_iter nonzero"));
    }
    let mut vi = IntervalValueIteration::new(imdp);
    let dense = vi.interior.len() <= DENSE_LIMIT;
    let budget = if dense {
        opts.max_iter.min(WARM_START_SWEEPS)
    } else {
        opts.max_iter
    };
    let mut residual = T::zero();
    while vi.sweeps < budget && !vi.interior.is_empty() {
        residual = vi.sweep();
        if residual <= opts.tol {
            break;
        }
    }
    let mut rounds = 0;
    if dense && !vi.interior.is_empty() {
        rounds = strategy_iteration(imdp, &vi.interior, &mut vi.v, opts.tol)?;
    } else if residual > opts.tol {
        return Err(Error::NoConvergence {
            solver: "robust value iteration",
            iterations: vi.sweeps,
            residual: residual.as_f64(),
        });
    }
    let sweeps = vi.sweeps;
    let v = vi.v;
    let shape = imdp.shape();
    let mut q = vec![T::zero(); shape.num_pairs()];
    let mut witness = opts
        .keep_witness
        .then(|| vec![Vec::new(); shape.num_pairs()]);
    let (mut order, mut buf) = (Vec::new(), Vec::new());
    for s in 0..imdp.num_states() {
        for &a in shape.available(s) {
            let row = imdp.row(s, a);
            pour(row, |t| v[t], &mut order, &mut buf);
            let idx = shape.pair(s, a);
            q[idx] = if shape.is_labelled(s) {
                v[s]
            } else {
                row.iter()
                    .zip(&buf)
                    .map(|(iv, &p)| p * v[iv.successor])
                    .sum::<T>()
                    .min(T::one())
            };
            if let Some(w) = witness.as_mut() {
                w[idx] = row
                    .iter()
                    .zip(&buf)
                    .map(|(iv, &p)| (iv.successor, p))
                    .collect();
            }
        }
    }
    Ok(RobustReachAvoidTable {
        table: ReachAvoidTable::new(imdp.num_actions(), v, q),
        witness,
        sweeps,
        rounds,
    })
}

/// Refines `v` on `interior` to the exact max-min value. Returns the number
/// of agent improvement rounds.
fn strategy_iteration<T: Real>(
    imdp: &IntervalMdp<T>,
    interior: &[usize],
    v: &mut [T],
    tol: T,
) -> Result<usize> {
    let shape = imdp.shape();
    let n = imdp.num_states();
    let eps = tol * T::of(0.01);
    let mut pos = vec![usize::MAX; n];
    for (k, &s) in interior.iter().enumerate() {
        pos[s] = k;
    }
    let (mut order, mut buf) = (Vec::new(), Vec::new());
    let mut objective = |s: usize, a: usize, v: &[T], out: &mut Vec<T>| -> T {
        let row = imdp.row(s, a);
        pour(row, |t| v[t], &mut order, out);
        row.iter()
            .zip(out.iter())
            .map(|(iv, &p)| p * v[iv.successor])
            .sum()
    };
    let mut sigma: Vec<usize> = interior
        .iter()
        .map(|&s| {
            let mut scratch = Vec::new();
            argmax_by(shape.available(s).iter().copied(), |a| {
                objective(s, a, v, &mut scratch)
            })
            .expect("interior states have actions")
        })
        .collect();
    let mut nature: Vec<Vec<T>> = interior
        .iter()
        .zip(&sigma)
        .map(|(&s, &a)| {
            objective(s, a, v, &mut buf);
            buf.clone()
        })
        .collect();
    for round in 1..=MAX_STRATEGY_ROUNDS {
        // Best response of the adversary to `sigma`.
        for _ in 0..MAX_STRATEGY_ROUNDS {
            evaluate_chain(imdp, interior, &pos, &sigma, &nature, v)?;
            let mut switched = false;
            for (k, &s) in interior.iter().enumerate() {
                let row = imdp.row(s, sigma[k]);
                let current: T = row
                    .iter()
                    .zip(&nature[k])
                    .map(|(iv, &p)| p * v[iv.successor])
                    .sum();
                let best = objective(s, sigma[k], v, &mut buf);
                if best < current - eps {
                    nature[k].clone_from(&buf);
                    switched = true;
                }
            }
            if !switched {
                break;
            }
        }
        // Agent improvement with strict gains only.
        let mut changed = false;
        for (k, &s) in interior.iter().enumerate() {
            let current = objective(s, sigma[k], v, &mut buf);
            let mut best = (sigma[k], current);
            for &a in shape.available(s) {
                let val = objective(s, a, v, &mut buf);
                if val > best.1 + eps {
                    best = (a, val);
                }
            }
            if best.0 != sigma[k] {
                sigma[k] = best.0;
                objective(s, best.0, v, &mut buf);
                nature[k].clone_from(&buf);
                changed = true;
            }
        }
        if !changed {
            let mut residual = T::zero();
            for &s in interior {
                let best = shape
                    .available(s)
                    .iter()
                    .map(|&a| objective(s, a, v, &mut buf))
                    .fold(T::zero(), T::max);
                residual = residual.max((best - v[s]).abs());
            }
            if residual > tol {
                return Err(Error::NoConvergence {
                    solver: "robust strategy iteration",
                    iterations: round,
                    residual: residual.as_f64(),
                });
            }
            return Ok(round);
        }
    }
    Err(Error::NoConvergence {
        solver: "robust strategy iteration",
        iterations: MAX_STRATEGY_ROUNDS,
        residual: f64::NAN,
    })
}

/// Exact reach-avoid values of the Markov chain fixed by the agent choice
/// `sigma` and adversary distributions `nature`, written into `v` on the
/// interior. Interior states that cannot leave the interior get zero.
fn evaluate_chain<T: Real>(
    imdp: &IntervalMdp<T>,
    interior: &[usize],
    pos: &[usize],
    sigma: &[usize],
    nature: &[Vec<T>],
    v: &mut [T],
) -> Result<()> {
    let m = interior.len();
    let mut preds = vec![Vec::new(); m];
    let mut leaks = vec![false; m];
    for (k, &s) in interior.iter().enumerate() {
        for iv in imdp.row(s, sigma[k]) {
            match pos[iv.successor] {
                usize::MAX => leaks[k] = true,
                j => preds[j].push(k),
            }
        }
    }
    let mut live = leaks.clone();
    let mut queue: VecDeque<usize> = (0..m).filter(|&k| leaks[k]).collect();
    while let Some(j) = queue.pop_front() {
        for &k in &preds[j] {
            if !live[k] {
                live[k] = true;
                queue.push_back(k);
            }
        }
    }
    let mut idx = vec![usize::MAX; m];
    let mut solve_set = Vec::new();
    for k in 0..m {
        if live[k] {
            idx[k] = solve_set.len();
            solve_set.push(k);
        } else {
            v[interior[k]] = T::zero();
        }
    }
    let d = solve_set.len();
    if d == 0 {
        return Ok(());
    }
    let mut a = vec![T::zero(); d * d];
    let mut b = vec![T::zero(); d];
    for (r, &k) in solve_set.iter().enumerate() {
        let s = interior[k];
        a[r * d + r] = T::one();
        for (iv, &p) in imdp.row(s, sigma[k]).iter().zip(&nature[k]) {
            match pos[iv.successor] {
                usize::MAX => b[r] += p * v[iv.successor],
                j if live[j] => a[r * d + idx[j]] -= p,
                _ => {}
            }
        }
    }
    if !solve_dense(&mut a, &mut b, d) {
        return Err(Error::NoConvergence {
            solver: "robust chain evaluation",
            iterations: 0,
            residual: f64::NAN,
        });
    }
    for (r, &k) in solve_set.iter().enumerate() {
        v[interior[k]] = b[r].max(T::zero()).min(T::one());
    }
    Ok(())
}

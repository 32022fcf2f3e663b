//! Interval MDPs learned from data with PAC guarantees.
//!
//! Each transition probability is replaced by an interval `[l, u]` built from
//! a point estimate and a Hoeffding width. The confidence budget `delta_I` is
//! split evenly over every transition of the known graph, so with probability
//! at least `1 - delta_I` all intervals contain the true probabilities at once.

mod inner;
mod solve;
mod text;

pub use inner::{worst_case_distribution, worst_case_value};
pub use solve::{
    robust_reach_avoid, robust_reach_avoid_with, IntervalValueIteration, RobustOptions,
    RobustReachAvoidTable,
};

use crate::data::{CountTable, EstimatedModel};
use crate::error::{invalid, Error, Result};
use crate::mdp::{Graph, Mdp, ModelShape};
use crate::scalar::Real;

/// Default lower bound on every interval.
pub const DEFAULT_XI: f64 = 1e-8;

/// Probability interval for one successor of a state-action pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval<T> {
    pub successor: usize,
    pub lower: T,
    pub upper: T,
}

/// An MDP whose transition probabilities are only known up to intervals.
///
/// Invariants: every available pair has a non-empty row over distinct
/// successors, `xi <= lower <= upper <= 1`, and the row is feasible
/// (`sum lower <= 1 <= sum upper`).
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalMdp<T> {
    shape: ModelShape,
    rows: Vec<Vec<Interval<T>>>,
    delta_total: T,
    delta_transition: T,
    xi: T,
}

impl<T: Real> IntervalMdp<T> {
    pub fn new(
        shape: ModelShape,
        mut rows: Vec<Vec<Interval<T>>>,
        delta_total: T,
        delta_transition: T,
        xi: T,
    ) -> Result<Self> {
        if !(xi > T::zero() && xi < T::one()) {
            return Err(invalid(format!("xi must lie in (0, 1), got {xi}")));
        }
        if rows.len() != shape.num_pairs() {
            return Err(invalid(format!(
                "expected {} interval rows, got {}",
                shape.num_pairs(),
                rows.len()
            )));
        }
        let slack = T::stochastic_tol();
        for s in 0..shape.num_states() {
            for a in 0..shape.num_actions() {
                let row = &mut rows[shape.pair(s, a)];
                if !shape.is_available(s, a) {
                    if !row.is_empty() {
                        return Err(invalid(format!(
                            "intervals given for unavailable pair ({s}, {a})"
                        )));
                    }
                    continue;
                }
                if row.is_empty() {
                    return Err(invalid(format!(
                        "available pair ({s}, {a}) has no intervals"
                    )));
                }
                row.sort_by_key(|iv| iv.successor);
                let mut lo_sum = T::zero();
                let mut up_sum = T::zero();
                for (k, iv) in row.iter().enumerate() {
                    if iv.successor >= shape.num_states() {
                        return Err(invalid(format!("successor {} out of range", iv.successor)));
                    }
                    if k > 0 && row[k - 1].successor == iv.successor {
                        return Err(invalid(format!(
                            "duplicate successor {} for ({s}, {a})",
                            iv.successor
                        )));
                    }
                    if !(iv.lower >= xi - slack
                        && iv.lower <= iv.upper
                        && iv.upper <= T::one() + slack)
                    {
                        return Err(Error::Infeasible {
                            state: s,
                            action: a,
                            detail: format!(
                                "interval [{}, {}] for successor {} violates xi <= l <= u <= 1",
                                iv.lower, iv.upper, iv.successor
                            ),
                        });
                    }
                    lo_sum += iv.lower;
                    up_sum += iv.upper;
                }
                if lo_sum > T::one() + slack || up_sum < T::one() - slack {
                    return Err(Error::Infeasible {
                        state: s,
                        action: a,
                        detail: format!("bounds sum to [{lo_sum}, {up_sum}], which excludes 1"),
                    });
                }
            }
        }
        Ok(Self {
            shape,
            rows,
            delta_total,
            delta_transition,
            xi,
        })
    }

    /// Interval model with `lower == upper == T(s, a, s')`. `xi` is the
    /// smallest positive transition probability.
    pub fn degenerate(mdp: &Mdp<T>) -> Result<Self> {
        let shape = mdp.shape().clone();
        let mut xi = T::one();
        let mut rows = vec![Vec::new(); shape.num_pairs()];
        for s in 0..shape.num_states() {
            for &a in shape.available(s) {
                rows[shape.pair(s, a)] = mdp
                    .row(s, a)
                    .iter()
                    .map(|&(t, p)| {
                        xi = xi.min(p);
                        Interval {
                            successor: t,
                            lower: p,
                            upper: p,
                        }
                    })
                    .collect();
            }
        }
        if xi >= T::one() {
            xi = T::of(0.5);
        }
        Self::new(shape, rows, T::zero(), T::zero(), xi)
    }

    #[inline]
    pub fn shape(&self) -> &ModelShape {
        &self.shape
    }

    #[inline]
    pub fn num_states(&self) -> usize {
        self.shape.num_states()
    }

    #[inline]
    pub fn num_actions(&self) -> usize {
        self.shape.num_actions()
    }

    /// Intervals of `(s, a)` ordered by successor.
    #[inline]
    pub fn row(&self, s: usize, a: usize) -> &[Interval<T>] {
        &self.rows[self.shape.pair(s, a)]
    }

    pub fn interval(&self, s: usize, a: usize, t: usize) -> Option<(T, T)> {
        let row = self.row(s, a);
        row.binary_search_by_key(&t, |iv| iv.successor)
            .ok()
            .map(|k| (row[k].lower, row[k].upper))
    }

    pub fn delta_total(&self) -> T {
        self.delta_total
    }

    pub fn delta_transition(&self) -> T {
        self.delta_transition
    }

    pub fn xi(&self) -> T {
        self.xi
    }

    pub fn graph(&self) -> Graph {
        let support = self
            .rows
            .iter()
            .map(|row| row.iter().map(|iv| iv.successor).collect())
            .collect();
        Graph::new(self.num_states(), self.num_actions(), support).expect("rows are validated")
    }

    /// True when `mdp` has the same structure and every transition
    /// probability lies inside its interval, up to `slack`.
    pub fn contains(&self, mdp: &Mdp<T>, slack: T) -> bool {
        if mdp.shape() != &self.shape {
            return false;
        }
        (0..self.num_states()).all(|s| {
            self.shape.available(s).iter().all(|&a| {
                let row = self.row(s, a);
                let truth = mdp.row(s, a);
                row.len() == truth.len()
                    && row.iter().zip(truth).all(|(iv, &(t, p))| {
                        iv.successor == t && p >= iv.lower - slack && p <= iv.upper + slack
                    })
            })
        })
    }
}

/// Half-width `sqrt(ln(2 / delta) / (2 n))` of a two-sided Hoeffding bound.
pub fn hoeffding_width<T: Real>(n: u64, delta: T) -> Result<T> {
    if n == 0 {
        return Err(invalid("Hoeffding width needs at least one sample"));
    }
    if !(delta > T::zero() && delta < T::one()) {
        return Err(invalid(format!(
            "confidence level must lie in (0, 1), got {delta}"
        )));
    }
    let two = T::of(2.0);
    Ok(((two / delta).ln() / (two * T::of(n as f64))).sqrt())
}

/// Per-transition confidence `delta_total / (number of graph transitions)`.
pub fn split_confidence<T: Real>(delta_total: T, graph: &Graph) -> Result<T> {
    if !(delta_total > T::zero() && delta_total < T::one()) {
        return Err(invalid(format!(
            "confidence level must lie in (0, 1), got {delta_total}"
        )));
    }
    let m = graph.num_transitions();
    if m == 0 {
        return Err(invalid("graph has no transitions"));
    }
    Ok(delta_total / T::of(m as f64))
}

/// Builds the PAC interval model around a point estimate.
///
/// For a visited pair with `N(s, a) = n`, the interval of each support
/// successor is `[max(xi, p - eta), min(p + eta, 1)]` where `eta` is the
/// Hoeffding width at the per-transition confidence. Unvisited pairs get
/// `[xi, 1]` on every support successor. Rows whose upper bounds sum below
/// one are scaled up; rows whose lower bounds exceed one are an error.
pub fn build_imdp<T: Real>(
    counts: &CountTable,
    point: &EstimatedModel<T>,
    shape: &ModelShape,
    graph: &Graph,
    delta_total: T,
    xi: T,
) -> Result<IntervalMdp<T>> {
    crate::data::check_dims(counts, graph)?;
    if shape.num_states() != graph.num_states() || shape.num_actions() != graph.num_actions() {
        return Err(invalid("shape and graph dimensions differ"));
    }
    if point.num_states() != shape.num_states() || point.num_actions() != shape.num_actions() {
        return Err(invalid("point estimate dimensions differ from the shape"));
    }
    if !(xi > T::zero() && xi < T::one()) {
        return Err(invalid(format!("xi must lie in (0, 1), got {xi}")));
    }
    let delta_transition = split_confidence(delta_total, graph)?;
    let slack = T::stochastic_tol();
    let mut rows = vec![Vec::new(); shape.num_pairs()];
    for s in 0..shape.num_states() {
        for &a in shape.available(s) {
            let support = graph.successors(s, a);
            if support.is_empty() {
                return Err(invalid(format!(
                    "available pair ({s}, {a}) has empty support"
                )));
            }
            crate::data::observed_within_support(counts, support, s, a)?;
            if xi * T::of(support.len() as f64) > T::one() + slack {
                return Err(Error::Infeasible {
                    state: s,
                    action: a,
                    detail: format!("xi = {xi} times {} successors exceeds one", support.len()),
                });
            }
            let n = counts.n_sa(s, a);
            let mut row: Vec<Interval<T>> = if n == 0 {
                support
                    .iter()
                    .map(|&t| Interval {
                        successor: t,
                        lower: xi,
                        upper: T::one(),
                    })
                    .collect()
            } else {
                let eta = hoeffding_width(n, delta_transition)?;
                support
                    .iter()
                    .map(|&t| {
                        let p = point.prob(s, a, t);
                        Interval {
                            successor: t,
                            lower: xi.max(p - eta),
                            upper: (p + eta).min(T::one()),
                        }
                    })
                    .collect()
            };
            repair_row(&mut row, s, a)?;
            rows[shape.pair(s, a)] = row;
        }
    }
    IntervalMdp::new(shape.clone(), rows, delta_total, delta_transition, xi)
}

fn repair_row<T: Real>(row: &mut [Interval<T>], s: usize, a: usize) -> Result<()> {
    let slack = T::stochastic_tol();
    let lo: T = row.iter().map(|iv| iv.lower).sum();
    if lo > T::one() + slack {
        return Err(Error::Infeasible {
            state: s,
            action: a,
            detail: format!("lower bounds sum to {lo}"),
        });
    }
    let up: T = row.iter().map(|iv| iv.upper).sum();
    if up < T::one() {
        let scale = T::one() / up;
        for iv in row.iter_mut() {
            iv.upper = (iv.upper * scale).min(T::one()).max(iv.lower);
        }
    }
    Ok(())
}

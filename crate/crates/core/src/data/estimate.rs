use crate::data::CountTable;
use crate::error::{invalid, Result};
use crate::mdp::{Graph, Mdp, ModelShape, TabularPolicy};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Estimator {
    /// Empirical frequencies; unvisited pairs have an all-zero row.
    Mle,
    /// Mode of the Dirichlet posterior with a symmetric prior `alpha > 1`
    /// over the known support.
    Map { alpha: f64 },
}

/// Point estimate of the transition function.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatedModel<T> {
    num_states: usize,
    num_actions: usize,
    rows: Vec<Vec<(usize, T)>>,
    kind: Estimator,
}

impl<T: Real> EstimatedModel<T> {
    pub fn kind(&self) -> Estimator {
        self.kind
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// Estimated successor distribution; empty for unvisited pairs under
    /// maximum likelihood.
    #[inline]
    pub fn row(&self, s: usize, a: usize) -> &[(usize, T)] {
        &self.rows[s * self.num_actions + a]
    }

    pub fn prob(&self, s: usize, a: usize, t: usize) -> T {
        let row = self.row(s, a);
        row.binary_search_by_key(&t, |&(x, _)| x)
            .map_or(T::zero(), |i| row[i].1)
    }

    /// MDP with the estimated dynamics and the known states, labels, rewards
    /// and discount of `reference`.
    ///
    /// Available pairs without an estimate become self-loops. Those pairs are
    /// never visited, so they are always bootstrapped and their action values
    /// never drive an improvement step.
    pub fn to_mdp(&self, reference: &Mdp<T>) -> Result<Mdp<T>> {
        if reference.num_states() != self.num_states || reference.num_actions() != self.num_actions
        {
            return Err(invalid("estimated model and reference MDP differ in size"));
        }
        let shape = reference.shape();
        let mut rows = vec![Vec::new(); shape.num_pairs()];
        for s in 0..self.num_states {
            for &a in shape.available(s) {
                let est = self.row(s, a);
                rows[shape.pair(s, a)] = if est.is_empty() {
                    vec![(s, T::one())]
                } else {
                    est.to_vec()
                };
            }
        }
        reference.with_rows(rows)
    }
}

/// Maximum-likelihood transition estimate `N(s,a,s') / N(s,a)`.
pub fn mle_model<T: Real>(counts: &CountTable) -> EstimatedModel<T> {
    let (n, m) = (counts.num_states(), counts.num_actions());
    let mut rows = Vec::with_capacity(n * m);
    for s in 0..n {
        for a in 0..m {
            let total = counts.n_sa(s, a);
            let row = if total == 0 {
                Vec::new()
            } else {
                let total = T::of(total as f64);
                counts
                    .successors(s, a)
                    .iter()
                    .map(|&(t, k)| (t, T::of(k as f64) / total))
                    .collect()
            };
            rows.push(row);
        }
    }
    EstimatedModel {
        num_states: n,
        num_actions: m,
        rows,
        kind: Estimator::Mle,
    }
}

/// Dirichlet-posterior mode over the support given by `graph`:
/// `(alpha + k_i - 1) / (sum_j (alpha + k_j) - m)`.
pub fn map_model<T: Real>(
    counts: &CountTable,
    graph: &Graph,
    alpha: T,
) -> Result<EstimatedModel<T>> {
    if !(alpha > T::one()) {
        return Err(invalid(format!(
            "MAP estimate needs alpha > 1, got {alpha}"
        )));
    }
    check_dims(counts, graph)?;
    let (n, m) = (counts.num_states(), counts.num_actions());
    let mut rows = Vec::with_capacity(n * m);
    for s in 0..n {
        for a in 0..m {
            let support = graph.successors(s, a);
            observed_within_support(counts, support, s, a)?;
            let k_total = T::of(counts.n_sa(s, a) as f64);
            let denom = T::of(support.len() as f64) * (alpha - T::one()) + k_total;
            let row = support
                .iter()
                .map(|&t| {
                    let k = T::of(counts.n_sas(s, a, t) as f64);
                    (t, (alpha - T::one() + k) / denom)
                })
                .collect();
            rows.push(row);
        }
    }
    Ok(EstimatedModel {
        num_states: n,
        num_actions: m,
        rows,
        kind: Estimator::Map {
            alpha: alpha.as_f64(),
        },
    })
}

pub(crate) fn check_dims(counts: &CountTable, graph: &Graph) -> Result<()> {
    if counts.num_states() != graph.num_states() || counts.num_actions() != graph.num_actions() {
        return Err(invalid("count table and graph differ in size"));
    }
    Ok(())
}

pub(crate) fn observed_within_support(
    counts: &CountTable,
    support: &[usize],
    s: usize,
    a: usize,
) -> Result<()> {
    for &(t, _) in counts.successors(s, a) {
        if support.binary_search(&t).is_err() {
            return Err(invalid(format!(
                "observed transition ({s}, {a}, {t}) is outside the known graph"
            )));
        }
    }
    Ok(())
}

/// Empirical action frequencies per state; uniform over the available
/// actions where a state was never visited.
pub fn estimate_baseline<T: Real>(
    counts: &CountTable,
    shape: &ModelShape,
) -> Result<TabularPolicy<T>> {
    if counts.num_states() != shape.num_states() || counts.num_actions() != shape.num_actions() {
        return Err(invalid("count table and model differ in size"));
    }
    let uniform = TabularPolicy::<T>::uniform(shape);
    let mut probs = uniform.as_slice().to_vec();
    for s in 0..shape.num_states() {
        let visits = counts.n_s(s);
        if visits == 0 {
            continue;
        }
        let visits = T::of(visits as f64);
        for a in 0..shape.num_actions() {
            probs[shape.pair(s, a)] = T::of(counts.n_sa(s, a) as f64) / visits;
        }
    }
    let policy = TabularPolicy::new(shape.num_states(), shape.num_actions(), probs)?;
    policy.validate_for(shape)?;
    Ok(policy)
}

/// `epsilon * heuristic + (1 - epsilon) * uniform`, restricted to the
/// available actions and renormalised.
pub fn mixture_baseline<T: Real>(
    heuristic: &TabularPolicy<T>,
    epsilon: T,
    shape: &ModelShape,
) -> Result<TabularPolicy<T>> {
    if !(epsilon >= T::zero() && epsilon <= T::one()) {
        return Err(invalid(format!("mixture weight {epsilon} outside [0, 1]")));
    }
    heuristic.validate_for(shape)?;
    let uniform = T::one() / T::of(shape.num_actions() as f64);
    let mut probs = vec![T::zero(); shape.num_pairs()];
    for s in 0..shape.num_states() {
        let acts = shape.available(s);
        let mass: Vec<T> = acts
            .iter()
            .map(|&a| epsilon * heuristic.prob(s, a) + (T::one() - epsilon) * uniform)
            .collect();
        let total: T = mass.iter().copied().sum();
        for (&a, &w) in acts.iter().zip(&mass) {
            probs[shape.pair(s, a)] = w / total;
        }
    }
    TabularPolicy::new(shape.num_states(), shape.num_actions(), probs)
}

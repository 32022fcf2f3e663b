//! DUIPI: policy iteration on uncertainty-penalised action values
//! `U = Q - nu * sqrt(Var Q)`, with variances propagated through the
//! Bellman operator under a diagonal (independence) approximation.

use crate::data::{count, estimate_baseline, map_model, CountTable, Dataset};
use crate::error::{invalid, Error, Result};
use crate::mdp::{policy_support, Graph, Mdp, TabularPolicy, MAX_SWEEPS};
use crate::scalar::{argmax_by, Real};
use crate::shield::{shield_baseline, synthesize_shield, Shield, ShieldConfig};

/// Default number of policy updates.
pub const DEFAULT_ROUNDS: usize = 300;

/// Posterior variance of every transition probability on the graph support.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionVariance<T> {
    num_actions: usize,
    rows: Vec<Vec<(usize, T)>>,
}

impl<T: Real> TransitionVariance<T> {
    /// Zero variance on every support transition of `graph`.
    pub fn zeros(graph: &Graph) -> Self {
        let (n, m) = (graph.num_states(), graph.num_actions());
        let rows = (0..n * m)
            .map(|k| {
                graph
                    .successors(k / m, k % m)
                    .iter()
                    .map(|&t| (t, T::zero()))
                    .collect()
            })
            .collect();
        Self {
            num_actions: m,
            rows,
        }
    }

    /// `(successor, variance)` pairs of `(s, a)` ordered by successor.
    #[inline]
    pub fn row(&self, s: usize, a: usize) -> &[(usize, T)] {
        &self.rows[s * self.num_actions + a]
    }

    pub fn var(&self, s: usize, a: usize, t: usize) -> T {
        let row = self.row(s, a);
        row.binary_search_by_key(&t, |&(u, _)| u)
            .map_or(T::zero(), |k| row[k].1)
    }
}

/// Marginal variances of the Dirichlet posterior `Dir(alpha + k)` over each
/// pair's support: `a_i (a_0 - a_i) / (a_0^2 (a_0 + 1))`.
pub fn dirichlet_transition_variance<T: Real>(
    counts: &CountTable,
    graph: &Graph,
    alpha: T,
) -> Result<TransitionVariance<T>> {
    if !(alpha > T::zero()) {
        return Err(invalid(format!(
            "Dirichlet prior must be positive, got {alpha}"
        )));
    }
    crate::data::check_dims(counts, graph)?;
    let (n, m) = (graph.num_states(), graph.num_actions());
    let mut rows = Vec::with_capacity(n * m);
    for s in 0..n {
        for a in 0..m {
            let support = graph.successors(s, a);
            crate::data::observed_within_support(counts, support, s, a)?;
            let post: Vec<T> = support
                .iter()
                .map(|&t| alpha + T::of(counts.n_sas(s, a, t) as f64))
                .collect();
            let a0: T = post.iter().copied().sum();
            rows.push(
                support
                    .iter()
                    .zip(&post)
                    .map(|(&t, &ai)| (t, ai * (a0 - ai) / (a0 * a0 * (a0 + T::one()))))
                    .collect(),
            );
        }
    }
    Ok(TransitionVariance {
        num_actions: m,
        rows,
    })
}

/// One application of the value and variance recursions:
/// `Q = R + g sum T V` and
/// `Var Q = sum g^2 T^2 Var V + sum (R + g V)^2 Var T`. Rewards are known, so
/// their variance term vanishes. Returns `(q, var_q)` over all pairs.
pub fn duipi_variance_step<T: Real>(
    model: &Mdp<T>,
    trans_var: &TransitionVariance<T>,
    v: &[T],
    var_v: &[T],
) -> (Vec<T>, Vec<T>) {
    let shape = model.shape();
    let mut q = vec![T::zero(); shape.num_pairs()];
    let mut var_q = vec![T::zero(); shape.num_pairs()];
    for s in 0..model.num_states() {
        for &a in model.available(s) {
            let (qa, va) = pair_step(model, trans_var, v, var_v, s, a);
            q[shape.pair(s, a)] = qa;
            var_q[shape.pair(s, a)] = va;
        }
    }
    (q, var_q)
}

#[inline]
fn pair_step<T: Real>(
    model: &Mdp<T>,
    trans_var: &TransitionVariance<T>,
    v: &[T],
    var_v: &[T],
    s: usize,
    a: usize,
) -> (T, T) {
    let g = model.discount();
    let r = model.reward(s, a);
    let mut q = r;
    let mut var = T::zero();
    for &(t, p) in model.row(s, a) {
        q += g * p * v[t];
        var += g * g * p * p * var_v[t];
    }
    for &(t, vt) in trans_var.row(s, a) {
        let x = r + g * v[t];
        var += x * x * vt;
    }
    (q, var)
}

/// Values, variances and penalised values of one policy.
#[derive(Clone, Debug, PartialEq)]
pub struct UncertainValueTable<T> {
    num_actions: usize,
    q: Vec<T>,
    var_q: Vec<T>,
    v: Vec<T>,
    var_v: Vec<T>,
    u: Vec<T>,
}

impl<T: Real> UncertainValueTable<T> {
    #[inline]
    pub fn q(&self, s: usize, a: usize) -> T {
        self.q[s * self.num_actions + a]
    }

    #[inline]
    pub fn var_q(&self, s: usize, a: usize) -> T {
        self.var_q[s * self.num_actions + a]
    }

    #[inline]
    pub fn u(&self, s: usize, a: usize) -> T {
        self.u[s * self.num_actions + a]
    }

    #[inline]
    pub fn v(&self, s: usize) -> T {
        self.v[s]
    }

    #[inline]
    pub fn var_v(&self, s: usize) -> T {
        self.var_v[s]
    }

    pub fn values(&self) -> &[T] {
        &self.v
    }
}

/// Joint Gauss-Seidel evaluation of `V` and `Var V` under `policy`, with
/// `Var V(s) = sum_a pi(a|s)^2 Var Q(s, a)`.
pub fn evaluate_uncertain<T: Real>(
    model: &Mdp<T>,
    trans_var: &TransitionVariance<T>,
    policy: &TabularPolicy<T>,
    nu: T,
    tol: T,
    warm: Option<&UncertainValueTable<T>>,
) -> Result<UncertainValueTable<T>> {
    policy.validate_for(model.shape())?;
    let n = model.num_states();
    let (mut v, mut var_v) = match warm {
        Some(w) if w.v.len() == n => (w.v.clone(), w.var_v.clone()),
        _ => (vec![T::zero(); n], vec![T::zero(); n]),
    };
    let g = model.discount();
    let stop = if g > T::zero() {
        tol * (T::one() - g) / g
    } else {
        T::infinity()
    };
    let mix = policy_support(model, policy);
    let mut converged = false;
    let mut residual = T::zero();
    for _ in 0..MAX_SWEEPS {
        residual = T::zero();
        for s in 0..n {
            let (mut vs, mut var_s) = (T::zero(), T::zero());
            for &(a, pa) in &mix[s] {
                let (qa, va) = pair_step(model, trans_var, &v, &var_v, s, a);
                vs += pa * qa;
                var_s += pa * pa * va;
            }
            residual = residual
                .max((vs - v[s]).abs())
                .max((var_s - var_v[s]).abs());
            v[s] = vs;
            var_v[s] = var_s;
        }
        if residual <= stop {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            solver: "uncertainty propagation",
            iterations: MAX_SWEEPS,
            residual: residual.as_f64(),
        });
    }
    let (q, var_q) = duipi_variance_step(model, trans_var, &v, &var_v);
    let u = q
        .iter()
        .zip(&var_q)
        .map(|(&q, &vq)| q - nu * vq.sqrt())
        .collect();
    Ok(UncertainValueTable {
        num_actions: model.num_actions(),
        q,
        var_q,
        v,
        var_v,
        u,
    })
}

/// Moves `policy` at `s` towards `best` by the step `1/t`.
fn step_towards<T: Real>(row: &mut [T], best: usize, t: usize) {
    let p = row[best];
    if p >= T::one() {
        return;
    }
    let inc = T::one() / T::of(t as f64);
    let scale = (T::one() - p - inc).max(T::zero()) / (T::one() - p);
    for (a, x) in row.iter_mut().enumerate() {
        *x = if a == best {
            (p + inc).min(T::one())
        } else {
            *x * scale
        };
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DuipiOutcome<T> {
    pub policy: TabularPolicy<T>,
    /// Evaluation of the last policy before the final update.
    pub values: UncertainValueTable<T>,
}

/// Runs `rounds` updates starting from `baseline`. With a shield, blocked
/// actions get the lowest finite penalised value so they are never chosen;
/// the baseline should already be shielded.
pub fn duipi<T: Real>(
    model: &Mdp<T>,
    trans_var: &TransitionVariance<T>,
    baseline: &TabularPolicy<T>,
    nu: T,
    rounds: usize,
    shield: Option<&Shield<T>>,
    tol: T,
) -> Result<DuipiOutcome<T>> {
    if !(nu >= T::zero()) {
        return Err(invalid(format!("nu must be nonnegative, got {nu}")));
    }
    if rounds == 0 {
        return Err(invalid("DUIPI needs at least one round"));
    }
    if let Some(sh) = shield {
        if sh.num_states() != model.num_states() || sh.num_actions() != model.num_actions() {
            return Err(invalid("shield and model dimensions differ"));
        }
    }
    let shape = model.shape();
    let mut policy = baseline.clone();
    let mut values: Option<UncertainValueTable<T>> = None;
    for t in 1..=rounds {
        let table = evaluate_uncertain(model, trans_var, &policy, nu, tol, values.as_ref())?;
        for s in 0..model.num_states() {
            let score = |a: usize| match shield {
                Some(sh) if !sh.is_allowed(s, a) => T::min_value(),
                _ => table.u(s, a),
            };
            let best =
                argmax_by(shape.available(s).iter().copied(), score).expect("non-empty A(s)");
            step_towards(policy.row_mut(s), best, t);
        }
        values = Some(table);
    }
    Ok(DuipiOutcome {
        policy,
        values: values.expect("rounds >= 1"),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DuipiConfig<T> {
    /// Dirichlet prior for the point estimate and its variance.
    pub alpha: T,
    pub nu: T,
    pub rounds: usize,
    pub shield: Option<ShieldConfig<T>>,
    pub tol: T,
}

#[derive(Clone, Debug)]
pub struct DuipiRun<T> {
    pub policy: TabularPolicy<T>,
    pub shield: Option<Shield<T>>,
}

/// DUIPI on a dataset; `reference` supplies the known structure.
pub fn run_duipi<T: Real>(
    dataset: &Dataset,
    reference: &Mdp<T>,
    config: &DuipiConfig<T>,
) -> Result<DuipiRun<T>> {
    let counts = count(dataset, reference.shape())?;
    let shield = match &config.shield {
        Some(sc) => {
            Some(synthesize_shield(&counts, reference.shape(), &reference.graph(), sc)?.shield)
        }
        None => None,
    };
    let baseline = estimate_baseline(&counts, reference.shape())?;
    let out = duipi_with_counts(&counts, &baseline, shield.as_ref(), reference, config)?;
    Ok(DuipiRun {
        policy: out.policy,
        shield,
    })
}

/// DUIPI from precomputed counts, baseline and optional shield. The point
/// model is the MAP estimate; the baseline is shielded here when a shield is
/// given. `config.shield` is ignored.
pub fn duipi_with_counts<T: Real>(
    counts: &CountTable,
    baseline: &TabularPolicy<T>,
    shield: Option<&Shield<T>>,
    reference: &Mdp<T>,
    config: &DuipiConfig<T>,
) -> Result<DuipiOutcome<T>> {
    let graph = reference.graph();
    let model = map_model(counts, &graph, config.alpha)?.to_mdp(reference)?;
    let var = dirichlet_transition_variance(counts, &graph, config.alpha)?;
    let start = match shield {
        Some(sh) => shield_baseline(baseline, sh)?,
        None => baseline.clone(),
    };
    duipi(
        &model,
        &var,
        &start,
        config.nu,
        config.rounds,
        shield,
        config.tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::MdpBuilder;

    #[test]
    fn uniform_beta_variance() {
        let graph = Graph::new(1, 1, vec![vec![0]]).unwrap();
        let two = Graph::new(2, 1, vec![vec![0, 1], vec![1]]).unwrap();
        let v = dirichlet_transition_variance::<f64>(&CountTable::zeros(2, 1), &two, 1.0).unwrap();
        assert!((v.var(0, 0, 0) - 1.0 / 12.0).abs() < 1e-15);
        assert!((v.var(0, 0, 1) - 1.0 / 12.0).abs() < 1e-15);
        let single =
            dirichlet_transition_variance::<f64>(&CountTable::zeros(1, 1), &graph, 1.0).unwrap();
        assert_eq!(single.var(0, 0, 0), 0.0);
    }

    #[test]
    fn first_update_is_greedy() {
        let mut row: Vec<f64> = vec![0.25, 0.25, 0.25, 0.25];
        step_towards(&mut row, 2, 1);
        assert_eq!(row, vec![0.0, 0.0, 1.0, 0.0]);
        let mut row: Vec<f64> = vec![0.5, 0.5];
        step_towards(&mut row, 0, 4);
        assert!((row[0] - 0.75).abs() < 1e-15 && (row[1] - 0.25).abs() < 1e-15);
        let mut done = vec![0.0, 1.0];
        step_towards(&mut done, 1, 3);
        assert_eq!(done, vec![0.0, 1.0]);
    }

    #[test]
    fn single_successor_variance() {
        let mut b = MdpBuilder::<f64>::new(2, 1, 0.95, 0);
        b.transition(0, 0, 1, 1.0).transition(1, 0, 1, 1.0);
        let mdp = b.build().unwrap();
        let tv = TransitionVariance {
            num_actions: 1,
            rows: vec![vec![(1, 0.01)], vec![(1, 0.0)]],
        };
        let (q, var_q) = duipi_variance_step(&mdp, &tv, &[0.0, 1.0], &[0.0, 0.2]);
        assert!((q[0] - 0.95).abs() < 1e-15);
        assert!((var_q[0] - (0.95f64.powi(2) * 0.2 + 0.95f64.powi(2) * 0.01)).abs() < 1e-15);
    }
}

//! θ-shields: per-state sets of actions whose robust reach-avoid probability
//! exceeds `1 - theta`, with a κ-band fallback where no action qualifies.

use std::fmt::Write as _;

use crate::data::{map_model, CountTable};
use crate::error::{invalid, Result};
use crate::imdp::{build_imdp, robust_reach_avoid, IntervalMdp, RobustReachAvoidTable};
use crate::mdp::{Graph, Mdp, ModelShape, ReachAvoidTable, TabularPolicy};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Shield<T> {
    num_actions: usize,
    allowed: Vec<Vec<usize>>,
    scores: Vec<T>,
    theta: T,
    kappa: T,
    relaxed: Vec<usize>,
}

impl<T: Real> Shield<T> {
    pub fn num_states(&self) -> usize {
        self.allowed.len()
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// Allowed actions at `s`, ascending.
    #[inline]
    pub fn allowed(&self, s: usize) -> &[usize] {
        &self.allowed[s]
    }

    #[inline]
    pub fn is_allowed(&self, s: usize, a: usize) -> bool {
        self.allowed[s].binary_search(&a).is_ok()
    }

    /// Robust reach-avoid score the shield was built from.
    #[inline]
    pub fn score(&self, s: usize, a: usize) -> T {
        self.scores[s * self.num_actions + a]
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    /// States where no action cleared the threshold.
    pub fn relaxed_states(&self) -> &[usize] {
        &self.relaxed
    }

    pub fn is_relaxed(&self, s: usize) -> bool {
        self.relaxed.binary_search(&s).is_ok()
    }

    pub fn allowed_sets(&self) -> &[Vec<usize>] {
        &self.allowed
    }

    /// `# theta=.. kappa=.. relaxed=..` followed by one `s: a1 a2 ...` line per state.
    pub fn to_dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# theta={} kappa={} relaxed={}",
            self.theta,
            self.kappa,
            self.relaxed.len()
        );
        for (s, acts) in self.allowed.iter().enumerate() {
            let _ = write!(out, "{s}:");
            for a in acts {
                let _ = write!(out, " {a}");
            }
            out.push('\n');
        }
        out
    }
}

/// Thresholds robust scores into a shield.
///
/// On unlabelled states, `a` is allowed iff `Q(s, a) > 1 - theta`; if no
/// action qualifies, the state is relaxed and every action with
/// `Q(s, a) >= max Q(s, .) - kappa` is allowed. Target and unsafe states end
/// the episode, so all their actions are allowed.
pub fn build_shield<T: Real>(
    scores: &ReachAvoidTable<T>,
    theta: T,
    kappa: T,
    shape: &ModelShape,
) -> Result<Shield<T>> {
    if !(theta >= T::zero() && theta <= T::one()) {
        return Err(invalid(format!("theta must lie in [0, 1], got {theta}")));
    }
    if !(kappa >= T::zero() && kappa <= T::one()) {
        return Err(invalid(format!("kappa must lie in [0, 1], got {kappa}")));
    }
    if scores.values().len() != shape.num_states() || scores.num_actions() != shape.num_actions() {
        return Err(invalid("score table does not match the model shape"));
    }
    let threshold = T::one() - theta;
    let mut table = vec![T::zero(); shape.num_pairs()];
    let mut allowed = Vec::with_capacity(shape.num_states());
    let mut relaxed = Vec::new();
    for s in 0..shape.num_states() {
        let avail = shape.available(s);
        for &a in avail {
            table[shape.pair(s, a)] = scores.q(s, a);
        }
        if shape.is_labelled(s) {
            allowed.push(avail.to_vec());
            continue;
        }
        let safe: Vec<usize> = avail
            .iter()
            .copied()
            .filter(|&a| scores.q(s, a) > threshold)
            .collect();
        if !safe.is_empty() {
            allowed.push(safe);
            continue;
        }
        let best = avail
            .iter()
            .map(|&a| scores.q(s, a))
            .fold(T::neg_infinity(), T::max);
        allowed.push(
            avail
                .iter()
                .copied()
                .filter(|&a| scores.q(s, a) >= best - kappa)
                .collect(),
        );
        relaxed.push(s);
    }
    Ok(Shield {
        num_actions: shape.num_actions(),
        allowed,
        scores: table,
        theta,
        kappa,
        relaxed,
    })
}

fn check_policy<T: Real>(policy: &TabularPolicy<T>, shield: &Shield<T>) -> Result<()> {
    if policy.num_states() != shield.num_states() || policy.num_actions() != shield.num_actions() {
        return Err(invalid("policy and shield dimensions differ"));
    }
    Ok(())
}

/// True iff every action in the policy's support is allowed by the shield.
pub fn is_theta_safe_policy<T: Real>(policy: &TabularPolicy<T>, shield: &Shield<T>) -> bool {
    check_policy(policy, shield).is_ok()
        && (0..shield.num_states()).all(|s| {
            policy
                .row(s)
                .iter()
                .enumerate()
                .all(|(a, &p)| p == T::zero() || shield.is_allowed(s, a))
        })
}

/// Moves the probability of disallowed actions equally onto allowed ones.
pub fn shield_baseline<T: Real>(
    baseline: &TabularPolicy<T>,
    shield: &Shield<T>,
) -> Result<TabularPolicy<T>> {
    check_policy(baseline, shield)?;
    let m = shield.num_actions();
    let mut probs = Vec::with_capacity(shield.num_states() * m);
    for s in 0..shield.num_states() {
        let row = baseline.row(s);
        let allowed = shield.allowed(s);
        let blocked: T = (0..m)
            .filter(|&a| !shield.is_allowed(s, a))
            .map(|a| row[a])
            .sum();
        let share = blocked / T::of(allowed.len() as f64);
        for a in 0..m {
            probs.push(if shield.is_allowed(s, a) {
                if blocked == T::zero() {
                    row[a]
                } else {
                    row[a] + share
                }
            } else {
                T::zero()
            });
        }
    }
    TabularPolicy::new(shield.num_states(), m, probs)
}

/// The MDP restricted to shield-allowed actions.
pub fn shield_mdp<T: Real>(mdp: &Mdp<T>, shield: &Shield<T>) -> Result<Mdp<T>> {
    if mdp.num_states() != shield.num_states() || mdp.num_actions() != shield.num_actions() {
        return Err(invalid("MDP and shield dimensions differ"));
    }
    mdp.restrict_actions(shield.allowed_sets())
}

/// Parameters of the data-driven shield pipeline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShieldConfig<T> {
    /// Dirichlet prior for the MAP point estimate; must exceed one.
    pub alpha: T,
    /// Total confidence budget `delta_I`.
    pub delta: T,
    /// Lower bound on every interval.
    pub xi: T,
    pub theta: T,
    pub kappa: T,
}

/// Intermediate products of [`synthesize_shield`].
#[derive(Clone, Debug)]
pub struct ShieldSynthesis<T> {
    pub imdp: IntervalMdp<T>,
    pub scores: RobustReachAvoidTable<T>,
    pub shield: Shield<T>,
}

/// MAP estimate, PAC interval model, robust reach-avoid scores, shield.
pub fn synthesize_shield<T: Real>(
    counts: &CountTable,
    shape: &ModelShape,
    graph: &Graph,
    config: &ShieldConfig<T>,
) -> Result<ShieldSynthesis<T>> {
    let point = map_model(counts, graph, config.alpha)?;
    let imdp = build_imdp(counts, &point, shape, graph, config.delta, config.xi)?;
    let scores = robust_reach_avoid(&imdp)?;
    let shield = build_shield(scores.table(), config.theta, config.kappa, shape)?;
    Ok(ShieldSynthesis {
        imdp,
        scores,
        shield,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::StateLabel;

    fn table(rows: &[&[f64]]) -> (ReachAvoidTable<f64>, ModelShape) {
        let m = rows.iter().map(|r| r.len()).max().unwrap();
        let n = rows.len();
        let available = rows.iter().map(|r| (0..r.len()).collect()).collect();
        let shape = ModelShape::new(n, m, 0, available, vec![StateLabel::Plain; n]).unwrap();
        let mut q = vec![0.0; n * m];
        let mut v = vec![0.0; n];
        for (s, r) in rows.iter().enumerate() {
            for (a, &x) in r.iter().enumerate() {
                q[s * m + a] = x;
                v[s] = f64::max(v[s], x);
            }
        }
        (ReachAvoidTable::new(m, v, q), shape)
    }

    #[test]
    fn strict_threshold() {
        let (t, shape) = table(&[&[0.9, 0.2], &[0.8, 0.81]]);
        let shield = build_shield(&t, 0.2, 0.05, &shape).unwrap();
        assert_eq!(shield.allowed(0), &[0]);
        assert_eq!(shield.allowed(1), &[1]);
        assert!(shield.relaxed_states().is_empty());
    }

    #[test]
    fn kappa_band_when_nothing_is_safe() {
        let (t, shape) = table(&[&[0.5, 0.45, 0.1]]);
        let shield = build_shield(&t, 0.2, 0.05, &shape).unwrap();
        assert_eq!(shield.allowed(0), &[0, 1]);
        assert_eq!(shield.relaxed_states(), &[0]);
        let tight = build_shield(&t, 0.2, 0.0, &shape).unwrap();
        assert_eq!(tight.allowed(0), &[0]);
    }

    #[test]
    fn theta_one_excludes_zero_scores() {
        let (t, shape) = table(&[&[0.0, 0.3]]);
        let shield = build_shield(&t, 1.0, 0.0, &shape).unwrap();
        assert_eq!(shield.allowed(0), &[1]);
    }

    #[test]
    fn baseline_mass_is_redistributed() {
        let (t, shape) = table(&[&[0.9, 0.9, 0.1]]);
        let shield = build_shield(&t, 0.2, 0.0, &shape).unwrap();
        let base = TabularPolicy::new(1, 3, vec![0.7, 0.2, 0.1]).unwrap();
        let shielded = shield_baseline(&base, &shield).unwrap();
        assert!((shielded.prob(0, 0) - 0.75).abs() < 1e-15);
        assert!((shielded.prob(0, 1) - 0.25).abs() < 1e-15);
        assert_eq!(shielded.prob(0, 2), 0.0);
        assert!(is_theta_safe_policy(&shielded, &shield));
        assert!(!is_theta_safe_policy(&base, &shield));
        assert_eq!(shield_baseline(&shielded, &shield).unwrap(), shielded);
    }

    #[test]
    fn dump_format() {
        let (t, shape) = table(&[&[0.9, 0.2], &[0.5, 0.45]]);
        let shield = build_shield(&t, 0.2, 0.1, &shape).unwrap();
        assert_eq!(
            shield.to_dump(),
            "# theta=0.2 kappa=0.1 relaxed=1\n0: 0\n1: 0 1\n"
        );
    }
}

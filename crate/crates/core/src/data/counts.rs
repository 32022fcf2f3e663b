use crate::data::Dataset;
use crate::error::{invalid, Result};
use crate::mdp::ModelShape;

/// Occurrence counts `N(s,a)` and `N(s,a,s')`.
///
/// Successor counts are stored sparsely per pair, sorted by successor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountTable {
    num_states: usize,
    num_actions: usize,
    n_sa: Vec<u64>,
    n_sas: Vec<Vec<(usize, u64)>>,
}

impl CountTable {
    pub fn zeros(num_states: usize, num_actions: usize) -> Self {
        Self {
            num_states,
            num_actions,
            n_sa: vec![0; num_states * num_actions],
            n_sas: vec![Vec::new(); num_states * num_actions],
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn add(&mut self, s: usize, a: usize, t: usize, n: u64) {
        let idx = s * self.num_actions + a;
        self.n_sa[idx] += n;
        let row = &mut self.n_sas[idx];
        match row.binary_search_by_key(&t, |&(x, _)| x) {
            Ok(i) => row[i].1 += n,
            Err(i) => row.insert(i, (t, n)),
        }
    }

    #[inline]
    pub fn n_sa(&self, s: usize, a: usize) -> u64 {
        self.n_sa[s * self.num_actions + a]
    }

    pub fn n_sas(&self, s: usize, a: usize, t: usize) -> u64 {
        let row = self.successors(s, a);
        row.binary_search_by_key(&t, |&(x, _)| x)
            .map_or(0, |i| row[i].1)
    }

    /// Observed successors of `(s, a)` with their counts.
    #[inline]
    pub fn successors(&self, s: usize, a: usize) -> &[(usize, u64)] {
        &self.n_sas[s * self.num_actions + a]
    }

    /// Visits of `s` summed over actions.
    pub fn n_s(&self, s: usize) -> u64 {
        self.n_sa[s * self.num_actions..(s + 1) * self.num_actions]
            .iter()
            .sum()
    }

    pub fn total(&self) -> u64 {
        self.n_sa.iter().sum()
    }

    /// Element-wise sum of two tables of equal dimensions.
    pub fn merge(&self, other: &CountTable) -> Result<CountTable> {
        if self.num_states != other.num_states || self.num_actions != other.num_actions {
            return Err(invalid("count tables have different dimensions"));
        }
        let mut out = self.clone();
        for s in 0..other.num_states {
            for a in 0..other.num_actions {
                for &(t, n) in other.successors(s, a) {
                    out.add(s, a, t, n);
                }
            }
        }
        Ok(out)
    }
}

/// Counts every `(s, a, s')` triple in `dataset`, rejecting actions that are
/// not available in `shape`.
pub fn count(dataset: &Dataset, shape: &ModelShape) -> Result<CountTable> {
    let mut table = CountTable::zeros(shape.num_states(), shape.num_actions());
    for (s, a, t) in dataset.transitions() {
        shape.check_state(s)?;
        shape.check_state(t)?;
        if !shape.is_available(s, a) {
            return Err(invalid(format!(
                "dataset uses unavailable action {a} at state {s}"
            )));
        }
        table.add(s, a, t, 1);
    }
    Ok(table)
}

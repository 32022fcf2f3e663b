//! Aggregation of run records.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::config::Method;
use crate::sweep::RunRecord;

/// Fraction of worst runs averaged by the reported CVaR.
pub const CVAR_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("cvar of an empty list")]
    Empty,
    #[error("cvar fraction must lie in (0, 1], got {0}")]
    Fraction(f64),
}

/// Mean of the lowest `ceil(fraction * n)` values.
pub fn cvar(values: &[f64], fraction: f64) -> Result<f64, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(StatsError::Fraction(fraction));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    // Guard against 0.01 * 1000 rounding up to 11.
    let k = ((fraction * sorted.len() as f64) - 1e-9).ceil().max(1.0) as usize;
    let k = k.min(sorted.len());
    Ok(sorted[..k].iter().sum::<f64>() / k as f64)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// `1.96 * s / sqrt(n)` with the unbiased sample deviation; zero for a
/// single value.
pub fn ci95_halfwidth(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    let var = values.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
    1.96 * (var / n as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aggregate {
    pub method: Method,
    pub size: usize,
    pub count: usize,
    pub mean: f64,
    pub cvar_1pct: f64,
    pub ci95_halfwidth: f64,
    /// Share of theta-safe policies among records that had a shield.
    pub safe_fraction: Option<f64>,
}

/// One entry per `(method, size)`, ordered by method then size. Values are
/// sorted before summation so the result does not depend on record order.
pub fn aggregate(records: &[RunRecord]) -> Vec<Aggregate> {
    let mut groups: BTreeMap<(Method, usize), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.method, r.size)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((method, size), rs)| {
            let mut values: Vec<f64> = rs.iter().map(|r| r.performance).collect();
            values.sort_by(f64::total_cmp);
            let flags: Vec<bool> = rs.iter().filter_map(|r| r.theta_safe).collect();
            let safe_fraction = (!flags.is_empty())
                .then(|| flags.iter().filter(|&&b| b).count() as f64 / flags.len() as f64);
            Aggregate {
                method,
                size,
                count: values.len(),
                mean: mean(&values),
                cvar_1pct: cvar(&values, CVAR_FRACTION).expect("groups are nonempty"),
                ci95_halfwidth: ci95_halfwidth(&values),
                safe_fraction,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(method: Method, size: usize, run: usize, performance: f64) -> RunRecord {
        RunRecord {
            method,
            size,
            run,
            performance,
            theta_safe: None,
            relaxed_states: 0,
            seconds: 0.0,
        }
    }

    #[test]
    fn cvar_basics() {
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(cvar(&v, 0.01).unwrap(), 5.5);
        assert_eq!(cvar(&v, 1.0).unwrap(), 500.5);
        assert_eq!(cvar(&[3.0; 7], 0.3).unwrap(), 3.0);
        assert_eq!(cvar(&[], 0.5), Err(StatsError::Empty));
        assert!(cvar(&[1.0], 0.0).is_err());
    }

    #[test]
    fn aggregate_single_and_symmetric() {
        let a = aggregate(&[rec(Method::Spibb, 10, 0, 2.5)]);
        assert_eq!((a[0].mean, a[0].ci95_halfwidth), (2.5, 0.0));
        let b = aggregate(&[
            rec(Method::Spibb, 10, 0, 1.0),
            rec(Method::Spibb, 10, 1, 3.0),
        ]);
        // sample sd sqrt(2), stderr 1
        assert_eq!(b[0].mean, 2.0);
        assert!((b[0].ci95_halfwidth - 1.96).abs() < 1e-12);
    }
}

use crate::error::{invalid, Result};
use crate::imdp::Interval;
use crate::scalar::Real;

/// Fills `out` with the minimising distribution of one interval row:
/// every successor starts at its lower bound and the remaining mass goes to
/// successors in ascending order of value, ties broken by position.
/// Returns the mass that could not be placed.
pub(crate) fn pour<T: Real>(
    row: &[Interval<T>],
    value: impl Fn(usize) -> T,
    order: &mut Vec<usize>,
    out: &mut Vec<T>,
) -> T {
    order.clear();
    order.extend(0..row.len());
    order.sort_by(|&i, &j| {
        value(row[i].successor)
            .partial_cmp(&value(row[j].successor))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    out.clear();
    out.extend(row.iter().map(|iv| iv.lower));
    let mut budget = T::one() - out.iter().copied().sum::<T>();
    for &k in order.iter() {
        if budget <= T::zero() {
            break;
        }
        let add = (row[k].upper - row[k].lower).min(budget);
        out[k] += add;
        budget -= add;
    }
    budget.max(T::zero())
}

/// Distribution in `{p : lowers <= p <= uppers, sum p = 1}` minimising
/// `sum p * values`.
pub fn worst_case_distribution<T: Real>(
    lowers: &[T],
    uppers: &[T],
    values: &[T],
) -> Result<Vec<T>> {
    if lowers.len() != uppers.len() || lowers.len() != values.len() {
        return Err(invalid("bounds and values must have equal length"));
    }
    if lowers.is_empty() {
        return Err(invalid("empty interval row"));
    }
    if lowers
        .iter()
        .zip(uppers)
        .any(|(&l, &u)| !(l >= T::zero() && l <= u))
    {
        return Err(invalid("each interval needs 0 <= lower <= upper"));
    }
    let slack = T::stochastic_tol();
    let lo: T = lowers.iter().copied().sum();
    let up: T = uppers.iter().copied().sum();
    if lo > T::one() + slack || up < T::one() - slack {
        return Err(invalid(format!(
            "bounds sum to [{lo}, {up}], which excludes 1"
        )));
    }
    let row: Vec<Interval<T>> = lowers
        .iter()
        .zip(uppers)
        .enumerate()
        .map(|(k, (&lower, &upper))| Interval {
            successor: k,
            lower,
            upper,
        })
        .collect();
    let mut out = Vec::new();
    pour(&row, |k| values[k], &mut Vec::new(), &mut out);
    Ok(out)
}

/// Minimum of `sum p * values` over the interval row, i.e. the expected
/// value under [`worst_case_distribution`].
pub fn worst_case_value<T: Real>(lowers: &[T], uppers: &[T], values: &[T]) -> Result<T> {
    let p = worst_case_distribution(lowers, uppers, values)?;
    Ok(p.iter().zip(values).map(|(&p, &v)| p * v).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pours_into_low_values_first() {
        let p: Vec<f64> =
            worst_case_distribution(&[0.1, 0.2, 0.1], &[0.6, 0.5, 0.3], &[1.0, 0.0, 0.5]).unwrap();
        assert_eq!(p.len(), 3);
        assert!((p[1] - 0.5).abs() < 1e-15);
        assert!((p[2] - 0.3).abs() < 1e-15);
        assert!((p[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn equal_values_fill_by_index() {
        let p: Vec<f64> =
            worst_case_distribution(&[0.1, 0.1, 0.1], &[0.5, 0.5, 0.5], &[0.3, 0.3, 0.3]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15);
        assert!((p[1] - 0.4).abs() < 1e-15);
        assert!((p[2] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn rejects_infeasible_rows() {
        assert!(worst_case_distribution(&[0.6, 0.6], &[0.7, 0.7], &[0.0, 1.0]).is_err());
        assert!(worst_case_distribution(&[0.1, 0.1], &[0.3, 0.3], &[0.0, 1.0]).is_err());
        assert!(worst_case_distribution(&[0.1], &[0.3, 0.3], &[0.0]).is_err());
    }
}

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point scalar used throughout the crate: `f32` or `f64`.
///
/// Precision-dependent tolerances live here so that solvers pick sensible
/// defaults for the type they are instantiated with.
pub trait Real:
    Float + FromPrimitive + NumAssign + Sum<Self> + Default + Debug + Display + Send + Sync + 'static
{
    /// Slack allowed on the row sum of a probability vector.
    fn stochastic_tol() -> Self;

    /// Default sup-norm stopping tolerance for fixed-point solvers.
    fn solver_tol() -> Self;

    /// Lossy conversion from an `f64` literal or computed constant.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Real type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real values convert to f64")
    }
}

impl Real for f64 {
    fn stochastic_tol() -> Self {
        1e-9
    }

    fn solver_tol() -> Self {
        1e-8
    }
}

impl Real for f32 {
    fn stochastic_tol() -> Self {
        1e-5
    }

    fn solver_tol() -> Self {
        1e-5
    }
}

/// Index of the largest entry among `candidates`, lowest index on ties.
pub(crate) fn argmax_by<T: Real>(
    candidates: impl IntoIterator<Item = usize>,
    mut value: impl FnMut(usize) -> T,
) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for a in candidates {
        let v = value(a);
        match best {
            Some((_, bv)) if !(v > bv) => {}
            _ => best = Some((a, v)),
        }
    }
    best.map(|(a, _)| a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_prefers_lowest_index() {
        let vals = [1.0, 3.0, 3.0, 2.0];
        assert_eq!(argmax_by(0..4, |a| vals[a]), Some(1));
        assert_eq!(argmax_by(std::iter::empty(), |a| vals[a]), None);
    }

    #[test]
    fn conversions_round_trip() {
        assert_eq!(f32::of(0.5), 0.5f32);
        assert_eq!(0.25f64.as_f64(), 0.25);
    }
}

use crate::envs::Benchmark;
use crate::error::Result;
use crate::mdp::{MdpBuilder, TabularPolicy};
use crate::scalar::Real;

const WIDTH: usize = 5;
/// `(a_x, a_y)` for drift, hold, paddle back, right, left.
const ACTIONS: [(f64, i64); 5] = [(0.0, 0), (-1.0, 0), (-2.0, 0), (0.0, 1), (0.0, -1)];

#[derive(Clone, Debug, PartialEq)]
pub struct WetChickenParams {
    pub fall_reward: f64,
    pub discount: f64,
    /// Route falls through an extra unsafe waterfall state (26 states) that
    /// leads back to `(0, 0)`. Without it the fall resets within the same
    /// step and no state is unsafe (25 states).
    pub waterfall_state: bool,
}

impl Default for WetChickenParams {
    fn default() -> Self {
        Self {
            fall_reward: -30.0,
            discount: 0.95,
            waterfall_state: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WetChickenOutcome {
    Cell(usize),
    Fall,
}

/// Range of turbulence `tau` (and the matching unrounded position) that
/// rounds to one outcome.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftBin {
    pub tau_lo: f64,
    pub tau_hi: f64,
    pub pre_lo: f64,
    pub pre_hi: f64,
    pub outcome: WetChickenOutcome,
}

impl DriftBin {
    /// `tau` is uniform on `[-1, 1]`.
    pub fn prob(&self) -> f64 {
        (self.tau_hi - self.tau_lo) / 2.0
    }
}

/// River of 5 x 5 cells; `x` grows towards the waterfall, `y` across the
/// stream. Next position is `round(x + a_x + v + tau b)`, `y + a_y` with
/// `v = 3y/5`, `b = 3.5 - v`; `x' < 0` clamps to 0 and `x' >= 5` is a fall.
#[derive(Clone, Debug, PartialEq)]
pub struct WetChicken {
    params: WetChickenParams,
}

impl WetChicken {
    pub fn new(params: WetChickenParams) -> Self {
        Self { params }
    }

    pub fn num_states(&self) -> usize {
        WIDTH * WIDTH + usize::from(self.params.waterfall_state)
    }

    #[inline]
    pub fn state(x: usize, y: usize) -> usize {
        y * WIDTH + x
    }

    pub fn stream(y: usize) -> f64 {
        y as f64 * 3.0 / 5.0
    }

    pub fn turbulence(y: usize) -> f64 {
        3.5 - Self::stream(y)
    }

    /// Partition of `tau in [-1, 1]` by rounded outcome for `(x, y)` under
    /// action `a`, ordered by increasing `tau`.
    pub fn bins(x: usize, y: usize, a: usize) -> Vec<DriftBin> {
        let v = Self::stream(y);
        let b = Self::turbulence(y);
        let centre = x as f64 + ACTIONS[a].0 + v;
        let (lo, hi) = (centre - b, centre + b);
        let mut cuts = vec![lo];
        for k in 0..WIDTH {
            let edge = k as f64 + 0.5;
            if edge > lo && edge < hi {
                cuts.push(edge);
            }
        }
        cuts.push(hi);
        cuts.windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let outcome = if mid >= WIDTH as f64 - 0.5 {
                    WetChickenOutcome::Fall
                } else {
                    WetChickenOutcome::Cell(mid.round().max(0.0) as usize)
                };
                DriftBin {
                    tau_lo: (w[0] - centre) / b,
                    tau_hi: (w[1] - centre) / b,
                    pre_lo: w[0],
                    pre_hi: w[1],
                    outcome,
                }
            })
            .collect()
    }

    pub fn build<T: Real>(&self) -> Result<Benchmark<T>> {
        let n = self.num_states();
        let m = ACTIONS.len();
        let waterfall = self.params.waterfall_state.then_some(WIDTH * WIDTH);
        let mut b = MdpBuilder::new(n, m, T::of(self.params.discount), Self::state(0, 0));
        let mut heuristic = vec![T::zero(); n * m];
        for y in 0..WIDTH {
            for x in 0..WIDTH {
                let s = Self::state(x, y);
                for (a, &(_, dy)) in ACTIONS.iter().enumerate() {
                    let ny = (y as i64 + dy).clamp(0, WIDTH as i64 - 1) as usize;
                    let mut reward = 0.0;
                    for bin in Self::bins(x, y, a) {
                        let p = bin.prob();
                        if p <= 0.0 {
                            continue;
                        }
                        let t = match bin.outcome {
                            WetChickenOutcome::Cell(nx) => {
                                reward += p * nx as f64;
                                Self::state(nx, ny)
                            }
                            WetChickenOutcome::Fall => {
                                reward += p * self.params.fall_reward;
                                waterfall.unwrap_or(Self::state(0, 0))
                            }
                        };
                        b.transition(s, a, t, T::of(p));
                    }
                    b.reward(s, a, T::of(reward));
                }
                let act = match x {
                    0..=2 => 0,
                    3 => 1,
                    _ => 2,
                };
                heuristic[s * m + act] = T::one();
                if x == WIDTH - 1 {
                    b.target(s);
                }
            }
        }
        if let Some(w) = waterfall {
            b.transition(w, 0, Self::state(0, 0), T::one())
                .unsafe_state(w);
            heuristic[w * m] = T::one();
        }
        let mdp = b.build()?;
        let heuristic = TabularPolicy::new(n, m, heuristic)?;
        Benchmark::new("wetchicken", mdp, heuristic, false)
    }
}

pub fn wet_chicken<T: Real>(params: &WetChickenParams) -> Result<Benchmark<T>> {
    WetChicken::new(params.clone()).build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calm_bank_has_full_turbulence() {
        assert_eq!(WetChicken::stream(0), 0.0);
        assert_eq!(WetChicken::turbulence(0), 3.5);
        // Drift at (0, 0): pre-round position uniform on [-3.5, 3.5].
        let bins = WetChicken::bins(0, 0, 0);
        let p0: f64 = bins
            .iter()
            .filter(|b| b.outcome == WetChickenOutcome::Cell(0))
            .map(DriftBin::prob)
            .sum();
        assert!((p0 - 4.0 / 7.0).abs() < 1e-12);
        assert!(bins.iter().all(|b| b.outcome != WetChickenOutcome::Fall));
    }

    #[test]
    fn sizes() {
        let bench = wet_chicken::<f64>(&WetChickenParams::default()).unwrap();
        assert_eq!(bench.mdp.num_states(), 26);
        assert_eq!(bench.mdp.num_actions(), 5);
        let small = wet_chicken::<f64>(&WetChickenParams {
            waterfall_state: false,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(small.mdp.num_states(), 25);
    }
}

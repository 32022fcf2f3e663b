use crate::envs::grid::{Cell, GridMap};
use crate::envs::Benchmark;
use crate::error::{invalid, Result};
use crate::mdp::{MdpBuilder, TabularPolicy};
use crate::scalar::Real;

pub const FROZEN_LAKE_8X8: &str = "\
SFFFFFFF
FFFFFFFF
FFFHFFFF
FFFFFHFF
FFFHFFFF
FHHFFFHF
FHFFHFHF
FFFHFFFG
";

/// Action order: left, down, right, up.
const MOVES: [(isize, isize); 4] = [(0, -1), (1, 0), (0, 1), (-1, 0)];
const DOWN: usize = 1;
const RIGHT: usize = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct FrozenLakeParams {
    pub map: String,
    /// Probability of moving in the intended direction; the rest is split
    /// equally between the two perpendicular directions.
    pub p_intended: f64,
    pub goal_reward: f64,
    pub hole_reward: f64,
    pub discount: f64,
}

impl Default for FrozenLakeParams {
    fn default() -> Self {
        Self {
            map: FROZEN_LAKE_8X8.to_string(),
            p_intended: 1.0 / 3.0,
            goal_reward: 1.0,
            hole_reward: -1.0,
            discount: 0.95,
        }
    }
}

/// Slippery grid world. Holes and the goal are absorbing; walls (`#`) and
/// the grid border bounce the agent back to its cell.
pub fn frozen_lake<T: Real>(params: &FrozenLakeParams) -> Result<Benchmark<T>> {
    let map = GridMap::parse(&params.map)?;
    if map.find(Cell::Ghost).next().is_some() {
        return Err(invalid("frozen lake maps cannot contain ghosts"));
    }
    if !(params.p_intended > 0.0 && params.p_intended <= 1.0) {
        return Err(invalid("p_intended must lie in (0, 1]"));
    }
    let n = map.num_cells();
    let mut b = MdpBuilder::new(n, 4, T::of(params.discount), map.start());
    let mut heuristic = vec![T::zero(); n * 4];
    let side = (1.0 - params.p_intended) / 2.0;
    for s in 0..n {
        match map.cell(s) {
            Cell::Hole | Cell::Goal | Cell::Wall => {
                b.transition(s, 0, s, T::one());
                heuristic[s * 4] = T::one();
                match map.cell(s) {
                    Cell::Hole => b.unsafe_state(s),
                    Cell::Goal => b.target(s),
                    _ => &mut b,
                };
                continue;
            }
            _ => {}
        }
        for a in 0..4 {
            let mut reward = 0.0;
            for (dir, p) in [
                ((a + 3) % 4, side),
                (a, params.p_intended),
                ((a + 1) % 4, side),
            ] {
                if p == 0.0 {
                    continue;
                }
                let (dr, dc) = MOVES[dir];
                let t = match map.step(s, dr, dc) {
                    Some(t) if map.cell(t) != Cell::Wall => t,
                    _ => s,
                };
                reward += p * match map.cell(t) {
                    Cell::Goal => params.goal_reward,
                    Cell::Hole => params.hole_reward,
                    _ => 0.0,
                };
                b.transition(s, a, t, T::of(p));
            }
            b.reward(s, a, T::of(reward));
        }
        heuristic[s * 4 + DOWN] = T::of(0.5);
        heuristic[s * 4 + RIGHT] = T::of(0.5);
    }
    let mdp = b.build()?;
    let heuristic = TabularPolicy::new(n, 4, heuristic)?;
    Benchmark::new("frozenlake", mdp, heuristic, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_map_shape() {
        let bench = frozen_lake::<f64>(&FrozenLakeParams::default()).unwrap();
        let mdp = &bench.mdp;
        assert_eq!(mdp.num_states(), 64);
        assert_eq!(mdp.num_actions(), 4);
        assert_eq!(mdp.shape().unsafe_states().count(), 10);
        assert_eq!(mdp.shape().target_states().collect::<Vec<_>>(), vec![63]);
        // Left from the corner: left and up bounce back, down slips.
        assert!((mdp.prob(0, 0, 0) - 2.0 / 3.0).abs() < 1e-12);
        assert!((mdp.prob(0, 0, 8) - 1.0 / 3.0).abs() < 1e-12);
        // Next to the goal: right may slip up into a hole, down may slip right.
        assert!(mdp.reward(62, 2).abs() < 1e-12);
        assert!((mdp.reward(62, 1) - 1.0 / 3.0).abs() < 1e-12);
    }
}

//! Benchmark MDPs with safety labels and heuristic behaviour policies.

mod frozen_lake;
mod grid;
mod pacman;
mod random;
mod wet_chicken;

pub use frozen_lake::{frozen_lake, FrozenLakeParams, FROZEN_LAKE_8X8};
pub use grid::{Cell, GridMap};
pub use pacman::{pacman, pacman_state_count, PacmanParams, PACMAN_5X5, PACMAN_7X7};
pub use random::{random_mdp, RandomMdpParams};
pub use wet_chicken::{wet_chicken, DriftBin, WetChicken, WetChickenOutcome, WetChickenParams};

use crate::error::Result;
use crate::mdp::{Graph, Mdp, TabularPolicy};
use crate::scalar::Real;

/// A true MDP together with the heuristic policy `pi^h` used to build
/// behaviour policies.
#[derive(Clone, Debug)]
pub struct Benchmark<T> {
    pub name: String,
    pub mdp: Mdp<T>,
    pub heuristic: TabularPolicy<T>,
    pub graph: Graph,
    /// Datasets are sampled as episodes that stop at labelled states.
    pub episodic: bool,
}

impl<T: Real> Benchmark<T> {
    pub(crate) fn new(
        name: &str,
        mdp: Mdp<T>,
        heuristic: TabularPolicy<T>,
        episodic: bool,
    ) -> Result<Self> {
        heuristic.validate_for(mdp.shape())?;
        let graph = mdp.graph();
        Ok(Self {
            name: name.to_string(),
            mdp,
            heuristic,
            graph,
            episodic,
        })
    }
}

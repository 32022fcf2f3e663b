//! Experiment configuration: embedded defaults, per-benchmark overrides and
//! validation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use shieldspi::envs::{
    frozen_lake, pacman, random_mdp, wet_chicken, Benchmark, FrozenLakeParams, PacmanParams,
    RandomMdpParams, WetChickenParams, FROZEN_LAKE_8X8,
};

/// Versioned defaults shipped with the binary.
pub const DEFAULTS_TOML: &str = include_str!("../config/defaults.toml");
pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported config version {0} (expected {CONFIG_VERSION})")]
    Version(u32),
    #[error("no value for `{0}`")]
    Missing(&'static str),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Optimal policy of the true MDP.
    Optimal,
    /// Baseline estimated from the dataset.
    Baseline,
    ShieldedBaseline,
    /// Unconstrained policy iteration on the MLE model.
    Basic,
    Spibb,
    SpibbShield,
    Duipi,
    DuipiShield,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Optimal,
        Method::Baseline,
        Method::ShieldedBaseline,
        Method::Basic,
        Method::Spibb,
        Method::SpibbShield,
        Method::Duipi,
        Method::DuipiShield,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Optimal => "optimal",
            Method::Baseline => "baseline",
            Method::ShieldedBaseline => "shielded_baseline",
            Method::Basic => "basic",
            Method::Spibb => "spibb",
            Method::SpibbShield => "spibb_shield",
            Method::Duipi => "duipi",
            Method::DuipiShield => "duipi_shield",
        }
    }

    pub fn uses_shield(self) -> bool {
        matches!(
            self,
            Method::ShieldedBaseline | Method::SpibbShield | Method::DuipiShield
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| ConfigError::Invalid(format!("unknown method {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    Random,
    WetChicken,
    FrozenLake,
    Pacman,
}

impl EnvKind {
    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Random => "random",
            EnvKind::WetChicken => "wetchicken",
            EnvKind::FrozenLake => "frozenlake",
            EnvKind::Pacman => "pacman",
        }
    }
}

impl FromStr for EnvKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(EnvKind::Random),
            "wetchicken" => Ok(EnvKind::WetChicken),
            "frozenlake" => Ok(EnvKind::FrozenLake),
            "pacman" => Ok(EnvKind::Pacman),
            other => Err(ConfigError::Invalid(format!(
                "unknown environment {other:?}"
            ))),
        }
    }
}

/// Every tunable, all optional so that layers can be merged.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Partial {
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub xi: Option<f64>,
    pub horizon: Option<usize>,
    pub duipi_rounds: Option<usize>,
    pub methods: Option<Vec<Method>>,
    pub sizes: Option<Vec<usize>>,
    pub nwedge: Option<u64>,
    pub theta: Option<f64>,
    pub kappa: Option<f64>,
    pub epsilon: Option<f64>,
    pub nu: Option<f64>,
    pub alpha: Option<f64>,
    pub states: Option<usize>,
    pub actions: Option<usize>,
    pub branching: Option<usize>,
    pub traps: Option<usize>,
    pub goal_reward: Option<f64>,
    pub trap_reward: Option<f64>,
    pub hole_reward: Option<f64>,
    pub eaten_reward: Option<f64>,
    pub fall_reward: Option<f64>,
    pub waterfall_state: Option<bool>,
    pub p_intended: Option<f64>,
    /// Map or maze text for grid benchmarks.
    pub map: Option<String>,
    pub grid: Option<usize>,
    pub ghosts: Option<usize>,
    pub timing: Option<bool>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),*) => {
        Partial { $($field: $top.$field.or($base.$field)),* }
    };
}

impl Partial {
    /// Fields set in `top` win.
    pub fn overlay(self, top: Partial) -> Partial {
        overlay!(
            self,
            top,
            runs,
            seed,
            gamma,
            delta,
            xi,
            horizon,
            duipi_rounds,
            methods,
            sizes,
            nwedge,
            theta,
            kappa,
            epsilon,
            nu,
            alpha,
            states,
            actions,
            branching,
            traps,
            goal_reward,
            trap_reward,
            hole_reward,
            eaten_reward,
            fall_reward,
            waterfall_state,
            p_intended,
            map,
            grid,
            ghosts,
            timing
        )
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DefaultsFile {
    version: u32,
    common: Partial,
    #[serde(default)]
    env: BTreeMap<String, Partial>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum EnvSpec {
    Random {
        states: usize,
        actions: usize,
        branching: usize,
        traps: usize,
        goal_reward: f64,
        trap_reward: f64,
    },
    WetChicken {
        fall_reward: f64,
        waterfall_state: bool,
    },
    FrozenLake {
        map: String,
        p_intended: f64,
        goal_reward: f64,
        hole_reward: f64,
    },
    Pacman {
        maze: Option<String>,
        grid: usize,
        ghosts: usize,
        goal_reward: f64,
        eaten_reward: f64,
    },
}

impl EnvSpec {
    pub fn kind(&self) -> EnvKind {
        match self {
            EnvSpec::Random { .. } => EnvKind::Random,
            EnvSpec::WetChicken { .. } => EnvKind::WetChicken,
            EnvSpec::FrozenLake { .. } => EnvKind::FrozenLake,
            EnvSpec::Pacman { .. } => EnvKind::Pacman,
        }
    }

    /// Random MDPs are regenerated per run from `seed`; the others ignore it.
    pub fn build(&self, gamma: f64, seed: u64) -> shieldspi::Result<Benchmark<f64>> {
        match self {
            EnvSpec::Random {
                states,
                actions,
                branching,
                traps,
                goal_reward,
                trap_reward,
            } => random_mdp(
                &RandomMdpParams {
                    num_states: *states,
                    num_actions: *actions,
                    branching: *branching,
                    num_traps: *traps,
                    goal_reward: *goal_reward,
                    trap_reward: *trap_reward,
                    discount: gamma,
                },
                seed,
            ),
            EnvSpec::WetChicken {
                fall_reward,
                waterfall_state,
            } => wet_chicken(&WetChickenParams {
                fall_reward: *fall_reward,
                discount: gamma,
                waterfall_state: *waterfall_state,
            }),
            EnvSpec::FrozenLake {
                map,
                p_intended,
                goal_reward,
                hole_reward,
            } => frozen_lake(&FrozenLakeParams {
                map: map.clone(),
                p_intended: *p_intended,
                goal_reward: *goal_reward,
                hole_reward: *hole_reward,
                discount: gamma,
            }),
            EnvSpec::Pacman {
                maze,
                grid,
                ghosts,
                goal_reward,
                eaten_reward,
            } => {
                let mut params = PacmanParams::new(*grid, *ghosts);
                if let Some(m) = maze {
                    params.maze.clone_from(m);
                }
                params.goal_reward = *goal_reward;
                params.eaten_reward = *eaten_reward;
                params.discount = gamma;
                pacman(&params)
            }
        }
    }
}

/// Fully resolved and validated sweep configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    pub sizes: Vec<usize>,
    pub runs: usize,
    pub seed: u64,
    pub gamma: f64,
    pub epsilon: f64,
    pub nwedge: u64,
    pub delta: f64,
    pub xi: f64,
    pub alpha: f64,
    pub theta: f64,
    pub kappa: f64,
    pub nu: f64,
    pub duipi_rounds: usize,
    pub horizon: usize,
    pub methods: Vec<Method>,
    /// Record wall-clock seconds per run; off by default so output is
    /// reproducible byte for byte.
    pub timing: bool,
}

fn need<T>(v: Option<T>, name: &'static str) -> Result<T, ConfigError> {
    v.ok_or(ConfigError::Missing(name))
}

impl ExperimentConfig {
    /// Built-in defaults for `env`.
    pub fn defaults(env: EnvKind) -> Result<Self, ConfigError> {
        Self::resolve(DEFAULTS_TOML, env, Partial::default())
    }

    /// Layers `overrides` over the `[env.<name>]` table over `[common]`.
    pub fn resolve(defaults: &str, env: EnvKind, overrides: Partial) -> Result<Self, ConfigError> {
        let file: DefaultsFile = toml::from_str(defaults)?;
        if file.version != CONFIG_VERSION {
            return Err(ConfigError::Version(file.version));
        }
        let env_layer = file.env.get(env.name()).cloned().unwrap_or_default();
        Self::from_partial(env, file.common.overlay(env_layer).overlay(overrides))
    }

    pub fn from_partial(env: EnvKind, p: Partial) -> Result<Self, ConfigError> {
        let spec = match env {
            EnvKind::Random => EnvSpec::Random {
                states: need(p.states, "states")?,
                actions: need(p.actions, "actions")?,
                branching: need(p.branching, "branching")?,
                traps: need(p.traps, "traps")?,
                goal_reward: need(p.goal_reward, "goal_reward")?,
                trap_reward: need(p.trap_reward, "trap_reward")?,
            },
            EnvKind::WetChicken => EnvSpec::WetChicken {
                fall_reward: need(p.fall_reward, "fall_reward")?,
                waterfall_state: p.waterfall_state.unwrap_or(true),
            },
            EnvKind::FrozenLake => EnvSpec::FrozenLake {
                map: p.map.clone().unwrap_or_else(|| FROZEN_LAKE_8X8.to_string()),
                p_intended: need(p.p_intended, "p_intended")?,
                goal_reward: need(p.goal_reward, "goal_reward")?,
                hole_reward: need(p.hole_reward, "hole_reward")?,
            },
            EnvKind::Pacman => EnvSpec::Pacman {
                maze: p.map.clone(),
                grid: need(p.grid, "grid")?,
                ghosts: need(p.ghosts, "ghosts")?,
                goal_reward: need(p.goal_reward, "goal_reward")?,
                eaten_reward: need(p.eaten_reward, "eaten_reward")?,
            },
        };
        let cfg = Self {
            env: spec,
            sizes: need(p.sizes, "sizes")?,
            runs: need(p.runs, "runs")?,
            seed: need(p.seed, "seed")?,
            gamma: need(p.gamma, "gamma")?,
            epsilon: need(p.epsilon, "epsilon")?,
            nwedge: need(p.nwedge, "nwedge")?,
            delta: need(p.delta, "delta")?,
            xi: need(p.xi, "xi")?,
            alpha: need(p.alpha, "alpha")?,
            theta: need(p.theta, "theta")?,
            kappa: need(p.kappa, "kappa")?,
            nu: need(p.nu, "nu")?,
            duipi_rounds: need(p.duipi_rounds, "duipi_rounds")?,
            horizon: need(p.horizon, "horizon")?,
            methods: need(p.methods, "methods")?,
            timing: p.timing.unwrap_or(false),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        let open_unit = |x: f64| x > 0.0 && x < 1.0;
        let closed_unit = |x: f64| (0.0..=1.0).contains(&x);
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        if self.sizes.is_empty() {
            return bad("at least one dataset size is required".into());
        }
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if !open_unit(self.delta) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !open_unit(self.xi) {
            return bad(format!("xi must lie in (0, 1), got {}", self.xi));
        }
        if !(self.alpha > 1.0) {
            return bad(format!("alpha must exceed 1, got {}", self.alpha));
        }
        for (name, x) in [
            ("epsilon", self.epsilon),
            ("theta", self.theta),
            ("kappa", self.kappa),
        ] {
            if !closed_unit(x) {
                return bad(format!("{name} must lie in [0, 1], got {x}"));
            }
        }
        if !(self.nu >= 0.0) {
            return bad(format!("nu must be nonnegative, got {}", self.nu));
        }
        if self.duipi_rounds == 0 || self.horizon == 0 {
            return bad("duipi_rounds and horizon must be positive".into());
        }
        Ok(())
    }

    pub fn uses_shield(&self) -> bool {
        self.methods.iter().any(|m| m.uses_shield())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve_for_every_env() {
        for env in [
            EnvKind::Random,
            EnvKind::WetChicken,
            EnvKind::FrozenLake,
            EnvKind::Pacman,
        ] {
            let cfg = ExperimentConfig::defaults(env).unwrap();
            assert_eq!(cfg.env.kind(), env);
        }
        let fl = ExperimentConfig::defaults(EnvKind::FrozenLake).unwrap();
        assert_eq!(
            (fl.nwedge, fl.theta, fl.kappa, fl.epsilon),
            (3, 0.2, 0.02, 0.5)
        );
    }

    #[test]
    fn overrides_win() {
        let over = Partial {
            runs: Some(3),
            theta: Some(0.1),
            ..Partial::default()
        };
        let cfg = ExperimentConfig::resolve(DEFAULTS_TOML, EnvKind::FrozenLake, over).unwrap();
        assert_eq!((cfg.runs, cfg.theta), (3, 0.1));
        let bad = Partial {
            delta: Some(1.5),
            ..Partial::default()
        };
        assert!(ExperimentConfig::resolve(DEFAULTS_TOML, EnvKind::FrozenLake, bad).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
    }
}

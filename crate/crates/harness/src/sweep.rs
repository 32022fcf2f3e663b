//! Dataset-size sweeps over the method matrix.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use shieldspi::data::{
    count, estimate_baseline, mixture_baseline, mle_model, sample_trajectories, CountTable,
};
use shieldspi::duipi::{duipi_with_counts, DuipiConfig};
use shieldspi::envs::Benchmark;
use shieldspi::mdp::{optimal_policy, performance, TabularPolicy};
use shieldspi::shield::{
    is_theta_safe_policy, shield_baseline, synthesize_shield, Shield, ShieldConfig,
};
use shieldspi::spibb::spibb_with_counts;

use crate::config::{EnvKind, ExperimentConfig, Method};

/// Convergence tolerance for the solvers run inside the sweep.
pub const SOLVER_TOL: f64 = 1e-9;

const TAG_ENV: u64 = 0x656e_7669;
const TAG_DATA: u64 = 0x6461_7461;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn mix(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b))
}

/// Seed of the dataset for `(size_index, run)`.
pub fn data_seed(master: u64, size_index: usize, run: usize) -> u64 {
    mix(mix(mix(master, TAG_DATA), size_index as u64), run as u64)
}

/// Seed of the generated environment for `run`. Shared across dataset sizes
/// so a run compares sizes on the same MDP.
pub fn env_seed(master: u64, run: usize) -> u64 {
    mix(mix(master, TAG_ENV), run as u64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRecord {
    pub method: Method,
    pub size: usize,
    pub run: usize,
    /// Discounted value of the returned policy from the initial state of the
    /// true MDP.
    pub performance: f64,
    /// `None` when no shield was synthesised for this run.
    pub theta_safe: Option<bool>,
    pub relaxed_states: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunError {
    pub method: Option<Method>,
    pub size: usize,
    pub run: usize,
    pub message: String,
}

#[derive(Clone, Debug, Default)]
pub struct SweepOutput {
    pub records: Vec<RunRecord>,
    pub errors: Vec<RunError>,
    /// Shield of the first run at the first size, if one was built.
    pub first_shield: Option<Shield<f64>>,
}

struct RunOutput {
    records: Vec<RunRecord>,
    errors: Vec<RunError>,
    shield: Option<Shield<f64>>,
}

/// Runs every `(size, run)` cell. Cells execute in parallel; output order is
/// sizes, then runs, then `config.methods`.
pub fn run_sweep(config: &ExperimentConfig) -> SweepOutput {
    // Fixed environments are built once and shared.
    let fixed = match config.env.kind() {
        EnvKind::Random => None,
        _ => Some(config.env.build(config.gamma, 0)),
    };
    let jobs: Vec<(usize, usize)> = (0..config.sizes.len())
        .flat_map(|i| (0..config.runs).map(move |r| (i, r)))
        .collect();
    let outputs: Vec<RunOutput> = jobs
        .par_iter()
        .map(|&(i, r)| {
            let size = config.sizes[i];
            let built;
            let bench = match &fixed {
                Some(b) => b.as_ref().map_err(Clone::clone),
                None => {
                    built = config.env.build(config.gamma, env_seed(config.seed, r));
                    built.as_ref().map_err(Clone::clone)
                }
            };
            match bench {
                Ok(b) => run_single(config, b, size, data_seed(config.seed, i, r), r),
                Err(e) => RunOutput {
                    records: Vec::new(),
                    errors: vec![RunError {
                        method: None,
                        size,
                        run: r,
                        message: e.to_string(),
                    }],
                    shield: None,
                },
            }
        })
        .collect();
    let mut out = SweepOutput::default();
    for (k, o) in outputs.into_iter().enumerate() {
        if k == 0 {
            out.first_shield = o.shield;
        }
        out.records.extend(o.records);
        out.errors.extend(o.errors);
    }
    out
}

struct Shared {
    counts: CountTable,
    baseline: TabularPolicy<f64>,
    shield: Option<Shield<f64>>,
}

fn prepare(
    config: &ExperimentConfig,
    bench: &Benchmark<f64>,
    size: usize,
    seed: u64,
) -> shieldspi::Result<Shared> {
    let mdp = &bench.mdp;
    let behavior = mixture_baseline(&bench.heuristic, config.epsilon, mdp.shape())?;
    let dataset = sample_trajectories(mdp, &behavior, size, config.horizon, bench.episodic, seed)?;
    let counts = count(&dataset, mdp.shape())?;
    let baseline = estimate_baseline(&counts, mdp.shape())?;
    let shield = if config.uses_shield() {
        let sc = ShieldConfig {
            alpha: config.alpha,
            delta: config.delta,
            xi: config.xi,
            theta: config.theta,
            kappa: config.kappa,
        };
        Some(synthesize_shield(&counts, mdp.shape(), &bench.graph, &sc)?.shield)
    } else {
        None
    };
    Ok(Shared {
        counts,
        baseline,
        shield,
    })
}

fn method_policy(
    config: &ExperimentConfig,
    bench: &Benchmark<f64>,
    shared: &Shared,
    method: Method,
) -> shieldspi::Result<TabularPolicy<f64>> {
    let mdp = &bench.mdp;
    let shield = || {
        shared
            .shield
            .as_ref()
            .ok_or_else(|| shieldspi::Error::InvalidInput("shield was not synthesised".into()))
    };
    let duipi_config = DuipiConfig {
        alpha: config.alpha,
        nu: config.nu,
        rounds: config.duipi_rounds,
        shield: None,
        tol: SOLVER_TOL,
    };
    match method {
        Method::Optimal => Ok(optimal_policy(mdp, SOLVER_TOL)?.0),
        Method::Baseline => Ok(shared.baseline.clone()),
        Method::ShieldedBaseline => shield_baseline(&shared.baseline, shield()?),
        Method::Basic => Ok(optimal_policy(&mle_model(&shared.counts).to_mdp(mdp)?, SOLVER_TOL)?.0),
        Method::Spibb => Ok(spibb_with_counts(
            &shared.counts,
            &shared.baseline,
            None,
            mdp,
            config.nwedge,
            SOLVER_TOL,
        )?
        .policy),
        Method::SpibbShield => Ok(spibb_with_counts(
            &shared.counts,
            &shared.baseline,
            Some(shield()?),
            mdp,
            config.nwedge,
            SOLVER_TOL,
        )?
        .policy),
        Method::Duipi => {
            Ok(
                duipi_with_counts(&shared.counts, &shared.baseline, None, mdp, &duipi_config)?
                    .policy,
            )
        }
        Method::DuipiShield => Ok(duipi_with_counts(
            &shared.counts,
            &shared.baseline,
            Some(shield()?),
            mdp,
            &duipi_config,
        )?
        .policy),
    }
}

/// One dataset and every configured method on it.
fn run_single(
    config: &ExperimentConfig,
    bench: &Benchmark<f64>,
    size: usize,
    seed: u64,
    run: usize,
) -> RunOutput {
    let shared = match prepare(config, bench, size, seed) {
        Ok(s) => s,
        Err(e) => {
            return RunOutput {
                records: Vec::new(),
                errors: vec![RunError {
                    method: None,
                    size,
                    run,
                    message: e.to_string(),
                }],
                shield: None,
            }
        }
    };
    let mut records = Vec::with_capacity(config.methods.len());
    let mut errors = Vec::new();
    let relaxed = shared
        .shield
        .as_ref()
        .map_or(0, |s| s.relaxed_states().len());
    for &method in &config.methods {
        let start = Instant::now();
        let result = method_policy(config, bench, &shared, method)
            .and_then(|pi| Ok((performance(&bench.mdp, &pi)?, pi)));
        let seconds = if config.timing {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        };
        match result {
            Ok((perf, pi)) if perf.is_finite() => records.push(RunRecord {
                method,
                size,
                run,
                performance: perf,
                theta_safe: shared
                    .shield
                    .as_ref()
                    .map(|sh| is_theta_safe_policy(&pi, sh)),
                relaxed_states: relaxed,
                seconds,
            }),
            Ok((perf, _)) => errors.push(RunError {
                method: Some(method),
                size,
                run,
                message: format!("non-finite performance {perf}"),
            }),
            Err(e) => errors.push(RunError {
                method: Some(method),
                size,
                run,
                message: e.to_string(),
            }),
        }
    }
    RunOutput {
        records,
        errors,
        shield: shared.shield,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_differ_by_cell() {
        let a = data_seed(1, 0, 0);
        assert_ne!(a, data_seed(1, 0, 1));
        assert_ne!(a, data_seed(1, 1, 0));
        assert_ne!(a, data_seed(2, 0, 0));
        assert_eq!(a, data_seed(1, 0, 0));
        assert_ne!(env_seed(1, 0), env_seed(1, 1));
    }
}

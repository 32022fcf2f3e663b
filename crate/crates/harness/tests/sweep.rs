use std::process::Command;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shieldspi::data::{count, estimate_baseline, mixture_baseline, sample_trajectories};
use shieldspi::mdp::performance;
use shieldspi_harness::config::{EnvKind, ExperimentConfig, Method, Partial, DEFAULTS_TOML};
use shieldspi_harness::stats::{aggregate, ci95_halfwidth};
use shieldspi_harness::sweep::{data_seed, run_sweep, RunRecord};

fn config(env: EnvKind, over: Partial) -> ExperimentConfig {
    ExperimentConfig::resolve(DEFAULTS_TOML, env, over).unwrap()
}

#[test]
fn baseline_record_matches_direct_pipeline() {
    let cfg = config(
        EnvKind::FrozenLake,
        Partial {
            runs: Some(1),
            sizes: Some(vec![25]),
            methods: Some(vec![Method::Baseline]),
            ..Partial::default()
        },
    );
    let out = run_sweep(&cfg);
    assert!(out.errors.is_empty());
    assert_eq!(out.records.len(), 1);

    let bench = cfg.env.build(cfg.gamma, 0).unwrap();
    let shape = bench.mdp.shape();
    let behavior = mixture_baseline(&bench.heuristic, cfg.epsilon, shape).unwrap();
    let data = sample_trajectories(
        &bench.mdp,
        &behavior,
        25,
        cfg.horizon,
        true,
        data_seed(cfg.seed, 0, 0),
    )
    .unwrap();
    let baseline = estimate_baseline(&count(&data, shape).unwrap(), shape).unwrap();
    assert_eq!(
        out.records[0].performance,
        performance(&bench.mdp, &baseline).unwrap()
    );
    assert_eq!(out.records[0].theta_safe, None);
}

#[test]
fn shielded_frozen_lake_policies_are_safe_at_extreme_sizes() {
    let cfg = config(
        EnvKind::FrozenLake,
        Partial {
            runs: Some(100),
            sizes: Some(vec![10, 5000]),
            methods: Some(vec![Method::Spibb, Method::SpibbShield]),
            ..Partial::default()
        },
    );
    let out = run_sweep(&cfg);
    assert!(out.errors.is_empty(), "{:?}", out.errors.first());
    let shielded: Vec<&RunRecord> = out
        .records
        .iter()
        .filter(|r| r.method == Method::SpibbShield)
        .collect();
    assert_eq!(shielded.len(), 200);
    assert!(shielded.iter().all(|r| r.theta_safe == Some(true)));
}

#[test]
fn random_mdps_change_between_runs_but_not_sizes() {
    let cfg = config(
        EnvKind::Random,
        Partial {
            runs: Some(3),
            sizes: Some(vec![10, 20]),
            methods: Some(vec![Method::Optimal]),
            ..Partial::default()
        },
    );
    let out = run_sweep(&cfg);
    assert!(out.errors.is_empty());
    let perf = |size, run| {
        out.records
            .iter()
            .find(|r| r.size == size && r.run == run)
            .unwrap()
            .performance
    };
    assert_ne!(perf(10, 0), perf(10, 1));
    assert_eq!(perf(10, 2), perf(20, 2));
    // Records come out sizes first, then runs.
    let order: Vec<(usize, usize)> = out.records.iter().map(|r| (r.size, r.run)).collect();
    assert_eq!(
        order,
        vec![(10, 0), (10, 1), (10, 2), (20, 0), (20, 1), (20, 2)]
    );
}

#[test]
fn wet_chicken_and_pacman_sweeps_complete() {
    let wc = config(
        EnvKind::WetChicken,
        Partial {
            runs: Some(2),
            sizes: Some(vec![500]),
            ..Partial::default()
        },
    );
    let out = run_sweep(&wc);
    assert!(out.errors.is_empty(), "{:?}", out.errors.first());
    assert_eq!(out.records.len(), 2 * wc.methods.len());
    let pm = config(
        EnvKind::Pacman,
        Partial {
            runs: Some(2),
            sizes: Some(vec![20]),
            grid: Some(5),
            ghosts: Some(1),
            ..Partial::default()
        },
    );
    let out = run_sweep(&pm);
    assert!(out.errors.is_empty(), "{:?}", out.errors.first());
    assert!(out.first_shield.is_some());
}

fn synthetic(n: usize, seed: u64) -> Vec<RunRecord> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| RunRecord {
            method: [Method::Spibb, Method::Duipi][i % 2],
            size: [10, 50, 200][i % 3],
            run: i,
            performance: r.gen_range(-1.0..1.0),
            theta_safe: Some(r.gen_bool(0.9)),
            relaxed_states: 0,
            seconds: 0.0,
        })
        .collect()
}

#[test]
fn aggregate_ignores_record_order() {
    let records = synthetic(300, 1);
    let reference = aggregate(&records);
    let mut r = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..5 {
        let mut shuffled = records.clone();
        shuffled.shuffle(&mut r);
        assert_eq!(aggregate(&shuffled), reference);
    }
    for a in &reference {
        assert!(a.cvar_1pct <= a.mean);
    }
}

#[test]
fn ci_halfwidth_on_standard_normal_sample() {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    // Box-Muller.
    let values: Vec<f64> = (0..1000)
        .map(|_| {
            let (u1, u2): (f64, f64) = (r.gen_range(f64::EPSILON..1.0), r.gen());
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        })
        .collect();
    let expected = 1.96 / 1000f64.sqrt();
    let got = ci95_halfwidth(&values);
    assert!(
        (got - expected).abs() <= 0.15 * expected,
        "{got} vs {expected}"
    );
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shieldspi"))
}

#[test]
fn cli_writes_json_and_shield_dump() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, json, dump) = (
        dir.path().join("r.csv"),
        dir.path().join("r.json"),
        dir.path().join("s.txt"),
    );
    let status = cli()
        .args([
            "run",
            "--env",
            "frozenlake",
            "--runs",
            "2",
            "--sizes",
            "10",
            "--methods",
            "spibb,spibb_shield",
        ])
        .arg("--out")
        .arg(&csv)
        .arg("--json")
        .arg(&json)
        .arg("--dump-shield")
        .arg(&dump)
        .output()
        .unwrap();
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "method,size,run,performance,theta_safe,relaxed_states,seconds"
    );
    assert_eq!(text.lines().count(), 5);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["aggregates"].as_array().unwrap().len(), 2);
    assert_eq!(report["records"].as_array().unwrap().len(), 4);
    let shield = std::fs::read_to_string(&dump).unwrap();
    assert!(shield.starts_with("# theta=0.2 kappa=0.02 relaxed="));
    assert_eq!(shield.lines().count(), 65);
}

#[test]
fn cli_rejects_bad_parameters() {
    let out = cli()
        .args(["run", "--env", "frozenlake", "--delta", "2"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("delta"));
    let out = cli().args(["run", "--env", "mars"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn cli_reports_failed_runs() {
    // A map without a reachable goal fails in every run.
    let dir = tempfile::tempdir().unwrap();
    let map = dir.path().join("map.txt");
    std::fs::write(&map, "S#\n#G\n").unwrap();
    let out = cli()
        .args([
            "run", "--env", "pacman", "--runs", "2", "--sizes", "5", "--ghosts", "0",
        ])
        .arg("--map")
        .arg(&map)
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("failed"),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

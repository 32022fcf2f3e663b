use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use shieldspi_harness::config::{EnvKind, ExperimentConfig, Method, Partial, DEFAULTS_TOML};
use shieldspi_harness::output::{summary_table, write_csv, write_json};
use shieldspi_harness::{aggregate, run_sweep};

#[derive(Parser)]
#[command(
    name = "shieldspi",
    version,
    about = "Shielded safe policy improvement experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a dataset-size sweep and write per-run records.
    Run(Box<RunArgs>),
    /// Print the built-in defaults file.
    Defaults,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    env: EnvKind,
    /// Defaults file to use instead of the built-in one.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Weight of the heuristic in the behaviour policy.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    nwedge: Option<u64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    duipi_rounds: Option<usize>,
    /// Map or maze file for frozenlake and pacman.
    #[arg(long)]
    map: Option<PathBuf>,
    /// Probability of moving in the intended direction (frozenlake).
    #[arg(long)]
    slip: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    ghosts: Option<usize>,
    #[arg(long)]
    states: Option<usize>,
    #[arg(long)]
    actions: Option<usize>,
    #[arg(long)]
    branching: Option<usize>,
    #[arg(long)]
    traps: Option<usize>,
    /// Reset a fall within the same step instead of via a waterfall state.
    #[arg(long)]
    no_waterfall_state: bool,
    /// Record wall-clock seconds per method (breaks byte-identical output).
    #[arg(long)]
    timing: bool,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write the shield of the first run at the first size.
    #[arg(long)]
    dump_shield: Option<PathBuf>,
}

impl RunArgs {
    fn overrides(&self) -> Result<Partial> {
        let map = match &self.map {
            Some(p) => Some(
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
            ),
            None => None,
        };
        Ok(Partial {
            runs: self.runs,
            seed: self.seed,
            gamma: self.gamma,
            delta: self.delta,
            xi: self.xi,
            horizon: self.horizon,
            duipi_rounds: self.duipi_rounds,
            methods: self.methods.clone(),
            sizes: self.sizes.clone(),
            nwedge: self.nwedge,
            theta: self.theta,
            kappa: self.kappa,
            epsilon: self.epsilon,
            nu: self.nu,
            alpha: self.alpha,
            states: self.states,
            actions: self.actions,
            branching: self.branching,
            traps: self.traps,
            waterfall_state: self.no_waterfall_state.then_some(false),
            p_intended: self.slip,
            map,
            grid: self.grid,
            ghosts: self.ghosts,
            timing: self.timing.then_some(true),
            ..Partial::default()
        })
    }
}

fn create(path: &PathBuf) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn run(args: &RunArgs) -> Result<bool> {
    let defaults = match &args.config {
        Some(p) => {
            std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?
        }
        None => DEFAULTS_TOML.to_string(),
    };
    let config = ExperimentConfig::resolve(&defaults, args.env, args.overrides()?)?;
    let sweep = run_sweep(&config);

    match &args.out {
        Some(p) => write_csv(&sweep.records, create(p)?)?,
        None => write_csv(&sweep.records, io::stdout().lock())?,
    }
    if let Some(p) = &args.json {
        let mut w = create(p)?;
        write_json(&config, &sweep, &mut w)?;
        w.flush()?;
    }
    if let Some(p) = &args.dump_shield {
        let shield = sweep
            .first_shield
            .as_ref()
            .context("no shield was synthesised for the first run")?;
        let mut w = create(p)?;
        w.write_all(shield.to_dump().as_bytes())?;
        w.flush()?;
    }
    eprint!("{}", summary_table(&aggregate(&sweep.records)));
    if sweep.errors.is_empty() {
        return Ok(true);
    }
    eprintln!("{} run(s) failed:", sweep.errors.len());
    for e in &sweep.errors {
        let method = e.method.map_or("-", |m| m.name());
        eprintln!(
            "  size={} run={} method={}: {}",
            e.size, e.run, method, e.message
        );
    }
    Ok(false)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(&args),
        Command::Defaults => {
            print!("{DEFAULTS_TOML}");
            Ok(true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

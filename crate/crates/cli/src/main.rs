//! `epinet`: command-line front end for the epidemic network-formation solvers.

mod config;
mod error;
mod output;
mod run;
mod scenario;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use epinet_core::Family;

use config::{AbmSettings, Axis, MatchingKind, Mode, ProtectMode, RunConfig, Scenario, StrategyKind};
use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "epinet", version, about = "Equilibria, protection policies and simulations of SIS network formation")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    #[command(flatten)]
    global: GlobalArgs,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// JSON config file or a previous run manifest; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long, global = true)]
    rho: Option<f64>,
    /// Direct cost per link.
    #[arg(long, global = true)]
    c0: Option<f64>,
    /// Benefit family: log, sqrt, exp or cubic.
    #[arg(long, global = true)]
    utility: Option<Family>,
    /// Shape parameters of the benefit family, comma separated.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    shape: Option<Vec<f64>>,
    /// Immunization cost per agent; comma-separated list allowed.
    #[arg(long, global = true, value_delimiter = ',')]
    gamma: Option<Vec<f64>>,
    /// Susceptible (non-immunized) fraction; comma-separated list allowed.
    #[arg(long, global = true, value_delimiter = ',')]
    eta: Option<Vec<f64>>,
    /// Links per agent; comma-separated list allowed.
    #[arg(long, global = true, value_delimiter = ',')]
    a: Option<Vec<f64>>,
    /// Initial infected fraction; comma-separated list allowed.
    #[arg(long, global = true, value_delimiter = ',')]
    theta0: Option<Vec<f64>>,
    #[arg(long, global = true)]
    horizon: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Directory for results.csv and manifest.json.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Preset reproducing one of the reference figures.
    #[arg(long, global = true, value_enum)]
    scenario: Option<Scenario>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Stationary infected fraction for fixed actions.
    Steady,
    /// Conjectural equilibrium of the homogeneous population.
    Ce,
    /// Infected fraction over time, fixed actions or best-response dynamics.
    Dynamics {
        /// Also bound the time to come within this distance of the equilibrium.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Points per exported trajectory.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Optimal immunization level.
    Protect {
        #[arg(long, value_enum)]
        mode: Option<ProtectMode>,
    },
    /// Social optimum, equilibrium efficiency and price of anarchy.
    Poa,
    /// Heterogeneous population with per-type curing rates.
    Hetero {
        #[command(flatten)]
        types: TypeArgs,
    },
    /// Stochastic agent-based simulation.
    Abm {
        #[command(flatten)]
        types: TypeArgs,
        #[arg(long)]
        agents: Option<usize>,
        #[arg(long)]
        replicates: Option<usize>,
        /// Fraction of the horizon discarded before averaging.
        #[arg(long)]
        burn_in: Option<f64>,
        #[arg(long)]
        sample_interval: Option<f64>,
        /// Fraction of agents immunized up front.
        #[arg(long)]
        immunized: Option<f64>,
        #[arg(long, value_enum)]
        matching: Option<MatchingKind>,
        #[arg(long, value_enum)]
        strategy: Option<StrategyKind>,
        #[arg(long)]
        refresh_threshold: Option<f64>,
    },
    /// Cartesian sweep of another mode over one or two axes.
    Sweep {
        /// `name=start:stop:points` or `name=v1,v2,...`; at most two.
        #[arg(long = "axis")]
        axes: Vec<String>,
        /// Mode evaluated in each cell.
        #[arg(long, value_enum)]
        over: Option<Mode>,
        /// Protection variant when sweeping `protect`.
        #[arg(long, value_enum)]
        mode: Option<ProtectMode>,
    },
    /// Cost of planning immunization as if the network were fixed.
    Misdesign,
}

#[derive(Debug, Args)]
struct TypeArgs {
    /// Population share of each type.
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    /// Curing rate of each type.
    #[arg(long, value_delimiter = ',')]
    deltas: Option<Vec<f64>>,
}

impl Cli {
    /// Flag values as a config layer, plus the mode the subcommand selects.
    fn into_layer(self) -> CliResult<(RunConfig, Option<PathBuf>)> {
        let g = self.global;
        let mut cfg = RunConfig {
            scenario: g.scenario,
            beta: g.beta,
            delta: g.delta,
            rho: g.rho,
            c0: g.c0,
            utility: g.utility,
            shape: g.shape,
            a: g.a,
            gamma: g.gamma,
            eta: g.eta,
            theta0: g.theta0,
            horizon: g.horizon,
            seed: g.seed,
            jobs: g.jobs,
            out: g.out,
            ..Default::default()
        };
        let set_types = |cfg: &mut RunConfig, types: TypeArgs| {
            cfg.weights = types.weights;
            cfg.deltas = types.deltas;
        };
        cfg.mode = match self.command {
            None => None,
            Some(Command::Steady) => Some(Mode::Steady),
            Some(Command::Ce) => Some(Mode::Ce),
            Some(Command::Dynamics { epsilon, samples }) => {
                cfg.epsilon = epsilon;
                cfg.samples = samples;
                Some(Mode::Dynamics)
            }
            Some(Command::Protect { mode }) => {
                cfg.protect_mode = mode;
                Some(Mode::Protect)
            }
            Some(Command::Poa) => Some(Mode::Poa),
            Some(Command::Hetero { types }) => {
                set_types(&mut cfg, types);
                Some(Mode::Hetero)
            }
            Some(Command::Abm {
                types,
                agents,
                replicates,
                burn_in,
                sample_interval,
                immunized,
                matching,
                strategy,
                refresh_threshold,
            }) => {
                set_types(&mut cfg, types);
                let settings = AbmSettings {
                    agents,
                    replicates,
                    burn_in,
                    sample_interval,
                    immunized,
                    matching,
                    strategy,
                    refresh_threshold,
                };
                if settings != AbmSettings::default() {
                    cfg.abm = Some(settings);
                }
                Some(Mode::Abm)
            }
            Some(Command::Sweep { axes, over, mode }) => {
                if !axes.is_empty() {
                    cfg.axes = Some(axes.iter().map(|s| Axis::parse(s)).collect::<CliResult<Vec<_>>>()?);
                }
                cfg.over = over;
                cfg.protect_mode = mode;
                Some(Mode::Sweep)
            }
            Some(Command::Misdesign) => Some(Mode::Misdesign),
        };
        Ok((cfg, g.config))
    }
}

fn execute(cli: Cli) -> CliResult<()> {
    let (mut cfg, file) = cli.into_layer()?;
    let subcommand = cfg.mode;
    if let Some(path) = file {
        let loaded = config::load(&path)?;
        // a subcommand on the command line replaces the file's mode and its scenario
        if subcommand.is_some() && loaded.scenario.is_some() && cfg.scenario.is_none() {
            return Err(CliError::config("the config file selects a scenario; drop the subcommand"));
        }
        cfg.fill_from(&loaded);
    }
    let out = cfg.out.take();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::config(format!("cannot start worker pool: {e}")))?;

    let (report, resolved, command) = match (cfg.scenario, cfg.mode) {
        (Some(_), Some(mode)) if subcommand.is_some() => {
            return Err(CliError::config(format!("--scenario cannot be combined with the `{}` subcommand", mode.name())))
        }
        (Some(scenario), _) => {
            let mut resolved = cfg.clone();
            resolved.mode = None;
            let report = pool.install(|| scenario::run(scenario, &resolved))?;
            (report, resolved, scenario.name().to_string())
        }
        (None, Some(mode)) => {
            let resolved = run::resolve(mode, cfg);
            let report = pool.install(|| run::run_mode(mode, &resolved))?;
            (report, resolved, mode.name().to_string())
        }
        (None, None) => {
            return Err(CliError::config("nothing to run: give a subcommand, --scenario, or a config with a mode"))
        }
    };

    for (name, &value) in &report.residuals {
        if !(value <= run::RESIDUAL_TOL) {
            return Err(epinet_core::Error::NonConvergence(format!(
                "{name} residual {value:e} exceeds {:e}",
                run::RESIDUAL_TOL
            ))
            .into());
        }
    }
    for line in &report.summary {
        println!("{line}");
    }
    if let Some(dir) = out {
        output::write_outputs(&dir, &report, &command, &resolved)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EPINET_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

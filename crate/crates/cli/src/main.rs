use clap::{Args, Parser, Subcommand};
use spconv_cli::io::{self, Sink};
use spconv_cli::{commands, CliError, RunOverrides, SweepGrid};
use spconv_core::pipeline::SimulationConfig;
use spconv_core::Strategy;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "spconv", version, about = "Serial-to-parallel single-photon converter simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form efficiency curves as CSV (n,heralded,clocked,passive).
    Analytic {
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        /// Switching efficiency; defaults to t·mean(η) of --config, else 1.
        #[arg(long)]
        eta_sw: Option<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full source → controller → converter → measurement run; TOML report.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum)]
        strategy: Option<StrategyArg>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One simulation per grid point; CSV of estimates.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Strategies to sweep (comma separated); defaults to the config's.
        #[arg(long, value_enum, value_delimiter = ',')]
        strategy: Vec<StrategyArg>,
        /// Mode counts (comma separated); defaults to the config's.
        #[arg(long = "n", value_delimiter = ',')]
        n_modes: Vec<usize>,
        /// Switching efficiencies (comma separated); sets t = 1 and η_i = value.
        #[arg(long, value_delimiter = ',')]
        eta_sw: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tune pair_prob to a target n-herald trigger rate; writes the new config.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        /// Target C_h(n) in counts per second.
        #[arg(long)]
        target_ch: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Pump slots per trial.
    #[arg(long)]
    slots: Option<u64>,
    #[arg(long)]
    trials: Option<u32>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum StrategyArg {
    Heralded,
    Clocked,
    Passive,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Heralded => Strategy::ActiveHeralded,
            StrategyArg::Clocked => Strategy::ActiveClocked,
            StrategyArg::Passive => Strategy::PassiveBeamsplitter,
        }
    }
}

impl RunArgs {
    fn load(&self, strategy: Option<Strategy>) -> Result<SimulationConfig, CliError> {
        let mut cfg = io::load_config(&self.config)?;
        RunOverrides {
            seed: self.seed,
            slots: self.slots,
            trials: self.trials,
            strategy,
        }
        .apply(&mut cfg);
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analytic {
            n_max,
            eta_sw,
            config,
            out,
        } => {
            let eta = match (eta_sw, config) {
                (Some(e), _) => e,
                (None, Some(path)) => {
                    let c = io::load_config(&path)?.converter;
                    let mean = c.port_efficiencies.iter().sum::<f64>() / c.port_efficiencies.len().max(1) as f64;
                    c.transmittance * mean
                }
                (None, None) => 1.0,
            };
            let out = Sink(out);
            commands::run_analytic(n_max, eta, &out)?;
            eprintln!("wrote curves for n = 1..={n_max} at eta_sw = {eta} to {}", out.describe());
        }
        Command::Simulate { run, strategy, out } => {
            let cfg = run.load(strategy.map(Into::into))?;
            let out = Sink(out);
            let r = commands::run_simulation(&cfg, &out)?;
            let n = cfg.converter.n_modes;
            eprintln!(
                "S({n}) = {:.4} ± {:.4}  C({n}) = {:.4} cps  C_h({n}) = {:.2} cps  {} slots in {:.1} s -> {}",
                r.s_estimate.value,
                r.s_estimate.std_error,
                r.c_n_rate,
                r.c_h_rate,
                r.slots_simulated,
                r.wall_time_s,
                out.describe()
            );
        }
        Command::Sweep {
            run,
            strategy,
            n_modes,
            eta_sw,
            out,
        } => {
            let cfg = run.load(None)?;
            let grid = SweepGrid {
                strategies: if strategy.is_empty() {
                    vec![cfg.converter.strategy]
                } else {
                    strategy.into_iter().map(Into::into).collect()
                },
                n_modes: if n_modes.is_empty() {
                    vec![cfg.converter.n_modes]
                } else {
                    n_modes
                },
                eta_sw: (!eta_sw.is_empty()).then_some(eta_sw),
            };
            let out = Sink(out);
            commands::run_sweep(&cfg, &grid, &out, |done, total| {
                eprint!("\rgrid point {done}/{total}");
                if done == total {
                    eprintln!();
                }
            })?;
        }
        Command::Calibrate {
            config,
            target_ch,
            out,
        } => {
            let cfg = io::load_config(&config)?;
            let out = Sink(out);
            let cal = commands::run_calibrate(&cfg, target_ch, &out)?;
            eprintln!(
                "pair_prob = {}  herald fraction = {:.6}  expected C_h({}) = {:.3} cps -> {}",
                cal.config.source.pair_prob,
                cal.herald_fraction,
                cal.config.converter.n_modes,
                cal.predicted_c_h_hz,
                out.describe()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spconv: error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code())
        }
    }
}

use crate::error::CliError;
use crate::io::{self, ReportFile, Sink, SweepRow};
use spconv_core::analytic::{efficiency_curves, EfficiencyCurves};
use spconv_core::calibration::{calibrate_pair_prob, stationary_rates};
use spconv_core::pipeline::{run_simulation_at, SimulationConfig};
use spconv_core::{SimulationReport, SourceParams, Strategy};

/// Overrides applied on top of a loaded config.
#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub seed: Option<u64>,
    pub slots: Option<u64>,
    pub trials: Option<u32>,
    pub strategy: Option<Strategy>,
}

impl RunOverrides {
    pub fn apply(&self, config: &mut SimulationConfig) {
        if let Some(s) = self.seed {
            config.run.seed = s;
        }
        if let Some(s) = self.slots {
            config.run.slots = s;
        }
        if let Some(t) = self.trials {
            config.run.trials = t;
        }
        if let Some(s) = self.strategy {
            config.converter.strategy = s;
        }
    }
}

pub fn run_analytic(n_max: usize, eta_sw: f64, out: &Sink) -> Result<EfficiencyCurves, CliError> {
    let curves = efficiency_curves(n_max, eta_sw)?;
    out.write_all(&io::curves_to_csv(&curves)?)?;
    Ok(curves)
}

pub fn run_simulation(config: &SimulationConfig, out: &Sink) -> Result<SimulationReport, CliError> {
    // fail on an unserializable config before spending time on the run
    io::config_to_toml(config)?;
    let report = run_simulation_at(config, 0)?;
    let file = ReportFile {
        report: report.clone(),
        config: config.clone(),
    };
    out.write_all(io::report_to_toml(&file)?.as_bytes())?;
    Ok(report)
}

/// Sweep axes. `eta_sw`, when given, replaces the converter optics by a
/// lossless-transmittance converter with equal port efficiencies.
#[derive(Debug, Clone, Default)]
pub struct SweepGrid {
    pub strategies: Vec<Strategy>,
    pub n_modes: Vec<usize>,
    pub eta_sw: Option<Vec<f64>>,
}

/// Expands the grid over `base`, strategy outermost, then `n`, then `η_SW`.
pub fn grid_points(base: &SimulationConfig, grid: &SweepGrid) -> Result<Vec<SimulationConfig>, CliError> {
    let etas: Vec<Option<f64>> = match &grid.eta_sw {
        Some(v) => v.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    if grid.strategies.is_empty() || grid.n_modes.is_empty() || etas.is_empty() {
        return Err(CliError::Usage("sweep grid is empty".into()));
    }
    let mut points = Vec::new();
    for &strategy in &grid.strategies {
        for &n in &grid.n_modes {
            for eta in &etas {
                let mut cfg = base.clone();
                let conv = &mut cfg.converter;
                conv.strategy = strategy;
                conv.n_modes = n;
                match *eta {
                    Some(e) => {
                        conv.transmittance = 1.0;
                        conv.port_efficiencies = vec![e; n];
                    }
                    None if conv.port_efficiencies.len() != n => {
                        let ports = &conv.port_efficiencies;
                        let mean = if ports.is_empty() {
                            1.0
                        } else {
                            ports.iter().sum::<f64>() / ports.len() as f64
                        };
                        conv.port_efficiencies = vec![mean; n];
                    }
                    None => {}
                }
                points.push(cfg);
            }
        }
    }
    Ok(points)
}

pub fn run_sweep(
    base: &SimulationConfig,
    grid: &SweepGrid,
    out: &Sink,
    mut progress: impl FnMut(usize, usize),
) -> Result<Vec<SweepRow>, CliError> {
    let points = grid_points(base, grid)?;
    let total = points.len();
    let mut rows = Vec::with_capacity(total);
    for (g, cfg) in points.iter().enumerate() {
        let index = u32::try_from(g).map_err(|_| CliError::Usage("sweep grid too large".into()))?;
        let r = run_simulation_at(cfg, index)?;
        let conv = &cfg.converter;
        let mean_eta = conv.port_efficiencies.iter().sum::<f64>() / conv.n_modes as f64;
        rows.push(SweepRow {
            index,
            strategy: conv.strategy,
            n_modes: conv.n_modes,
            eta_sw: conv.transmittance * mean_eta,
            transmittance: conv.transmittance,
            s_estimate: r.s_estimate.value,
            std_error: r.s_estimate.std_error,
            c_n_rate: r.c_n_rate,
            c_h_rate: r.c_h_rate,
            config_digest: r.config_digest,
        });
        progress(g + 1, total);
    }
    out.write_all(&io::write_csv(&rows)?)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub config: SimulationConfig,
    pub herald_fraction: f64,
    pub predicted_c_h_hz: f64,
}

/// Tunes `pair_prob` so the expected `n`-herald trigger rate is `target_hz`
/// and writes the adjusted config.
pub fn run_calibrate(config: &SimulationConfig, target_hz: f64, out: &Sink) -> Result<Calibration, CliError> {
    let v = config.validate()?;
    let n = v.converter.n_modes();
    let tuned: SourceParams = calibrate_pair_prob(&v.source, n, target_hz)?;
    let rates = stationary_rates(&tuned, n);
    let mut adjusted = config.clone();
    adjusted.source.pair_prob = tuned.pair_prob();
    out.write_all(io::config_to_toml(&adjusted)?.as_bytes())?;
    Ok(Calibration {
        config: adjusted,
        herald_fraction: rates.herald_fraction,
        predicted_c_h_hz: rates.triggers_per_slot * tuned.rep_rate_hz(),
    })
}

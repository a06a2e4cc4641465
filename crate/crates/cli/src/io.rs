//! Config, report and CSV serialization.

use crate::error::CliError;
use serde::{Deserialize, Serialize};
use spconv_core::analytic::{EfficiencyCurve, EfficiencyCurves};
use spconv_core::pipeline::SimulationConfig;
use spconv_core::{SimulationReport, Strategy};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

/// A single-run report as written by `simulate`: the results plus the exact
/// configuration that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportFile {
    pub report: SimulationReport,
    pub config: SimulationConfig,
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Parses a config file. A report file is accepted too; its `[config]`
/// table is used, so a run can be repeated from its own report.
pub fn parse_config(text: &str, path: &Path) -> Result<SimulationConfig, CliError> {
    let bad = |e: toml::de::Error| CliError::Config {
        path: path.to_path_buf(),
        message: e.to_string().trim_end().to_string(),
    };
    let table: toml::Table = toml::from_str(text).map_err(bad)?;
    if table.contains_key("report") {
        Ok(toml::from_str::<ReportFile>(text).map_err(bad)?.config)
    } else {
        toml::from_str(text).map_err(bad)
    }
}

pub fn load_config(path: &Path) -> Result<SimulationConfig, CliError> {
    parse_config(&read_text(path)?, path)
}

pub fn load_report(path: &Path) -> Result<ReportFile, CliError> {
    let text = read_text(path)?;
    toml::from_str(&text).map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        message: e.to_string().trim_end().to_string(),
    })
}

fn check_toml_seed(config: &SimulationConfig) -> Result<(), CliError> {
    if config.run.seed > i64::MAX as u64 {
        return Err(CliError::Usage(format!(
            "seed {} does not fit a TOML integer; use a value up to {}",
            config.run.seed,
            i64::MAX
        )));
    }
    Ok(())
}

pub fn config_to_toml(config: &SimulationConfig) -> Result<String, CliError> {
    check_toml_seed(config)?;
    toml::to_string(config).map_err(|e| CliError::Output(e.to_string()))
}

pub fn report_to_toml(file: &ReportFile) -> Result<String, CliError> {
    check_toml_seed(&file.config)?;
    toml::to_string(file).map_err(|e| CliError::Output(e.to_string()))
}

/// Where command output goes: a file, or stdout when no path is given.
#[derive(Debug, Clone, Default)]
pub struct Sink(pub Option<PathBuf>);

impl Sink {
    pub fn write_all(&self, bytes: &[u8]) -> Result<(), CliError> {
        match &self.0 {
            Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::io(p, e)),
            None => std::io::stdout()
                .write_all(bytes)
                .map_err(|e| CliError::io("<stdout>", e)),
        }
    }

    pub fn describe(&self) -> String {
        match &self.0 {
            Some(p) => p.display().to_string(),
            None => "<stdout>".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub n: usize,
    pub heralded: f64,
    /// Undefined for a single mode.
    pub clocked: Option<f64>,
    pub passive: f64,
}

pub fn curve_rows(curves: &EfficiencyCurves) -> Vec<CurveRow> {
    curves
        .heralded
        .points
        .iter()
        .map(|&(n, h)| CurveRow {
            n,
            heralded: h,
            clocked: curves.clocked.at(n),
            passive: curves.passive.at(n).expect("passive covers every n"),
        })
        .collect()
}

pub fn curves_to_csv(curves: &EfficiencyCurves) -> Result<Vec<u8>, CliError> {
    write_csv(&curve_rows(curves))
}

/// Rebuilds the curve set from CSV written by [`curves_to_csv`].
pub fn curves_from_csv<R: Read>(reader: R, eta_sw: f64) -> Result<EfficiencyCurves, CliError> {
    let rows: Vec<CurveRow> = read_csv(reader)?;
    let curve = |strategy, pick: &dyn Fn(&CurveRow) -> Option<f64>| EfficiencyCurve {
        strategy,
        eta_sw,
        points: rows.iter().filter_map(|r| pick(r).map(|s| (r.n, s))).collect(),
    };
    Ok(EfficiencyCurves {
        heralded: curve(Strategy::ActiveHeralded, &|r| Some(r.heralded)),
        clocked: curve(Strategy::ActiveClocked, &|r| r.clocked),
        passive: curve(Strategy::PassiveBeamsplitter, &|r| Some(r.passive)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: u32,
    pub strategy: Strategy,
    pub n_modes: usize,
    pub eta_sw: f64,
    pub transmittance: f64,
    pub s_estimate: f64,
    pub std_error: f64,
    pub c_n_rate: f64,
    pub c_h_rate: f64,
    pub config_digest: String,
}

pub fn write_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Output(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Output(e.to_string()))
}

pub fn read_csv<T: for<'de> Deserialize<'de>, R: Read>(reader: R) -> Result<Vec<T>, CliError> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Config {
            path: PathBuf::from("<csv>"),
            message: e.to_string(),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use spconv_core::analytic::efficiency_curves;

    #[test]
    fn curves_round_trip_bit_for_bit() {
        let curves = efficiency_curves(9, 0.7231).unwrap();
        let csv = curves_to_csv(&curves).unwrap();
        let back = curves_from_csv(csv.as_slice(), 0.7231).unwrap();
        assert_eq!(back, curves);
        let header = std::str::from_utf8(&csv).unwrap().lines().next().unwrap();
        assert_eq!(header, "n,heralded,clocked,passive");
    }

    #[test]
    fn config_round_trips_through_toml() {
        let mut cfg = SimulationConfig::default();
        cfg.source.pair_prob = 0.014223920159542;
        cfg.run.seed = 42;
        let text = config_to_toml(&cfg).unwrap();
        let back = parse_config(&text, Path::new("x.toml")).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.digest(), cfg.digest());
    }

    #[test]
    fn unknown_key_reports_line_and_name() {
        let text = "[source]\npair_prob = 0.01\nrep_rate_hz = 82e6\nherald_det_efficiency = 0.3\n\
                    herald_deadtime_ns = 40.0\nsignal_det_effciency = 0.079\n\n[converter]\n\
                    n_modes = 2\nstrategy = \"heralded\"\ntransmittance = 0.7\nport_efficiencies = [1.0, 1.0]\n";
        let err = parse_config(text, Path::new("bad.toml")).unwrap_err();
        let msg = err.to_string();
        assert_eq!(err.category(), "config");
        assert!(msg.contains("line 6"), "{msg}");
        assert!(msg.contains("signal_det_effciency"), "{msg}");
    }

    #[test]
    fn huge_seed_is_a_usage_error() {
        let mut cfg = SimulationConfig::default();
        cfg.run.seed = u64::MAX;
        assert_eq!(config_to_toml(&cfg).unwrap_err().category(), "usage");
    }
}

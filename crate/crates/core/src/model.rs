//! Shared domain types.
//!
//! Raw, file-shaped configuration (`SourceConfig`, `ConverterConfig`) is turned
//! into immutable validated parameter sets by [`validate_config`]. Everything
//! downstream only ever sees the validated forms.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// A single constraint violation found while validating a configuration.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("probability out of range: {field} = {value} (expected 0..=1)")]
    ProbabilityOutOfRange { field: &'static str, value: f64 },
    #[error("{field} must be positive and finite, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error("negative deadtime: {0} ns")]
    NegativeDeadtime(f64),
    #[error("deadtime given both in ns ({ns}) and in slots ({slots}); use one")]
    AmbiguousDeadtime { ns: f64, slots: u32 },
    #[error("n_modes must be at least 1")]
    ZeroModes,
    #[error("{strategy} routing needs n_modes >= {min}, got {n_modes}")]
    TooFewModes {
        strategy: Strategy,
        min: usize,
        n_modes: usize,
    },
    #[error("port_efficiencies has {got} entries but n_modes is {expected}")]
    PortCountMismatch { expected: usize, got: usize },
}

/// Every violation found in one configuration, in field order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigViolations(pub Vec<ModelError>);

impl fmt::Display for ConfigViolations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} configuration violation(s)", self.0.len())?;
        for v in &self.0 {
            write!(f, "\n  - {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigViolations {}

fn check_prob(field: &'static str, value: f64, out: &mut Vec<ModelError>) {
    if !(0.0..=1.0).contains(&value) {
        out.push(ModelError::ProbabilityOutOfRange { field, value });
    }
}

/// Converts a deadtime in seconds to whole pump-pulse slots, rounding up.
///
/// Products that land within 1e-9 of an integer are treated as that integer so
/// that e.g. 50 ns at 80 MHz gives 4 slots rather than 5.
pub fn deadtime_to_slots(deadtime_s: f64, rep_rate_hz: f64) -> u32 {
    let x = deadtime_s * rep_rate_hz;
    (x - 1e-9).ceil().max(0.0) as u32
}

/// Routing strategy of the converter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    /// Active routers driven by the heralding signals.
    #[serde(rename = "heralded")]
    ActiveHeralded,
    /// Active routers driven by the divided pump clock (no heralds).
    #[serde(rename = "clocked")]
    ActiveClocked,
    /// Balanced beamsplitter tree.
    #[serde(rename = "passive")]
    PassiveBeamsplitter,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [
        Strategy::ActiveHeralded,
        Strategy::ActiveClocked,
        Strategy::PassiveBeamsplitter,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Strategy::ActiveHeralded => "heralded",
            Strategy::ActiveClocked => "clocked",
            Strategy::PassiveBeamsplitter => "passive",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "heralded" => Ok(Strategy::ActiveHeralded),
            "clocked" => Ok(Strategy::ActiveClocked),
            "passive" => Ok(Strategy::PassiveBeamsplitter),
            other => Err(format!(
                "unknown strategy '{other}' (expected heralded, clocked or passive)"
            )),
        }
    }
}

/// Heralded source as written in a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub pair_prob: f64,
    pub rep_rate_hz: f64,
    pub herald_det_efficiency: f64,
    /// Heralding detector deadtime in nanoseconds; quantized to slots on validation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub herald_deadtime_ns: Option<f64>,
    /// Deadtime given directly in pulse slots.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub herald_deadtime_slots: Option<u32>,
    #[serde(default = "default_splitter_ratio")]
    pub herald_splitter_ratio: f64,
    pub signal_det_efficiency: f64,
    #[serde(default)]
    pub multi_pair_enabled: bool,
}

fn default_splitter_ratio() -> f64 {
    0.5
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig {
            pair_prob: 0.01,
            rep_rate_hz: 82e6,
            herald_det_efficiency: 0.31,
            herald_deadtime_ns: Some(40.0),
            herald_deadtime_slots: None,
            herald_splitter_ratio: 0.5,
            signal_det_efficiency: 0.079,
            multi_pair_enabled: false,
        }
    }
}

/// Converter as written in a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConverterConfig {
    pub n_modes: usize,
    pub strategy: Strategy,
    pub transmittance: f64,
    pub port_efficiencies: Vec<f64>,
}

impl Default for ConverterConfig {
    fn default() -> Self {
        ConverterConfig {
            n_modes: 2,
            strategy: Strategy::ActiveHeralded,
            transmittance: 0.731,
            port_efficiencies: vec![0.998, 0.998],
        }
    }
}

/// Validated source parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceParams {
    pair_prob: f64,
    rep_rate_hz: f64,
    herald_det_efficiency: f64,
    herald_deadtime_slots: u32,
    herald_splitter_ratio: f64,
    signal_det_efficiency: f64,
    multi_pair_enabled: bool,
}

impl SourceParams {
    pub fn pair_prob(&self) -> f64 {
        self.pair_prob
    }
    pub fn rep_rate_hz(&self) -> f64 {
        self.rep_rate_hz
    }
    pub fn herald_det_efficiency(&self) -> f64 {
        self.herald_det_efficiency
    }
    pub fn herald_deadtime_slots(&self) -> u32 {
        self.herald_deadtime_slots
    }
    pub fn herald_splitter_ratio(&self) -> f64 {
        self.herald_splitter_ratio
    }
    /// Output detector efficiency, shared by every output port.
    pub fn signal_det_efficiency(&self) -> f64 {
        self.signal_det_efficiency
    }
    pub fn multi_pair_enabled(&self) -> bool {
        self.multi_pair_enabled
    }

    /// Same parameters with a different pair probability.
    pub fn with_pair_prob(mut self, pair_prob: f64) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&pair_prob) {
            return Err(ModelError::ProbabilityOutOfRange {
                field: "pair_prob",
                value: pair_prob,
            });
        }
        self.pair_prob = pair_prob;
        Ok(self)
    }
}

impl TryFrom<&SourceConfig> for SourceParams {
    type Error = ConfigViolations;

    fn try_from(c: &SourceConfig) -> Result<Self, Self::Error> {
        let mut errs = Vec::new();
        check_prob("pair_prob", c.pair_prob, &mut errs);
        check_prob("herald_det_efficiency", c.herald_det_efficiency, &mut errs);
        check_prob("herald_splitter_ratio", c.herald_splitter_ratio, &mut errs);
        check_prob("signal_det_efficiency", c.signal_det_efficiency, &mut errs);
        let rate_ok = c.rep_rate_hz.is_finite() && c.rep_rate_hz > 0.0;
        if !rate_ok {
            errs.push(ModelError::NonPositive {
                field: "rep_rate_hz",
                value: c.rep_rate_hz,
            });
        }
        let deadtime = match (c.herald_deadtime_ns, c.herald_deadtime_slots) {
            (Some(ns), Some(slots)) => {
                errs.push(ModelError::AmbiguousDeadtime { ns, slots });
                0
            }
            (Some(ns), None) if !(ns >= 0.0 && ns.is_finite()) => {
                errs.push(ModelError::NegativeDeadtime(ns));
                0
            }
            (Some(ns), None) if rate_ok => deadtime_to_slots(ns * 1e-9, c.rep_rate_hz),
            (Some(_), None) => 0,
            (None, Some(slots)) => slots,
            (None, None) => 0,
        };
        if !errs.is_empty() {
            return Err(ConfigViolations(errs));
        }
        Ok(SourceParams {
            pair_prob: c.pair_prob,
            rep_rate_hz: c.rep_rate_hz,
            herald_det_efficiency: c.herald_det_efficiency,
            herald_deadtime_slots: deadtime,
            herald_splitter_ratio: c.herald_splitter_ratio,
            signal_det_efficiency: c.signal_det_efficiency,
            multi_pair_enabled: c.multi_pair_enabled,
        })
    }
}

/// Validated converter parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ConverterParams {
    strategy: Strategy,
    transmittance: f64,
    port_efficiencies: Vec<f64>,
}

impl ConverterParams {
    pub fn n_modes(&self) -> usize {
        self.port_efficiencies.len()
    }
    /// A converter with `n` output modes chains `n - 1` routers.
    pub fn n_routers(&self) -> usize {
        self.n_modes() - 1
    }
    pub fn strategy(&self) -> Strategy {
        self.strategy
    }
    pub fn transmittance(&self) -> f64 {
        self.transmittance
    }
    pub fn port_efficiencies(&self) -> &[f64] {
        &self.port_efficiencies
    }
    /// `t` times the mean routing efficiency.
    pub fn switching_efficiency(&self) -> f64 {
        let mean = self.port_efficiencies.iter().sum::<f64>() / self.n_modes() as f64;
        self.transmittance * mean
    }

    /// Shorthand for a converter whose every port has the same efficiency.
    pub fn uniform(
        strategy: Strategy,
        n_modes: usize,
        transmittance: f64,
        port_efficiency: f64,
    ) -> Result<Self, ConfigViolations> {
        ConverterParams::try_from(&ConverterConfig {
            n_modes,
            strategy,
            transmittance,
            port_efficiencies: vec![port_efficiency; n_modes],
        })
    }
}

impl TryFrom<&ConverterConfig> for ConverterParams {
    type Error = ConfigViolations;

    fn try_from(c: &ConverterConfig) -> Result<Self, Self::Error> {
        let mut errs = Vec::new();
        if c.n_modes == 0 {
            errs.push(ModelError::ZeroModes);
        } else if c.strategy == Strategy::ActiveClocked && c.n_modes < 2 {
            errs.push(ModelError::TooFewModes {
                strategy: c.strategy,
                min: 2,
                n_modes: c.n_modes,
            });
        }
        check_prob("transmittance", c.transmittance, &mut errs);
        if c.port_efficiencies.len() != c.n_modes {
            errs.push(ModelError::PortCountMismatch {
                expected: c.n_modes,
                got: c.port_efficiencies.len(),
            });
        }
        for &eta in &c.port_efficiencies {
            check_prob("port_efficiencies", eta, &mut errs);
        }
        if !errs.is_empty() {
            return Err(ConfigViolations(errs));
        }
        Ok(ConverterParams {
            strategy: c.strategy,
            transmittance: c.transmittance,
            port_efficiencies: c.port_efficiencies.clone(),
        })
    }
}

/// A source and converter that passed validation together.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig {
    pub source: SourceParams,
    pub converter: ConverterParams,
}

/// Validates both halves, collecting every violation rather than stopping at the first.
pub fn validate_config(
    source: &SourceConfig,
    converter: &ConverterConfig,
) -> Result<ValidatedConfig, ConfigViolations> {
    let s = SourceParams::try_from(source);
    let c = ConverterParams::try_from(converter);
    match (s, c) {
        (Ok(source), Ok(converter)) => Ok(ValidatedConfig { source, converter }),
        (s, c) => {
            let mut all = Vec::new();
            if let Err(ConfigViolations(v)) = s {
                all.extend(v);
            }
            if let Err(ConfigViolations(v)) = c {
                all.extend(v);
            }
            Err(ConfigViolations(all))
        }
    }
}

/// One pump-pulse slot.
///
/// `signal_photons` is 0 when no pair was emitted, 1 normally, and 2 for a
/// double-pair slot when multi-pair emission is enabled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SlotRecord {
    pub slot_index: u64,
    pub signal_photons: u8,
    pub herald_a_fired: bool,
    pub herald_b_fired: bool,
}

impl SlotRecord {
    pub fn empty(slot_index: u64) -> Self {
        SlotRecord {
            slot_index,
            ..Default::default()
        }
    }
    pub fn signal_present(&self) -> bool {
        self.signal_photons > 0
    }
    pub fn herald_effective(&self) -> bool {
        self.herald_a_fired || self.herald_b_fired
    }
    pub fn is_empty(&self) -> bool {
        !self.signal_present() && !self.herald_effective()
    }
}

/// A run of `run_length` consecutive effective heralds starting at `start_slot`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TriggerEvent {
    pub start_slot: u64,
    pub run_length: usize,
}

impl TriggerEvent {
    pub fn slots(&self) -> std::ops::Range<u64> {
        self.start_slot..self.start_slot + self.run_length as u64
    }
}

/// What happened to one photon of a run inside the converter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhotonFate {
    /// The signal slot held no photon (only possible with a misaligned delay).
    Absent,
    /// Absorbed by converter loss.
    Lost,
    /// Left the converter on `port`; `detected` after output-detector thinning.
    Routed { port: usize, detected: bool },
}

/// Converter output for one trigger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputRecord {
    pub trigger: TriggerEvent,
    pub n_ports: usize,
    /// Indexed by photon position in the run.
    pub fates: Vec<PhotonFate>,
}

impl OutputRecord {
    /// Per-port click pattern, irrespective of which photon caused the click.
    pub fn port_detections(&self) -> Vec<bool> {
        let mut ports = vec![false; self.n_ports];
        for fate in &self.fates {
            if let PhotonFate::Routed {
                port,
                detected: true,
            } = *fate
            {
                ports[port] = true;
            }
        }
        ports
    }

    pub fn lost_photons(&self) -> usize {
        self.fates
            .iter()
            .filter(|f| matches!(f, PhotonFate::Lost))
            .count()
    }

    pub fn input_photons(&self) -> usize {
        self.fates
            .iter()
            .filter(|f| !matches!(f, PhotonFate::Absent))
            .count()
    }

    pub fn routed_photons(&self) -> usize {
        self.fates
            .iter()
            .filter(|f| matches!(f, PhotonFate::Routed { .. }))
            .count()
    }

    /// Every port clicked (what a coincidence counter sees).
    pub fn all_ports_detected(&self) -> bool {
        self.port_detections().iter().all(|&d| d)
    }

    /// Photon `j` was detected on port `j` for every `j`.
    pub fn designated_success(&self) -> bool {
        self.fates.len() == self.n_ports
            && self.fates.iter().enumerate().all(|(j, f)| {
                matches!(*f, PhotonFate::Routed { port, detected: true } if port == j)
            })
    }
}

/// Which estimator produced an [`EfficiencyEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    ClosedForm,
    MonteCarlo,
    HeraldNormalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyEstimate {
    pub value: f64,
    pub std_error: f64,
    pub method: EstimateMethod,
}

impl EfficiencyEstimate {
    pub fn closed_form(value: f64) -> Self {
        EfficiencyEstimate {
            value,
            std_error: 0.0,
            method: EstimateMethod::ClosedForm,
        }
    }

    /// Success frequency with its binomial standard error.
    pub fn monte_carlo(successes: u64, trials: u64) -> Self {
        assert!(trials > 0, "monte_carlo estimate needs at least one trial");
        let p = successes as f64 / trials as f64;
        EfficiencyEstimate {
            value: p,
            std_error: (p * (1.0 - p) / trials as f64).sqrt(),
            method: EstimateMethod::MonteCarlo,
        }
    }
}

/// Outcome of one simulated configuration.
///
/// Wall time is kept out of serialization so that reports stay byte-identical
/// for identical inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub c_n_rate: f64,
    pub c_h_rate: f64,
    pub p_h1_etad: f64,
    pub s_estimate: EfficiencyEstimate,
    pub seed: u64,
    pub config_digest: String,
    pub slots_simulated: u64,
    pub triggers: u64,
    pub coincidences: u64,
    /// Coincidences where every port clicked regardless of photon identity.
    pub raw_coincidences: u64,
    pub heralds: u64,
    pub calibration_detections: u64,
    pub multi_pair_heralds: u64,
    #[serde(skip)]
    pub wall_time_s: f64,
}

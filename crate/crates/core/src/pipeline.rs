//! End-to-end slot-level simulation: source → controller → converter →
//! counters, and the herald-normalized efficiency estimate built from those counts.
//!
//! A simulation is `trials` independent runs of `slots` pulses each. Trial
//! `k` of grid point `g` draws from [`RngStream::for_grid_trial`]`(seed, g, k)`
//! and trial tallies are merged in trial order, so the result does not depend
//! on how trials are scheduled across threads.

use crate::controller::RunDetector;
use crate::converter::{self, ConverterError};
use crate::measurement::{self, CoincidenceCounter, Measured, MeasurementError};
use crate::model::{
    validate_config, ConfigViolations, ConverterConfig, ConverterParams, EfficiencyEstimate,
    SimulationReport, SlotRecord, SourceConfig, SourceParams, TriggerEvent,
};
use crate::rng::RngStream;
use crate::source::SlotSource;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigViolations),
    #[error(transparent)]
    Converter(#[from] ConverterError),
    #[error(transparent)]
    Measurement(#[from] MeasurementError),
    #[error("no {0}-herald triggers in {1} simulated slots; raise slots or pair_prob")]
    NoTriggers(usize, u64),
    #[error("no heralds to calibrate P_h(1)η_D against")]
    NoHeralds,
    #[error("trials must be at least 1")]
    ZeroTrials,
}

fn default_slots() -> u64 {
    10_000_000
}
fn default_trials() -> u32 {
    8
}
fn default_true() -> bool {
    true
}

/// Run controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunControls {
    #[serde(default)]
    pub seed: u64,
    /// Pump pulses per trial.
    #[serde(default = "default_slots")]
    pub slots: u64,
    #[serde(default = "default_trials")]
    pub trials: u32,
    /// Measure `P_h(1)η_D` from router-bypassed detections of single heralds.
    /// When off, the model's output detector efficiency is used as is.
    #[serde(default = "default_true")]
    pub calibration_mode: bool,
    /// Signal slot minus herald slot seen by the router; 0 is a perfectly
    /// compensated electrical delay.
    #[serde(default)]
    pub herald_signal_offset: i64,
}

impl Default for RunControls {
    fn default() -> Self {
        RunControls {
            seed: 0,
            slots: default_slots(),
            trials: default_trials(),
            calibration_mode: true,
            herald_signal_offset: 0,
        }
    }
}

/// Everything needed to reproduce one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub source: SourceConfig,
    pub converter: ConverterConfig,
    #[serde(default)]
    pub run: RunControls,
}

impl SimulationConfig {
    /// SHA-256 over the canonical JSON encoding, hex, first 16 bytes.
    ///
    /// Field order is fixed by the struct definitions, so the digest does not
    /// depend on key order in the file it was read from.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let hash = Sha256::digest(canonical.as_bytes());
        hash[..16].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<ValidatedSimulation, PipelineError> {
        let v = validate_config(&self.source, &self.converter)?;
        if self.run.trials == 0 {
            return Err(PipelineError::ZeroTrials);
        }
        Ok(ValidatedSimulation {
            source: v.source,
            converter: v.converter,
            run: self.run.clone(),
            digest: self.digest(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct ValidatedSimulation {
    pub source: SourceParams,
    pub converter: ConverterParams,
    pub run: RunControls,
    pub digest: String,
}

/// Raw tallies of one or more trials.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TrialCounts {
    pub slots: u64,
    pub heralds: u64,
    pub calibration_detections: u64,
    pub multi_pair_heralds: u64,
    pub counter: CoincidenceCounter,
}

impl TrialCounts {
    pub fn merge(&mut self, other: &TrialCounts) {
        self.slots += other.slots;
        self.heralds += other.heralds;
        self.calibration_detections += other.calibration_detections;
        self.multi_pair_heralds += other.multi_pair_heralds;
        self.counter.merge(&other.counter);
    }
}

struct Pending {
    kind: PendingKind,
    /// Last signal slot this item needs to look at.
    last_needed: i64,
}

enum PendingKind {
    Calibration(i64),
    Trigger(TriggerEvent),
}

struct TrialState<'a, R> {
    sim: &'a ValidatedSimulation,
    rng: R,
    counts: TrialCounts,
    present: Vec<bool>,
}

impl<R: Rng> TrialState<'_, R> {
    fn calibrate(&mut self, signal_here: bool) {
        let eta_d = self.sim.source.signal_det_efficiency();
        if signal_here && self.rng.random_bool(eta_d) {
            self.counts.calibration_detections += 1;
        }
    }

    fn convert(&mut self, trigger: &TriggerEvent) -> Result<(), ConverterError> {
        let eta_d = self.sim.source.signal_det_efficiency();
        let out = converter::route(trigger, &self.present, &self.sim.converter, eta_d, &mut self.rng)?;
        self.counts.counter.observe(&out);
        Ok(())
    }

    fn observe_herald(&mut self, rec: &SlotRecord) {
        self.counts.heralds += 1;
        if rec.signal_photons > 1 {
            self.counts.multi_pair_heralds += 1;
        }
    }
}

/// Runs one trial of `sim` on `stream`.
pub fn run_trial(sim: &ValidatedSimulation, stream: RngStream) -> Result<TrialCounts, PipelineError> {
    let n = sim.converter.n_modes();
    let mut st = TrialState {
        sim,
        rng: stream.rng(),
        counts: TrialCounts {
            slots: sim.run.slots,
            counter: CoincidenceCounter::new(n),
            ..Default::default()
        },
        present: vec![true; n],
    };
    let mut source = SlotSource::new(sim.source, sim.run.slots);
    let mut runs = RunDetector::new(n);
    let calibrate = sim.run.calibration_mode;
    let offset = sim.run.herald_signal_offset;

    if offset == 0 {
        // aligned delay: every herald slot holds its own signal photon
        while let Some(rec) = source.next_with(&mut st.rng) {
            if !rec.herald_effective() {
                runs.push(&rec);
                continue;
            }
            st.observe_herald(&rec);
            if calibrate {
                st.calibrate(true);
            }
            if let Some(t) = runs.push(&rec) {
                st.convert(&t)?;
            }
        }
        return Ok(st.counts);
    }

    // misaligned delay: look signal slots up in a window of recent pairs,
    // deferring work until the stream has passed the slots it needs
    let reach = n as i64 + offset.abs() + 1;
    let mut signals: VecDeque<i64> = VecDeque::new();
    let mut pending: VecDeque<Pending> = VecDeque::new();
    while let Some(rec) = source.next_with(&mut st.rng) {
        let now = rec.slot_index as i64;
        resolve_pending(&mut st, &signals, &mut pending, offset, now)?;
        signals.push_back(now);
        if rec.herald_effective() {
            st.observe_herald(&rec);
            if calibrate {
                pending.push_back(Pending {
                    kind: PendingKind::Calibration(now + offset),
                    last_needed: now + offset,
                });
            }
        }
        if let Some(t) = runs.push(&rec) {
            pending.push_back(Pending {
                kind: PendingKind::Trigger(t),
                last_needed: now + offset,
            });
        }
        resolve_pending(&mut st, &signals, &mut pending, offset, now + 1)?;
        while signals.front().is_some_and(|&s| s < now - reach) {
            signals.pop_front();
        }
    }
    resolve_pending(&mut st, &signals, &mut pending, offset, i64::MAX)?;
    Ok(st.counts)
}

fn resolve_pending<R: Rng>(
    st: &mut TrialState<'_, R>,
    signals: &VecDeque<i64>,
    pending: &mut VecDeque<Pending>,
    offset: i64,
    bound: i64,
) -> Result<(), ConverterError> {
    while pending.front().is_some_and(|p| p.last_needed < bound) {
        let p = pending.pop_front().expect("front checked");
        match p.kind {
            PendingKind::Calibration(slot) => {
                let here = signals.binary_search(&slot).is_ok();
                st.calibrate(here);
            }
            PendingKind::Trigger(t) => {
                for (j, flag) in st.present.iter_mut().enumerate() {
                    let slot = t.start_slot as i64 + j as i64 + offset;
                    *flag = signals.binary_search(&slot).is_ok();
                }
                st.convert(&t)?;
            }
        }
    }
    Ok(())
}

#[cfg(feature = "parallel")]
fn map_trials<T: Send>(
    trials: u32,
    f: impl Fn(u32) -> Result<T, PipelineError> + Sync + Send,
) -> Result<Vec<T>, PipelineError> {
    use rayon::prelude::*;
    (0..trials).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_trials<T>(
    trials: u32,
    f: impl Fn(u32) -> Result<T, PipelineError>,
) -> Result<Vec<T>, PipelineError> {
    (0..trials).map(f).collect()
}

/// Runs every trial of grid point `grid_index` and merges the tallies in trial order.
pub fn run_counts(sim: &ValidatedSimulation, grid_index: u32) -> Result<TrialCounts, PipelineError> {
    let parts = map_trials(sim.run.trials, |k| {
        run_trial(sim, RngStream::for_grid_trial(sim.run.seed, grid_index, k))
    })?;
    let mut total = TrialCounts {
        counter: CoincidenceCounter::new(sim.converter.n_modes()),
        ..Default::default()
    };
    for p in &parts {
        total.merge(p);
    }
    Ok(total)
}

/// Turns merged tallies into rates and the herald-normalized efficiency.
pub fn build_report(sim: &ValidatedSimulation, counts: &TrialCounts) -> Result<SimulationReport, PipelineError> {
    let n = sim.converter.n_modes();
    let rate = sim.source.rep_rate_hz();
    let triggers = counts.counter.triggers;
    if triggers == 0 {
        return Err(PipelineError::NoTriggers(n, counts.slots));
    }
    let c_h = measurement::poisson_rate(triggers, counts.slots, rate)?;
    let c_n = measurement::poisson_rate(counts.counter.coincidences, counts.slots, rate)?;
    let p_h1_etad = if sim.run.calibration_mode {
        if counts.heralds == 0 {
            return Err(PipelineError::NoHeralds);
        }
        Measured::proportion(counts.calibration_detections, counts.heralds)?
    } else {
        Measured::exact(sim.source.signal_det_efficiency())
    };
    let s_estimate: EfficiencyEstimate = measurement::estimate_s(c_n, c_h, p_h1_etad, n)?;
    Ok(SimulationReport {
        c_n_rate: c_n.value,
        c_h_rate: c_h.value,
        p_h1_etad: p_h1_etad.value,
        s_estimate,
        seed: sim.run.seed,
        config_digest: sim.digest.clone(),
        slots_simulated: counts.slots,
        triggers,
        coincidences: counts.counter.coincidences,
        raw_coincidences: counts.counter.raw_coincidences,
        heralds: counts.heralds,
        calibration_detections: counts.calibration_detections,
        multi_pair_heralds: counts.multi_pair_heralds,
        wall_time_s: 0.0,
    })
}

/// Full simulation of one configuration.
pub fn run_simulation(config: &SimulationConfig) -> Result<SimulationReport, PipelineError> {
    run_simulation_at(config, 0)
}

/// Same as [`run_simulation`] on the random substreams of grid point `grid_index`.
pub fn run_simulation_at(config: &SimulationConfig, grid_index: u32) -> Result<SimulationReport, PipelineError> {
    #[cfg(not(target_arch = "wasm32"))]
    let start = std::time::Instant::now();
    let sim = config.validate()?;
    let counts = run_counts(&sim, grid_index)?;
    #[allow(unused_mut)]
    let mut report = build_report(&sim, &counts)?;
    #[cfg(not(target_arch = "wasm32"))]
    {
        report.wall_time_s = start.elapsed().as_secs_f64();
    }
    Ok(report)
}

/// Converter-only Monte-Carlo: `trials` fully populated runs through
/// `params`, tallied like the pipeline does.
pub fn monte_carlo_conversion(
    params: &ConverterParams,
    eta_d: f64,
    trials: u64,
    stream: RngStream,
) -> Result<CoincidenceCounter, ConverterError> {
    let n = params.n_modes();
    let trigger = TriggerEvent {
        start_slot: 0,
        run_length: n,
    };
    let present = vec![true; n];
    let mut rng = stream.rng();
    let mut counter = CoincidenceCounter::new(n);
    for _ in 0..trials {
        let out = converter::route(&trigger, &present, params, eta_d, &mut rng)?;
        counter.observe(&out);
    }
    Ok(counter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Strategy;

    fn ideal(strategy: Strategy, n: usize) -> SimulationConfig {
        SimulationConfig {
            source: SourceConfig {
                pair_prob: 0.5,
                herald_det_efficiency: 1.0,
                herald_deadtime_ns: None,
                herald_deadtime_slots: Some(0),
                signal_det_efficiency: 1.0,
                ..Default::default()
            },
            converter: ConverterConfig {
                n_modes: n,
                strategy,
                transmittance: 1.0,
                port_efficiencies: vec![1.0; n],
            },
            run: RunControls {
                seed: 1,
                slots: 200_000,
                trials: 2,
                ..Default::default()
            },
        }
    }

    #[test]
    fn ideal_heralded_converts_everything() {
        let r = run_simulation(&ideal(Strategy::ActiveHeralded, 2)).unwrap();
        assert_eq!(r.coincidences, r.triggers);
        assert_eq!(r.s_estimate.value, 1.0);
        assert_eq!(r.p_h1_etad, 1.0);
        assert!((r.c_n_rate - r.c_h_rate).abs() < 1e-9);
    }

    #[test]
    fn clocked_and_passive_ideal_values() {
        for (strategy, n, expect) in [
            (Strategy::ActiveClocked, 2, 0.5),
            (Strategy::ActiveClocked, 3, 1.0 / 3.0),
            (Strategy::PassiveBeamsplitter, 2, 0.25),
        ] {
            let r = run_simulation(&ideal(strategy, n)).unwrap();
            let s = r.s_estimate;
            assert!((s.value - expect).abs() < 5.0 * s.std_error, "{strategy} n={n}: {s:?}");
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let cfg = ideal(Strategy::ActiveHeralded, 2);
        let mut cfg2 = cfg.clone();
        cfg2.converter.port_efficiencies = vec![0.9, 0.9];
        let a = run_simulation(&cfg2).unwrap();
        let b = run_simulation(&cfg2).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        cfg2.run.seed = 2;
        let c = run_simulation(&cfg2).unwrap();
        assert_ne!((a.triggers, a.coincidences), (c.triggers, c.coincidences));
        assert_ne!(a.config_digest, c.config_digest);
    }

    #[test]
    fn sparse_and_offset_paths_agree_at_zero_loss_of_alignment() {
        // with pair_prob = 1 every slot holds a photon, so a shifted delay
        // still finds a signal everywhere and the estimate stays ideal
        let mut cfg = ideal(Strategy::ActiveHeralded, 2);
        cfg.source.pair_prob = 1.0;
        cfg.source.herald_det_efficiency = 0.5;
        cfg.run.herald_signal_offset = 3;
        let r = run_simulation(&cfg).unwrap();
        assert_eq!(r.coincidences, r.triggers);
        cfg.run.herald_signal_offset = -2;
        let r = run_simulation(&cfg).unwrap();
        assert_eq!(r.coincidences, r.triggers);
    }

    #[test]
    fn misaligned_delay_degrades_conversion() {
        let mut cfg = ideal(Strategy::ActiveHeralded, 2);
        cfg.source.pair_prob = 0.3;
        let aligned = run_simulation(&cfg).unwrap();
        cfg.run.herald_signal_offset = 5;
        let shifted = run_simulation(&cfg).unwrap();
        assert_eq!(aligned.s_estimate.value, 1.0);
        // signal slots 5 later hold a photon with probability 0.3 each, and
        // the calibration sees the same misalignment, so the normalized
        // estimate stays at 1 while the raw conversion ratio collapses
        let raw = shifted.coincidences as f64 / shifted.triggers as f64;
        let se = (0.09f64 * 0.91 / shifted.triggers as f64).sqrt();
        assert!((raw - 0.09).abs() < 5.0 * se, "raw {raw}");
        assert!((shifted.p_h1_etad - 0.3).abs() < 0.01);
        let s = shifted.s_estimate;
        assert!((s.value - 1.0).abs() < 5.0 * s.std_error, "{s:?}");
    }

    #[test]
    fn no_triggers_is_an_error() {
        let mut cfg = ideal(Strategy::ActiveHeralded, 2);
        cfg.source.pair_prob = 0.0;
        assert!(matches!(run_simulation(&cfg), Err(PipelineError::NoTriggers(2, _))));
    }

    #[test]
    fn digest_tracks_values() {
        let a = ideal(Strategy::ActiveHeralded, 2);
        let mut b = a.clone();
        assert_eq!(a.digest(), b.digest());
        b.source.rep_rate_hz += 1.0;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 32);
    }

    #[test]
    fn converter_monte_carlo_counts() {
        let p = ConverterParams::uniform(Strategy::ActiveHeralded, 2, 1.0, 1.0).unwrap();
        let c = monte_carlo_conversion(&p, 1.0, 1000, RngStream::new(0, 0)).unwrap();
        assert_eq!(c.triggers, 1000);
        assert_eq!(c.coincidences, 1000);
    }
}

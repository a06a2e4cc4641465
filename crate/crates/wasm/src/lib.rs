//! Browser bindings. Every export returns a JSON string; the plain Rust
//! functions behind them are usable (and tested) without a browser.

use serde::Serialize;
use spconv_core::analytic::{efficiency_curves, s_closed_form};
use spconv_core::calibration::stationary_rates;
use spconv_core::controller::detect_runs;
use spconv_core::pipeline::monte_carlo_conversion;
use spconv_core::source::generate_slots;
use spconv_core::{ConverterParams, RngStream, SourceConfig, SourceParams, Strategy};
use wasm_bindgen::prelude::*;

/// Upper bounds that keep a page responsive.
pub const MAX_TRIALS: u64 = 5_000_000;
pub const MAX_TIMELINE_SLOTS: u64 = 20_000;
pub const MAX_MODES: usize = 12;

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

pub fn curves_json(n_max: usize, eta_sw: f64) -> Result<String, String> {
    if n_max > 64 {
        return Err(format!("n_max {n_max} is too large for the demo (max 64)"));
    }
    to_json(&efficiency_curves(n_max, eta_sw).map_err(|e| e.to_string())?)
}

#[derive(Debug, Serialize)]
pub struct RoutingSummary {
    pub strategy: Strategy,
    pub n_modes: usize,
    pub eta_sw: f64,
    pub trials: u64,
    pub success_frequency: f64,
    pub std_error: f64,
    pub closed_form: f64,
    /// `counts[i][k]`: photon `i` detected on port `k`.
    pub counts: Vec<Vec<u64>>,
    pub fractions: Vec<Vec<f64>>,
}

pub fn routing_summary(strategy: &str, n: usize, eta_sw: f64, trials: u64, seed: u64) -> Result<RoutingSummary, String> {
    let strategy: Strategy = strategy.parse()?;
    if n > MAX_MODES {
        return Err(format!("n = {n} is too large for the demo (max {MAX_MODES})"));
    }
    if trials == 0 || trials > MAX_TRIALS {
        return Err(format!("trials must be in 1..={MAX_TRIALS}"));
    }
    let params = ConverterParams::uniform(strategy, n, 1.0, eta_sw).map_err(|e| e.to_string())?;
    let c = monte_carlo_conversion(&params, 1.0, trials, RngStream::new(seed, 0)).map_err(|e| e.to_string())?;
    let freq = c.coincidences as f64 / trials as f64;
    Ok(RoutingSummary {
        strategy,
        n_modes: n,
        eta_sw,
        trials,
        success_frequency: freq,
        std_error: (freq * (1.0 - freq) / trials as f64).sqrt(),
        closed_form: s_closed_form(strategy, n, eta_sw).map_err(|e| e.to_string())?,
        fractions: c.routing.fractions(),
        counts: c.routing.counts,
    })
}

#[derive(Debug, Serialize)]
pub struct Timeline {
    pub slots: u64,
    pub signal: Vec<u64>,
    pub herald_a: Vec<u64>,
    pub herald_b: Vec<u64>,
    /// Start slots of detected runs.
    pub triggers: Vec<u64>,
    pub run_length: usize,
    pub herald_fraction: f64,
    pub herald_fraction_expected: f64,
}

pub fn herald_timeline(
    pair_prob: f64,
    herald_efficiency: f64,
    deadtime_slots: u32,
    n: usize,
    slots: u64,
    seed: u64,
) -> Result<Timeline, String> {
    if slots == 0 || slots > MAX_TIMELINE_SLOTS {
        return Err(format!("slots must be in 1..={MAX_TIMELINE_SLOTS}"));
    }
    if n == 0 || n > MAX_MODES {
        return Err(format!("run length must be in 1..={MAX_MODES}"));
    }
    let params = SourceParams::try_from(&SourceConfig {
        pair_prob,
        herald_det_efficiency: herald_efficiency,
        herald_deadtime_ns: None,
        herald_deadtime_slots: Some(deadtime_slots),
        ..Default::default()
    })
    .map_err(|e| e.to_string())?;
    let recs = generate_slots(&params, slots, RngStream::new(seed, 0).rng());
    let pick = |f: fn(&spconv_core::SlotRecord) -> bool| -> Vec<u64> {
        recs.iter().filter(|r| f(r)).map(|r| r.slot_index).collect()
    };
    let triggers = detect_runs(&recs, n).iter().map(|t| t.start_slot).collect();
    let heralds = recs.iter().filter(|r| r.herald_effective()).count();
    Ok(Timeline {
        slots,
        signal: pick(|r| r.signal_present()),
        herald_a: pick(|r| r.herald_a_fired),
        herald_b: pick(|r| r.herald_b_fired),
        triggers,
        run_length: n,
        herald_fraction: heralds as f64 / slots as f64,
        herald_fraction_expected: stationary_rates(&params, n).herald_fraction,
    })
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

/// Closed-form curves for all strategies, `n = 1..=n_max`.
#[wasm_bindgen]
pub fn curves(n_max: usize, eta_sw: f64) -> Result<String, JsValue> {
    js(curves_json(n_max, eta_sw))
}

/// Monte-Carlo routing of full runs: success rate and photon-to-port table.
#[wasm_bindgen]
pub fn route_histogram(strategy: &str, n: usize, eta_sw: f64, trials: u32, seed: u32) -> Result<String, JsValue> {
    js(routing_summary(strategy, n, eta_sw, u64::from(trials), u64::from(seed)).and_then(|s| to_json(&s)))
}

/// Slot-by-slot source output with herald detections and triggers.
#[wasm_bindgen]
pub fn timeline(
    pair_prob: f64,
    herald_efficiency: f64,
    deadtime_slots: u32,
    n: usize,
    slots: u32,
    seed: u32,
) -> Result<String, JsValue> {
    js(
        herald_timeline(pair_prob, herald_efficiency, deadtime_slots, n, u64::from(slots), u64::from(seed))
            .and_then(|t| to_json(&t)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curves_serialize() {
        let v: serde_json::Value = serde_json::from_str(&curves_json(4, 1.0).unwrap()).unwrap();
        assert_eq!(v["clocked"]["points"][0], serde_json::json!([2, 0.5]));
        assert!(curves_json(1, 1.0).is_err());
        assert!(curves_json(4, 1.5).is_err());
    }

    #[test]
    fn routing_matches_closed_form() {
        let s = routing_summary("clocked", 3, 0.8, 200_000, 1).unwrap();
        assert!((s.success_frequency - s.closed_form).abs() < 5.0 * s.std_error);
        assert_eq!(s.counts.len(), 3);
        for row in &s.fractions {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(routing_summary("sideways", 3, 0.8, 10, 1).is_err());
        assert!(routing_summary("passive", 3, 0.8, 0, 1).is_err());
    }

    #[test]
    fn timeline_respects_deadtime() {
        let t = herald_timeline(0.5, 0.9, 4, 2, 5_000, 3).unwrap();
        for fires in [&t.herald_a, &t.herald_b] {
            assert!(fires.windows(2).all(|w| w[1] - w[0] > 4));
        }
        assert!(t.triggers.windows(2).all(|w| w[1] >= w[0] + 2));
        assert!((t.herald_fraction - t.herald_fraction_expected).abs() < 0.05);
        assert!(herald_timeline(0.5, 0.9, 4, 2, 0, 3).is_err());
    }
}

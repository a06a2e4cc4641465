//! Exact stationary herald and trigger rates of the two-detector source, and
//! the inverse problem: the pair probability that produces a target n-run
//! herald rate.
//!
//! The per-slot state is `(blind_a, blind_b, run)`: remaining blind slots of
//! each detector and the number of unclaimed consecutive heralds so far.
//! Single-pair emission is assumed.

use crate::model::{ModelError, SourceParams};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("target rate {target} cps is above the reachable maximum {max} cps")]
    Unreachable { target: f64, max: f64 },
    #[error("target rate must be positive, got {0}")]
    NonPositiveTarget(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryRates {
    /// Fraction of slots with an effective herald.
    pub herald_fraction: f64,
    /// Triggers (greedy, non-overlapping n-runs) per slot.
    pub triggers_per_slot: f64,
}

struct Chain {
    d: usize,
    n: usize,
}

impl Chain {
    fn len(&self) -> usize {
        (self.d + 1) * (self.d + 1) * self.n
    }
    fn index(&self, a: usize, b: usize, run: usize) -> usize {
        (a * (self.d + 1) + b) * self.n + run
    }
    fn after_slot(&self, blind: usize, fired: bool) -> usize {
        if fired {
            self.d
        } else {
            blind.saturating_sub(1)
        }
    }
}

/// Solves the stationary distribution and reads off herald and trigger rates.
/// Multi-pair emission is not modelled here.
pub fn stationary_rates(params: &SourceParams, n: usize) -> StationaryRates {
    assert!(n >= 1);
    let chain = Chain {
        d: params.herald_deadtime_slots() as usize,
        n,
    };
    let p = params.pair_prob();
    let e = params.herald_det_efficiency();
    let r = params.herald_splitter_ratio();
    let p_a = p * r * e;
    let p_b = p * (1.0 - r) * e;

    let size = chain.len();
    let mut pi = vec![1.0 / size as f64; size];
    let mut next = vec![0.0; size];
    let (mut herald, mut trig) = (0.0, 0.0);
    for iter in 0..200_000 {
        next.iter_mut().for_each(|x| *x = 0.0);
        herald = 0.0;
        trig = 0.0;
        for a in 0..=chain.d {
            for b in 0..=chain.d {
                for run in 0..n {
                    let w = pi[chain.index(a, b, run)];
                    if w == 0.0 {
                        continue;
                    }
                    let fa = if a == 0 { p_a } else { 0.0 };
                    let fb = if b == 0 { p_b } else { 0.0 };
                    let quiet = 1.0 - fa - fb;
                    // lazy step (half stay) keeps deterministic-deadtime chains aperiodic
                    next[chain.index(a, b, run)] += 0.5 * w;
                    let w = 0.5 * w;
                    let herald_run = if run + 1 == n { 0 } else { run + 1 };
                    if run + 1 == n {
                        trig += 2.0 * w * (fa + fb);
                    }
                    herald += 2.0 * w * (fa + fb);
                    next[chain.index(chain.after_slot(a, true), chain.after_slot(b, false), herald_run)] +=
                        w * fa;
                    next[chain.index(chain.after_slot(a, false), chain.after_slot(b, true), herald_run)] +=
                        w * fb;
                    next[chain.index(chain.after_slot(a, false), chain.after_slot(b, false), 0)] +=
                        w * quiet;
                }
            }
        }
        let delta: f64 = pi.iter().zip(&next).map(|(x, y)| (x - y).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if delta < 1e-15 && iter > 4 {
            break;
        }
    }
    StationaryRates {
        herald_fraction: herald,
        triggers_per_slot: trig,
    }
}

/// Expected `C_h(n)` in counts per second.
pub fn trigger_rate_hz(params: &SourceParams, n: usize) -> f64 {
    stationary_rates(params, n).triggers_per_slot * params.rep_rate_hz()
}

/// Bisects `pair_prob` so that the stationary `C_h(n)` equals `target_hz`.
pub fn calibrate_pair_prob(
    params: &SourceParams,
    n: usize,
    target_hz: f64,
) -> Result<SourceParams, CalibrationError> {
    if target_hz.is_nan() || target_hz <= 0.0 {
        return Err(CalibrationError::NonPositiveTarget(target_hz));
    }
    let rate = |p: f64| -> Result<f64, CalibrationError> {
        Ok(trigger_rate_hz(&params.with_pair_prob(p)?, n))
    };
    let max = rate(1.0)?;
    if target_hz > max {
        return Err(CalibrationError::Unreachable {
            target: target_hz,
            max,
        });
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if rate(mid)? < target_hz {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(params.with_pair_prob(0.5 * (lo + hi))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SourceConfig;

    fn params(pair: f64, eff: f64, dead: u32, ratio: f64) -> SourceParams {
        SourceParams::try_from(&SourceConfig {
            pair_prob: pair,
            herald_det_efficiency: eff,
            herald_deadtime_ns: None,
            herald_deadtime_slots: Some(dead),
            herald_splitter_ratio: ratio,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn no_deadtime_is_bernoulli() {
        let q = 0.3 * 0.7;
        let r = stationary_rates(&params(0.3, 0.7, 0, 0.5), 1);
        assert!((r.herald_fraction - q).abs() < 1e-12);
        assert!((r.triggers_per_slot - q).abs() < 1e-12);
        // greedy pairs over i.i.d. heralds: renewal rate q^2 / (1 + q)
        let r2 = stationary_rates(&params(0.3, 0.7, 0, 0.5), 2);
        assert!((r2.triggers_per_slot - q * q / (1.0 + q)).abs() < 1e-12);
    }

    #[test]
    fn single_saturated_detector_fires_every_d_plus_one() {
        let r = stationary_rates(&params(1.0, 1.0, 4, 1.0), 1);
        assert!((r.herald_fraction - 0.2).abs() < 1e-12);
        assert!(stationary_rates(&params(1.0, 1.0, 4, 1.0), 2).triggers_per_slot < 1e-12);
    }

    #[test]
    fn calibration_hits_target() {
        let base = SourceParams::try_from(&SourceConfig::default()).unwrap();
        let cal = calibrate_pair_prob(&base, 2, 785.0).unwrap();
        assert!((trigger_rate_hz(&cal, 2) - 785.0).abs() < 1e-6);
        // a consecutive herald must use the other detector, so roughly half
        // of the naive p_h^2 rate survives
        let ph = cal.pair_prob() * cal.herald_det_efficiency();
        let naive = ph * ph * 82e6;
        assert!(naive > 1.8 * 785.0 && naive < 2.2 * 785.0, "naive {naive}");
    }

    #[test]
    fn calibration_errors() {
        let base = params(0.1, 0.5, 4, 0.5);
        assert!(matches!(
            calibrate_pair_prob(&base, 2, 1e12),
            Err(CalibrationError::Unreachable { .. })
        ));
        assert!(calibrate_pair_prob(&base, 2, 0.0).is_err());
    }
}

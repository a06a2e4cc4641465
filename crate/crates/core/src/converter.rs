//! Monte-Carlo routing of photon runs through the converter.
//!
//! Per photon the order of draws is: converter loss (heralded only), port
//! choice, output-detector thinning with `eta_d`. A photon that is not sent
//! to its intended port lands on one of the other ports uniformly.

use crate::model::{ConverterParams, OutputRecord, PhotonFate, Strategy, TriggerEvent};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConverterError {
    #[error("converter is configured for {configured} routing, not {requested}")]
    StrategyMismatch {
        configured: Strategy,
        requested: Strategy,
    },
    #[error("trigger run length {run_length} does not match {n_modes} output modes")]
    RunLengthMismatch { run_length: usize, n_modes: usize },
    #[error("photon presence list has {got} entries for a run of {expected}")]
    PresenceMismatch { expected: usize, got: usize },
    #[error("clock offset {offset} outside 0..{n}")]
    InvalidOffset { offset: usize, n: usize },
}

fn check_run(
    trigger: &TriggerEvent,
    present: &[bool],
    n_modes: usize,
) -> Result<(), ConverterError> {
    if trigger.run_length != n_modes {
        return Err(ConverterError::RunLengthMismatch {
            run_length: trigger.run_length,
            n_modes,
        });
    }
    if present.len() != trigger.run_length {
        return Err(ConverterError::PresenceMismatch {
            expected: trigger.run_length,
            got: present.len(),
        });
    }
    Ok(())
}

fn check_strategy(params: &ConverterParams, requested: Strategy) -> Result<(), ConverterError> {
    if params.strategy() != requested {
        return Err(ConverterError::StrategyMismatch {
            configured: params.strategy(),
            requested,
        });
    }
    Ok(())
}

/// Uniform port among the `n - 1` ports other than `avoid`; `None` when `n == 1`.
fn other_port<R: Rng + ?Sized>(avoid: usize, n: usize, rng: &mut R) -> Option<usize> {
    if n < 2 {
        return None;
    }
    let k = rng.random_range(0..n - 1);
    Some(if k >= avoid { k + 1 } else { k })
}

fn detect<R: Rng + ?Sized>(port: usize, eta_d: f64, rng: &mut R) -> PhotonFate {
    PhotonFate::Routed {
        port,
        detected: rng.random_bool(eta_d),
    }
}

/// Heralded active routing.
///
/// Each present photon `j` is lost with probability `1 - t`; a survivor exits
/// port `j` with probability `η_j` and otherwise a uniformly chosen other
/// port. With a single mode there is no other port and a misroute is a loss.
pub fn route_heralded<R: Rng + ?Sized>(
    trigger: &TriggerEvent,
    present: &[bool],
    params: &ConverterParams,
    eta_d: f64,
    rng: &mut R,
) -> Result<OutputRecord, ConverterError> {
    check_strategy(params, Strategy::ActiveHeralded)?;
    let n = params.n_modes();
    check_run(trigger, present, n)?;
    let t = params.transmittance();
    let fates = present
        .iter()
        .enumerate()
        .map(|(j, &here)| {
            if !here {
                return PhotonFate::Absent;
            }
            if !rng.random_bool(t) {
                return PhotonFate::Lost;
            }
            let port = if rng.random_bool(params.port_efficiencies()[j]) {
                Some(j)
            } else {
                other_port(j, n, rng)
            };
            match port {
                Some(p) => detect(p, eta_d, rng),
                None => PhotonFate::Lost,
            }
        })
        .collect();
    Ok(OutputRecord {
        trigger: *trigger,
        n_ports: n,
        fates,
    })
}

/// Uniform phase of a photon run against the divided pump clock.
pub fn clock_offset_draw<R: Rng + ?Sized>(rng: &mut R, n: usize) -> usize {
    rng.random_range(0..n)
}

/// Clock-driven routing without heralds.
///
/// Photon `j` is scheduled for port `(j + clock_offset) mod n`. It takes the
/// scheduled port with probability `η_SW` (loss is folded in), otherwise one
/// of the remaining ports uniformly. Success still means photon `j` on port `j`.
pub fn route_clocked<R: Rng + ?Sized>(
    trigger: &TriggerEvent,
    present: &[bool],
    clock_offset: usize,
    params: &ConverterParams,
    eta_d: f64,
    rng: &mut R,
) -> Result<OutputRecord, ConverterError> {
    check_strategy(params, Strategy::ActiveClocked)?;
    let n = params.n_modes();
    check_run(trigger, present, n)?;
    if clock_offset >= n {
        return Err(ConverterError::InvalidOffset {
            offset: clock_offset,
            n,
        });
    }
    let eta_sw = params.switching_efficiency();
    let fates = present
        .iter()
        .enumerate()
        .map(|(j, &here)| {
            if !here {
                return PhotonFate::Absent;
            }
            let scheduled = (j + clock_offset) % n;
            let port = if rng.random_bool(eta_sw) {
                Some(scheduled)
            } else {
                other_port(scheduled, n, rng)
            };
            match port {
                Some(p) => detect(p, eta_d, rng),
                None => PhotonFate::Lost,
            }
        })
        .collect();
    Ok(OutputRecord {
        trigger: *trigger,
        n_ports: n,
        fates,
    })
}

/// Lossless balanced beamsplitter tree: every photon picks a port uniformly.
pub fn route_passive<R: Rng + ?Sized>(
    trigger: &TriggerEvent,
    present: &[bool],
    n_modes: usize,
    eta_d: f64,
    rng: &mut R,
) -> Result<OutputRecord, ConverterError> {
    check_run(trigger, present, n_modes)?;
    let fates = present
        .iter()
        .map(|&here| {
            if !here {
                return PhotonFate::Absent;
            }
            let port = rng.random_range(0..n_modes);
            detect(port, eta_d, rng)
        })
        .collect();
    Ok(OutputRecord {
        trigger: *trigger,
        n_ports: n_modes,
        fates,
    })
}

/// Routes one run with whatever strategy `params` is configured for,
/// drawing a fresh clock offset for clocked routing.
pub fn route<R: Rng + ?Sized>(
    trigger: &TriggerEvent,
    present: &[bool],
    params: &ConverterParams,
    eta_d: f64,
    rng: &mut R,
) -> Result<OutputRecord, ConverterError> {
    match params.strategy() {
        Strategy::ActiveHeralded => route_heralded(trigger, present, params, eta_d, rng),
        Strategy::ActiveClocked => {
            let offset = clock_offset_draw(rng, params.n_modes());
            route_clocked(trigger, present, offset, params, eta_d, rng)
        }
        Strategy::PassiveBeamsplitter => {
            route_passive(trigger, present, params.n_modes(), eta_d, rng)
        }
    }
}

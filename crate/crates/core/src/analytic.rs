//! Closed-form conversion efficiencies of the three routing strategies.

use crate::model::Strategy;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("n must be at least 1")]
    ZeroModes,
    #[error("clocked conversion is defined for n >= 2 (got n = {0}); use s_heralded for a single mode")]
    ClockedNeedsTwoModes(usize),
    #[error("{name} = {value} is outside 0..=1")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("port efficiency list is empty")]
    EmptyPorts,
    #[error("n_max must be at least 2, got {0}")]
    NMaxTooSmall(usize),
}

fn check_unit(name: &'static str, value: f64) -> Result<(), AnalyticError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(AnalyticError::OutOfRange { name, value })
    }
}

/// Heralded active routing: every photon must be switched correctly, `η_SW^n`.
pub fn s_heralded(n: usize, eta_sw: f64) -> Result<f64, AnalyticError> {
    if n == 0 {
        return Err(AnalyticError::ZeroModes);
    }
    check_unit("eta_sw", eta_sw)?;
    Ok(eta_sw.powi(n as i32))
}

/// Clock-driven active routing without heralds.
///
/// The run's phase against the divided clock is uniform over `n` offsets.
/// Only the aligned offset routes photon `j` to port `j` on purpose; for the
/// other `n - 1` offsets every photon has to be misrouted onto exactly its
/// designated port, which happens with probability `(1 - η)/(n - 1)` each.
pub fn s_unheralded_clocked(n: usize, eta_sw: f64) -> Result<f64, AnalyticError> {
    if n < 2 {
        return Err(AnalyticError::ClockedNeedsTwoModes(n));
    }
    check_unit("eta_sw", eta_sw)?;
    let ni = n as i32;
    let m = (n - 1) as f64;
    let aligned = eta_sw.powi(ni);
    let misaligned = m * ((1.0 - eta_sw) / m).powi(ni);
    Ok((aligned + misaligned) / n as f64)
}

/// Balanced lossless beamsplitter tree: `(1/n)^n`. Independent of `η_SW`.
pub fn s_passive(n: usize) -> Result<f64, AnalyticError> {
    if n == 0 {
        return Err(AnalyticError::ZeroModes);
    }
    Ok((1.0 / n as f64).powi(n as i32))
}

/// `t` times the mean of the per-port routing efficiencies.
pub fn switching_efficiency(t: f64, port_efficiencies: &[f64]) -> Result<f64, AnalyticError> {
    check_unit("t", t)?;
    if port_efficiencies.is_empty() {
        return Err(AnalyticError::EmptyPorts);
    }
    for &e in port_efficiencies {
        check_unit("port efficiency", e)?;
    }
    let mean = port_efficiencies.iter().sum::<f64>() / port_efficiencies.len() as f64;
    Ok(t * mean)
}

/// Closed-form efficiency of `strategy` at `n` modes.
pub fn s_closed_form(strategy: Strategy, n: usize, eta_sw: f64) -> Result<f64, AnalyticError> {
    match strategy {
        Strategy::ActiveHeralded => s_heralded(n, eta_sw),
        Strategy::ActiveClocked => s_unheralded_clocked(n, eta_sw),
        Strategy::PassiveBeamsplitter => s_passive(n),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyCurve {
    pub strategy: Strategy,
    pub eta_sw: f64,
    /// `(n, S(n))` with strictly increasing `n`.
    pub points: Vec<(usize, f64)>,
}

impl EfficiencyCurve {
    pub fn at(&self, n: usize) -> Option<f64> {
        self.points.iter().find(|(k, _)| *k == n).map(|(_, s)| *s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyCurves {
    pub heralded: EfficiencyCurve,
    pub clocked: EfficiencyCurve,
    pub passive: EfficiencyCurve,
}

impl EfficiencyCurves {
    pub fn iter(&self) -> impl Iterator<Item = &EfficiencyCurve> {
        [&self.heralded, &self.clocked, &self.passive].into_iter()
    }
}

/// Tabulates the three strategies for `n = 1..=n_max`; the clocked curve starts at 2.
pub fn efficiency_curves(n_max: usize, eta_sw: f64) -> Result<EfficiencyCurves, AnalyticError> {
    if n_max < 2 {
        return Err(AnalyticError::NMaxTooSmall(n_max));
    }
    check_unit("eta_sw", eta_sw)?;
    let curve = |strategy: Strategy, start: usize| -> Result<EfficiencyCurve, AnalyticError> {
        let points = (start..=n_max)
            .map(|n| s_closed_form(strategy, n, eta_sw).map(|s| (n, s)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(EfficiencyCurve {
            strategy,
            eta_sw,
            points,
        })
    };
    Ok(EfficiencyCurves {
        heralded: curve(Strategy::ActiveHeralded, 1)?,
        clocked: curve(Strategy::ActiveClocked, 2)?,
        passive: curve(Strategy::PassiveBeamsplitter, 1)?,
    })
}

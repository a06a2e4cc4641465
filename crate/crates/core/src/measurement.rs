//! Estimators applied to counted events: coincidence rates, the
//! herald-normalized conversion efficiency, transmittance compensation and
//! routing efficiencies.
//!
//! Raw counts are Poisson (`σ = √N`); rates inherit the relative error of
//! their count and relative errors combine in quadrature through products,
//! quotients and powers.

use crate::model::{EfficiencyEstimate, EstimateMethod, OutputRecord, PhotonFate, TriggerEvent};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasurementError {
    #[error("no slots simulated")]
    ZeroSlots,
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("count must be positive for Poisson propagation")]
    NonPositiveCount,
    #[error("photon {0} was never detected; routing efficiency undefined")]
    ZeroConditioning(usize),
    #[error("expected {expected} correction factors, got {got}")]
    CorrectionMismatch { expected: usize, got: usize },
}

/// A value with its one-sigma standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub value: f64,
    pub std_error: f64,
}

impl Measured {
    pub fn new(value: f64, std_error: f64) -> Self {
        Measured { value, std_error }
    }

    pub fn exact(value: f64) -> Self {
        Measured::new(value, 0.0)
    }

    /// A raw count with Poisson error.
    pub fn poisson(count: u64) -> Result<Self, MeasurementError> {
        if count == 0 {
            return Err(MeasurementError::NonPositiveCount);
        }
        let n = count as f64;
        Ok(Measured::new(n, n.sqrt()))
    }

    /// Binomial proportion `k / n`.
    pub fn proportion(k: u64, n: u64) -> Result<Self, MeasurementError> {
        if n == 0 {
            return Err(MeasurementError::NonPositiveCount);
        }
        let p = k as f64 / n as f64;
        Ok(Measured::new(p, (p * (1.0 - p) / n as f64).sqrt()))
    }

    pub fn relative_error(&self) -> f64 {
        self.std_error / self.value.abs()
    }

    pub fn scaled(self, factor: f64) -> Self {
        Measured::new(self.value * factor, self.std_error * factor.abs())
    }
}

/// Count rate in events per second over `slots` pump pulses at `rep_rate_hz`.
///
/// A zero count keeps a one-count error bar so that downstream propagation
/// stays finite.
pub fn poisson_rate(count: u64, slots: u64, rep_rate_hz: f64) -> Result<Measured, MeasurementError> {
    if slots == 0 {
        return Err(MeasurementError::ZeroSlots);
    }
    let per_count = rep_rate_hz / slots as f64;
    let sigma = (count as f64).sqrt().max(if count == 0 { 1.0 } else { 0.0 });
    Ok(Measured::new(count as f64 * per_count, sigma * per_count))
}

/// Herald and coincidence rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub c_n_rate: f64,
    pub c_h_rate: f64,
}

/// Running tally of converter outputs; partial tallies merge by addition.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CoincidenceCounter {
    pub triggers: u64,
    /// Runs where photon `j` was detected on port `j` for all `j`.
    pub coincidences: u64,
    /// Runs where every port clicked, whichever photon caused it.
    pub raw_coincidences: u64,
    pub routing: RoutingTable,
}

impl CoincidenceCounter {
    pub fn new(n_modes: usize) -> Self {
        CoincidenceCounter {
            routing: RoutingTable::new(n_modes),
            ..Default::default()
        }
    }

    pub fn observe(&mut self, out: &OutputRecord) {
        self.triggers += 1;
        if out.designated_success() {
            self.coincidences += 1;
        }
        if out.all_ports_detected() {
            self.raw_coincidences += 1;
        }
        self.routing.record(out);
    }

    pub fn merge(&mut self, other: &CoincidenceCounter) {
        self.triggers += other.triggers;
        self.coincidences += other.coincidences;
        self.raw_coincidences += other.raw_coincidences;
        self.routing.merge(&other.routing);
    }
}

/// `C_h(n)` from the trigger count and `C(n)` from the fully converted runs,
/// both per second.
pub fn count_rates(
    outputs: &[OutputRecord],
    triggers: &[TriggerEvent],
    slots_simulated: u64,
    rep_rate_hz: f64,
) -> Result<Rates, MeasurementError> {
    if slots_simulated == 0 {
        return Err(MeasurementError::ZeroSlots);
    }
    let per_count = rep_rate_hz / slots_simulated as f64;
    let converted = outputs.iter().filter(|o| o.designated_success()).count();
    Ok(Rates {
        c_n_rate: converted as f64 * per_count,
        c_h_rate: triggers.len() as f64 * per_count,
    })
}

/// Uncertainty propagation recipes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Propagation {
    /// `numerator / denominator`.
    Quotient {
        numerator: Measured,
        denominator: Measured,
    },
    /// `(C(n) / C_h(n)) / (P_h(1) η_D)^n`.
    HeraldNormalized {
        c_n: Measured,
        c_h: Measured,
        p_h1_etad: Measured,
        n: usize,
    },
}

/// Absolute standard error of the quantity described by `p`.
///
/// Terms are combined in absolute form (partial derivative times sigma), which
/// equals relative-error quadrature for nonzero values and stays finite when
/// the numerator is zero.
pub fn propagate_counting_uncertainty(p: &Propagation) -> Result<f64, MeasurementError> {
    match *p {
        Propagation::Quotient {
            numerator,
            denominator,
        } => {
            if denominator.value <= 0.0 {
                return Err(MeasurementError::NonPositive("denominator"));
            }
            if numerator.value < 0.0 {
                return Err(MeasurementError::NonPositive("numerator"));
            }
            let q = numerator.value / denominator.value;
            let a = numerator.std_error / denominator.value;
            let b = q * denominator.relative_error();
            Ok(a.hypot(b))
        }
        Propagation::HeraldNormalized {
            c_n,
            c_h,
            p_h1_etad,
            n,
        } => {
            if c_h.value <= 0.0 {
                return Err(MeasurementError::NonPositive("C_h(n)"));
            }
            if p_h1_etad.value <= 0.0 {
                return Err(MeasurementError::NonPositive("P_h(1)η_D"));
            }
            if c_n.value < 0.0 {
                return Err(MeasurementError::NonPositive("C(n)"));
            }
            let norm = c_h.value * p_h1_etad.value.powi(n as i32);
            let s = c_n.value / norm;
            let a = c_n.std_error / norm;
            let b = s * c_h.relative_error();
            let c = s * n as f64 * p_h1_etad.relative_error();
            Ok((a * a + b * b + c * c).sqrt())
        }
    }
}

/// Herald-normalized conversion efficiency, corrected for source and
/// detector efficiency.
pub fn estimate_s(
    c_n: Measured,
    c_h: Measured,
    p_h1_etad: Measured,
    n: usize,
) -> Result<EfficiencyEstimate, MeasurementError> {
    let std_error = propagate_counting_uncertainty(&Propagation::HeraldNormalized {
        c_n,
        c_h,
        p_h1_etad,
        n,
    })?;
    Ok(EfficiencyEstimate {
        value: c_n.value / c_h.value / p_h1_etad.value.powi(n as i32),
        std_error,
        method: EstimateMethod::HeraldNormalized,
    })
}

/// Divides out the converter transmittance, `S / t^n`.
pub fn compensate_transmittance(
    s: EfficiencyEstimate,
    t: Measured,
    n: usize,
) -> Result<EfficiencyEstimate, MeasurementError> {
    if t.value <= 0.0 {
        return Err(MeasurementError::NonPositive("transmittance"));
    }
    let tn = t.value.powi(n as i32);
    let value = s.value / tn;
    let a = s.std_error / tn;
    let b = value * n as f64 * t.relative_error();
    Ok(EfficiencyEstimate {
        value,
        std_error: a.hypot(b),
        method: s.method,
    })
}

/// Detected photons tabulated by run position (row) and output port (column).
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RoutingTable {
    pub counts: Vec<Vec<u64>>,
}

impl RoutingTable {
    pub fn new(n: usize) -> Self {
        RoutingTable {
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn n_modes(&self) -> usize {
        self.counts.len()
    }

    pub fn record(&mut self, out: &OutputRecord) {
        for (j, fate) in out.fates.iter().enumerate() {
            if let PhotonFate::Routed {
                port,
                detected: true,
            } = *fate
            {
                self.counts[j][port] += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &RoutingTable) {
        if self.counts.is_empty() {
            self.counts = other.counts.clone();
            return;
        }
        for (row, orow) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(orow) {
                *c += o;
            }
        }
    }

    /// Row-normalized table: empirical `P(photon i → port k)`.
    pub fn fractions(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let total: u64 = row.iter().sum();
                row.iter()
                    .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
                    .collect()
            })
            .collect()
    }
}

/// `η_i` = fraction of detected photon `i` found on port `i`, divided by the
/// supplied correction factor, with its binomial standard error.
pub fn estimate_routing_efficiencies(
    table: &RoutingTable,
    corrections: &[f64],
) -> Result<Vec<Measured>, MeasurementError> {
    let n = table.n_modes();
    if corrections.len() != n {
        return Err(MeasurementError::CorrectionMismatch {
            expected: n,
            got: corrections.len(),
        });
    }
    table
        .counts
        .iter()
        .zip(corrections)
        .enumerate()
        .map(|(i, (row, &corr))| {
            if corr <= 0.0 {
                return Err(MeasurementError::NonPositive("correction factor"));
            }
            let total: u64 = row.iter().sum();
            if total == 0 {
                return Err(MeasurementError::ZeroConditioning(i));
            }
            Ok(Measured::proportion(row[i], total)?.scaled(1.0 / corr))
        })
        .collect()
}

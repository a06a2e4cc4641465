//! Serial-parallel conversion of heralded single-photon streams.
//!
//! The crate covers both sides of the problem: closed-form conversion
//! efficiencies for heralded, clock-driven and passive routing
//! ([`analytic`]), and a slot-level Monte-Carlo of the full
//! herald → trigger → route → detect chain ([`source`], [`controller`],
//! [`converter`], [`pipeline`]) whose counts go through the same
//! estimators an experiment would use ([`measurement`]).

pub mod analytic;
pub mod calibration;
pub mod controller;
pub mod converter;
pub mod measurement;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod source;

pub use model::{
    validate_config, ConverterConfig, ConverterParams, EfficiencyEstimate, EstimateMethod,
    OutputRecord, PhotonFate, SimulationReport, SlotRecord, SourceConfig, SourceParams, Strategy,
    TriggerEvent,
};
pub use rng::RngStream;

//! Library side of the `spconv` command: config and report files, CSV
//! emission and the four verbs.

pub mod commands;
pub mod error;
pub mod io;

pub use commands::{grid_points, run_analytic, run_calibrate, run_simulation, run_sweep, RunOverrides, SweepGrid};
pub use error::CliError;

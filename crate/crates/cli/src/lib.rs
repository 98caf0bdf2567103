//! Sweep harness and g-factor extraction on top of the core library.
//!
//! This crate owns the experiment-emulation layer: flat key-value
//! configuration, the deterministic sweep engine, and the inverse readout
//! recovering the g-factor from any strictly monotone swept observable.
//! The `spintrap` binary is a thin command-line front end over these
//! pieces plus the core reports.

pub mod config;
pub mod extract;
pub mod sweep;

pub use config::{parse_key_values, BranchSelect, ConfigError, SweepConfig};
pub use extract::{extract_g, ExtractError, GExtraction, MonotoneCubic};
pub use sweep::{run_sweep, run_sweep_with, SweepError, SweepOutput, SweepRow, CSV_COLUMNS};

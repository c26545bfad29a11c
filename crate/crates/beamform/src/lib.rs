//! Experiment driver for two-way relay beamforming: configuration and presets,
//! parallel seeded sweeps, CSV output and channel snapshots.

pub mod channel_dump;
pub mod config;
pub mod csv_out;
pub mod sweep;

pub use config::{ConfigError, ExperimentConfig, GridPoint};
pub use sweep::{run_sweep, SweepRow};

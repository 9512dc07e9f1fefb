//! Experiment configuration, drive calibration and the Monte-Carlo engine.

pub mod config;
pub mod drive;
pub mod rng;
pub mod sim;

pub use config::{Equalizer, ExperimentConfig, InterleaverChoice, SchemeConfig, SchemeKind};
pub use drive::{average_power_to_drive, Calibration, Drive};
pub use sim::{
    run_point, sweep, write_csv, AnalyticRecord, BerRecord, Simulation, SnrRecord, BER_HEADER,
};

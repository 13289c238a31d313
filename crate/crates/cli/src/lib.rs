//! Experiment drivers and configuration for the cascaded-emitter simulator.
//! The binary is a thin clap wrapper over [`drivers`].

pub mod config;
pub mod drivers;
pub mod output;

pub use config::ExperimentConfig;
pub use output::Manifest;

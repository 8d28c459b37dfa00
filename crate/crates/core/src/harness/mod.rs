//! Experiment configuration, simulation, metrics and plotting.

pub mod config;
pub mod metrics;
pub mod plot;
pub mod runner;
pub mod verify;

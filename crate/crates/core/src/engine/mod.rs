//! Simulation kernel: global cycle clock, delayed spike routing and the two
//! interchangeable execution modes.
//!
//! Internally all times are measured in cycles (`t / T`), so the phase of
//! any instant is its fractional part.

mod config;
mod network;
mod record;
mod run;

pub use config::{Mode, SimConfig};
pub use network::{Connection, Network, NetworkBuilder, Population, Port, Synapse};
pub use record::{Anomaly, DecodedPhase, SpikeEvent, SpikeRecord};
pub use run::run;

use thiserror::Error;

/// Neuron index, global across all populations of a network.
pub type NeuronId = usize;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid network: {0}")]
    Validation(String),
    #[error("non-finite state in neuron {neuron} at t = {time_s} s")]
    NonFinite { neuron: NeuronId, time_s: f64 },
    #[error("network period {network} s does not match configured period {config} s")]
    PeriodMismatch { network: f64, config: f64 },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

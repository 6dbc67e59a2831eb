//! Lowering of VSA expressions to spiking networks.
//!
//! Bind, unbind, bundle and power each become one population of `N`
//! integrator neurons wired component-wise. Permutation only reorders which
//! neurons carry which component. Clean-up becomes a G/H resonator assembly
//! of `N + M` neurons.

mod description;
mod expr;
mod lower;

pub use description::{blob_hash, NetworkDescription, PopulationDesc, PopulationModel, ReadoutTap, TapKind};
pub use expr::{ParseError, VsaExpr};
pub use lower::{compile, neuron_count, phases_to_delays, CleanupAssembly, CleanupParams, CompileOptions, Compiler};

use thiserror::Error;

use crate::engine::EngineError;
use crate::fhrr::FhrrError;

#[derive(Debug, Error)]
pub enum CompileError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Fhrr(#[from] FhrrError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

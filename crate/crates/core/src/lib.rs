//! Fourier holographic reduced representations computed with spike timing.
//!
//! [`fhrr`] is the exact complex-vector algebra. [`neurons`] and [`engine`]
//! simulate integrator neurons whose spike phase within a global cycle
//! carries one vector component. [`compiler`] lowers symbolic expressions to
//! networks, [`readout`] decodes them back to vectors, and [`experiments`]
//! wires everything into runnable experiments.

pub mod compiler;
pub mod engine;
pub mod experiments;
pub mod fhrr;
pub mod neurons;
pub mod phase;
pub mod readout;

//! Pulse-level simulation of a linear quantum-dot spin-qubit array.
//!
//! The crate is split along the simulation pipeline:
//!
//! - [`model`]: device profiles, control schedules and state containers.
//! - [`engine`]: Hamiltonian assembly and time integration.
//! - [`compiler`]: logical gates and circuits to calibrated schedules.
//! - [`protocols`]: Bell preparation, entanglement swapping, teleportation
//!   and the exact gate-level oracle.
//! - [`analysis`]: fidelities, concurrence, partial traces, noise sweeps.
//!
//! Basis convention: bit `i` of a state index is the spin of dot `i`
//! (0-based, so dot 1 of the array is the lowest-order bit), with
//! `|0> = |down>` and `|1> = |up>`. Dot arguments in the library API are
//! 0-based; the circuit text format and all exported labels are 1-based.

pub mod analysis;
pub mod compiler;
pub mod engine;
mod error;
pub mod linalg;
pub mod model;
pub mod protocols;

pub use error::{Error, Result};
pub use linalg::C64;

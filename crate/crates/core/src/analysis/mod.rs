//! Fidelity, concurrence and partial-trace metrics, and the charge-noise
//! sweep driver.

mod metrics;
mod sweep;

pub use metrics::{concurrence, partial_trace, partial_trace_state, process_fidelity, purity, state_fidelity};
pub use sweep::{noise_sweep, SweepPoint, SweepResult, DEFAULT_GRID};

//! Logical gates and circuits to calibrated pulse schedules.
//!
//! Single-qubit rotations become weak-mode segments with one resonant tone
//! per rotated dot plus weak compensation tones that cancel the off-resonant
//! pull of the global field on every other dot. `R_Z` is virtual. Two-qubit
//! gates switch one pair into its strong-exchange mode; the exchange dwell is
//! split around a short idle gap so the flip-flop part of the interaction
//! returns all population to the computational states.

mod builder;
mod calibrate;
mod circuit;
mod selective;

pub use builder::{compile_circuit, compile_gate, ScheduleBuilder};
pub use calibrate::{calibrate, Calibration, CalibrationOptions, CzCalibration, RotationTiming};
pub use circuit::{Circuit, GateSpec};

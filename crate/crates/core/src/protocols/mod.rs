//! Bell preparation, entanglement swapping and teleportation on the
//! five-dot register, plus the single-gate characterization runs.
//!
//! Measurements are branch-enumerated: every outcome is kept with its
//! probability. Dot indices are 0-based here; labels such as `"du"` list the
//! measured spins in ascending dot order.

mod characterization;
mod corrections;
mod experiments;
pub mod oracle;

use serde::{Deserialize, Serialize};

use crate::compiler::{calibrate, Calibration, CalibrationOptions, Circuit, GateSpec};
use crate::engine::{Frame, IntegratorConfig};
use crate::model::DeviceProfile;
use crate::{Error, Result};

pub use characterization::{cnot_truth_table, rabi, CnotTable, RabiRun, TruthRow};
pub use corrections::{derive_corrections, CorrectionRule, Pauli};
pub use experiments::{
    bell_prep, entanglement_swap, entanglement_swap_with, inject_channel, sample_outcomes, teleport, teleport_from,
    teleport_span, teleport_with, BellPrepResult, BranchResult, SwapResult, TeleportBranch, TeleportResult,
};
pub use oracle::BellState;

/// How Bob's Pauli corrections are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionMode {
    /// Ideal Paulis applied to the reduced state after the run.
    #[default]
    PostProcess,
    /// Corrections compiled to pulses and simulated per branch.
    Pulses,
}

/// Everything a protocol run needs besides its own parameters.
#[derive(Debug, Clone)]
pub struct ProtocolContext {
    /// Noise-free device the schedules are compiled for.
    pub profile: DeviceProfile,
    pub calibration: Calibration,
    pub frame: Frame,
    pub integrator: IntegratorConfig,
    pub corrections: CorrectionMode,
}

impl ProtocolContext {
    /// Calibrates `profile`. Calibration segments carry no drive, so the
    /// rwa and lab frames coincide there and the cheaper one is used.
    pub fn new(profile: DeviceProfile, frame: Frame, integrator: IntegratorConfig, options: &CalibrationOptions) -> Result<Self> {
        if profile.n_dots != 5 {
            return Err(Error::Invalid(format!("protocols need a five-dot profile, got {}", profile.n_dots)));
        }
        let calibration = calibrate(&profile, Frame::Rwa, &IntegratorConfig::for_frame(Frame::Rwa), options)?;
        Ok(ProtocolContext {
            profile,
            calibration,
            frame,
            integrator,
            corrections: CorrectionMode::default(),
        })
    }

    /// Reference profile in the rwa frame with default settings.
    pub fn reference() -> Result<Self> {
        Self::new(
            DeviceProfile::reference(),
            Frame::Rwa,
            IntegratorConfig::for_frame(Frame::Rwa),
            &CalibrationOptions::default(),
        )
    }

    pub fn with_corrections(mut self, mode: CorrectionMode) -> Self {
        self.corrections = mode;
        self
    }
}

/// `H 2 | H 4; CNOT 2 1; CNOT 4 3`: Phi+ on dots (1, 2) and (3, 4).
pub fn bell_prep_circuit() -> Circuit {
    Circuit::new()
        .then(vec![GateSpec::H { dot: 1 }, GateSpec::H { dot: 3 }])
        .then(vec![GateSpec::Cnot { control: 1, target: 0 }])
        .then(vec![GateSpec::Cnot { control: 3, target: 2 }])
}

/// Bell-measurement basis change on `(lower, lower + 1)`: CNOT with the
/// upper dot as control, then H on the upper dot. Projecting the lower dot
/// then reads the parity and the upper dot the relative sign.
pub fn bell_measurement(lower: usize) -> Circuit {
    Circuit::new()
        .then(vec![GateSpec::Cnot { control: lower + 1, target: lower }])
        .then(vec![GateSpec::H { dot: lower + 1 }])
}

/// Outcome on dots (2, 3) to the Bell state left on dots (1, 4).
pub const SWAP_TABLE: [(&str, BellState); 4] = [
    ("dd", BellState::PhiPlus),
    ("du", BellState::PhiMinus),
    ("ud", BellState::PsiPlus),
    ("uu", BellState::PsiMinus),
];

/// Dots measured by the swap.
pub const SWAP_MEASURED: [usize; 2] = [1, 2];
/// Dots left entangled by the swap.
pub const SWAP_PAIR: [usize; 2] = [0, 3];

#[cfg(test)]
mod tests {
    use super::oracle::{apply_circuit, embed, outcome_label, project, two_spin_outcomes};
    use super::*;
    use crate::analysis::{partial_trace_state, state_fidelity};
    use crate::model::QuantumState;

    #[test]
    fn oracle_bell_prep() {
        let s = apply_circuit(&QuantumState::ground(5), &bell_prep_circuit()).unwrap();
        let phi = BellState::PhiPlus.state();
        let expect = embed(5, &[(&[0, 1], &phi), (&[2, 3], &phi)]).unwrap();
        assert!((s.overlap(&expect) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn swap_table_follows_from_the_measurement_convention() {
        let s = apply_circuit(&QuantumState::ground(5), &bell_prep_circuit().extend(&bell_measurement(1))).unwrap();
        for (o, (label, bell)) in two_spin_outcomes().iter().zip(SWAP_TABLE) {
            assert_eq!(outcome_label(o), label);
            let (p, post) = project(&s, &SWAP_MEASURED, o).unwrap();
            assert!((p - 0.25).abs() < 1e-12);
            let rho = partial_trace_state(&post.unwrap(), &SWAP_PAIR).unwrap();
            assert!((state_fidelity(&rho, &bell.state()).unwrap() - 1.0).abs() < 1e-12, "{label}");
        }
    }
}

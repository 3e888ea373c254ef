use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::oracle::{apply_circuit, embed, outcome_label, project, two_spin_outcomes, BellState};
use super::bell_measurement;
use crate::analysis::{partial_trace_state, state_fidelity};
use crate::compiler::GateSpec;
use crate::linalg::{pauli_x, pauli_z, CMat, C64};
use crate::model::{DensityMatrix, QuantumState};
use crate::{Error, Result};

/// Pauli correction applied to the receiving dot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Z,
    /// The product `X Z` (Z acts first).
    XZ,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Z, Pauli::XZ];

    pub fn matrix(self) -> CMat {
        match self {
            Pauli::I => CMat::identity(2, 2),
            Pauli::X => pauli_x(),
            Pauli::Z => pauli_z(),
            Pauli::XZ => pauli_x() * pauli_z(),
        }
    }

    /// Logical gates realizing the Pauli up to a global phase.
    pub fn gates(self, dot: usize) -> Vec<GateSpec> {
        match self {
            Pauli::I => vec![],
            Pauli::X => vec![GateSpec::Rz { dot, angle: PI }, GateSpec::Ry { dot, angle: PI }],
            Pauli::Z => vec![GateSpec::Rz { dot, angle: PI }],
            Pauli::XZ => vec![GateSpec::Ry { dot, angle: PI }],
        }
    }

    /// `P rho P^dagger` on a one-qubit density matrix.
    pub fn apply(self, rho: &DensityMatrix) -> DensityMatrix {
        let p = self.matrix();
        DensityMatrix::from_raw(1, &p * rho.matrix() * p.adjoint())
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pauli::I => "I",
            Pauli::X => "X",
            Pauli::Z => "Z",
            Pauli::XZ => "XZ",
        })
    }
}

/// Outcome label of the two measured dots (e.g. `"du"`) to correction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionRule {
    pub channel: BellState,
    pub table: BTreeMap<String, Pauli>,
}

impl CorrectionRule {
    pub fn get(&self, outcome: &str) -> Result<Pauli> {
        self.table
            .get(outcome)
            .copied()
            .ok_or_else(|| Error::NoCorrection(format!("no correction for outcome `{outcome}`")))
    }
}

/// Teleportation layout: channel on `(receiver, partner)`, input on
/// `sender`, Bell measurement on `(partner, sender)`.
pub(crate) const RECEIVER: usize = 0;
pub(crate) const PARTNER: usize = 3;
pub(crate) const SENDER: usize = 4;
pub(crate) const N_DOTS: usize = 5;

/// Brute-forces, with the exact oracle, the Pauli on the receiver that
/// restores the input for every Bell-measurement outcome, when `channel`
/// links receiver and partner.
pub fn derive_corrections(channel: BellState) -> Result<CorrectionRule> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let inputs = [
        [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        [C64::new(h, 0.0), C64::new(h, 0.0)],
        [C64::new(h, 0.0), C64::new(0.0, h)],
    ];
    let measure = bell_measurement(PARTNER);
    let mut table = BTreeMap::new();
    for outcome in two_spin_outcomes() {
        let mut fits = Vec::new();
        for pauli in Pauli::ALL {
            let mut worst = 1.0f64;
            for amps in &inputs {
                let psi = QuantumState::product(&[*amps])?;
                let s = embed(N_DOTS, &[(&[RECEIVER, PARTNER], &channel.state()), (&[SENDER], &psi)])?;
                let s = apply_circuit(&s, &measure)?;
                let (_, post) = project(&s, &[PARTNER, SENDER], &outcome)?;
                let post = post.ok_or_else(|| Error::NoCorrection("outcome has zero probability".into()))?;
                let rho = pauli.apply(&partial_trace_state(&post, &[RECEIVER])?);
                worst = worst.min(state_fidelity(&rho, &psi)?);
            }
            if worst > 1.0 - 1e-9 {
                fits.push(pauli);
            }
        }
        match fits[..] {
            [p] => {
                table.insert(outcome_label(&outcome), p);
            }
            _ => {
                return Err(Error::NoCorrection(format!(
                    "outcome {} admits {} exact Pauli corrections",
                    outcome_label(&outcome),
                    fits.len()
                )))
            }
        }
    }
    Ok(CorrectionRule { channel, table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ry;

    #[test]
    fn gates_realize_the_paulis() {
        for p in Pauli::ALL {
            let mut u = CMat::identity(2, 2);
            for g in p.gates(0) {
                let (m, _) = super::super::oracle::gate_matrix(&g);
                u = m * u;
            }
            let f = crate::analysis::process_fidelity(&u, &p.matrix()).unwrap();
            assert!((f - 1.0).abs() < 1e-14, "{p}");
        }
    }

    #[test]
    fn phi_plus_table() {
        let rule = derive_corrections(BellState::PhiPlus).unwrap();
        assert_eq!(rule.table.len(), 4);
        // Partner spin flags a bit flip, sender spin a phase flip.
        assert_eq!(rule.get("dd").unwrap(), Pauli::I);
        assert_eq!(rule.get("du").unwrap(), Pauli::Z);
        assert_eq!(rule.get("ud").unwrap(), Pauli::X);
        assert_eq!(rule.get("uu").unwrap(), Pauli::XZ);
    }

    #[test]
    fn every_channel_has_a_total_rule() {
        for ch in BellState::ALL {
            let rule = derive_corrections(ch).unwrap();
            assert_eq!(rule.table.len(), 4);
        }
    }

    #[test]
    fn equal_superposition_after_correction() {
        let rule = derive_corrections(BellState::PhiPlus).unwrap();
        let psi = QuantumState::from_amplitudes(ry(std::f64::consts::FRAC_PI_2).column(0).iter().copied().collect()).unwrap();
        let s = embed(N_DOTS, &[(&[RECEIVER, PARTNER], &BellState::PhiPlus.state()), (&[SENDER], &psi)]).unwrap();
        let s = apply_circuit(&s, &bell_measurement(PARTNER)).unwrap();
        for o in two_spin_outcomes() {
            let (_, post) = project(&s, &[PARTNER, SENDER], &o).unwrap();
            let rho = partial_trace_state(&post.unwrap(), &[RECEIVER]).unwrap();
            let fixed = rule.get(&outcome_label(&o)).unwrap().apply(&rho);
            assert!((fixed.get(0, 0).re - 0.5).abs() < 1e-12);
            assert!((fixed.get(1, 1).re - 0.5).abs() < 1e-12);
        }
    }
}

//! Exact gate matrices and projectors with no pulses or dynamics. Used to
//! derive protocol logic and as the reference for pulse-level results.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;

use crate::compiler::{Circuit, GateSpec};
use crate::linalg::{apply_1q, apply_2q, cis, hadamard, ry, rz, CMat, C64, ONE, ZERO};
use crate::model::QuantumState;
use crate::{Error, Result};

/// `diag(1, 1, 1, -1)`.
pub fn cz_matrix() -> CMat {
    CMat::from_diagonal(&nalgebra::DVector::from_row_slice(&[ONE, ONE, ONE, -ONE]))
}

/// `exp(-i phase Z Z / 2)` with local index `bit(a) + 2 bit(b)`.
pub fn zz_matrix(phase: f64) -> CMat {
    let (m, p) = (cis(-phase / 2.0), cis(phase / 2.0));
    CMat::from_diagonal(&nalgebra::DVector::from_row_slice(&[m, p, p, m]))
}

/// CNOT with local index `bit(control) + 2 bit(target)`.
pub fn cnot_matrix() -> CMat {
    let mut m = DMatrix::from_element(4, 4, ZERO);
    for (r, c) in [(0, 0), (1, 3), (2, 2), (3, 1)] {
        m[(r, c)] = ONE;
    }
    m
}

/// Ideal matrix of `gate` and the dots it acts on, in the order matching the
/// matrix's local index.
pub fn gate_matrix(gate: &GateSpec) -> (CMat, Vec<usize>) {
    match *gate {
        GateSpec::Ry { dot, angle } => (ry(angle), vec![dot]),
        GateSpec::Rz { dot, angle } => (rz(angle), vec![dot]),
        GateSpec::H { dot } => (hadamard(), vec![dot]),
        GateSpec::Cz { a, b } => (cz_matrix(), vec![a, b]),
        GateSpec::Zz { a, b, phase } => (zz_matrix(phase), vec![a, b]),
        GateSpec::Cnot { control, target } => (cnot_matrix(), vec![control, target]),
    }
}

pub fn apply_gate(state: &QuantumState, gate: &GateSpec) -> Result<QuantumState> {
    gate.validate(state.n_qubits())?;
    let (m, dots) = gate_matrix(gate);
    let mut amps = state.amplitudes().to_vec();
    match dots[..] {
        [d] => apply_1q(&mut amps, d, &m),
        [a, b] => apply_2q(&mut amps, a, b, &m),
        _ => unreachable!(),
    }
    Ok(QuantumState::from_raw(state.n_qubits(), amps))
}

pub fn apply_circuit(state: &QuantumState, circuit: &Circuit) -> Result<QuantumState> {
    circuit.validate(state.n_qubits())?;
    let mut out = state.clone();
    for gate in circuit.groups.iter().flatten() {
        out = apply_gate(&out, gate)?;
    }
    Ok(out)
}

/// Unitary of a circuit on `n` qubits, column `j` the image of basis `j`.
pub fn circuit_unitary(n: usize, circuit: &Circuit) -> Result<CMat> {
    let dim = 1usize << n;
    let mut u = CMat::zeros(dim, dim);
    for j in 0..dim {
        let out = apply_circuit(&QuantumState::basis(n, j), circuit)?;
        u.set_column(j, &nalgebra::DVector::from_column_slice(out.amplitudes()));
    }
    Ok(u)
}

/// Applies the projector onto spins `outcome` of `dots`; returns the outcome
/// probability and the renormalized state (`None` when the probability is 0).
pub fn project(state: &QuantumState, dots: &[usize], outcome: &[bool]) -> Result<(f64, Option<QuantumState>)> {
    if dots.len() != outcome.len() {
        return Err(Error::Dimension {
            expected: dots.len(),
            got: outcome.len(),
        });
    }
    if let Some(&d) = dots.iter().find(|&&d| d >= state.n_qubits()) {
        return Err(Error::Invalid(format!("dot {} out of range", d + 1)));
    }
    let amps: Vec<C64> = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            let keep = dots.iter().zip(outcome).all(|(&d, &up)| (k >> d & 1 == 1) == up);
            if keep { a } else { ZERO }
        })
        .collect();
    let p: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>() / state.norm().powi(2);
    if p < 1e-300 {
        return Ok((0.0, None));
    }
    Ok((p, Some(QuantumState::normalized(amps)?)))
}

/// Spin string for an outcome, `d` for down and `u` for up.
pub fn outcome_label(outcome: &[bool]) -> String {
    outcome.iter().map(|&u| if u { 'u' } else { 'd' }).collect()
}

/// The four two-spin outcomes in the order dd, du, ud, uu.
pub fn two_spin_outcomes() -> [[bool; 2]; 4] {
    [[false, false], [false, true], [true, false], [true, true]]
}

/// The four Bell states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [BellState::PhiPlus, BellState::PhiMinus, BellState::PsiPlus, BellState::PsiMinus];

    /// Two-qubit amplitudes in the local index `bit(first) + 2 bit(second)`.
    pub fn amplitudes(self) -> [C64; 4] {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        match self {
            BellState::PhiPlus => [h, ZERO, ZERO, h],
            BellState::PhiMinus => [h, ZERO, ZERO, -h],
            BellState::PsiPlus => [ZERO, h, h, ZERO],
            BellState::PsiMinus => [ZERO, h, -h, ZERO],
        }
    }

    pub fn state(self) -> QuantumState {
        QuantumState::from_raw(2, self.amplitudes().to_vec())
    }

    pub fn name(self) -> &'static str {
        match self {
            BellState::PhiPlus => "Phi+",
            BellState::PhiMinus => "Phi-",
            BellState::PsiPlus => "Psi+",
            BellState::PsiMinus => "Psi-",
        }
    }
}

/// Product of sub-states on disjoint dot sets, every other dot `|down>`.
/// A sub-state's local index uses bit `j` for `dots[j]`.
pub fn embed(n: usize, parts: &[(&[usize], &QuantumState)]) -> Result<QuantumState> {
    let mut used = vec![false; n];
    for (dots, s) in parts {
        if dots.len() != s.n_qubits() {
            return Err(Error::Dimension {
                expected: dots.len(),
                got: s.n_qubits(),
            });
        }
        for &d in dots.iter() {
            if d >= n || std::mem::replace(&mut used[d], true) {
                return Err(Error::Invalid(format!("dot {} repeated or out of range", d + 1)));
            }
        }
    }
    let amps = (0..1usize << n)
        .map(|k| {
            if (0..n).any(|d| !used[d] && k >> d & 1 == 1) {
                return ZERO;
            }
            parts.iter().fold(ONE, |acc, (dots, s)| {
                let local = dots.iter().enumerate().fold(0, |l, (j, &d)| l | (k >> d & 1) << j);
                acc * s.amplitudes()[local]
            })
        })
        .collect();
    Ok(QuantumState::from_raw(n, amps))
}

/// `cos(theta/2)|down> + sin(theta/2)|up>`.
pub fn ry_state(theta: f64) -> QuantumState {
    let (s, c) = (theta / 2.0).sin_cos();
    QuantumState::from_raw(1, vec![c.into(), s.into()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::kron;
    use std::f64::consts::PI;

    fn close(a: &QuantumState, b: &QuantumState) -> bool {
        (a.overlap(b) - 1.0).abs() < 1e-12
    }

    #[test]
    fn h_then_cnot_makes_phi_plus() {
        let c = Circuit::parse("H 2; CNOT 2 1").unwrap();
        let out = apply_circuit(&QuantumState::ground(2), &c).unwrap();
        assert!(close(&out, &BellState::PhiPlus.state()));
    }

    #[test]
    fn empty_circuit_is_identity() {
        let s = QuantumState::normalized(vec![ONE, C64::new(0.3, 0.2), ZERO, -ONE]).unwrap();
        assert_eq!(apply_circuit(&s, &Circuit::new()).unwrap(), s);
    }

    #[test]
    fn zz_with_local_z_is_cz() {
        let local = kron(&rz(-PI / 2.0), &rz(-PI / 2.0));
        let u = local * zz_matrix(PI / 2.0);
        let tr = (cz_matrix().adjoint() * u).trace().norm() / 4.0;
        assert!((tr - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cnot_matrix_matches_gate_action() {
        let u = circuit_unitary(2, &Circuit::parse("CNOT 1 2").unwrap()).unwrap();
        assert_eq!(u, cnot_matrix());
        let u = circuit_unitary(2, &Circuit::parse("CNOT 2 1").unwrap()).unwrap();
        // Control is dot 2 (bit 1): |d u> (index 2) -> |u u> (index 3).
        assert_eq!(u[(3, 2)], ONE);
    }

    #[test]
    fn projection_probabilities_sum_to_one() {
        let s = apply_circuit(&QuantumState::ground(3), &Circuit::parse("H 1 | RY 2 0.7 | RY 3 2.1").unwrap()).unwrap();
        let total: f64 = two_spin_outcomes()
            .iter()
            .map(|o| project(&s, &[0, 2], o).unwrap().0)
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn embed_places_sub_states() {
        let s = embed(3, &[(&[2, 0], &BellState::PsiPlus.state())]).unwrap();
        // Psi+ on (dot 3, dot 1): |u d> on (3, 1) is index 4, |d u> is index 1.
        assert!((s.amplitudes()[4].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((s.amplitudes()[1].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(embed(3, &[(&[0], &ry_state(1.0)), (&[0], &ry_state(1.0))]).is_err());
    }
}

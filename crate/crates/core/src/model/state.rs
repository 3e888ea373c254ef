use crate::linalg::{hermitian_eigen, CMat, C64, ONE, ZERO};
use crate::{Error, Result};

const NORM_TOL: f64 = 1e-9;

/// Normalized state vector over `2^n` spin configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl QuantumState {
    /// `|down ... down>`.
    pub fn ground(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[index] = ONE;
        QuantumState { n_qubits, amps }
    }

    /// Builds a state from amplitudes that are already normalized.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let n_qubits = qubits_for(amps.len())?;
        let norm = norm(&amps);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::State(format!("norm {norm} differs from 1")));
        }
        Ok(QuantumState { n_qubits, amps })
    }

    /// Builds a state by rescaling arbitrary non-zero amplitudes.
    pub fn normalized(mut amps: Vec<C64>) -> Result<Self> {
        let n_qubits = qubits_for(amps.len())?;
        let norm = norm(&amps);
        if norm < 1e-300 || !norm.is_finite() {
            return Err(Error::State("cannot normalize a zero vector".into()));
        }
        for a in &mut amps {
            *a /= norm;
        }
        Ok(QuantumState { n_qubits, amps })
    }

    /// Tensor product of single-qubit states, `qubits[i]` on dot `i`.
    pub fn product(qubits: &[[C64; 2]]) -> Result<Self> {
        let mut amps = vec![ONE];
        for (i, q) in qubits.iter().enumerate() {
            let mut next = vec![ZERO; amps.len() * 2];
            for (k, a) in amps.iter().enumerate() {
                next[k] = a * q[0];
                next[k | (1 << i)] = a * q[1];
            }
            amps = next;
        }
        Self::normalized(amps)
    }

    /// Wraps amplitudes produced by a unitary map; no check is made.
    pub(crate) fn from_raw(n_qubits: usize, amps: Vec<C64>) -> Self {
        QuantumState { n_qubits, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amps)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &QuantumState) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|<self|other>|^2`.
    pub fn overlap(&self, other: &QuantumState) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Probability that `dot` is spin up.
    pub fn p_up(&self, dot: usize) -> f64 {
        let bit = 1 << dot;
        self.amps
            .iter()
            .enumerate()
            .filter(|(k, _)| k & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }
}

fn norm(amps: &[C64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

fn qubits_for(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::State(format!("length {len} is not a power of two")));
    }
    Ok(len.trailing_zeros() as usize)
}

/// Density matrix over `k` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    data: CMat,
}

impl DensityMatrix {
    pub fn from_pure(state: &QuantumState) -> Self {
        let v = nalgebra::DVector::from_column_slice(state.amplitudes());
        DensityMatrix {
            n_qubits: state.n_qubits(),
            data: &v * v.adjoint(),
        }
    }

    /// Wraps a matrix after checking the density-matrix invariants.
    pub fn new(data: CMat) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::State("density matrix must be square".into()));
        }
        let n_qubits = qubits_for(data.nrows())?;
        let rho = DensityMatrix { n_qubits, data };
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_raw(n_qubits: usize, data: CMat) -> Self {
        DensityMatrix { n_qubits, data }
    }

    /// Hermitian, unit trace, no eigenvalue below `-1e-9`.
    pub fn validate(&self) -> Result<()> {
        let herm = (&self.data - self.data.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > NORM_TOL {
            return Err(Error::State(format!("not Hermitian (deviation {herm:.2e})")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > NORM_TOL {
            return Err(Error::State(format!("trace {tr} differs from 1")));
        }
        let min = self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min < -NORM_TOL {
            return Err(Error::State(format!("negative eigenvalue {min:.2e}")));
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[(r, c)]
    }

    pub fn trace(&self) -> f64 {
        self.data.trace().re
    }

    pub fn purity(&self) -> f64 {
        (&self.data * &self.data).trace().re
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v = hermitian_eigen(&self.data).0;
        v.sort_by(f64::total_cmp);
        v
    }

    /// Eigenvector of the largest eigenvalue.
    pub fn principal_state(&self) -> QuantumState {
        let (vals, vecs) = hermitian_eigen(&self.data);
        let (imax, _) = vals
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty matrix");
        let col: Vec<C64> = vecs.column(imax).iter().copied().collect();
        QuantumState::normalized(col).expect("eigenvector is non-zero")
    }

    /// Rows of `[re, im]` pairs, the export format for JSON.
    pub fn to_pairs(&self) -> Vec<Vec<[f64; 2]>> {
        (0..self.dim())
            .map(|r| (0..self.dim()).map(|c| [self.data[(r, c)].re, self.data[(r, c)].im]).collect())
            .collect()
    }
}

/// Spin labels for each basis index of a `k`-qubit register, lowest bit
/// first: index 1 of two qubits is `"ud"`.
pub fn basis_labels(k: usize) -> Vec<String> {
    (0..1usize << k)
        .map(|idx| (0..k).map(|b| if idx >> b & 1 == 1 { 'u' } else { 'd' }).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ground_state_is_all_down() {
        let s = QuantumState::ground(5);
        assert_eq!(s.dim(), 32);
        assert_eq!(s.amplitudes()[0], ONE);
        assert!((0..5).all(|d| s.p_up(d) == 0.0));
    }

    #[test]
    fn dot_one_is_lowest_bit() {
        let up = [ZERO, ONE];
        let down = [ONE, ZERO];
        let s = QuantumState::product(&[up, down, down]).unwrap();
        assert_eq!(s.amplitudes()[1], ONE);
        assert_eq!(basis_labels(2), ["dd", "ud", "du", "uu"]);
    }

    #[test]
    fn unnormalized_amplitudes_are_rejected() {
        assert!(QuantumState::from_amplitudes(vec![ONE, ONE]).is_err());
        assert!(QuantumState::from_amplitudes(vec![ONE, ZERO, ZERO]).is_err());
    }

    #[test]
    fn density_matrix_invariants() {
        let s = QuantumState::normalized(vec![ONE, C64::new(0.0, 1.0)]).unwrap();
        let rho = DensityMatrix::from_pure(&s);
        rho.validate().unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        let bad = CMat::from_row_slice(2, 2, &[ONE, ONE, ZERO, ZERO]);
        assert!(DensityMatrix::new(bad).is_err());
    }

    proptest! {
        #[test]
        fn constructors_preserve_norm(re in prop::collection::vec(-1.0f64..1.0, 8), im in prop::collection::vec(-1.0f64..1.0, 8)) {
            let amps: Vec<C64> = re.iter().zip(&im).map(|(a, b)| C64::new(*a, *b)).collect();
            prop_assume!(amps.iter().map(|a| a.norm_sqr()).sum::<f64>() > 1e-6);
            let s = QuantumState::normalized(amps).unwrap();
            prop_assert!((s.norm() - 1.0).abs() < 1e-9);
            let again = QuantumState::from_amplitudes(s.clone().into_amplitudes()).unwrap();
            prop_assert!((again.norm() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn product_states_are_normalized(a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let q0 = [C64::new(a.cos(), 0.0), C64::new(0.0, a.sin())];
            let q1 = [C64::new(b.cos(), b.sin()), C64::new(0.5, 0.0)];
            let s = QuantumState::product(&[q0, q1]).unwrap();
            prop_assert!((s.norm() - 1.0).abs() < 1e-9);
        }
    }
}

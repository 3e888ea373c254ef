use crate::linalg::{hermitian_eigen, kron, pauli_y, CMat, C64, ZERO};
use crate::model::{DensityMatrix, QuantumState};
use crate::{Error, Result};

fn check_keep(n: usize, keep: &[usize]) -> Result<Vec<usize>> {
    let mut k = keep.to_vec();
    k.sort_unstable();
    k.dedup();
    if k.is_empty() || k.len() != keep.len() || k[k.len() - 1] >= n {
        return Err(Error::Invalid(format!("invalid set of dots to keep: {keep:?} of {n}")));
    }
    Ok(k)
}

/// Splits a full index into (kept local index, traced-out remainder).
fn split_index(k: usize, keep: &[usize], n: usize) -> (usize, usize) {
    let (mut kept, mut rest, mut nr) = (0, 0, 0);
    for d in 0..n {
        let bit = k >> d & 1;
        if let Some(j) = keep.iter().position(|&x| x == d) {
            kept |= bit << j;
        } else {
            rest |= bit << nr;
            nr += 1;
        }
    }
    (kept, rest)
}

/// Reduced density matrix over `keep` (ascending dot order; kept dot `j`
/// becomes bit `j`).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let n = rho.n_qubits();
    let keep = check_keep(n, keep)?;
    let m = keep.len();
    let idx: Vec<(usize, usize)> = (0..rho.dim()).map(|k| split_index(k, &keep, n)).collect();
    let mut out = CMat::from_element(1 << m, 1 << m, ZERO);
    for (r, &(kr, rr)) in idx.iter().enumerate() {
        for (c, &(kc, rc)) in idx.iter().enumerate() {
            if rr == rc {
                out[(kr, kc)] += rho.get(r, c);
            }
        }
    }
    Ok(DensityMatrix::from_raw(m, out))
}

/// [`partial_trace`] of a pure state, without forming the full matrix.
pub fn partial_trace_state(state: &QuantumState, keep: &[usize]) -> Result<DensityMatrix> {
    let n = state.n_qubits();
    let keep = check_keep(n, keep)?;
    let m = keep.len();
    let mut cols = vec![vec![ZERO; 1 << m]; 1 << (n - m)];
    for (k, &a) in state.amplitudes().iter().enumerate() {
        let (kept, rest) = split_index(k, &keep, n);
        cols[rest][kept] = a;
    }
    let mut out = CMat::from_element(1 << m, 1 << m, ZERO);
    for v in &cols {
        for r in 0..1 << m {
            if v[r] == ZERO {
                continue;
            }
            for c in 0..1 << m {
                out[(r, c)] += v[r] * v[c].conj();
            }
        }
    }
    Ok(DensityMatrix::from_raw(m, out))
}

/// `<psi| rho |psi>`.
pub fn state_fidelity(rho: &DensityMatrix, target: &QuantumState) -> Result<f64> {
    if rho.dim() != target.dim() {
        return Err(Error::Dimension {
            expected: rho.n_qubits(),
            got: target.n_qubits(),
        });
    }
    let v = nalgebra::DVector::from_column_slice(target.amplitudes());
    let f = (v.adjoint() * rho.matrix() * &v)[(0, 0)].re;
    Ok(f.clamp(0.0, 1.0))
}

pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.purity()
}

/// Wootters concurrence of a two-qubit density matrix.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    if rho.n_qubits() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            got: rho.n_qubits(),
        });
    }
    rho.validate()?;
    let yy = kron(&pauli_y(), &pauli_y());
    let r = rho.matrix();
    // The lambdas are the singular values of sqrt(rho) sqrt(tilde rho), and
    // sqrt(tilde rho) = YY conj(sqrt(rho)) YY. An SVD avoids taking square
    // roots of near-zero eigenvalues, which would turn rounding noise of
    // order 1e-16 into errors of order 1e-8. Eigenvalues of rho at the
    // rounding floor are treated as exact zeros for the same reason.
    let (vals, vecs) = hermitian_eigen(r);
    let floor = 16.0 * f64::EPSILON * r.trace().re.abs().max(1.0);
    let sqrt_diag = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        4,
        vals.iter().map(|&v| C64::new(if v > floor { v.sqrt() } else { 0.0 }, 0.0)),
    ));
    let s = &vecs * sqrt_diag * vecs.adjoint();
    let mut lambda: Vec<f64> = (&s * &yy * s.map(|z| z.conj())).singular_values().iter().copied().collect();
    lambda.sort_by(|a, b| b.total_cmp(a));
    Ok((lambda[0] - lambda[1] - lambda[2] - lambda[3]).clamp(0.0, 1.0))
}

/// `|Tr(V^dagger U)|^2 / d^2`, insensitive to global phase.
pub fn process_fidelity(actual: &CMat, target: &CMat) -> Result<f64> {
    if actual.shape() != target.shape() || actual.nrows() != actual.ncols() {
        return Err(Error::Dimension {
            expected: target.nrows(),
            got: actual.nrows(),
        });
    }
    let d = actual.nrows() as f64;
    Ok(((target.adjoint() * actual).trace().norm_sqr() / (d * d)).min(1.0))
}

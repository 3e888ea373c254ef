//! Small dense linear-algebra helpers shared across the crate.
//!
//! Full-register operators are `nalgebra::DMatrix<C64>`; hot single-qubit
//! loops use the fixed-size [`M2`] instead.

use nalgebra::DMatrix;
pub use num_complex::Complex64 as C64;

pub type CMat = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// `e^{i x}`.
#[inline]
pub fn cis(x: f64) -> C64 {
    let (s, c) = x.sin_cos();
    C64::new(c, s)
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> CMat {
    CMat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

/// Logical `Z = diag(1, -1)` in the `|down>, |up>` index basis.
pub fn pauli_z() -> CMat {
    CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// `R_Y(theta) = exp(-i theta Y / 2)`.
pub fn ry(theta: f64) -> CMat {
    let (s, c) = (theta / 2.0).sin_cos();
    CMat::from_row_slice(2, 2, &[c.into(), (-s).into(), s.into(), c.into()])
}

/// `R_Z(phi) = exp(-i phi Z / 2)`.
pub fn rz(phi: f64) -> CMat {
    CMat::from_row_slice(2, 2, &[cis(-phi / 2.0), ZERO, ZERO, cis(phi / 2.0)])
}

pub fn hadamard() -> CMat {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_row_slice(2, 2, &[h.into(), h.into(), h.into(), (-h).into()])
}

/// Eigen-decomposition of a Hermitian matrix (eigenvalues, eigenvectors as columns).
pub fn hermitian_eigen(h: &CMat) -> (Vec<f64>, CMat) {
    let herm = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// `exp(-i h t)` for Hermitian `h`.
pub fn expm_hermitian(h: &CMat, t: f64) -> CMat {
    let (vals, vecs) = hermitian_eigen(h);
    let d = vals.len();
    let mut scaled = vecs.clone();
    for (j, &v) in vals.iter().enumerate() {
        let ph = cis(-v * t);
        for i in 0..d {
            scaled[(i, j)] *= ph;
        }
    }
    scaled * vecs.adjoint()
}

/// Largest deviation of `u^dagger u` from the identity.
pub fn unitarity_error(u: &CMat) -> f64 {
    let p = u.adjoint() * u;
    let d = p.nrows();
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((p[(i, j)] - target).norm());
        }
    }
    worst
}

/// Applies a 2x2 operator to qubit `q` of a state vector in place.
pub fn apply_1q(amps: &mut [C64], q: usize, u: &CMat) {
    let bit = 1usize << q;
    let (u00, u01, u10, u11) = (u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]);
    for k in 0..amps.len() {
        if k & bit == 0 {
            let a = amps[k];
            let b = amps[k | bit];
            amps[k] = u00 * a + u01 * b;
            amps[k | bit] = u10 * a + u11 * b;
        }
    }
}

/// Applies a 4x4 operator to qubits `(qa, qb)` in place. The operator's
/// local index is `bit(qa) + 2 * bit(qb)`.
pub fn apply_2q(amps: &mut [C64], qa: usize, qb: usize, u: &CMat) {
    let (ba, bb) = (1usize << qa, 1usize << qb);
    for k in 0..amps.len() {
        if k & ba == 0 && k & bb == 0 {
            let idx = [k, k | ba, k | bb, k | ba | bb];
            let v = idx.map(|i| amps[i]);
            for (r, &i) in idx.iter().enumerate() {
                amps[i] = (0..4).map(|c| u[(r, c)] * v[c]).sum();
            }
        }
    }
}

/// Fixed-size 2x2 complex matrix, row major.
pub type M2 = [[C64; 2]; 2];

pub const M2_IDENTITY: M2 = [[ONE, ZERO], [ZERO, ONE]];

#[inline]
pub fn m2_mul(a: &M2, b: &M2) -> M2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

#[inline]
pub fn m2_dagger(a: &M2) -> M2 {
    [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ]
}

/// `exp(-i H)` for the traceless Hermitian `H = [[z, conj(c)], [c, -z]]`.
#[inline]
pub fn m2_exp_traceless(z: f64, c: C64) -> M2 {
    let r = (z * z + c.norm_sqr()).sqrt();
    if r < 1e-300 {
        return M2_IDENTITY;
    }
    let (s, co) = r.sin_cos();
    let k = s / r;
    [
        [C64::new(co, -k * z), -I * k * c.conj()],
        [-I * k * c, C64::new(co, k * z)],
    ]
}

pub fn m2_from(m: &CMat) -> M2 {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

pub fn m2_to_cmat(m: &M2) -> CMat {
    CMat::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]])
}

/// Wraps an angle into `[0, 2 pi)`.
pub fn wrap_phase(x: f64) -> f64 {
    let w = x.rem_euclid(std::f64::consts::TAU);
    if w >= std::f64::consts::TAU {
        0.0
    } else {
        w
    }
}

//! Small dense-matrix helpers built from Kronecker products.
//!
//! These never go through the bitmask kernels, which makes them usable as
//! independent reference implementations in tests.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::pauli::PauliString;

pub type CMatrix = DMatrix<C64>;

pub fn single_qubit(c: char) -> CMatrix {
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    match c {
        'I' => CMatrix::from_row_slice(2, 2, &[l, o, o, l]),
        'X' => CMatrix::from_row_slice(2, 2, &[o, l, l, o]),
        'Y' => CMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        'Z' => CMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
        _ => panic!("not a Pauli factor: {c}"),
    }
}

/// Full `2^n x 2^n` matrix of a Pauli string, phase included.
pub fn pauli_matrix(p: &PauliString) -> CMatrix {
    let mut m = CMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    for c in p.label().chars() {
        m = m.kronecker(&single_qubit(c));
    }
    let phase = crate::pauli::i_pow(p.phase_exp() as u32);
    m * phase
}

/// `exp(i * angle * P)` for a Hermitian, unitary `P`.
pub fn rotation_matrix(p: &PauliString, angle: f64) -> CMatrix {
    let dim = 1usize << p.n();
    CMatrix::identity(dim, dim) * C64::new(angle.cos(), 0.0)
        + pauli_matrix(p) * C64::new(0.0, angle.sin())
}

/// `exp(-tau * P)` for a Hermitian, unitary `P`.
pub fn imaginary_rotation_matrix(p: &PauliString, tau: f64) -> CMatrix {
    let dim = 1usize << p.n();
    CMatrix::identity(dim, dim) * C64::new(tau.cosh(), 0.0)
        - pauli_matrix(p) * C64::new(tau.sinh(), 0.0)
}

/// `sum_k w_k Q_k` as a dense matrix.
pub fn hamiltonian_matrix(h: &crate::pauli::Hamiltonian) -> CMatrix {
    let dim = 1usize << h.n();
    let mut m = CMatrix::identity(dim, dim) * C64::new(h.constant(), 0.0);
    for t in h.terms() {
        m += pauli_matrix(&t.pauli) * C64::new(t.weight, 0.0);
    }
    m
}

/// Largest entrywise deviation between `a` and `b` after removing the best
/// global phase, together with `|tr(a^† b)| / dim`.
pub fn phase_aligned_deviation(a: &CMatrix, b: &CMatrix) -> (f64, f64) {
    let dim = a.nrows() as f64;
    let overlap: C64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
    let fidelity = overlap.norm() / dim;
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { C64::new(1.0, 0.0) };
    let dev = a
        .iter()
        .zip(b.iter())
        .map(|(x, y)| (x * phase - y).norm())
        .fold(0.0, f64::max);
    (dev, fidelity)
}

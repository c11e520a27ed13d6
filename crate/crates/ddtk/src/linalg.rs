//! Dense complex-matrix helpers shared by the dynamics and analysis layers.
//!
//! Everything here acts on matrices of dimension at most 8, so dense
//! factorizations are always the right tool.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::pauli::{Pauli, PauliString};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn pauli_matrix(p: Pauli) -> CMat {
    let e = match p {
        Pauli::I => [ONE, ZERO, ZERO, ONE],
        Pauli::X => [ZERO, ONE, ONE, ZERO],
        Pauli::Y => [ZERO, -I, I, ZERO],
        Pauli::Z => [ONE, ZERO, ZERO, -ONE],
    };
    CMat::from_row_slice(2, 2, &e)
}

/// Kronecker chain of the letters, qubit 0 leftmost.
pub fn pauli_string_matrix(word: &PauliString) -> CMat {
    word.letters()
        .iter()
        .map(|&p| pauli_matrix(p))
        .reduce(|a, b| a.kronecker(&b))
        .expect("words are non-empty")
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Largest singular value.
pub fn spectral_norm(m: &CMat) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0, |acc, &s| acc.max(s))
}

/// Eigendecomposition H = Q diag(lambda) Q^dagger of a Hermitian matrix,
/// kept around so that exp(-iHt) costs two matrix products per t.
#[derive(Clone, Debug)]
pub struct HermitianEig {
    vectors: CMat,
    values: DVector<f64>,
}

pub fn hermitian_eig(h: &CMat) -> HermitianEig {
    debug_assert!(max_abs(&(h - h.adjoint())) < 1e-12 * (1.0 + max_abs(h)));
    let eig = h.clone().symmetric_eigen();
    HermitianEig {
        vectors: eig.eigenvectors,
        values: eig.eigenvalues,
    }
}

impl HermitianEig {
    /// exp(-i H t) = Q diag(exp(-i lambda t)) Q^dagger.
    pub fn exp_minus_i(&self, t: f64) -> CMat {
        let phases = CVec::from_iterator(
            self.values.len(),
            self.values.iter().map(|&l| (-I * l * t).exp()),
        );
        let mut scaled = self.vectors.clone();
        for (j, col) in scaled.column_iter_mut().enumerate() {
            let mut col = col;
            col *= phases[j];
        }
        scaled * self.vectors.adjoint()
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, &l| acc.max(l.abs()))
    }
}

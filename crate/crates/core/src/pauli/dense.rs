//! Dense materialization and spectral helpers.
//!
//! Basis index convention: qubit 0 is the most significant bit.

use nalgebra::{Complex, DMatrix, SymmetricEigen, SVD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Pauli, PauliError, PauliString, PauliSum, PauliWord};

pub type DenseMatrix = DMatrix<Complex<f64>>;

pub const DEFAULT_DENSE_QUBIT_CAP: usize = 10;

const EIGEN_MAX_ITER: usize = 100_000;

/// Dense matrix of a single word (phase +1), columns mapped to rows by the
/// X/Y flip mask.
fn word_entries(word: PauliWord, n: usize) -> impl Iterator<Item = (usize, usize, Complex<f64>)> {
    let dim = 1usize << n;
    let flip = word.flip_mask(n);
    let letters = word.letters(n);
    (0..dim).map(move |col| {
        let mut val = Complex::new(1.0, 0.0);
        for (q, l) in letters.iter().enumerate() {
            let bit = (col >> (n - 1 - q)) & 1;
            match l {
                Pauli::I | Pauli::X => {}
                Pauli::Z => {
                    if bit == 1 {
                        val = -val;
                    }
                }
                // Y|0> = i|1>, Y|1> = -i|0>
                Pauli::Y => {
                    val *= if bit == 0 {
                        Complex::new(0.0, 1.0)
                    } else {
                        Complex::new(0.0, -1.0)
                    };
                }
            }
        }
        (col ^ flip, col, val)
    })
}

pub fn dense_pauli_string(p: &PauliString) -> Result<DenseMatrix, PauliError> {
    check_cap(p.n_qubits, DEFAULT_DENSE_QUBIT_CAP)?;
    let dim = 1usize << p.n_qubits;
    let mut m = DenseMatrix::zeros(dim, dim);
    let phase = p.phase.to_complex();
    for (r, c, v) in word_entries(p.word, p.n_qubits) {
        m[(r, c)] = phase * v;
    }
    Ok(m)
}

fn check_cap(n: usize, cap: usize) -> Result<(), PauliError> {
    if n > cap {
        return Err(PauliError::DenseCap { n, cap });
    }
    Ok(())
}

/// Kronecker expansion of `h` with the default qubit cap.
pub fn to_dense(h: &PauliSum) -> Result<DenseMatrix, PauliError> {
    to_dense_with_cap(h, DEFAULT_DENSE_QUBIT_CAP)
}

pub fn to_dense_with_cap(h: &PauliSum, cap: usize) -> Result<DenseMatrix, PauliError> {
    let n = h.n_qubits();
    check_cap(n, cap)?;
    let dim = 1usize << n;
    let mut m = DenseMatrix::zeros(dim, dim);
    for (word, coeff) in h.iter() {
        for (r, c, v) in word_entries(word, n) {
            m[(r, c)] += v * coeff;
        }
    }
    Ok(m)
}

/// Eigen-decomposition of a Hermitian matrix (eigenvalues unsorted).
pub fn hermitian_eigen(m: &DenseMatrix) -> Result<SymmetricEigen<Complex<f64>, nalgebra::Dyn>, PauliError> {
    SymmetricEigen::try_new(m.clone(), f64::EPSILON, EIGEN_MAX_ITER).ok_or(PauliError::Eigensolver)
}

/// Largest |eigenvalue| of the dense materialization.
pub fn operator_norm(h: &PauliSum) -> Result<f64, PauliError> {
    if h.is_empty() {
        return Ok(0.0);
    }
    let eig = hermitian_eigen(&to_dense(h)?)?;
    Ok(eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// Largest singular value of an arbitrary square matrix.
pub fn spectral_norm(m: &DenseMatrix) -> Result<f64, PauliError> {
    let svd = SVD::try_new(m.clone(), false, false, f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or(PauliError::Eigensolver)?;
    Ok(svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b)))
}

pub fn frobenius_norm(m: &DenseMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `exp(X)` for skew-Hermitian `X`, via the eigenbasis of the Hermitian `−iX`.
pub fn skew_hermitian_exp(x: &DenseMatrix) -> Result<DenseMatrix, PauliError> {
    let h = x.map(|z| z * Complex::new(0.0, -1.0));
    let h = (&h + h.adjoint()) * Complex::new(0.5, 0.0);
    let eig = hermitian_eigen(&h)?;
    let phases = DenseMatrix::from_diagonal(
        &eig.eigenvalues.map(|l| Complex::new(0.0, l).exp()),
    );
    Ok(&eig.eigenvectors * phases * eig.eigenvectors.adjoint())
}

fn ginibre<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DenseMatrix {
    DenseMatrix::from_fn(dim, dim, |_, _| {
        Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DenseMatrix {
    let g = ginibre(dim, rng);
    (&g + g.adjoint()) * Complex::new(0.5, 0.0)
}

/// Haar-distributed unitary from the QR decomposition of a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DenseMatrix {
    let qr = ginibre(dim, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random full-rank density matrix `GG†/Tr[GG†]` for Ginibre `G`.
pub fn random_density_matrix(dim: usize, seed: u64) -> DenseMatrix {
    let dim = dim.max(1);
    if dim == 1 {
        return DenseMatrix::from_element(1, 1, Complex::new(1.0, 0.0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = ginibre(dim, &mut rng);
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    let rho = rho / Complex::new(tr, 0.0);
    // Exact Hermitian symmetry.
    (&rho + rho.adjoint()) * Complex::new(0.5, 0.0)
}

//! Lie closure of generator sets and TFIM generator construction.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pauli::{commutator, hs_inner_unchecked, to_dense, DenseMatrix, Pauli, PauliError, PauliSum};

/// Residual norm below which a commutator counts as already in the span.
pub const INDEPENDENCE_TOL: f64 = 1e-10;

/// Largest register the dense oracle accepts.
pub const DENSE_ORACLE_MAX_QUBITS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DlaError {
    #[error("generator set is empty")]
    EmptyGenerators,
    #[error("generator {index} is zero after canonicalization")]
    ZeroGenerator { index: usize },
    #[error("generator {index} acts on {found} qubits, expected {expected}")]
    QubitMismatch { index: usize, expected: usize, found: usize },
    #[error("max_dim must be at least 1")]
    BadMaxDim,
    #[error("TFIM needs at least 2 qubits, got {0}")]
    TooFewQubits(usize),
    #[error("dense oracle limited to {DENSE_ORACLE_MAX_QUBITS} qubits, got {0}")]
    OracleCap(usize),
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Closed,
}

impl Boundary {
    pub const ALL: [Boundary; 2] = [Boundary::Open, Boundary::Closed];

    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::Open => "open",
            Boundary::Closed => "closed",
        }
    }

    /// Dimension quoted in the literature for the TFIM closure: n² (open), n (closed).
    pub fn claimed_tfim_dim(self, n: usize) -> usize {
        match self {
            Boundary::Open => n * n,
            Boundary::Closed => n,
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Boundary {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "open" => Ok(Boundary::Open),
            "closed" => Ok(Boundary::Closed),
            other => Err(format!("unknown boundary {other:?} (expected open|closed)")),
        }
    }
}

/// Finite set of traceless Hermitian generators on a common register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSet {
    n_qubits: usize,
    generators: Vec<PauliSum>,
    label: String,
}

impl GeneratorSet {
    pub fn new(generators: Vec<PauliSum>, label: impl Into<String>) -> Result<Self, DlaError> {
        let first = generators.first().ok_or(DlaError::EmptyGenerators)?;
        let n_qubits = first.n_qubits();
        for (index, g) in generators.iter().enumerate() {
            if g.n_qubits() != n_qubits {
                return Err(DlaError::QubitMismatch {
                    index,
                    expected: n_qubits,
                    found: g.n_qubits(),
                });
            }
            if g.is_empty() {
                return Err(DlaError::ZeroGenerator { index });
            }
        }
        Ok(Self {
            n_qubits,
            generators,
            label: label.into(),
        })
    }

    /// One generator per non-comment line group separated by `---` lines,
    /// each in the Pauli text format.
    pub fn from_text(text: &str, label: impl Into<String>) -> Result<Self, DlaError> {
        let mut gens = Vec::new();
        let mut block = String::new();
        let mut n = None;
        let mut flush = |block: &mut String, gens: &mut Vec<PauliSum>| -> Result<(), DlaError> {
            if block.lines().any(|l| !l.trim().is_empty() && !l.trim().starts_with('#')) {
                let g = PauliSum::from_text(block, n)?;
                n = Some(g.n_qubits());
                gens.push(g);
            }
            block.clear();
            Ok(())
        };
        for line in text.lines() {
            if line.trim() == "---" {
                flush(&mut block, &mut gens)?;
            } else {
                block.push_str(line);
                block.push('\n');
            }
        }
        flush(&mut block, &mut gens)?;
        Self::new(gens, label)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn generators(&self) -> &[PauliSum] {
        &self.generators
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Unit-coefficient linear combination of all generators.
    pub fn sum(&self) -> PauliSum {
        let mut total = PauliSum::zero(self.n_qubits).expect("validated qubit count");
        for g in &self.generators {
            total.axpy_in_place(1.0, g);
        }
        total
    }
}

/// Orthonormal spanning set of a Lie closure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DlaBasis {
    pub n_qubits: usize,
    pub basis: Vec<PauliSum>,
    pub dim: usize,
    pub depth_reached: usize,
    pub truncated: bool,
}

impl DlaBasis {
    /// Basis elements in the Pauli text format separated by `---` lines.
    pub fn to_text(&self) -> String {
        self.basis
            .iter()
            .map(|b| b.to_text())
            .collect::<Vec<_>>()
            .join("---\n")
    }
}

/// `4^n − 1`, saturating for registers where it exceeds `usize`.
pub fn su_dimension(n_qubits: usize) -> usize {
    if n_qubits >= usize::BITS as usize / 2 {
        usize::MAX
    } else {
        (1usize << (2 * n_qubits)) - 1
    }
}

/// Orthonormal basis under construction; Gram–Schmidt on coefficient vectors.
struct Orthonormal {
    basis: Vec<PauliSum>,
}

impl Orthonormal {
    /// Residual of the unit-normalized candidate after two passes of
    /// modified Gram–Schmidt, or `None` if it lies in the span.
    fn residual(&self, candidate: &PauliSum) -> Option<PauliSum> {
        let norm = candidate.norm();
        if norm == 0.0 {
            return None;
        }
        let mut r = candidate.scale(1.0 / norm);
        for _ in 0..2 {
            for b in &self.basis {
                let overlap = hs_inner_unchecked(&r, b);
                if overlap != 0.0 {
                    r.axpy_in_place(-overlap, b);
                }
            }
        }
        let rn = r.norm();
        (rn > INDEPENDENCE_TOL).then(|| r.scale(1.0 / rn))
    }
}

/// Breadth-first Lie closure of `gens`, capped at `max_dim` elements.
///
/// Each sweep brackets the elements admitted by the previous sweep against
/// the whole basis; a sweep that admits nothing is the fixed point.
pub fn lie_closure(gens: &GeneratorSet, max_dim: usize) -> Result<DlaBasis, DlaError> {
    if max_dim == 0 {
        return Err(DlaError::BadMaxDim);
    }
    let n = gens.n_qubits();
    let ceiling = su_dimension(n);
    let mut ortho = Orthonormal { basis: Vec::new() };
    let mut truncated = false;
    let mut full = false;

    let mut frontier = Vec::new();
    for g in gens.generators() {
        if let Some(r) = ortho.residual(g) {
            if ortho.basis.len() == max_dim {
                truncated = true;
                break;
            }
            frontier.push(ortho.basis.len());
            ortho.basis.push(r);
        }
    }

    let mut depth = 0;
    'sweeps: while !frontier.is_empty() && !truncated {
        let mut next = Vec::new();
        for &i in &frontier {
            let mut j = 0;
            while j < ortho.basis.len() {
                if j == i {
                    j += 1;
                    continue;
                }
                let c = commutator(&ortho.basis[i], &ortho.basis[j])?;
                j += 1;
                if c.is_empty() {
                    continue;
                }
                if let Some(r) = ortho.residual(&c) {
                    if ortho.basis.len() >= max_dim {
                        truncated = true;
                        break 'sweeps;
                    }
                    next.push(ortho.basis.len());
                    ortho.basis.push(r);
                    if ortho.basis.len() >= ceiling {
                        // All of su(2^n): nothing left to add.
                        full = true;
                        depth += 1;
                        break 'sweeps;
                    }
                }
            }
        }
        if !next.is_empty() {
            depth += 1;
        }
        frontier = next;
    }
    if full {
        truncated = false;
    }

    let dim = ortho.basis.len();
    Ok(DlaBasis {
        n_qubits: n,
        basis: ortho.basis,
        dim,
        depth_reached: depth,
        truncated,
    })
}

pub fn dla_dimension(gens: &GeneratorSet) -> Result<usize, DlaError> {
    Ok(lie_closure(gens, su_dimension(gens.n_qubits()))?.dim)
}

/// The two TFIM generators `{Σ Z_i Z_{i+1}, Σ X_i}`.
///
/// The ZZ sum runs over `n − 1` bonds (open) or `n` bonds with wraparound
/// (closed). For `n = 2` closed, both bonds are the same word and the
/// coefficient accumulates to 2.
pub fn tfim_generators(n: usize, boundary: Boundary) -> Result<GeneratorSet, DlaError> {
    if n < 2 {
        return Err(DlaError::TooFewQubits(n));
    }
    let bonds = match boundary {
        Boundary::Open => n - 1,
        Boundary::Closed => n,
    };
    let mut zz = PauliSum::zero(n)?;
    for i in 0..bonds {
        let term = PauliSum::single(n, &[(i, Pauli::Z), ((i + 1) % n, Pauli::Z)], 1.0)?;
        zz.axpy_in_place(1.0, &term);
    }
    let mut x = PauliSum::zero(n)?;
    for i in 0..n {
        x.axpy_in_place(1.0, &PauliSum::single(n, &[(i, Pauli::X)], 1.0)?);
    }
    GeneratorSet::new(vec![zz, x], format!("tfim-{boundary}-{n}"))
}

/// TFIM Hamiltonian with unit coefficients on both generators.
pub fn tfim_hamiltonian(n: usize, boundary: Boundary) -> Result<PauliSum, DlaError> {
    Ok(tfim_generators(n, boundary)?.sum())
}

/// Closure dimension computed with dense matrices and SVD rank.
///
/// Independent of the Pauli-word bookkeeping: brackets are dense matrix
/// products `−i(AB − BA)` and independence is judged by the numeric rank of
/// the stacked real vectorizations.
pub fn closure_oracle_dense(gens: &GeneratorSet, max_dim: usize) -> Result<usize, DlaError> {
    let n = gens.n_qubits();
    if n > DENSE_ORACLE_MAX_QUBITS {
        return Err(DlaError::OracleCap(n));
    }
    if max_dim == 0 {
        return Err(DlaError::BadMaxDim);
    }
    let ceiling = su_dimension(n).min(max_dim);
    let dim = 1usize << n;
    let len = 2 * dim * dim;

    let vectorize = |m: &DenseMatrix| -> Vec<f64> {
        let mut v = Vec::with_capacity(len);
        v.extend(m.iter().map(|z| z.re));
        v.extend(m.iter().map(|z| z.im));
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        v
    };
    let rank_of = |rows: &[Vec<f64>]| -> usize {
        let m = DMatrix::from_fn(rows.len(), len, |i, j| rows[i][j]);
        m.svd(false, false)
            .singular_values
            .iter()
            .filter(|&&s| s > 1e-8)
            .count()
    };

    let mut elements: Vec<DenseMatrix> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let try_admit = |m: DenseMatrix, elements: &mut Vec<DenseMatrix>, rows: &mut Vec<Vec<f64>>| -> bool {
        if m.iter().all(|z| z.norm() < 1e-12) {
            return false;
        }
        rows.push(vectorize(&m));
        if rank_of(rows) == rows.len() {
            elements.push(m);
            true
        } else {
            rows.pop();
            false
        }
    };

    for g in gens.generators() {
        if elements.len() >= ceiling {
            break;
        }
        try_admit(to_dense(g)?, &mut elements, &mut rows);
    }
    let minus_i = Complex::new(0.0, -1.0);
    let mut start = 0;
    while start < elements.len() && elements.len() < ceiling {
        let end = elements.len();
        for i in start..end {
            for j in 0..i {
                if elements.len() >= ceiling {
                    break;
                }
                let (a, b) = (&elements[i], &elements[j]);
                let bracket = (a * b - b * a) * minus_i;
                try_admit(bracket, &mut elements, &mut rows);
            }
        }
        start = end;
    }
    Ok(elements.len())
}

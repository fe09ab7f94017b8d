//! Dense state-vector simulation of the encoding circuit, the target unitary
//! and the TFIM ansatz.
//!
//! Qubit 0 is the most significant bit of the basis index and `Z(0)` is the
//! measured observable. Rotations follow `R_P(θ) = exp(−iθP/2)`; ansatz
//! gates are `exp(+iθH)` evaluated exactly in the eigenbasis of `H`.

use std::sync::Arc;

use nalgebra::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dla::{tfim_hamiltonian, Boundary, DlaError};
use crate::pauli::{hermitian_eigen, to_dense, DenseMatrix, PauliError, PauliSum};

type C64 = Complex<f64>;

/// Allowed norm drift of a state after a full circuit.
pub const NORM_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("qubit {qubit} out of range for {n_qubits} qubits")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("control and target are both qubit {0}")]
    IndexClash(usize),
    #[error("dimension mismatch: state has {state}, operator has {operator}")]
    DimensionMismatch { state: usize, operator: usize },
    #[error("{what} index {index} out of range (have {len})")]
    Binding { what: &'static str, index: usize, len: usize },
    #[error("expected {expected} {family} values, got {got}")]
    ParamCount {
        family: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("eigendecomposition reconstruction error {0:.3e} exceeds 1e-9")]
    Reconstruction(f64),
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    Dla(#[from] DlaError),
    #[error("circuit JSON: {0}")]
    Json(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = C64::new(1.0, 0.0);
        Self { n_qubits, amps }
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self, SimError> {
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(SimError::DimensionMismatch {
                state: dim,
                operator: index + 1,
            });
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Wraps amplitudes, normalizing them.
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<C64>) -> Result<Self, SimError> {
        if amps.len() != 1 << n_qubits {
            return Err(SimError::DimensionMismatch {
                state: amps.len(),
                operator: 1 << n_qubits,
            });
        }
        let mut s = Self { n_qubits, amps };
        let norm = s.norm();
        s.amps.iter_mut().for_each(|a| *a /= norm);
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn bit(&self, qubit: usize) -> Result<usize, SimError> {
        if qubit >= self.n_qubits {
            return Err(SimError::QubitOutOfRange {
                qubit,
                n_qubits: self.n_qubits,
            });
        }
        Ok(1 << (self.n_qubits - 1 - qubit))
    }

    fn apply_1q(&mut self, qubit: usize, m: [[C64; 2]; 2]) -> Result<(), SimError> {
        let bit = self.bit(qubit)?;
        for i in 0..self.amps.len() {
            if i & bit != 0 {
                continue;
            }
            let (a0, a1) = (self.amps[i], self.amps[i | bit]);
            self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
            self.amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
        }
        Ok(())
    }

    pub fn apply_ry(&mut self, qubit: usize, angle: f64) -> Result<(), SimError> {
        let (s, c) = (angle / 2.0).sin_cos();
        let (c, s) = (C64::new(c, 0.0), C64::new(s, 0.0));
        self.apply_1q(qubit, [[c, -s], [s, c]])
    }

    pub fn apply_rz(&mut self, qubit: usize, angle: f64) -> Result<(), SimError> {
        let bit = self.bit(qubit)?;
        let lo = C64::from_polar(1.0, -angle / 2.0);
        let hi = C64::from_polar(1.0, angle / 2.0);
        for (i, a) in self.amps.iter_mut().enumerate() {
            *a *= if i & bit == 0 { lo } else { hi };
        }
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<(), SimError> {
        if control == target {
            return Err(SimError::IndexClash(control));
        }
        let cb = self.bit(control)?;
        let tb = self.bit(target)?;
        for i in 0..self.amps.len() {
            if i & cb != 0 && i & tb == 0 {
                self.amps.swap(i, i | tb);
            }
        }
        Ok(())
    }

    /// `ψ ← exp(iθH) ψ`.
    pub fn apply_ham_evolution(&mut self, ham: &HamEigen, theta: f64) -> Result<(), SimError> {
        ham.evolve(self, &[theta])
    }

    /// `⟨ψ|Z_0|ψ⟩`.
    pub fn expectation_z0(&self) -> f64 {
        let half = self.amps.len() / 2;
        let (up, down) = self.amps.split_at(half);
        up.iter().map(|a| a.norm_sqr()).sum::<f64>() - down.iter().map(|a| a.norm_sqr()).sum::<f64>()
    }
}

/// Eigen-decomposition `H = V diag(λ) V†` used for exact evolution.
#[derive(Debug, Clone)]
pub struct HamEigen {
    eigenvalues: Vec<f64>,
    eigenvectors: DenseMatrix,
}

impl HamEigen {
    pub fn new(h: &PauliSum) -> Result<Self, SimError> {
        let dense = to_dense(h)?;
        let eig = hermitian_eigen(&dense)?;
        let v = eig.eigenvectors;
        let lam = DenseMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(l, 0.0)));
        let rebuilt = &v * lam * v.adjoint();
        let err = (rebuilt - &dense).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if err > 1e-9 {
            return Err(SimError::Reconstruction(err));
        }
        Ok(Self {
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            eigenvectors: v,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DenseMatrix {
        &self.eigenvectors
    }

    /// Largest |eigenvalue|.
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, l| m.max(l.abs()))
    }

    /// Applies `exp(iθ_k H)` for every angle in `thetas`, in one pass through
    /// the eigenbasis (the factors commute).
    pub fn evolve(&self, state: &mut StateVector, thetas: &[f64]) -> Result<(), SimError> {
        let dim = self.dim();
        if state.amps.len() != dim {
            return Err(SimError::DimensionMismatch {
                state: state.amps.len(),
                operator: dim,
            });
        }
        let v = &self.eigenvectors;
        let mut coeffs = vec![C64::new(0.0, 0.0); dim];
        for (k, ck) in coeffs.iter_mut().enumerate() {
            let col = v.column(k);
            let mut acc = C64::new(0.0, 0.0);
            for (vj, psi) in col.iter().zip(&state.amps) {
                acc += vj.conj() * psi;
            }
            let mut phase = C64::new(1.0, 0.0);
            for &t in thetas {
                phase *= C64::from_polar(1.0, t * self.eigenvalues[k]);
            }
            *ck = acc * phase;
        }
        state.amps.iter_mut().for_each(|a| *a = C64::new(0.0, 0.0));
        for (k, ck) in coeffs.iter().enumerate() {
            for (out, vj) in state.amps.iter_mut().zip(v.column(k).iter()) {
                *out += vj * ck;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GateKind {
    Ry,
    Rz,
    Cnot,
    HamEvo,
}

/// Where a gate angle comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Binding {
    Fixed { value: f64 },
    Trainable { index: usize },
    Input { feature: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSpec {
    pub kind: GateKind,
    /// One qubit for rotations, `[control, target]` for CNOT, empty for HAM_EVO.
    pub qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binding: Option<Binding>,
}

impl GateSpec {
    pub fn ry(qubit: usize, binding: Binding) -> Self {
        Self {
            kind: GateKind::Ry,
            qubits: vec![qubit],
            binding: Some(binding),
        }
    }

    pub fn rz(qubit: usize, binding: Binding) -> Self {
        Self {
            kind: GateKind::Rz,
            qubits: vec![qubit],
            binding: Some(binding),
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self {
            kind: GateKind::Cnot,
            qubits: vec![control, target],
            binding: None,
        }
    }

    pub fn ham_evo(binding: Binding) -> Self {
        Self {
            kind: GateKind::HamEvo,
            qubits: vec![],
            binding: Some(binding),
        }
    }
}

/// Ordered gate list; gates apply to the state in list order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamCircuit {
    pub n_qubits: usize,
    pub gates: Vec<GateSpec>,
    pub layers: usize,
    pub reps: usize,
    pub n_trainable: usize,
    pub n_fixed: usize,
    /// Generator of every HAM_EVO gate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<PauliSum>,
    #[serde(skip)]
    eigen: Option<Arc<HamEigen>>,
}

impl PartialEq for ParamCircuit {
    fn eq(&self, other: &Self) -> bool {
        self.n_qubits == other.n_qubits
            && self.gates == other.gates
            && self.layers == other.layers
            && self.reps == other.reps
            && self.n_trainable == other.n_trainable
            && self.n_fixed == other.n_fixed
            && self.hamiltonian == other.hamiltonian
    }
}

impl ParamCircuit {
    /// Validates gate targets and trainable indices and counts N_t / N_f.
    pub fn new(
        n_qubits: usize,
        gates: Vec<GateSpec>,
        layers: usize,
        reps: usize,
        hamiltonian: Option<(PauliSum, Arc<HamEigen>)>,
    ) -> Result<Self, SimError> {
        if n_qubits == 0 {
            return Err(SimError::InvalidCircuit("zero qubits".into()));
        }
        let mut trainable = Vec::new();
        for (i, g) in gates.iter().enumerate() {
            let arity = match g.kind {
                GateKind::Ry | GateKind::Rz => 1,
                GateKind::Cnot => 2,
                GateKind::HamEvo => 0,
            };
            if g.qubits.len() != arity {
                return Err(SimError::InvalidCircuit(format!(
                    "gate {i} ({:?}) needs {arity} qubits, has {}",
                    g.kind,
                    g.qubits.len()
                )));
            }
            if let Some(&q) = g.qubits.iter().find(|&&q| q >= n_qubits) {
                return Err(SimError::QubitOutOfRange { qubit: q, n_qubits });
            }
            if g.kind == GateKind::Cnot && g.qubits[0] == g.qubits[1] {
                return Err(SimError::IndexClash(g.qubits[0]));
            }
            match (g.kind, g.binding) {
                (GateKind::Cnot, Some(_)) => {
                    return Err(SimError::InvalidCircuit(format!("gate {i}: CNOT takes no angle")))
                }
                (GateKind::Cnot, None) => {}
                (_, None) => return Err(SimError::InvalidCircuit(format!("gate {i}: missing angle binding"))),
                (_, Some(Binding::Trainable { index })) => trainable.push(index),
                _ => {}
            }
            if g.kind == GateKind::HamEvo && hamiltonian.is_none() {
                return Err(SimError::InvalidCircuit(format!("gate {i}: HAM_EVO without a Hamiltonian")));
            }
        }
        trainable.sort_unstable();
        if trainable.iter().enumerate().any(|(k, &idx)| k != idx) {
            return Err(SimError::InvalidCircuit(
                "trainable indices must be 0..N_t, each used once".into(),
            ));
        }
        if let Some((h, e)) = &hamiltonian {
            if h.n_qubits() != n_qubits || e.dim() != 1 << n_qubits {
                return Err(SimError::DimensionMismatch {
                    state: 1 << n_qubits,
                    operator: e.dim(),
                });
            }
        }
        let n_trainable = trainable.len();
        let (hamiltonian, eigen) = match hamiltonian {
            Some((h, e)) => (Some(h), Some(e)),
            None => (None, None),
        };
        Ok(Self {
            n_qubits,
            n_fixed: gates.len() - n_trainable,
            gates,
            layers,
            reps,
            n_trainable,
            hamiltonian,
            eigen,
        })
    }

    pub fn eigen(&self) -> Option<&Arc<HamEigen>> {
        self.eigen.as_ref()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serializes")
    }

    /// Parses a circuit and rebuilds the Hamiltonian eigendecomposition.
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let raw: ParamCircuit = serde_json::from_str(text).map_err(|e| SimError::Json(e.to_string()))?;
        let ham = match raw.hamiltonian {
            Some(h) => {
                let e = Arc::new(HamEigen::new(&h)?);
                Some((h, e))
            }
            None => None,
        };
        let c = ParamCircuit::new(raw.n_qubits, raw.gates, raw.layers, raw.reps, ham)?;
        if c.n_trainable != raw.n_trainable || c.n_fixed != raw.n_fixed {
            return Err(SimError::InvalidCircuit("stored N_t/N_f disagree with the gate list".into()));
        }
        Ok(c)
    }

    fn resolve(binding: Binding, theta: &[f64], x: &[f64]) -> Result<f64, SimError> {
        match binding {
            Binding::Fixed { value } => Ok(value),
            Binding::Trainable { index } => theta.get(index).copied().ok_or(SimError::Binding {
                what: "trainable",
                index,
                len: theta.len(),
            }),
            Binding::Input { feature } => x.get(feature).copied().ok_or(SimError::Binding {
                what: "input feature",
                index: feature,
                len: x.len(),
            }),
        }
    }

    /// Applies the circuit to `state` with parameters `theta` and input `x`.
    /// Consecutive HAM_EVO gates share one pass through the eigenbasis.
    pub fn apply(&self, state: &mut StateVector, theta: &[f64], x: &[f64]) -> Result<(), SimError> {
        if state.n_qubits() != self.n_qubits {
            return Err(SimError::DimensionMismatch {
                state: state.amps.len(),
                operator: 1 << self.n_qubits,
            });
        }
        let mut pending: Vec<f64> = Vec::new();
        for g in &self.gates {
            if g.kind != GateKind::HamEvo && !pending.is_empty() {
                self.flush_evolution(state, &mut pending)?;
            }
            match g.kind {
                GateKind::Ry => {
                    let a = Self::resolve(g.binding.expect("validated"), theta, x)?;
                    state.apply_ry(g.qubits[0], a)?;
                }
                GateKind::Rz => {
                    let a = Self::resolve(g.binding.expect("validated"), theta, x)?;
                    state.apply_rz(g.qubits[0], a)?;
                }
                GateKind::Cnot => state.apply_cnot(g.qubits[0], g.qubits[1])?,
                GateKind::HamEvo => {
                    pending.push(Self::resolve(g.binding.expect("validated"), theta, x)?);
                }
            }
        }
        if !pending.is_empty() {
            self.flush_evolution(state, &mut pending)?;
        }
        Ok(())
    }

    fn flush_evolution(&self, state: &mut StateVector, pending: &mut Vec<f64>) -> Result<(), SimError> {
        let eigen = self.eigen.as_ref().ok_or_else(|| {
            SimError::InvalidCircuit("HAM_EVO gate but no eigendecomposition loaded".into())
        })?;
        eigen.evolve(state, pending)?;
        pending.clear();
        Ok(())
    }
}

/// `U_E(x)`: two repetitions of an `R_Y(x_j)` layer followed by the CNOT
/// ladder `j → j+1`. Angles are bound to input features; N_t = 0.
pub fn encoding_circuit(n: usize) -> Result<ParamCircuit, SimError> {
    let mut gates = Vec::new();
    for _ in 0..2 {
        for j in 0..n {
            gates.push(GateSpec::ry(j, Binding::Input { feature: j }));
        }
        for j in 0..n.saturating_sub(1) {
            gates.push(GateSpec::cnot(j, j + 1));
        }
    }
    ParamCircuit::new(n, gates, 2, 1, None)
}

/// Target `V = A_1 · A_2` with `A_l = (R_Z(β_l) R_Y(γ_l) R_Z(ν_l))^{⊗n}`.
///
/// As a gate list this is, per qubit and in application order,
/// `R_Z(ν_2), R_Y(γ_2), R_Z(β_2), R_Z(ν_1), R_Y(γ_1), R_Z(β_1)`.
pub fn target_unitary(n: usize, betas: &[f64], gammas: &[f64], nus: &[f64]) -> Result<ParamCircuit, SimError> {
    for (family, v) in [("beta", betas), ("gamma", gammas), ("nu", nus)] {
        if v.len() != 2 {
            return Err(SimError::ParamCount {
                family,
                expected: 2,
                got: v.len(),
            });
        }
    }
    let mut gates = Vec::new();
    for l in [1, 0] {
        for q in 0..n {
            gates.push(GateSpec::rz(q, Binding::Fixed { value: nus[l] }));
            gates.push(GateSpec::ry(q, Binding::Fixed { value: gammas[l] }));
            gates.push(GateSpec::rz(q, Binding::Fixed { value: betas[l] }));
        }
    }
    ParamCircuit::new(n, gates, 2, 1, None)
}

/// `U(θ) = Π_l Π_k exp(iθ_{l,k} H)` with `H` the unit-coefficient TFIM
/// Hamiltonian; trainable index `l·K + k`.
pub fn ansatz(n: usize, boundary: Boundary, layers: usize, reps: usize) -> Result<ParamCircuit, SimError> {
    let h = tfim_hamiltonian(n, boundary)?;
    let eigen = Arc::new(HamEigen::new(&h)?);
    ansatz_with(h, eigen, layers, reps)
}

/// As [`ansatz`], reusing an existing Hamiltonian and eigendecomposition.
pub fn ansatz_with(h: PauliSum, eigen: Arc<HamEigen>, layers: usize, reps: usize) -> Result<ParamCircuit, SimError> {
    if layers == 0 || reps == 0 {
        return Err(SimError::InvalidCircuit("L and K must be at least 1".into()));
    }
    let n = h.n_qubits();
    let gates = (0..layers * reps)
        .map(|index| GateSpec::ham_evo(Binding::Trainable { index }))
        .collect();
    ParamCircuit::new(n, gates, layers, reps, Some((h, eigen)))
}

/// Encoding circuit plus trainable ansatz.
#[derive(Debug, Clone)]
pub struct ModelBundle {
    pub encoding: ParamCircuit,
    pub ansatz: ParamCircuit,
}

impl ModelBundle {
    pub fn new(encoding: ParamCircuit, ansatz: ParamCircuit) -> Result<Self, SimError> {
        if encoding.n_qubits != ansatz.n_qubits {
            return Err(SimError::DimensionMismatch {
                state: 1 << encoding.n_qubits,
                operator: 1 << ansatz.n_qubits,
            });
        }
        Ok(Self { encoding, ansatz })
    }

    pub fn tfim(n: usize, boundary: Boundary, layers: usize, reps: usize) -> Result<Self, SimError> {
        Self::new(encoding_circuit(n)?, ansatz(n, boundary, layers, reps)?)
    }

    pub fn n_qubits(&self) -> usize {
        self.encoding.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.ansatz.n_trainable
    }
}

fn check_input(n: usize, x: &[f64]) -> Result<(), SimError> {
    if x.len() != n {
        return Err(SimError::ParamCount {
            family: "input feature",
            expected: n,
            got: x.len(),
        });
    }
    Ok(())
}

/// `⟨0|U_E(x)† U(θ)† Z_0 U(θ) U_E(x)|0⟩`.
pub fn model_output(x: &[f64], theta: &[f64], model: &ModelBundle) -> Result<f64, SimError> {
    check_input(model.n_qubits(), x)?;
    if theta.len() != model.n_params() {
        return Err(SimError::ParamCount {
            family: "trainable",
            expected: model.n_params(),
            got: theta.len(),
        });
    }
    let mut state = StateVector::zero(model.n_qubits());
    model.encoding.apply(&mut state, &[], x)?;
    model.ansatz.apply(&mut state, theta, x)?;
    Ok(state.expectation_z0())
}

/// `⟨0|U_E(x)† V† Z_0 V U_E(x)|0⟩`.
pub fn target_label(x: &[f64], encoding: &ParamCircuit, target: &ParamCircuit) -> Result<f64, SimError> {
    check_input(encoding.n_qubits, x)?;
    let mut state = StateVector::zero(encoding.n_qubits);
    encoding.apply(&mut state, &[], x)?;
    target.apply(&mut state, &[], x)?;
    Ok(state.expectation_z0())
}

//! Gate-wise simulation against an explicit dense matrix chain.

use std::f64::consts::{PI, TAU};
use std::path::PathBuf;
use std::sync::Arc;

use dlalab::dla::{tfim_hamiltonian, Boundary};
use dlalab::experiments::TargetParams;
use dlalab::pauli::{to_dense, DenseMatrix, Pauli, PauliSum, PauliWord};
use dlalab::simulator::{
    ansatz, encoding_circuit, model_output, target_label, Binding, GateKind, GateSpec, HamEigen, ModelBundle,
    ParamCircuit, StateVector,
};
use dlalab::training::{empirical_risk, Sample};
use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C64 = Complex<f64>;

fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

fn pauli_2x2(p: Pauli) -> DenseMatrix {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    match p {
        Pauli::I => DenseMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        Pauli::X => DenseMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        Pauli::Y => DenseMatrix::from_row_slice(2, 2, &[z, c(0.0, -1.0), c(0.0, 1.0), z]),
        Pauli::Z => DenseMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    }
}

/// `I ⊗ … ⊗ m ⊗ … ⊗ I` with `m` on `qubit` (qubit 0 leftmost).
fn embed(n: usize, qubit: usize, m: &DenseMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::from_element(1, 1, c(1.0, 0.0));
    for q in 0..n {
        let f = if q == qubit { m.clone() } else { pauli_2x2(Pauli::I) };
        out = out.kronecker(&f);
    }
    out
}

fn rotation(p: Pauli, angle: f64) -> DenseMatrix {
    (pauli_2x2(p) * c(0.0, -angle / 2.0)).exp()
}

fn cnot(n: usize, control: usize, target: usize) -> DenseMatrix {
    let p0 = DenseMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    let p1 = DenseMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    let mut a = DenseMatrix::from_element(1, 1, c(1.0, 0.0));
    let mut b = a.clone();
    for q in 0..n {
        let (fa, fb) = if q == control {
            (p0.clone(), p1.clone())
        } else if q == target {
            (pauli_2x2(Pauli::I), pauli_2x2(Pauli::X))
        } else {
            (pauli_2x2(Pauli::I), pauli_2x2(Pauli::I))
        };
        a = a.kronecker(&fa);
        b = b.kronecker(&fb);
    }
    a + b
}

fn angle(b: Binding, theta: &[f64], x: &[f64]) -> f64 {
    match b {
        Binding::Fixed { value } => value,
        Binding::Trainable { index } => theta[index],
        Binding::Input { feature } => x[feature],
    }
}

/// Full unitary of a circuit as a product of per-gate matrices.
fn circuit_unitary(circ: &ParamCircuit, theta: &[f64], x: &[f64]) -> DenseMatrix {
    let n = circ.n_qubits;
    let dim = 1 << n;
    let mut u = DenseMatrix::identity(dim, dim);
    for g in &circ.gates {
        let m = match g.kind {
            GateKind::Ry => embed(n, g.qubits[0], &rotation(Pauli::Y, angle(g.binding.unwrap(), theta, x))),
            GateKind::Rz => embed(n, g.qubits[0], &rotation(Pauli::Z, angle(g.binding.unwrap(), theta, x))),
            GateKind::Cnot => cnot(n, g.qubits[0], g.qubits[1]),
            GateKind::HamEvo => {
                let h = to_dense(circ.hamiltonian.as_ref().unwrap()).unwrap();
                (h * c(0.0, angle(g.binding.unwrap(), theta, x))).exp()
            }
        };
        u = m * u;
    }
    u
}

fn z0_expectation(u: &DenseMatrix, n: usize) -> f64 {
    let z0 = embed(n, 0, &pauli_2x2(Pauli::Z));
    (u.adjoint() * z0 * u)[(0, 0)].re
}

fn oracle_model(model: &ModelBundle, x: &[f64], theta: &[f64]) -> f64 {
    let u = circuit_unitary(&model.ansatz, theta, x) * circuit_unitary(&model.encoding, &[], x);
    z0_expectation(&u, model.n_qubits())
}

fn oracle_label(enc: &ParamCircuit, v: &ParamCircuit, x: &[f64]) -> f64 {
    let u = circuit_unitary(v, &[], x) * circuit_unitary(enc, &[], x);
    z0_expectation(&u, enc.n_qubits)
}

fn random_hamiltonian(n: usize, rng: &mut ChaCha8Rng) -> PauliSum {
    let letters = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    PauliSum::from_terms(
        n,
        (0..4).map(|_| {
            let w: Vec<Pauli> = (0..n).map(|_| letters[rng.random_range(0..4)]).collect();
            (PauliWord::from_letters(&w).unwrap(), rng.random_range(-1.0..1.0))
        }),
    )
    .unwrap()
}

fn random_circuit(n: usize, rng: &mut ChaCha8Rng) -> (ParamCircuit, usize) {
    let h = random_hamiltonian(n, rng);
    let eigen = Arc::new(HamEigen::new(&h).unwrap());
    let mut gates = Vec::new();
    let mut n_t = 0;
    for _ in 0..rng.random_range(4..16) {
        let binding = match rng.random_range(0..3) {
            0 => Binding::Fixed {
                value: rng.random_range(-PI..PI),
            },
            1 => {
                n_t += 1;
                Binding::Trainable { index: n_t - 1 }
            }
            _ => Binding::Input {
                feature: rng.random_range(0..n),
            },
        };
        let q = rng.random_range(0..n);
        let g = match rng.random_range(0..4) {
            0 => GateSpec::ry(q, binding),
            1 => GateSpec::rz(q, binding),
            2 if n > 1 => {
                if let Binding::Trainable { .. } = binding {
                    n_t -= 1;
                }
                let t = (q + rng.random_range(1..n)) % n;
                GateSpec::cnot(q, t)
            }
            _ => GateSpec::ham_evo(binding),
        };
        gates.push(g);
    }
    (ParamCircuit::new(n, gates, 1, 1, Some((h, eigen))).unwrap(), n_t)
}

#[test]
fn random_circuits_match_dense_chain() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..150 {
        let n = 1 + case % 3;
        let (circ, n_t) = random_circuit(n, &mut rng);
        let theta: Vec<f64> = (0..n_t).map(|_| rng.random_range(-2.0..2.0)).collect();
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
        let mut state = StateVector::zero(n);
        circ.apply(&mut state, &theta, &x).unwrap();
        let u = circuit_unitary(&circ, &theta, &x);
        for (a, b) in state.amplitudes().iter().zip(u.column(0).iter()) {
            assert!((a - b).norm() < 1e-9, "case {case}");
        }
        assert!((state.expectation_z0() - z0_expectation(&u, n)).abs() < 1e-9);
        assert!((state.norm() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn tfim_models_match_dense_chain() {
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    for n in 1..=3 {
        for b in Boundary::ALL {
            if n == 1 {
                continue;
            }
            let model = ModelBundle::tfim(n, b, 2, 10).unwrap();
            for _ in 0..5 {
                let theta: Vec<f64> = (0..20).map(|_| rng.random_range(-0.5..0.5)).collect();
                let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
                let got = model_output(&x, &theta, &model).unwrap();
                assert!((got - oracle_model(&model, &x, &theta)).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn single_qubit_identity_ansatz_is_cos_2x() {
    let h = PauliSum::from_labels(&[(1.0, "X")]).unwrap();
    let eigen = Arc::new(HamEigen::new(&h).unwrap());
    let model = ModelBundle::new(
        encoding_circuit(1).unwrap(),
        dlalab::simulator::ansatz_with(h, eigen, 2, 10).unwrap(),
    )
    .unwrap();
    for k in 0..100 {
        let x = TAU * k as f64 / 100.0;
        let y = model_output(&[x], &[0.0; 20], &model).unwrap();
        assert!((y - (2.0 * x).cos()).abs() <= 1e-12, "x={x}");
    }
}

#[test]
fn evolution_flow_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(79);
    let h = tfim_hamiltonian(3, Boundary::Closed).unwrap();
    let e = HamEigen::new(&h).unwrap();
    for _ in 0..20 {
        let amps: Vec<C64> = (0..8).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let psi = StateVector::from_amplitudes(3, amps).unwrap();
        let (t1, t2) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));

        let mut a = psi.clone();
        a.apply_ham_evolution(&e, t1).unwrap();
        a.apply_ham_evolution(&e, t2).unwrap();
        let mut b = psi.clone();
        b.apply_ham_evolution(&e, t1 + t2).unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x - y).norm() <= 1e-10);
        }

        let mut back = psi.clone();
        back.apply_ham_evolution(&e, t1).unwrap();
        back.apply_ham_evolution(&e, -t1).unwrap();
        for (x, y) in back.amplitudes().iter().zip(psi.amplitudes()) {
            assert!((x - y).norm() <= 1e-10);
        }
        assert!((a.norm() - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn ansatz_gate_order_is_irrelevant() {
    let mut rng = ChaCha8Rng::seed_from_u64(80);
    let model = ModelBundle::tfim(3, Boundary::Open, 2, 10).unwrap();
    let x = [0.3, 1.1, 2.9];
    let theta: Vec<f64> = (0..20).map(|_| rng.random_range(-0.3..0.3)).collect();
    let mut permuted = theta.clone();
    permuted.reverse();
    permuted.swap(3, 11);
    let a = model_output(&x, &theta, &model).unwrap();
    let b = model_output(&x, &permuted, &model).unwrap();
    assert!((a - b).abs() < 1e-12);
}

#[test]
fn cnot_is_an_involution() {
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    let amps: Vec<C64> = (0..8).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let psi = StateVector::from_amplitudes(3, amps).unwrap();
    let mut s = psi.clone();
    s.apply_cnot(2, 0).unwrap();
    s.apply_cnot(2, 0).unwrap();
    assert_eq!(s, psi);
}

#[test]
fn rotations_match_dense_exponential() {
    let mut rng = ChaCha8Rng::seed_from_u64(82);
    for _ in 0..20 {
        let t = rng.random_range(-TAU..TAU);
        for (p, kind) in [(Pauli::Y, 0), (Pauli::Z, 1)] {
            let m = rotation(p, t);
            for basis in 0..2 {
                let mut s = StateVector::basis(1, basis).unwrap();
                if kind == 0 {
                    s.apply_ry(0, t).unwrap();
                } else {
                    s.apply_rz(0, t).unwrap();
                }
                for r in 0..2 {
                    assert!((s.amplitudes()[r] - m[(r, basis)]).norm() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn target_is_unitary_and_labels_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(83);
    for n in 1..=3 {
        let enc = encoding_circuit(n).unwrap();
        for _ in 0..5 {
            let p = TargetParams {
                betas: [rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)],
                gammas: [rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)],
                nus: [rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)],
            };
            let v = p.circuit(n).unwrap();
            let u = circuit_unitary(&v, &[], &[]);
            let dim = 1 << n;
            let err = (u.adjoint() * &u - DenseMatrix::identity(dim, dim)).iter().fold(0.0f64, |m, z| m.max(z.norm()));
            assert!(err < 1e-10);
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
            let y = target_label(&x, &enc, &v).unwrap();
            assert!(y.abs() <= 1.0 + 1e-12);
            assert!((y - oracle_label(&enc, &v, &x)).abs() < 1e-9);
        }
    }
}

#[test]
fn ansatz_is_unitary_and_identity_at_zero() {
    let a = ansatz(3, Boundary::Closed, 2, 10).unwrap();
    let zero = circuit_unitary(&a, &[0.0; 20], &[]);
    let id = DenseMatrix::identity(8, 8);
    assert!((zero - &id).iter().all(|z| z.norm() < 1e-12));
    let theta: Vec<f64> = (0..20).map(|k| 0.05 * k as f64).collect();
    let u = circuit_unitary(&a, &theta, &[]);
    assert!((u.adjoint() * &u - id).iter().all(|z| z.norm() < 1e-10));
}

// Golden values -------------------------------------------------------------

fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn golden_cases() -> Vec<(String, f64, f64)> {
    // (name, simulator value, oracle value)
    let mut rng = ChaCha8Rng::seed_from_u64(2025);
    let mut out = Vec::new();

    let model = ModelBundle::tfim(2, Boundary::Open, 2, 10).unwrap();
    let theta: Vec<f64> = (0..20).map(|_| rng.random_range(-0.2..0.2)).collect();
    let x = [rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)];
    out.push((
        "model_output_n2_open".to_string(),
        model_output(&x, &theta, &model).unwrap(),
        oracle_model(&model, &x, &theta),
    ));

    let enc3 = encoding_circuit(3).unwrap();
    let p = TargetParams {
        betas: [0.4, 2.2],
        gammas: [1.3, 5.0],
        nus: [3.1, 0.7],
    };
    let v = p.circuit(3).unwrap();
    let x3 = [0.5, 4.0, 2.5];
    out.push((
        "target_label_n3".to_string(),
        target_label(&x3, &enc3, &v).unwrap(),
        oracle_label(&enc3, &v, &x3),
    ));

    // Empirical risk on a fixed 2-qubit dataset, summed directly from the oracle.
    let enc2 = encoding_circuit(2).unwrap();
    let v2 = TargetParams {
        betas: [1.0, 2.0],
        gammas: [3.0, 4.0],
        nus: [5.0, 6.0],
    }
    .circuit(2)
    .unwrap();
    let data: Vec<Sample> = (0..10)
        .map(|_| {
            let x = vec![rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)];
            let y = oracle_label(&enc2, &v2, &x);
            Sample { x, y }
        })
        .collect();
    let direct: f64 = data
        .iter()
        .map(|s| (oracle_model(&model, &s.x, &theta) - s.y).powi(2))
        .sum::<f64>()
        / data.len() as f64;
    out.push((
        "empirical_risk_n2_open".to_string(),
        empirical_risk(&model, &theta, &data).unwrap(),
        direct,
    ));
    out
}

#[test]
fn golden_values() {
    let path = fixture_path("simulator_golden.csv");
    let cases = golden_cases();
    for (name, sim, oracle) in &cases {
        assert!((sim - oracle).abs() < 1e-9, "{name}: simulator {sim} vs oracle {oracle}");
    }
    if std::env::var_os("DLALAB_BLESS").is_some() {
        let mut text = String::from("case,value\n");
        for (name, _, oracle) in &cases {
            text.push_str(&format!("{name},{oracle:.11e}\n"));
        }
        std::fs::write(&path, text).unwrap();
    }
    let text = std::fs::read_to_string(&path).expect("fixture present; regenerate with DLALAB_BLESS=1");
    let mut rows = text.lines().skip(1);
    for (name, sim, _) in &cases {
        let row = rows.next().expect("fixture row");
        let (fname, fval) = row.split_once(',').unwrap();
        assert_eq!(fname, name);
        let fval: f64 = fval.parse().unwrap();
        assert!((sim - fval).abs() <= 1e-10 * fval.abs().max(1.0), "{name}: {sim} vs fixture {fval}");
    }
}

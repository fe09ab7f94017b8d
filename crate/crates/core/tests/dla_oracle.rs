use dlalab::dla::{
    closure_oracle_dense, dla_dimension, lie_closure, su_dimension, tfim_generators, Boundary, GeneratorSet,
};
use dlalab::pauli::{commutator, hs_inner, Pauli, PauliSum, PauliWord};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LETTERS: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

fn random_word(n: usize, rng: &mut ChaCha8Rng) -> PauliWord {
    loop {
        let letters: Vec<Pauli> = (0..n).map(|_| LETTERS[rng.random_range(0..4)]).collect();
        let w = PauliWord::from_letters(&letters).unwrap();
        if !w.is_identity() {
            return w;
        }
    }
}

fn random_set(n: usize, rng: &mut ChaCha8Rng) -> GeneratorSet {
    let k = rng.random_range(1..=3);
    let gens = (0..k)
        .map(|_| loop {
            let terms = rng.random_range(1..=3);
            let g = PauliSum::from_terms(
                n,
                (0..terms).map(|_| (random_word(n, rng), [1.0, -1.0, 0.5, 2.0][rng.random_range(0..4)])),
            )
            .unwrap();
            if !g.is_empty() {
                break g;
            }
        })
        .collect();
    GeneratorSet::new(gens, "random").unwrap()
}

fn single(n: usize, sites: &[(usize, Pauli)]) -> PauliSum {
    PauliSum::single(n, sites, 1.0).unwrap()
}

#[test]
fn closure_matches_dense_oracle_on_random_two_qubit_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut seen = std::collections::BTreeSet::new();
    for _ in 0..50 {
        let gens = random_set(2, &mut rng);
        let symbolic = lie_closure(&gens, su_dimension(2)).unwrap();
        let dense = closure_oracle_dense(&gens, su_dimension(2)).unwrap();
        assert_eq!(symbolic.dim, dense, "generators {:?}", gens.generators());
        seen.insert(dense);
    }
    // The sample should exercise more than one algebra size.
    assert!(seen.len() >= 3, "dims seen: {seen:?}");
}

#[test]
fn closure_matches_dense_oracle_on_random_three_qubit_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let gens = random_set(3, &mut rng);
        let symbolic = lie_closure(&gens, su_dimension(3)).unwrap();
        assert_eq!(symbolic.dim, closure_oracle_dense(&gens, su_dimension(3)).unwrap());
    }
}

#[test]
fn tfim_matches_dense_oracle_up_to_three_qubits() {
    for n in 2..=3 {
        for b in Boundary::ALL {
            let gens = tfim_generators(n, b).unwrap();
            let dim = dla_dimension(&gens).unwrap();
            assert_eq!(dim, closure_oracle_dense(&gens, su_dimension(n)).unwrap(), "n={n} {b}");
        }
    }
}

#[test]
fn tfim_dimensions_two_to_six() {
    let expected_open = [4, 9, 16, 25, 36];
    for (i, n) in (2..=6).enumerate() {
        let open = dla_dimension(&tfim_generators(n, Boundary::Open).unwrap()).unwrap();
        let closed = dla_dimension(&tfim_generators(n, Boundary::Closed).unwrap()).unwrap();
        println!(
            "n={n}: open computed {open} claimed {}, closed computed {closed} claimed {}",
            Boundary::Open.claimed_tfim_dim(n),
            Boundary::Closed.claimed_tfim_dim(n)
        );
        assert_eq!(open, expected_open[i]);
        assert!(closed <= open);
    }
}

#[test]
fn su2_from_x_and_z() {
    let gens = GeneratorSet::new(vec![single(1, &[(0, Pauli::X)]), single(1, &[(0, Pauli::Z)])], "xz").unwrap();
    assert_eq!(dla_dimension(&gens).unwrap(), 3);
    assert_eq!(closure_oracle_dense(&gens, 3).unwrap(), 3);
}

#[test]
fn commuting_product_rotations_give_n() {
    for n in 1..=6 {
        let gens = (0..n).map(|q| single(n, &[(q, Pauli::Y)])).collect();
        let gens = GeneratorSet::new(gens, "y-rotations").unwrap();
        assert_eq!(dla_dimension(&gens).unwrap(), n);
    }
}

#[test]
fn adding_generators_never_shrinks_closure() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..30 {
        let base = random_set(2, &mut rng);
        let extra = random_set(2, &mut rng);
        let mut all = base.generators().to_vec();
        all.extend_from_slice(extra.generators());
        let bigger = GeneratorSet::new(all, "union").unwrap();
        assert!(dla_dimension(&bigger).unwrap() >= dla_dimension(&base).unwrap());
    }
}

#[test]
fn closure_is_permutation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..30 {
        let gens = random_set(3, &mut rng);
        let mut shuffled = gens.generators().to_vec();
        shuffled.shuffle(&mut rng);
        let shuffled = GeneratorSet::new(shuffled, "shuffled").unwrap();
        assert_eq!(dla_dimension(&gens).unwrap(), dla_dimension(&shuffled).unwrap());
    }
}

#[test]
fn basis_is_orthonormal_and_closed() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..10 {
        let gens = random_set(2, &mut rng);
        let basis = lie_closure(&gens, su_dimension(2)).unwrap();
        assert!(!basis.truncated);
        assert!(basis.dim <= su_dimension(2));
        for (i, a) in basis.basis.iter().enumerate() {
            for (j, b) in basis.basis.iter().enumerate() {
                let ip = hs_inner(a, b).unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - want).abs() < 1e-9);
                let c = commutator(a, b).unwrap();
                let mut rest = c.clone();
                for e in &basis.basis {
                    rest = rest.axpy(-hs_inner(&c, e).unwrap(), e).unwrap();
                }
                let residual = rest.norm();
                assert!(residual < 1e-8, "commutator leaves the span by {residual}");
            }
        }
    }
}

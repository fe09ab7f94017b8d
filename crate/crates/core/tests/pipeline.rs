use std::f64::consts::LN_2;
use std::path::PathBuf;

use dlalab::bounds::{max_trainable_params, theta_max};
use dlalab::dla::{dla_dimension, tfim_generators, tfim_hamiltonian, Boundary};
use dlalab::experiments::{
    compute_cr, compute_pmax_nmax, dataset_seed, generate_dataset, run_single, run_sweep, summarize,
    t_test_two_sample, t_test_welch, train_seed, ExperimentConfig, ExperimentRecord, ModelContext, SweepConfig,
};
use dlalab::pauli::operator_norm;
use dlalab::training::{train_model, Algorithm, TrainConfig};

fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn t_test_reference_values() {
    // Reference p-values from scipy.stats.ttest_ind.
    let a = [19.1, 20.3, 18.7, 21.2, 20.0, 19.5, 22.1, 18.9, 20.8, 19.9];
    let b = [21.4, 22.0, 20.7, 23.1, 21.9, 22.5, 20.2, 21.8, 23.4, 22.2];
    assert!((t_test_two_sample(&a, &b).unwrap() - 0.0007644153052606827).abs() < 1e-6);
    assert!((t_test_welch(&a, &b).unwrap() - 0.0007760714802164809).abs() < 1e-6);
    let c = [0.12, 0.05, 0.31, 0.08, 0.22];
    let d = [0.02, 0.41, 0.18, 0.27, 0.09, 0.33, 0.15];
    assert!((t_test_two_sample(&c, &d).unwrap() - 0.504363060748497).abs() < 1e-6);
    assert!((t_test_welch(&c, &d).unwrap() - 0.486136686588859).abs() < 1e-6);
}

#[test]
fn hamiltonian_norm_grows_with_n() {
    for b in Boundary::ALL {
        let norms: Vec<f64> = (2..=6)
            .map(|n| operator_norm(&tfim_hamiltonian(n, b).unwrap()).unwrap())
            .collect();
        assert!(norms.windows(2).all(|w| w[1] >= w[0]), "{b}: {norms:?}");
    }
}

#[test]
fn cr_hand_count() {
    let h = tfim_hamiltonian(2, Boundary::Open).unwrap();
    let norm = operator_norm(&h).unwrap();
    // 0.01 → budget ≈ 200 (counts), 0.2 → ≈ 12.0 (fails for N_t = 20),
    // 0.05 → ≈ 42.1 (counts), 0.8 → out of domain.
    let ps = [0.01, 0.2, 0.05, 0.8];
    let theta: Vec<f64> = (0..20).map(|k| ps[k % 4] / norm).collect();
    assert!(max_trainable_params(0.2).unwrap() < 20.0);
    assert!(max_trainable_params(0.05).unwrap() > 20.0);
    assert!((compute_cr(&theta, &h).unwrap() - 0.5).abs() < 1e-15);
    assert_eq!(compute_cr(&[0.0; 20], &h).unwrap(), 1.0);
    let big = vec![LN_2 / norm; 20];
    assert_eq!(compute_cr(&big, &h).unwrap(), 0.0);
    let (p, nm) = compute_pmax_nmax(&theta, &h).unwrap();
    assert!((p - 0.8).abs() < 1e-12);
    assert_eq!(nm, None);
}

fn golden_record() -> ExperimentRecord {
    let cfg = ExperimentConfig::default();
    let ctx = ModelContext::new(2, Boundary::Open, cfg.layers, cfg.reps).unwrap();
    let ds = generate_dataset(2, dataset_seed(0, 2, 0), cfg.m_train, cfg.m_test).unwrap();
    run_single(&ctx, Algorithm::Sps, &ds, train_seed(0, 2, Boundary::Open, Algorithm::Sps, 0), &cfg).unwrap()
}

#[test]
fn golden_record_reproduces_bitwise() {
    let rec = golden_record();
    let path = fixture_path("record_n2_open_sps.json");
    if std::env::var_os("DLALAB_BLESS").is_some() {
        std::fs::write(&path, serde_json::to_string_pretty(&rec).unwrap() + "\n").unwrap();
    }
    let text = std::fs::read_to_string(&path).expect("fixture present; regenerate with DLALAB_BLESS=1");
    let frozen: ExperimentRecord = serde_json::from_str(&text).unwrap();
    assert_eq!(rec, frozen);
}

#[test]
fn record_invariants_and_recomputation() {
    let rec = golden_record();
    assert_eq!(rec.theta_star.len(), 20);
    assert!(rec.theta_star.iter().all(|t| t.is_finite()));
    assert_eq!(rec.gap_rmse, rec.test_rmse - rec.train_rmse);
    assert!((0.0..=1.0).contains(&rec.cr));
    assert_eq!(rec.dim_g, dla_dimension(&tfim_generators(2, Boundary::Open).unwrap()).unwrap());

    let json = serde_json::to_string(&rec).unwrap();
    let back: ExperimentRecord = serde_json::from_str(&json).unwrap();
    let h = tfim_hamiltonian(2, Boundary::Open).unwrap();
    assert_eq!(compute_cr(&back.theta_star, &h).unwrap(), rec.cr);
    assert_eq!(compute_pmax_nmax(&back.theta_star, &h).unwrap(), (rec.p_max, rec.n_max));
    assert_eq!(rec.n_max.is_none(), rec.p_max >= LN_2 || rec.p_max == 0.0);
}

#[test]
fn training_on_the_model() {
    let ctx = ModelContext::new(3, Boundary::Closed, 2, 10).unwrap();
    let ds = generate_dataset(3, 11, 10, 100).unwrap();
    let ran = train_model(&ctx.model, &ds.train, &TrainConfig::new(Algorithm::Ran, 100, 4)).unwrap();
    assert_eq!(ran.train_loss_trace.len(), 101);
    assert!(ran.train_loss_trace.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(ran.evaluations_used, 101);

    let cfg = TrainConfig::new(Algorithm::Sps, 60, 4);
    let a = train_model(&ctx.model, &ds.train, &cfg).unwrap();
    assert_eq!(a, train_model(&ctx.model, &ds.train, &cfg).unwrap());
    assert_eq!(a.theta_star.len(), 20);

    let limit = theta_max(&ctx.hamiltonian).unwrap();
    for alg in Algorithm::ALL {
        let clipped = TrainConfig {
            theta_clip: Some(limit),
            ran_step: 1.0,
            a0: 2.0,
            ..TrainConfig::new(alg, 100, 9)
        };
        let r = train_model(&ctx.model, &ds.train, &clipped).unwrap();
        assert!(r.theta_star.iter().all(|t| t.abs() <= limit));
    }
}

#[test]
fn clipped_experiment_uses_theta_max() {
    let cfg = ExperimentConfig {
        theta_clip: true,
        ..ExperimentConfig::default()
    };
    let ctx = ModelContext::new(2, Boundary::Closed, 2, 10).unwrap();
    let tc = cfg.train_config(Algorithm::Ran, 1, ctx.h_norm).unwrap();
    assert_eq!(tc.theta_clip, Some(theta_max(&ctx.hamiltonian).unwrap()));
    let ds = generate_dataset(2, 3, 10, 100).unwrap();
    let rec = run_single(&ctx, Algorithm::Ran, &ds, 1, &cfg).unwrap();
    assert!(rec.p_max <= LN_2 + 1e-12);
}

#[test]
fn sweep_is_deterministic_and_filters_only_in_aggregation() {
    let mut cfg = SweepConfig {
        n_list: vec![2, 3],
        n_datasets: 4,
        master_seed: 5,
        ..SweepConfig::default()
    };
    cfg.experiment.train.epochs = 20;
    let a = run_sweep(&cfg).unwrap();
    let b = run_sweep(&cfg).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a.records.len(), 2 * 2 * 2 * 4);

    let negative = a.records.iter().filter(|r| r.gap_rmse <= 0.0).count();
    for g in &a.summary.groups {
        let raw: Vec<&ExperimentRecord> = a
            .records
            .iter()
            .filter(|r| r.n == g.n && r.boundary == g.boundary && r.algorithm == g.algorithm)
            .collect();
        assert_eq!(g.gap_all.count, raw.len());
        assert_eq!(g.positive_gap.count, raw.iter().filter(|r| r.gap_rmse > 0.0).count());
        assert_eq!(g.dim_g, raw[0].dim_g);
    }
    // Aggregating again from the persisted records changes nothing.
    let dims = a.summary.groups.iter().map(|g| ((g.n, g.boundary), g.dim_g)).collect();
    let again = summarize(&a.records, &a.failures, &dims, false);
    assert_eq!(again, a.summary);
    assert_eq!(a.records.iter().filter(|r| r.gap_rmse <= 0.0).count(), negative);

    // Six pairs per metric per n.
    assert_eq!(a.summary.t_tests.len(), 2 * 5 * 6);
    for f in &a.summary.fits {
        assert!(f.points.len() <= 2);
    }

    // Same datasets across conditions at a given n.
    let seeds = |b: Boundary, alg: Algorithm| -> Vec<u64> {
        a.records
            .iter()
            .filter(|r| r.n == 2 && r.boundary == b && r.algorithm == alg)
            .map(|r| r.dataset_seed)
            .collect()
    };
    assert_eq!(seeds(Boundary::Open, Algorithm::Sps), seeds(Boundary::Closed, Algorithm::Ran));
}

//! Synthetic regression datasets, single runs, sweeps and their statistics.

use std::collections::BTreeMap;
use std::f64::consts::{LN_2, TAU};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::statistics::Statistics;
use thiserror::Error;

use crate::bounds::{max_trainable_params, theta_max_from_norm, BoundsError};
use crate::dla::{dla_dimension, tfim_generators, tfim_hamiltonian, Boundary, DlaError};
use crate::pauli::{operator_norm, PauliError, PauliSum};
use crate::simulator::{
    ansatz_with, encoding_circuit, target_label, target_unitary, HamEigen, ModelBundle, ParamCircuit, SimError,
};
use crate::training::{empirical_risk, train_model, Algorithm, Sample, TrainConfig, TrainError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Dla(#[from] DlaError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

/// Angles of the target `V`; index 0 is the first factor `A_1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetParams {
    pub betas: [f64; 2],
    pub gammas: [f64; 2],
    pub nus: [f64; 2],
}

impl TargetParams {
    pub fn circuit(&self, n: usize) -> Result<ParamCircuit, SimError> {
        target_unitary(n, &self.betas, &self.gammas, &self.nus)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub n_qubits: usize,
    pub seed: u64,
    pub v_params: TargetParams,
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
}

pub const DEFAULT_M_TRAIN: usize = 10;
pub const DEFAULT_M_TEST: usize = 100;

/// Draws `V`'s six angles, then the training inputs, then the test inputs,
/// all uniform on `[0, 2π)` from one seeded stream; labels are exact
/// `⟨Z_0⟩` under `V U_E(x)`.
pub fn generate_dataset(n: usize, seed: u64, m_train: usize, m_test: usize) -> Result<Dataset, ExperimentError> {
    if n == 0 {
        return Err(ExperimentError::Invalid("n must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut angle = || rng.random_range(0.0..TAU);
    let v_params = TargetParams {
        betas: [angle(), angle()],
        gammas: [angle(), angle()],
        nus: [angle(), angle()],
    };
    let encoding = encoding_circuit(n)?;
    let target = v_params.circuit(n)?;
    let mut draw = |m: usize| -> Result<Vec<Sample>, SimError> {
        (0..m)
            .map(|_| {
                let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
                let y = target_label(&x, &encoding, &target)?;
                Ok(Sample { x, y })
            })
            .collect()
    };
    let train = draw(m_train)?;
    let test = draw(m_test)?;
    Ok(Dataset {
        n_qubits: n,
        seed,
        v_params,
        train,
        test,
    })
}

/// Everything about a `(n, boundary)` model that is shared across runs.
#[derive(Debug, Clone)]
pub struct ModelContext {
    pub n: usize,
    pub boundary: Boundary,
    pub hamiltonian: PauliSum,
    pub h_norm: f64,
    pub dim_g: usize,
    pub model: ModelBundle,
}

impl ModelContext {
    pub fn new(n: usize, boundary: Boundary, layers: usize, reps: usize) -> Result<Self, ExperimentError> {
        let hamiltonian = tfim_hamiltonian(n, boundary)?;
        let eigen = Arc::new(HamEigen::new(&hamiltonian)?);
        let h_norm = eigen.spectral_radius();
        let dim_g = dla_dimension(&tfim_generators(n, boundary)?)?;
        let model = ModelBundle::new(encoding_circuit(n)?, ansatz_with(hamiltonian.clone(), eigen, layers, reps)?)?;
        Ok(Self {
            n,
            boundary,
            hamiltonian,
            h_norm,
            dim_g,
            model,
        })
    }
}

/// Settings shared by every run of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub layers: usize,
    pub reps: usize,
    pub m_train: usize,
    pub m_test: usize,
    /// Template; algorithm and seed are set per run.
    pub train: TrainConfig,
    /// Clip every `|θ_i|` to `ln 2 / ‖H‖`.
    pub theta_clip: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            layers: 2,
            reps: 10,
            m_train: DEFAULT_M_TRAIN,
            m_test: DEFAULT_M_TEST,
            train: TrainConfig::default(),
            theta_clip: false,
        }
    }
}

impl ExperimentConfig {
    pub fn train_config(&self, algorithm: Algorithm, seed: u64, h_norm: f64) -> Result<TrainConfig, ExperimentError> {
        let theta_clip = if self.theta_clip {
            Some(theta_max_from_norm(h_norm)?)
        } else {
            None
        };
        Ok(TrainConfig {
            algorithm,
            seed,
            theta_clip,
            ..self.train.clone()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub n: usize,
    pub boundary: Boundary,
    pub algorithm: Algorithm,
    pub dataset_seed: u64,
    pub train_seed: u64,
    pub dim_g: usize,
    pub theta_star: Vec<f64>,
    pub train_rmse: f64,
    pub test_rmse: f64,
    /// `test_rmse − train_rmse`.
    pub gap_rmse: f64,
    /// `test_mse − train_mse`.
    pub gap_mse: f64,
    pub cr: f64,
    pub p_max: f64,
    pub n_max: Option<f64>,
}

/// A run that aborted; kept for counting, excluded from aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedRun {
    pub n: usize,
    pub boundary: Boundary,
    pub algorithm: Algorithm,
    pub dataset_seed: u64,
    pub train_seed: u64,
    pub error: String,
}

/// `N_t*(p)` comparison per parameter: `p_k = |θ_k|·‖H‖`, indicator 1 when
/// `p_k = 0`, 0 when `p_k ≥ ln 2`, else `N_t < N_t*(p_k)`.
pub fn compute_cr_with_norm(theta_star: &[f64], h_norm: f64) -> Result<f64, ExperimentError> {
    if theta_star.is_empty() {
        return Err(ExperimentError::Invalid("empty parameter vector".into()));
    }
    let n_t = theta_star.len() as f64;
    let mut hits = 0usize;
    for t in theta_star {
        let p = t.abs() * h_norm;
        let ok = if p == 0.0 {
            true
        } else if p >= LN_2 {
            false
        } else {
            n_t < max_trainable_params(p)?
        };
        hits += ok as usize;
    }
    Ok(hits as f64 / n_t)
}

pub fn compute_cr(theta_star: &[f64], h: &PauliSum) -> Result<f64, ExperimentError> {
    compute_cr_with_norm(theta_star, operator_norm(h)?)
}

/// `p_max = max_k |θ_k|·‖H‖`; `n_max` is the budget at `p_max`, or `None`
/// when `p_max = 0` (unbounded) or `p_max ≥ ln 2` (out of domain).
pub fn compute_pmax_nmax_with_norm(theta_star: &[f64], h_norm: f64) -> Result<(f64, Option<f64>), ExperimentError> {
    if theta_star.is_empty() {
        return Err(ExperimentError::Invalid("empty parameter vector".into()));
    }
    let p_max = theta_star.iter().fold(0.0f64, |m, t| m.max(t.abs())) * h_norm;
    let n_max = if p_max > 0.0 && p_max < LN_2 {
        Some(max_trainable_params(p_max)?)
    } else {
        None
    };
    Ok((p_max, n_max))
}

pub fn compute_pmax_nmax(theta_star: &[f64], h: &PauliSum) -> Result<(f64, Option<f64>), ExperimentError> {
    compute_pmax_nmax_with_norm(theta_star, operator_norm(h)?)
}

/// Trains one model on one dataset and evaluates every per-run metric.
pub fn run_single(
    ctx: &ModelContext,
    algorithm: Algorithm,
    dataset: &Dataset,
    train_seed: u64,
    cfg: &ExperimentConfig,
) -> Result<ExperimentRecord, ExperimentError> {
    if dataset.n_qubits != ctx.n {
        return Err(ExperimentError::Invalid(format!(
            "dataset has {} qubits, model has {}",
            dataset.n_qubits, ctx.n
        )));
    }
    let tc = cfg.train_config(algorithm, train_seed, ctx.h_norm)?;
    let result = train_model(&ctx.model, &dataset.train, &tc)?;
    let theta = result.theta_star;
    let train_mse = empirical_risk(&ctx.model, &theta, &dataset.train)?;
    let test_mse = empirical_risk(&ctx.model, &theta, &dataset.test)?;
    let (train_rmse, test_rmse) = (train_mse.sqrt(), test_mse.sqrt());
    let cr = compute_cr_with_norm(&theta, ctx.h_norm)?;
    let (p_max, n_max) = compute_pmax_nmax_with_norm(&theta, ctx.h_norm)?;
    Ok(ExperimentRecord {
        n: ctx.n,
        boundary: ctx.boundary,
        algorithm,
        dataset_seed: dataset.seed,
        train_seed,
        dim_g: ctx.dim_g,
        theta_star: theta,
        train_rmse,
        test_rmse,
        gap_rmse: test_rmse - train_rmse,
        gap_mse: test_mse - train_mse,
        cr,
        p_max,
        n_max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares with `R² = 1 − SS_res/SS_tot`; for constant `ys`
/// the fit is exact and `R² = 1`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit, ExperimentError> {
    if xs.len() != ys.len() {
        return Err(ExperimentError::Invalid(format!("{} xs vs {} ys", xs.len(), ys.len())));
    }
    if xs.len() < 2 || xs.iter().all(|&x| x == xs[0]) {
        return Err(ExperimentError::Degenerate("need at least 2 distinct x values".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    if ys.iter().all(|&y| y == ys[0]) {
        return Ok(LinearFit {
            slope: 0.0,
            intercept: ys[0],
            r_squared: 1.0,
        });
    }
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r_squared = if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

fn sample_moments(v: &[f64]) -> (f64, f64) {
    (v.mean(), v.variance())
}

fn two_sided(t: f64, df: f64) -> Result<f64, ExperimentError> {
    if t == 0.0 {
        return Ok(1.0);
    }
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| ExperimentError::Degenerate(e.to_string()))?;
    Ok((2.0 * dist.sf(t.abs())).min(1.0))
}

fn check_samples(a: &[f64], b: &[f64]) -> Result<(), ExperimentError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(ExperimentError::Degenerate("each sample needs at least 2 values".into()));
    }
    Ok(())
}

/// Two-sided p-value of the equal-variance Student's t-test.
pub fn t_test_two_sample(a: &[f64], b: &[f64]) -> Result<f64, ExperimentError> {
    check_samples(a, b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, va) = sample_moments(a);
    let (mb, vb) = sample_moments(b);
    let df = na + nb - 2.0;
    let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
    if !(pooled > 0.0) {
        return Err(ExperimentError::Degenerate("zero pooled variance".into()));
    }
    let t = (ma - mb) / (pooled * (1.0 / na + 1.0 / nb)).sqrt();
    two_sided(t, df)
}

/// Two-sided p-value of Welch's unequal-variance t-test.
pub fn t_test_welch(a: &[f64], b: &[f64]) -> Result<f64, ExperimentError> {
    check_samples(a, b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, va) = sample_moments(a);
    let (mb, vb) = sample_moments(b);
    let (sa, sb) = (va / na, vb / nb);
    if !(sa + sb > 0.0) {
        return Err(ExperimentError::Degenerate("zero variance in both samples".into()));
    }
    let t = (ma - mb) / (sa + sb).sqrt();
    let df = (sa + sb).powi(2) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    two_sided(t, df)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic child seed of `master` for a tuple of small integers.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(master), |s, &p| splitmix64(s ^ splitmix64(p)))
}

const DATASET_TAG: u64 = 0xDA7A;
const TRAIN_TAG: u64 = 0x7EA1;

fn boundary_code(b: Boundary) -> u64 {
    match b {
        Boundary::Open => 0,
        Boundary::Closed => 1,
    }
}

fn algorithm_code(a: Algorithm) -> u64 {
    match a {
        Algorithm::Sps => 0,
        Algorithm::Ran => 1,
    }
}

/// Dataset `d` at `n` qubits; shared by every boundary and algorithm so that
/// conditions are compared on the same data.
pub fn dataset_seed(master: u64, n: usize, d: usize) -> u64 {
    derive_seed(master, &[DATASET_TAG, n as u64, d as u64])
}

pub fn train_seed(master: u64, n: usize, boundary: Boundary, algorithm: Algorithm, d: usize) -> u64 {
    derive_seed(
        master,
        &[TRAIN_TAG, n as u64, boundary_code(boundary), algorithm_code(algorithm), d as u64],
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n_list: Vec<usize>,
    pub boundaries: Vec<Boundary>,
    pub algorithms: Vec<Algorithm>,
    pub n_datasets: usize,
    pub master_seed: u64,
    pub experiment: ExperimentConfig,
    /// Use Welch's test instead of the equal-variance test.
    pub welch: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_list: vec![2, 3, 4, 5, 6],
            boundaries: Boundary::ALL.to_vec(),
            algorithms: Algorithm::ALL.to_vec(),
            n_datasets: 20,
            master_seed: 0,
            experiment: ExperimentConfig::default(),
            welch: false,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.n_list.is_empty() || self.boundaries.is_empty() || self.algorithms.is_empty() {
            return Err(ExperimentError::Invalid("qubit, boundary and algorithm grids must be nonempty".into()));
        }
        if self.n_datasets == 0 {
            return Err(ExperimentError::Invalid("need at least one dataset".into()));
        }
        if let Some(&n) = self.n_list.iter().find(|&&n| n < 2) {
            return Err(ExperimentError::Invalid(format!("TFIM sweeps need n >= 2, got {n}")));
        }
        self.experiment.train.validate()?;
        Ok(())
    }

    fn sorted<T: Ord + Copy>(v: &[T]) -> Vec<T> {
        let mut v = v.to_vec();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Mean and sample standard deviation (`None` below 1 and 2 values).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

impl Moments {
    pub fn of(v: &[f64]) -> Self {
        Self {
            count: v.len(),
            mean: (!v.is_empty()).then(|| v.mean()),
            std: (v.len() >= 2).then(|| v.std_dev()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub n: usize,
    pub boundary: Boundary,
    pub algorithm: Algorithm,
    pub dim_g: usize,
    pub runs: usize,
    pub failed: usize,
    /// Over runs with `gap_rmse > 0` only.
    pub positive_gap: Moments,
    pub positive_gap_mse: Moments,
    pub gap_all: Moments,
    pub train_rmse: Moments,
    pub test_rmse: Moments,
    pub cr: Moments,
    pub p_max: Moments,
    /// Over runs where `n_max` is defined.
    pub n_max: Moments,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupFit {
    pub boundary: Boundary,
    pub algorithm: Algorithm,
    /// Fit of per-n mean positive gap against n.
    pub mean_fit: Option<LinearFit>,
    /// Fit of every positive-gap run against its n.
    pub per_run_fit: Option<LinearFit>,
    pub points: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub n: usize,
    pub metric: String,
    pub a: String,
    pub b: String,
    pub p_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub groups: Vec<GroupStats>,
    pub fits: Vec<GroupFit>,
    pub t_tests: Vec<TTestResult>,
    pub t_test_kind: String,
    pub total_runs: usize,
    pub failed_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub records: Vec<ExperimentRecord>,
    pub failures: Vec<FailedRun>,
    pub summary: SweepSummary,
}

type GroupKey = (usize, Boundary, Algorithm);

pub const T_TEST_METRICS: [&str; 5] = ["gap_rmse", "train_rmse", "test_rmse", "cr", "p_max"];

fn group_label(b: Boundary, a: Algorithm) -> String {
    format!("{b}/{a}")
}

fn metric_values(records: &[&ExperimentRecord], metric: &str) -> Vec<f64> {
    match metric {
        "gap_rmse" => records.iter().map(|r| r.gap_rmse).filter(|g| *g > 0.0).collect(),
        "train_rmse" => records.iter().map(|r| r.train_rmse).collect(),
        "test_rmse" => records.iter().map(|r| r.test_rmse).collect(),
        "cr" => records.iter().map(|r| r.cr).collect(),
        "p_max" => records.iter().map(|r| r.p_max).collect(),
        _ => unreachable!("unknown metric {metric}"),
    }
}

/// Aggregates records in sorted condition order. Gap statistics and fits use
/// positive gaps only; raw records are not modified.
pub fn summarize(
    records: &[ExperimentRecord],
    failures: &[FailedRun],
    dims: &BTreeMap<(usize, Boundary), usize>,
    welch: bool,
) -> SweepSummary {
    let mut by_group: BTreeMap<GroupKey, Vec<&ExperimentRecord>> = BTreeMap::new();
    for r in records {
        by_group.entry((r.n, r.boundary, r.algorithm)).or_default().push(r);
    }
    let mut failed: BTreeMap<GroupKey, usize> = BTreeMap::new();
    for f in failures {
        *failed.entry((f.n, f.boundary, f.algorithm)).or_default() += 1;
        by_group.entry((f.n, f.boundary, f.algorithm)).or_default();
    }

    let groups: Vec<GroupStats> = by_group
        .iter()
        .map(|(&(n, boundary, algorithm), rs)| {
            let col = |f: fn(&ExperimentRecord) -> f64| rs.iter().map(|r| f(r)).collect::<Vec<_>>();
            let pos: Vec<&&ExperimentRecord> = rs.iter().filter(|r| r.gap_rmse > 0.0).collect();
            let n_max: Vec<f64> = rs.iter().filter_map(|r| r.n_max).collect();
            let nfail = failed.get(&(n, boundary, algorithm)).copied().unwrap_or(0);
            GroupStats {
                n,
                boundary,
                algorithm,
                dim_g: dims.get(&(n, boundary)).copied().unwrap_or(0),
                runs: rs.len() + nfail,
                failed: nfail,
                positive_gap: Moments::of(&pos.iter().map(|r| r.gap_rmse).collect::<Vec<_>>()),
                positive_gap_mse: Moments::of(&pos.iter().map(|r| r.gap_mse).collect::<Vec<_>>()),
                gap_all: Moments::of(&col(|r| r.gap_rmse)),
                train_rmse: Moments::of(&col(|r| r.train_rmse)),
                test_rmse: Moments::of(&col(|r| r.test_rmse)),
                cr: Moments::of(&col(|r| r.cr)),
                p_max: Moments::of(&col(|r| r.p_max)),
                n_max: Moments::of(&n_max),
            }
        })
        .collect();

    let mut pairs: BTreeMap<(Boundary, Algorithm), Vec<&GroupStats>> = BTreeMap::new();
    for g in &groups {
        pairs.entry((g.boundary, g.algorithm)).or_default().push(g);
    }
    let fits = pairs
        .iter()
        .map(|(&(boundary, algorithm), gs)| {
            let points: Vec<(usize, f64)> = gs
                .iter()
                .filter_map(|g| g.positive_gap.mean.map(|m| (g.n, m)))
                .collect();
            let xs: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
            let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
            let mean_fit = linear_fit(&xs, &ys).ok();
            let (rx, ry): (Vec<f64>, Vec<f64>) = records
                .iter()
                .filter(|r| r.boundary == boundary && r.algorithm == algorithm && r.gap_rmse > 0.0)
                .map(|r| (r.n as f64, r.gap_rmse))
                .unzip();
            GroupFit {
                boundary,
                algorithm,
                mean_fit,
                per_run_fit: linear_fit(&rx, &ry).ok(),
                points,
            }
        })
        .collect();

    let test = if welch { t_test_welch } else { t_test_two_sample };
    let mut t_tests = Vec::new();
    let ns: Vec<usize> = SweepConfig::sorted(&groups.iter().map(|g| g.n).collect::<Vec<_>>());
    for n in ns {
        let conds: Vec<(&GroupKey, &Vec<&ExperimentRecord>)> = by_group.iter().filter(|(k, _)| k.0 == n).collect();
        for metric in T_TEST_METRICS {
            for i in 0..conds.len() {
                for j in i + 1..conds.len() {
                    let (ka, ra) = conds[i];
                    let (kb, rb) = conds[j];
                    let (va, vb) = (metric_values(ra, metric), metric_values(rb, metric));
                    let (p_value, note) = match test(&va, &vb) {
                        Ok(p) => (Some(p), None),
                        Err(e) => (None, Some(e.to_string())),
                    };
                    t_tests.push(TTestResult {
                        n,
                        metric: metric.to_string(),
                        a: group_label(ka.1, ka.2),
                        b: group_label(kb.1, kb.2),
                        p_value,
                        note,
                    });
                }
            }
        }
    }

    SweepSummary {
        groups,
        fits,
        t_tests,
        t_test_kind: if welch { "welch" } else { "student" }.to_string(),
        total_runs: records.len() + failures.len(),
        failed_runs: failures.len(),
    }
}

/// Runs every `(n, boundary, algorithm, dataset)` tuple in parallel and
/// aggregates deterministically.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput, ExperimentError> {
    cfg.validate()?;
    let ns = SweepConfig::sorted(&cfg.n_list);
    let boundaries = SweepConfig::sorted(&cfg.boundaries);
    let algorithms = SweepConfig::sorted(&cfg.algorithms);
    let exp = &cfg.experiment;

    let ctx_keys: Vec<(usize, Boundary)> = ns
        .iter()
        .flat_map(|&n| boundaries.iter().map(move |&b| (n, b)))
        .collect();
    let contexts: BTreeMap<(usize, Boundary), ModelContext> = ctx_keys
        .par_iter()
        .map(|&(n, b)| ModelContext::new(n, b, exp.layers, exp.reps).map(|c| ((n, b), c)))
        .collect::<Result<_, _>>()?;

    let data_keys: Vec<(usize, usize)> = ns
        .iter()
        .flat_map(|&n| (0..cfg.n_datasets).map(move |d| (n, d)))
        .collect();
    let datasets: BTreeMap<(usize, usize), Dataset> = data_keys
        .par_iter()
        .map(|&(n, d)| {
            generate_dataset(n, dataset_seed(cfg.master_seed, n, d), exp.m_train, exp.m_test).map(|ds| ((n, d), ds))
        })
        .collect::<Result<_, _>>()?;

    let mut tasks = Vec::new();
    for &n in &ns {
        for &b in &boundaries {
            for &a in &algorithms {
                for d in 0..cfg.n_datasets {
                    tasks.push((n, b, a, d));
                }
            }
        }
    }
    let outcomes: Vec<Result<ExperimentRecord, FailedRun>> = tasks
        .par_iter()
        .map(|&(n, b, a, d)| {
            let ctx = &contexts[&(n, b)];
            let ds = &datasets[&(n, d)];
            let seed = train_seed(cfg.master_seed, n, b, a, d);
            run_single(ctx, a, ds, seed, exp).map_err(|e| FailedRun {
                n,
                boundary: b,
                algorithm: a,
                dataset_seed: ds.seed,
                train_seed: seed,
                error: e.to_string(),
            })
        })
        .collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => records.push(r),
            Err(f) => failures.push(f),
        }
    }
    let dims = contexts.iter().map(|(k, c)| (*k, c.dim_g)).collect();
    let summary = summarize(&records, &failures, &dims, cfg.welch);
    Ok(SweepOutput {
        records,
        failures,
        summary,
    })
}

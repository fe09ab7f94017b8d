//! SPSA and random-search training on the squared-error empirical risk.
//!
//! Gradients come from SPSA finite differences, never the parameter-shift
//! rule: the TFIM generator has more than two distinct eigenvalues, so the
//! two-point shift identity does not hold for `exp(iθH)`.
//!
//! One epoch is one SPSA iteration (two risk evaluations) or one random-search
//! proposal (one evaluation). Traces hold the RMSE after each epoch, with
//! entry 0 taken at the initial point.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simulator::{model_output, ModelBundle, SimError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("empty dataset")]
    EmptyDataset,
    #[error("length mismatch: {a} predictions vs {b} labels")]
    LengthMismatch { a: usize, b: usize },
    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Divergence { epoch: usize, loss: f64 },
    #[error("invalid training config: {0}")]
    Config(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Sps,
    Ran,
}

impl Algorithm {
    pub const ALL: [Algorithm; 2] = [Algorithm::Sps, Algorithm::Ran];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Sps => "sps",
            Algorithm::Ran => "ran",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sps" | "spsa" => Ok(Algorithm::Sps),
            "ran" => Ok(Algorithm::Ran),
            other => Err(format!("unknown algorithm {other:?} (expected sps or ran)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    pub epochs: usize,
    pub seed: u64,
    pub init_low: f64,
    pub init_high: f64,
    pub a0: f64,
    pub c0: f64,
    /// SPSA stability constant `A`.
    pub big_a: f64,
    pub alpha_gain: f64,
    pub gamma_gain: f64,
    pub ran_step: f64,
    /// Bound on every accepted `|θ_i|`; `None` disables clipping.
    pub theta_clip: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Sps,
            epochs: 200,
            seed: 0,
            init_low: -0.01,
            init_high: 0.01,
            a0: 0.1,
            c0: 0.1,
            big_a: 20.0,
            alpha_gain: 0.602,
            gamma_gain: 0.101,
            ran_step: 0.1,
            theta_clip: None,
        }
    }
}

impl TrainConfig {
    pub fn new(algorithm: Algorithm, epochs: usize, seed: u64) -> Self {
        Self {
            algorithm,
            epochs,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        if !(self.init_low.is_finite() && self.init_high.is_finite() && self.init_low < self.init_high) {
            return bad("init range must be finite and nonempty");
        }
        if !(self.a0 > 0.0 && self.c0 > 0.0) {
            return bad("SPSA gains a0 and c0 must be positive");
        }
        if !(self.big_a >= 0.0 && self.alpha_gain > 0.0 && self.gamma_gain > 0.0) {
            return bad("SPSA exponents must be positive and A nonnegative");
        }
        if !(self.ran_step > 0.0 && self.ran_step.is_finite()) {
            return bad("random-search step must be positive");
        }
        if let Some(c) = self.theta_clip {
            if !(c > 0.0 && c.is_finite()) {
                return bad("theta_clip must be positive");
            }
        }
        Ok(())
    }

    /// SPSA step size at iteration `k` (0-based).
    pub fn a_k(&self, k: usize) -> f64 {
        self.a0 / (k as f64 + 1.0 + self.big_a).powf(self.alpha_gain)
    }

    /// SPSA perturbation size at iteration `k` (0-based).
    pub fn c_k(&self, k: usize) -> f64 {
        self.c0 / (k as f64 + 1.0).powf(self.gamma_gain)
    }

    fn clip(&self, theta: &mut [f64]) {
        if let Some(c) = self.theta_clip {
            theta.iter_mut().for_each(|t| *t = t.clamp(-c, c));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainResult {
    pub theta_star: Vec<f64>,
    pub train_loss_trace: Vec<f64>,
    pub final_train_rmse: f64,
    /// Every objective evaluation, including the ones that fill the trace.
    pub evaluations_used: usize,
}

/// A loss to minimize over `dim()` real parameters.
pub trait Objective {
    fn dim(&self) -> usize;
    fn loss(&self, theta: &[f64]) -> Result<f64, TrainError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: f64,
}

/// Mean squared error of the model over a dataset.
pub struct RegressionObjective<'a> {
    pub model: &'a ModelBundle,
    pub data: &'a [Sample],
}

impl Objective for RegressionObjective<'_> {
    fn dim(&self) -> usize {
        self.model.n_params()
    }

    fn loss(&self, theta: &[f64]) -> Result<f64, TrainError> {
        empirical_risk(self.model, theta, self.data)
    }
}

pub fn rmse(predictions: &[f64], labels: &[f64]) -> Result<f64, TrainError> {
    if predictions.len() != labels.len() {
        return Err(TrainError::LengthMismatch {
            a: predictions.len(),
            b: labels.len(),
        });
    }
    if predictions.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let mse = predictions
        .iter()
        .zip(labels)
        .map(|(p, y)| (p - y) * (p - y))
        .sum::<f64>()
        / predictions.len() as f64;
    Ok(mse.sqrt())
}

pub fn predictions(model: &ModelBundle, theta: &[f64], data: &[Sample]) -> Result<Vec<f64>, TrainError> {
    data.iter()
        .map(|s| model_output(&s.x, theta, model).map_err(TrainError::from))
        .collect()
}

/// `(1/M) Σ (h_θ(x_i) − y_i)²`.
pub fn empirical_risk(model: &ModelBundle, theta: &[f64], data: &[Sample]) -> Result<f64, TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let mut acc = 0.0;
    for s in data {
        let r = model_output(&s.x, theta, model)? - s.y;
        acc += r * r;
    }
    Ok(acc / data.len() as f64)
}

struct Counter<'a, O: Objective> {
    obj: &'a O,
    calls: usize,
}

impl<O: Objective> Counter<'_, O> {
    fn eval(&mut self, theta: &[f64], epoch: usize) -> Result<f64, TrainError> {
        self.calls += 1;
        let loss = self.obj.loss(theta)?;
        if !loss.is_finite() {
            return Err(TrainError::Divergence { epoch, loss });
        }
        Ok(loss)
    }
}

fn check_algorithm(cfg: &TrainConfig, want: Algorithm) -> Result<(), TrainError> {
    cfg.validate()?;
    if cfg.algorithm != want {
        return Err(TrainError::Config(format!(
            "config selects {} but {} was requested",
            cfg.algorithm, want
        )));
    }
    Ok(())
}

/// Rademacher ±1 vector.
pub fn rademacher<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

/// SPSA from a uniform draw in `[init_low, init_high)`.
pub fn train_sps<O: Objective>(obj: &O, cfg: &TrainConfig) -> Result<TrainResult, TrainError> {
    check_algorithm(cfg, Algorithm::Sps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dim = obj.dim();
    let mut theta: Vec<f64> = (0..dim).map(|_| rng.random_range(cfg.init_low..cfg.init_high)).collect();
    let mut f = Counter { obj, calls: 0 };
    let mut trace = Vec::with_capacity(cfg.epochs + 1);
    trace.push(f.eval(&theta, 0)?.sqrt());
    let mut plus = vec![0.0; dim];
    let mut minus = vec![0.0; dim];
    for k in 0..cfg.epochs {
        let epoch = k + 1;
        let (ak, ck) = (cfg.a_k(k), cfg.c_k(k));
        let delta = rademacher(&mut rng, dim);
        for i in 0..dim {
            plus[i] = theta[i] + ck * delta[i];
            minus[i] = theta[i] - ck * delta[i];
        }
        let diff = f.eval(&plus, epoch)? - f.eval(&minus, epoch)?;
        for i in 0..dim {
            theta[i] -= ak * diff / (2.0 * ck * delta[i]);
        }
        cfg.clip(&mut theta);
        trace.push(f.eval(&theta, epoch)?.sqrt());
    }
    Ok(TrainResult {
        final_train_rmse: *trace.last().expect("trace has the initial entry"),
        theta_star: theta,
        train_loss_trace: trace,
        evaluations_used: f.calls,
    })
}

/// Random search from θ = 0, accepting only strict improvements.
pub fn train_ran<O: Objective>(obj: &O, cfg: &TrainConfig) -> Result<TrainResult, TrainError> {
    check_algorithm(cfg, Algorithm::Ran)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dim = obj.dim();
    let mut best = vec![0.0; dim];
    let mut f = Counter { obj, calls: 0 };
    let mut best_loss = f.eval(&best, 0)?;
    let mut trace = Vec::with_capacity(cfg.epochs + 1);
    trace.push(best_loss.sqrt());
    for epoch in 1..=cfg.epochs {
        let mut cand: Vec<f64> = best
            .iter()
            .map(|b| b + rng.random_range(-cfg.ran_step..cfg.ran_step))
            .collect();
        cfg.clip(&mut cand);
        let loss = f.eval(&cand, epoch)?;
        if loss < best_loss {
            best = cand;
            best_loss = loss;
        }
        trace.push(best_loss.sqrt());
    }
    Ok(TrainResult {
        theta_star: best,
        train_loss_trace: trace,
        final_train_rmse: best_loss.sqrt(),
        evaluations_used: f.calls,
    })
}

pub fn train<O: Objective>(obj: &O, cfg: &TrainConfig) -> Result<TrainResult, TrainError> {
    match cfg.algorithm {
        Algorithm::Sps => train_sps(obj, cfg),
        Algorithm::Ran => train_ran(obj, cfg),
    }
}

/// Trains `model` on `data` with the configured algorithm.
pub fn train_model(model: &ModelBundle, data: &[Sample], cfg: &TrainConfig) -> Result<TrainResult, TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    train(&RegressionObjective { model, data }, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic {
        center: Vec<f64>,
    }

    impl Objective for Quadratic {
        fn dim(&self) -> usize {
            self.center.len()
        }
        fn loss(&self, theta: &[f64]) -> Result<f64, TrainError> {
            Ok(theta.iter().zip(&self.center).map(|(t, c)| (t - c) * (t - c)).sum())
        }
    }

    struct Blowup;

    impl Objective for Blowup {
        fn dim(&self) -> usize {
            1
        }
        fn loss(&self, theta: &[f64]) -> Result<f64, TrainError> {
            Ok(if theta[0] > 0.05 { f64::NAN } else { 1.0 - theta[0] })
        }
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[0.3, 0.4], &[0.3, 0.4]).unwrap(), 0.0);
        assert_eq!(rmse(&[0.0, 0.0], &[1.0, -1.0]).unwrap(), 1.0);
        assert_eq!(rmse(&[1.0, 1.0], &[0.0, 2.0]).unwrap(), 1.0);
        assert_eq!(rmse(&[], &[]), Err(TrainError::EmptyDataset));
        assert!(matches!(rmse(&[1.0], &[]), Err(TrainError::LengthMismatch { .. })));
    }

    #[test]
    fn gain_schedule() {
        let c = TrainConfig::default();
        assert!((c.a_k(0) - 0.1 / 21f64.powf(0.602)).abs() < 1e-15);
        assert!((c.c_k(0) - 0.1).abs() < 1e-15);
        assert!(c.a_k(10) < c.a_k(0) && c.c_k(10) < c.c_k(0));
    }

    #[test]
    fn rademacher_entries() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = rademacher(&mut rng, 1000);
        assert!(d.iter().all(|&v| v == 1.0 || v == -1.0));
        assert!(d.contains(&1.0) && d.contains(&-1.0));
    }

    #[test]
    fn zero_epochs_returns_initial_point() {
        let q = Quadratic { center: vec![0.5; 4] };
        let sps = train_sps(&q, &TrainConfig::new(Algorithm::Sps, 0, 9)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let init: Vec<f64> = (0..4).map(|_| rng.random_range(-0.01..0.01)).collect();
        assert_eq!(sps.theta_star, init);
        assert_eq!(sps.train_loss_trace.len(), 1);
        let ran = train_ran(&q, &TrainConfig::new(Algorithm::Ran, 0, 9)).unwrap();
        assert_eq!(ran.theta_star, vec![0.0; 4]);
        assert_eq!(ran.evaluations_used, 1);
    }

    #[test]
    fn sps_reduces_quadratic() {
        let q = Quadratic {
            center: vec![0.4, -0.2, 0.1],
        };
        let r = train_sps(&q, &TrainConfig::new(Algorithm::Sps, 200, 3)).unwrap();
        assert_eq!(r.train_loss_trace.len(), 201);
        assert!(r.final_train_rmse < r.train_loss_trace[0]);
        assert_eq!(r.evaluations_used, 1 + 3 * 200);
    }

    #[test]
    fn ran_converges_on_one_parameter() {
        let q = Quadratic { center: vec![0.3] };
        let r = train_ran(&q, &TrainConfig::new(Algorithm::Ran, 200, 5)).unwrap();
        assert!(r.final_train_rmse.powi(2) < 1e-3);
        assert!(r.train_loss_trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn deterministic_under_seed() {
        let q = Quadratic { center: vec![0.3, 0.7] };
        for alg in Algorithm::ALL {
            let c = TrainConfig::new(alg, 50, 11);
            assert_eq!(train(&q, &c).unwrap(), train(&q, &c).unwrap());
        }
    }

    #[test]
    fn clipping_bounds_parameters() {
        let q = Quadratic { center: vec![5.0, -5.0] };
        for alg in Algorithm::ALL {
            let c = TrainConfig {
                theta_clip: Some(0.25),
                ..TrainConfig::new(alg, 300, 2)
            };
            let r = train(&q, &c).unwrap();
            assert!(r.theta_star.iter().all(|t| t.abs() <= 0.25));
        }
    }

    #[test]
    fn divergence_is_reported() {
        let c = TrainConfig {
            a0: 10.0,
            ..TrainConfig::new(Algorithm::Sps, 50, 0)
        };
        assert!(matches!(train_sps(&Blowup, &c), Err(TrainError::Divergence { .. })));
    }

    #[test]
    fn config_validation() {
        let bad = TrainConfig {
            init_low: 0.1,
            init_high: 0.1,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let q = Quadratic { center: vec![0.0] };
        assert!(train_ran(&q, &TrainConfig::default()).is_err());
        assert_eq!("SPS".parse::<Algorithm>().unwrap(), Algorithm::Sps);
        assert!("adam".parse::<Algorithm>().is_err());
    }
}

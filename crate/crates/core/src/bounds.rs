//! Covering-number generalization bounds and the trainable-parameter budget.
//!
//! All covering numbers are reported as natural logarithms; the exponents
//! `N_t · dim(g)` overflow `f64` long before the bounds become uninteresting.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pauli::{operator_norm, PauliError, PauliSum};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} = {value} is outside {domain}")]
    OutOfDomain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("operator has zero norm")]
    ZeroOperator,
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

fn positive(name: &'static str, value: f64) -> Result<f64, BoundsError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(BoundsError::NonPositive { name, value })
    }
}

/// Covering-number value carried in log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveringBound {
    pub ln_value: f64,
    /// `exp(ln_value)` when it is finite.
    pub value: Option<f64>,
}

impl CoveringBound {
    fn from_ln(ln_value: f64) -> Self {
        let v = ln_value.exp();
        Self {
            ln_value,
            value: v.is_finite().then_some(v),
        }
    }
}

/// `(1 + 2·radius/eps)^dim_g`, the ball covering bound in the algebra.
pub fn ball_covering_bound(dim_g: usize, radius: f64, eps: f64) -> Result<CoveringBound, BoundsError> {
    let eps = positive("eps", eps)?;
    let radius = positive("radius", radius)?;
    if dim_g == 0 {
        return Err(BoundsError::NonPositive { name: "dim_g", value: 0.0 });
    }
    Ok(CoveringBound::from_ln(dim_g as f64 * (2.0 * radius / eps).ln_1p()))
}

/// Inputs to the generalization bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// Training-set size M.
    pub m: usize,
    /// Trainable gate count N_t.
    pub n_trainable: usize,
    pub dim_g: usize,
    /// Eigenvalue count of the conjugated observable, 2^n by default.
    pub n_eigen: f64,
    pub o_norm: f64,
    /// Loss-range constant C.
    pub c: f64,
    pub delta: f64,
    pub radius: f64,
}

impl BoundInputs {
    /// Validated inputs with `N = 2^n_qubits`, `C = 1`, `radius = π`.
    pub fn for_qubits(
        m: usize,
        n_trainable: usize,
        dim_g: usize,
        n_qubits: u32,
        o_norm: f64,
        delta: f64,
    ) -> Result<Self, BoundsError> {
        Self {
            m,
            n_trainable,
            dim_g,
            n_eigen: 2f64.powi(n_qubits as i32),
            o_norm,
            c: 1.0,
            delta,
            radius: PI,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self, BoundsError> {
        for (name, v) in [("m", self.m), ("n_trainable", self.n_trainable), ("dim_g", self.dim_g)] {
            if v == 0 {
                return Err(BoundsError::NonPositive { name, value: 0.0 });
            }
        }
        positive("n_eigen", self.n_eigen)?;
        positive("c", self.c)?;
        positive("radius", self.radius)?;
        if !(self.o_norm >= 0.0 && self.o_norm.is_finite()) {
            return Err(BoundsError::OutOfDomain {
                name: "o_norm",
                value: self.o_norm,
                domain: "[0, inf)",
            });
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(BoundsError::OutOfDomain {
                name: "delta",
                value: self.delta,
                domain: "(0, 1)",
            });
        }
        Ok(self)
    }

    /// `D = 4·radius·(N_t − 1)·√N·‖O‖`; with radius π this is `4π(N_t − 1)√N‖O‖`.
    pub fn d(&self) -> f64 {
        4.0 * self.radius * (self.n_trainable as f64 - 1.0) * self.n_eigen.sqrt() * self.o_norm
    }
}

/// `ln` of `(1 + D/eps)^(N_t · dim_g)`, the covering bound of the hypothesis class.
pub fn hypothesis_covering_bound(inputs: &BoundInputs, eps: f64) -> Result<CoveringBound, BoundsError> {
    let eps = positive("eps", eps)?;
    let exponent = (inputs.n_trainable * inputs.dim_g) as f64;
    Ok(CoveringBound::from_ln(exponent * (inputs.d() / eps).ln_1p()))
}

fn xlnx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// `α ln α + (1 + D) ln(1 + D) − (α + D) ln(α + D)`, which equals
/// `∫_α^1 ln(1 + D/ε) dε`.
pub fn dudley_closed_form(alpha: f64, d: f64) -> Result<f64, BoundsError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(BoundsError::OutOfDomain {
            name: "alpha",
            value: alpha,
            domain: "(0, 1]",
        });
    }
    if !(d >= 0.0 && d.is_finite()) {
        return Err(BoundsError::OutOfDomain {
            name: "D",
            value: d,
            domain: "[0, inf)",
        });
    }
    Ok(xlnx(alpha) + xlnx(1.0 + d) - xlnx(alpha + d))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub d: f64,
    pub alpha: f64,
    /// `√(N_t·dim_g)` times the closed-form Dudley integral.
    pub dudley_term: f64,
    /// `4α + (12/√M)·dudley_term`.
    pub rademacher_bound: f64,
    /// `3C√(ln(2/δ)/(2M))`.
    pub confidence_term: f64,
    pub gap_bound: f64,
}

/// Generalization-gap bound with `α = 1/√M`:
/// `(8/√M)(1 + 3√(N_t·dim_g)·I(α, D)) + 3C√(ln(2/δ)/(2M))`.
///
/// The `α ln α` term is evaluated as written even though it is negative
/// for `M > 1`.
pub fn generalization_bound(inputs: &BoundInputs) -> Result<BoundReport, BoundsError> {
    let inputs = inputs.validated()?;
    let sqrt_m = (inputs.m as f64).sqrt();
    let alpha = 1.0 / sqrt_m;
    let d = inputs.d();
    let dudley_term = ((inputs.n_trainable * inputs.dim_g) as f64).sqrt() * dudley_closed_form(alpha, d)?;
    let rademacher_bound = 4.0 * alpha + 12.0 / sqrt_m * dudley_term;
    let confidence_term = 3.0 * inputs.c * ((2.0 / inputs.delta).ln() / (2.0 * inputs.m as f64)).sqrt();
    Ok(BoundReport {
        d,
        alpha,
        dudley_term,
        rademacher_bound,
        confidence_term,
        gap_bound: 2.0 * rademacher_bound + confidence_term,
    })
}

fn check_p(p: f64) -> Result<f64, BoundsError> {
    if p > 0.0 && p < LN_2 {
        Ok(p)
    } else {
        Err(BoundsError::OutOfDomain {
            name: "p",
            value: p,
            domain: "(0, ln 2)",
        })
    }
}

/// Largest trainable-gate count `2/((2 − e^p)·p) + 1` allowed at norm bound `p`.
pub fn max_trainable_params(p: f64) -> Result<f64, BoundsError> {
    let p = check_p(p)?;
    Ok(2.0 / ((2.0 - p.exp()) * p) + 1.0)
}

/// Budget `2/eps + 1` stated directly in the covering radius.
pub fn max_params_from_epsilon(eps: f64) -> Result<f64, BoundsError> {
    Ok(2.0 / positive("eps", eps)? + 1.0)
}

/// Largest covering radius `(2 − e^p)·p` for which the lower Lipschitz bound applies.
pub fn epsilon_max(p: f64) -> Result<f64, BoundsError> {
    let p = check_p(p)?;
    Ok((2.0 - p.exp()) * p)
}

/// Half of [`epsilon_max`]; the value obtained when the ball radius is
/// taken as `p` instead of `2p`. Reported alongside, never substituted.
pub fn epsilon_max_halved(p: f64) -> Result<f64, BoundsError> {
    Ok(epsilon_max(p)? / 2.0)
}

/// Minimizer of the parameter budget over `(0, ln 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalP {
    pub p_star: f64,
    pub n_star: f64,
}

/// Solves `e^p (1 + p) = 2` by bisection; the budget is minimal there.
pub fn optimal_p() -> OptimalP {
    let f = |p: f64| p.exp() * (1.0 + p) - 2.0;
    let (mut lo, mut hi) = (1e-6, LN_2 - 1e-6);
    debug_assert!(f(lo) < 0.0 && f(hi) > 0.0);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p_star = 0.5 * (lo + hi);
    OptimalP {
        p_star,
        n_star: max_trainable_params(p_star).expect("root lies inside (0, ln 2)"),
    }
}

/// `ln 2 / ‖H‖`: the angle at which `σ_max(θH)` reaches `ln 2`.
pub fn theta_max(h: &PauliSum) -> Result<f64, BoundsError> {
    theta_max_from_norm(operator_norm(h)?)
}

pub fn theta_max_from_norm(h_norm: f64) -> Result<f64, BoundsError> {
    if h_norm <= 0.0 {
        return Err(BoundsError::ZeroOperator);
    }
    Ok(LN_2 / h_norm)
}

/// `(p, max_trainable_params(p))` over a grid.
pub fn nt_curve(p_grid: &[f64]) -> Result<Vec<(f64, f64)>, BoundsError> {
    p_grid
        .iter()
        .map(|&p| max_trainable_params(p).map(|n| (p, n)))
        .collect()
}

/// `0.100, 0.101, …, 0.690`.
pub fn default_p_grid() -> Vec<f64> {
    (100..=690).map(|k| k as f64 / 1000.0).collect()
}

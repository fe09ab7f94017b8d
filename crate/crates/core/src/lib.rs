//! Dynamical Lie algebra laboratory for parameterized quantum circuits.
//!
//! - [`pauli`]: exact Pauli-string and Pauli-sum algebra plus dense helpers.
//! - [`dla`]: Lie closures of generator sets and TFIM generators.
//! - [`bounds`]: covering-number generalization bounds and parameter budgets.
//! - [`simulator`]: dense state-vector simulation of encoding, target and ansatz circuits.
//! - [`training`]: SPSA and random-search training on the empirical risk.
//! - [`experiments`]: datasets, sweeps and the CR / p_max / N_max indices.

pub mod bounds;
pub mod dla;
pub mod experiments;
pub mod pauli;
pub mod simulator;
pub mod training;

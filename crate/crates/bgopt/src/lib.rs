//! Multi-objective evolutionary optimisation of blue-green flood
//! infrastructure (permeable paving, rain gardens, detention basins).
//!
//! The crate couples an epsilon-dominance MOEA — bounded archive, adaptive
//! epsilon grid, adaptive population sizing and hypervolume self-termination —
//! with a building-level flood exposure objective and a present-value
//! whole-life cost objective. NSGA-II and SPEA-2 are included as benchmark
//! algorithms sharing the same operators and evaluation cache.
//!
//! Flood depths come from a pluggable evaluator: either the deterministic
//! built-in surrogate (depth attenuation per active zone, volume removal per
//! basin) or an external hydrodynamic model driven through a small
//! directory-based protocol (see [`evaluate`]).
//!
//! Start with the `examples/` directory: each major capability has a runnable
//! example (`cargo run --example run_epsilon_moea`, `--example
//! compare_algorithms`, ...). The `bgopt` binary wraps the same library
//! functions behind `validate` / `run` / `exhaustive` / `report` / `evaluate`
//! subcommands.

pub mod archive;
pub mod baselines;
pub mod config;
pub mod cost;
pub mod encoding;
pub mod evaluate;
pub mod exposure;
pub mod geometry;
pub mod metrics;
pub mod moea;
pub mod operators;
pub mod problem;
pub mod problems;
pub mod raster;
pub mod run;

use serde::{Deserialize, Serialize};

/// Bi-objective fitness value: implementation whole-life cost (`f1`, in £)
/// and the flood-risk metric (`f2`, a building count or expected damages in
/// £). Both objectives are minimised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub f1: f64,
    pub f2: f64,
}

impl ObjectiveVector {
    pub fn new(f1: f64, f2: f64) -> Self {
        Self { f1, f2 }
    }

    pub fn is_finite(&self) -> bool {
        self.f1.is_finite() && self.f2.is_finite()
    }

    /// Strict Pareto dominance for minimisation: componentwise `<=` with at
    /// least one strict `<`.
    pub fn dominates(&self, other: &ObjectiveVector) -> bool {
        self.f1 <= other.f1
            && self.f2 <= other.f2
            && (self.f1 < other.f1 || self.f2 < other.f2)
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.f1, self.f2]
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("validation failed:\n{0}")]
    Validation(crate::problem::ValidationReport),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn evaluation(msg: impl Into<String>) -> Self {
        Error::Evaluation(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominance_definition() {
        let a = ObjectiveVector::new(1.0, 2.0);
        assert!(a.dominates(&ObjectiveVector::new(1.0, 3.0)));
        assert!(!a.dominates(&ObjectiveVector::new(1.0, 2.0)));
        // mutually non-dominated
        assert!(!ObjectiveVector::new(1.0, 3.0).dominates(&ObjectiveVector::new(2.0, 2.0)));
        assert!(!ObjectiveVector::new(2.0, 2.0).dominates(&ObjectiveVector::new(1.0, 3.0)));
    }
}

//! Stochastic and deterministic eigensolvers.
//!
//! [`vrpca_vector`] and [`vrpca_block`] are the variance-reduced solvers;
//! [`oja_baseline`], [`orthogonal_iteration`] and [`deflation_solve`] are
//! the comparison baselines, and [`burn_in`] drives an arbitrary start into
//! the region where the geometric rate applies.

mod baselines;
mod burn_in;
mod params;
mod recorder;
mod vrpca;

pub use baselines::{oja_baseline, orthogonal_iteration, OjaSchedule};
pub use burn_in::{burn_in, BurnInConfig, BurnInOutcome, BurnInStop};
pub use params::{select_parameters, SolverConstants, StepParameters};
pub use vrpca::{deflation_solve, vrpca_block, vrpca_vector, DeflationResult, GAP_WARNING_THRESHOLD};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Target rank.
    pub k: usize,
    /// Step size.
    pub eta: f64,
    /// Inner iterations per epoch.
    pub m: usize,
    /// Number of epochs `T`.
    pub epochs: usize,
    pub seed: u64,
    /// Confidence parameter used by parameter selection.
    pub delta: f64,
    /// Target accuracy for the optional early exit.
    pub epsilon: f64,
    /// Align the anchor with the iterate through the Procrustes rotation
    /// each inner step; `false` uses `B = I`.
    pub use_rotation: bool,
    /// Stop at the first epoch boundary whose metric is at most `epsilon`.
    pub early_exit: bool,
    /// Record wall-clock time in traces. Off by default so that traces are
    /// byte-reproducible.
    pub record_wall_time: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            k: 1,
            eta: 0.0,
            m: 1,
            epochs: 10,
            seed: 0,
            delta: 0.1,
            epsilon: 1e-10,
            use_rotation: true,
            early_exit: false,
            record_wall_time: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, d: usize) -> Result<()> {
        if self.k == 0 || self.k > d {
            return Err(Error::invalid(format!("k = {} must lie in [1, {d}]", self.k)));
        }
        // eta = 0 is accepted: it freezes the iterate, which is a useful probe.
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::invalid(format!(
                "step size {} must be finite and nonnegative",
                self.eta
            )));
        }
        if self.m == 0 {
            return Err(Error::invalid("epoch length m must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(format!("delta = {} must lie in (0, 1)", self.delta)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid(format!("epsilon = {} must be positive", self.epsilon)));
        }
        Ok(())
    }

    /// Inner-iteration trace cadence: every `m/10` iterations.
    pub(crate) fn record_every(&self) -> usize {
        (self.m / 10).max(1)
    }
}

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::params::SolverConstants;
use super::recorder::Recorder;
use super::vrpca::{as_column, vector_step, Columns};
use crate::error::{Error, Result};
use crate::matrix::{residual_energy, residual_given_product, DataMatrix, OrthonormalFrame};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurnInConfig {
    /// Eigengap estimate.
    pub lambda: f64,
    pub delta: f64,
    /// Caller's lower bound on `⟨v_1, w_0⟩²`, in `(0, 1]`.
    pub zeta: f64,
    pub consts: SolverConstants,
    /// Replaces the computed step size (the budget is still derived from
    /// whichever step size is used).
    pub eta_override: Option<f64>,
    /// Inner iterations between exact passes; defaults to `n`.
    pub epoch_len: Option<usize>,
    pub seed: u64,
    /// Without a reference, stop once an epoch improves the Rayleigh
    /// residual by less than this fraction.
    pub plateau_tol: f64,
}

impl Default for BurnInConfig {
    fn default() -> Self {
        BurnInConfig {
            lambda: 0.1,
            delta: 0.25,
            zeta: 0.01,
            consts: SolverConstants::default(),
            eta_override: None,
            epoch_len: None,
            seed: 0,
            plateau_tol: 0.01,
        }
    }
}

impl BurnInConfig {
    /// `η = c δ² λ ζ³ / (r² log²(2/δ))`.
    pub fn step_size(&self, r: f64) -> f64 {
        let l = (2.0 / self.delta).ln();
        self.consts.burn_c * self.delta * self.delta * self.lambda * self.zeta.powi(3) / (r * r * l * l)
    }

    /// `T = ⌊c′ log(2/δ) / (η λ ζ)⌋` stochastic iterations.
    pub fn iteration_bound(&self, eta: f64) -> u64 {
        let t = (self.consts.burn_c_prime * (2.0 / self.delta).ln() / (eta * self.lambda * self.zeta)).floor();
        if t.is_finite() {
            t.min(u64::MAX as f64 / 16.0) as u64
        } else {
            u64::MAX / 16
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(Error::NonPositiveGap(self.lambda));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(format!("delta = {} must lie in (0, 1)", self.delta)));
        }
        if !(self.zeta > 0.0 && self.zeta <= 1.0) {
            return Err(Error::invalid(format!("zeta = {} must lie in (0, 1]", self.zeta)));
        }
        if let Some(eta) = self.eta_override {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::invalid(format!("step size {eta} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BurnInStop {
    /// The start already had potential at most 1/2.
    AlreadyAligned,
    /// Potential against the reference dropped to 1/2.
    PotentialReached,
    /// No reference: the Rayleigh residual stopped improving.
    Plateau,
}

#[derive(Debug, Clone)]
pub struct BurnInOutcome {
    pub frame: OrthonormalFrame,
    pub iterations: u64,
    pub eta: f64,
    pub budget: u64,
    pub stop: BurnInStop,
    pub trace: crate::trace::ConvergenceTrace,
}

/// Runs vector VR-PCA steps with the burn-in step size until the start is
/// good enough for the geometric phase (`1 − ⟨v_1, w⟩² ≤ 1/2`).
///
/// With a reference the potential is checked after every step. Without
/// one, the run stops when the Rayleigh residual plateaus at an epoch
/// boundary. Exceeding ten times the iteration bound is an error that
/// carries the trace.
pub fn burn_in(
    x: &DataMatrix,
    w0: &OrthonormalFrame,
    cfg: &BurnInConfig,
    reference: Option<&OrthonormalFrame>,
) -> Result<BurnInOutcome> {
    cfg.validate()?;
    if w0.dim() != x.dim() || w0.k() != 1 {
        return Err(Error::mismatch(
            "burn-in start",
            format!("{}x1", x.dim()),
            format!("{}x{}", w0.dim(), w0.k()),
        ));
    }
    if let Some(v) = reference {
        if v.dim() != x.dim() || v.k() != 1 {
            return Err(Error::mismatch(
                "burn-in reference",
                format!("{}x1", x.dim()),
                format!("{}x{}", v.dim(), v.k()),
            ));
        }
    }
    let n = x.len();
    let eta = cfg.eta_override.unwrap_or_else(|| cfg.step_size(x.r()));
    let budget = cfg.iteration_bound(eta).saturating_mul(10).max(1);
    let m = cfg.epoch_len.unwrap_or(n).max(1);
    let every = (m / 10).max(1);
    let src = Columns::plain(x);

    let potential = |w: &[f64]| reference.map(|v| residual_energy(v, &as_column(w)));
    let mut rec = Recorder::new(reference, false);
    let mut anchor = w0.as_matrix().as_slice().to_vec();
    let mut u = src.apply(&anchor)?;
    let mut samples = 0u64;
    let mut iterations = 0u64;

    let finish = |rec: Recorder<'_>, w: &[f64], iterations: u64, stop: BurnInStop| -> Result<BurnInOutcome> {
        Ok(BurnInOutcome {
            frame: OrthonormalFrame::new(as_column(w))?,
            iterations,
            eta,
            budget,
            stop,
            trace: rec.finish(OrthonormalFrame::new(as_column(w))?),
        })
    };

    let first = rec.boundary(0, &as_column(&anchor), &as_column(&u), 0);
    if first.potential.is_some_and(|p| p <= 0.5) {
        return finish(rec, &anchor, 0, BurnInStop::AlreadyAligned);
    }
    let mut last_residual = first.residual.unwrap_or(f64::INFINITY);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w = anchor.clone();
    let mut epoch = 0usize;
    loop {
        epoch += 1;
        samples += n as u64;
        w.copy_from_slice(&anchor);
        for t in 1..=m {
            if iterations >= budget {
                let mut rec = rec;
                let aw = src.apply(&w)?;
                rec.boundary(epoch, &as_column(&w), &as_column(&aw), samples);
                let trace = rec.finish(OrthonormalFrame::new(as_column(&w))?);
                return Err(Error::NonConvergence {
                    iterations,
                    budget,
                    trace: Box::new(trace),
                });
            }
            let i = rng.random_range(0..n);
            vector_step(&mut w, &anchor, &u, x.column(i), eta)?;
            iterations += 1;
            samples += 1;
            if potential(&w).is_some_and(|p| p <= 0.5) {
                let aw = src.apply(&w)?;
                rec.boundary(epoch, &as_column(&w), &as_column(&aw), samples);
                return finish(rec, &w, iterations, BurnInStop::PotentialReached);
            }
            if t % every == 0 && t < m {
                rec.inner(epoch, t, &as_column(&w), samples);
            }
        }
        std::mem::swap(&mut anchor, &mut w);
        u = src.apply(&anchor)?;
        let residual = residual_given_product(&as_column(&anchor), &DMatrix::from_column_slice(u.len(), 1, &u));
        rec.boundary(epoch, &as_column(&anchor), &as_column(&u), samples);
        if reference.is_none() && residual > (1.0 - cfg.plateau_tol) * last_residual {
            return finish(rec, &anchor, iterations, BurnInStop::Plateau);
        }
        last_residual = residual;
    }
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::recorder::Recorder;
use crate::error::{Error, Result};
use crate::matrix::{covariance_apply, polar_normalize, DataMatrix, OrthonormalFrame, GRAM_SINGULAR_THRESHOLD};
use crate::trace::ConvergenceTrace;

/// Step size `η_t = c / (t + offset)` for the plain stochastic update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OjaSchedule {
    pub c: f64,
    pub offset: f64,
}

impl OjaSchedule {
    pub fn eta(&self, t: u64) -> f64 {
        self.c / (t as f64 + self.offset)
    }
}

/// Oja-style stochastic power method: `w ← normalize(w + η_t x_i (x_iᵀw))`.
///
/// The whole run is recorded as a single epoch; inner records are written
/// every `record_every` steps.
pub fn oja_baseline(
    x: &DataMatrix,
    w0: &OrthonormalFrame,
    schedule: OjaSchedule,
    iters: u64,
    seed: u64,
    record_every: u64,
    reference: Option<&OrthonormalFrame>,
) -> Result<ConvergenceTrace> {
    if w0.dim() != x.dim() || w0.k() != 1 {
        return Err(Error::mismatch(
            "oja initial vector",
            format!("{}x1", x.dim()),
            format!("{}x{}", w0.dim(), w0.k()),
        ));
    }
    if !(schedule.c >= 0.0) || !(schedule.offset >= 0.0) {
        return Err(Error::invalid("Oja schedule constants must be nonnegative"));
    }
    let n = x.len();
    let d = x.dim();
    let every = record_every.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rec = Recorder::new(reference, false);

    let mut w = w0.as_matrix().clone();
    let aw = covariance_apply(x, &w)?;
    rec.boundary(0, &w, &aw, 0);
    for t in 1..=iters {
        let eta = schedule.eta(t);
        let i = rng.random_range(0..n);
        let xi = x.column(i);
        let ws = w.as_mut_slice();
        let proj: f64 = xi.iter().zip(ws.iter()).map(|(a, b)| a * b).sum();
        let mut sq = 0.0;
        for j in 0..d {
            ws[j] += eta * xi[j] * proj;
            sq += ws[j] * ws[j];
        }
        if !(sq > GRAM_SINGULAR_THRESHOLD) {
            return Err(Error::DegenerateIterate {
                min_eigenvalue: sq,
                threshold: GRAM_SINGULAR_THRESHOLD,
            });
        }
        let norm = sq.sqrt();
        ws.iter_mut().for_each(|v| *v /= norm);
        if t % every == 0 && t < iters {
            rec.inner(1, t as usize, &w, t);
        }
    }
    if iters > 0 {
        let aw = covariance_apply(x, &w)?;
        rec.boundary(1, &w, &aw, iters);
    }
    Ok(rec.finish(OrthonormalFrame::new(w)?))
}

/// Orthogonal iteration `W ← polar(A W)`; one record per sweep.
pub fn orthogonal_iteration(
    x: &DataMatrix,
    w0: &OrthonormalFrame,
    sweeps: usize,
    reference: Option<&OrthonormalFrame>,
) -> Result<ConvergenceTrace> {
    if w0.dim() != x.dim() {
        return Err(Error::mismatch("orthogonal_iteration", x.dim(), w0.dim()));
    }
    let n = x.len() as u64;
    let mut rec = Recorder::new(reference, false);
    let mut w = w0.clone();
    let mut aw = covariance_apply(x, w.as_matrix())?;
    for s in 0..=sweeps {
        rec.boundary(s, w.as_matrix(), &aw, s as u64 * n);
        if s == sweeps {
            break;
        }
        w = polar_normalize(&aw)?;
        aw = covariance_apply(x, w.as_matrix())?;
    }
    Ok(rec.finish(w))
}

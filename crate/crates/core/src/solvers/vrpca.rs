use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::recorder::{metric, Recorder};
use super::SolverConfig;
use crate::error::{Error, Result};
use crate::matrix::{
    covariance_apply, polar_normalize, procrustes_from_cross, DataMatrix, OrthonormalFrame, GRAM_SINGULAR_THRESHOLD,
};
use crate::trace::ConvergenceTrace;

/// Consecutive deflation eigenvalue estimates closer than this trigger a
/// warning: deflation needs a gap between every pair of the top `k`.
pub const GAP_WARNING_THRESHOLD: f64 = 1e-3;

/// Columns of `X`, optionally projected onto the orthogonal complement of
/// previously recovered directions.
pub(crate) struct Columns<'a> {
    pub(crate) x: &'a DataMatrix,
    deflate: &'a [DVector<f64>],
}

impl<'a> Columns<'a> {
    pub fn plain(x: &'a DataMatrix) -> Self {
        Columns { x, deflate: &[] }
    }

    pub(crate) fn column<'s>(&'s self, i: usize, scratch: &'s mut [f64]) -> &'s [f64] {
        let raw = self.x.column(i);
        if self.deflate.is_empty() {
            return raw;
        }
        scratch.copy_from_slice(raw);
        project_out(scratch, self.deflate);
        scratch
    }

    /// The (deflated) covariance applied to a single vector.
    pub(crate) fn apply(&self, w: &[f64]) -> Result<Vec<f64>> {
        let d = self.x.dim();
        let mut v = w.to_vec();
        project_out(&mut v, self.deflate);
        let mut out = covariance_apply(self.x, &DMatrix::from_vec(d, 1, v))?
            .data
            .as_vec()
            .clone();
        project_out(&mut out, self.deflate);
        Ok(out)
    }
}

fn project_out(v: &mut [f64], basis: &[DVector<f64>]) {
    for b in basis {
        let c = dot(v, b.as_slice());
        for (vi, bi) in v.iter_mut().zip(b.iter()) {
            *vi -= c * bi;
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn as_column(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_column_slice(v.len(), 1, v)
}

/// Single-vector variance-reduced PCA.
///
/// Each epoch makes one exact pass `ũ = A w̃`, then `m` stochastic steps
///
/// ```text
/// w′ = w + η (x_i (x_iᵀw − x_iᵀw̃) + ũ),   w = w′ / ‖w′‖
/// ```
///
/// with `i` drawn uniformly with replacement. Boundary records carry the
/// Rayleigh residual and, when `reference` is given, the potential.
pub fn vrpca_vector(
    x: &DataMatrix,
    w0: &OrthonormalFrame,
    cfg: &SolverConfig,
    reference: Option<&OrthonormalFrame>,
) -> Result<ConvergenceTrace> {
    check_inputs(x, w0, 1, reference)?;
    let cfg = SolverConfig { k: 1, ..cfg.clone() };
    cfg.validate(x.dim())?;
    run_vector(&Columns::plain(x), w0.as_matrix().as_slice(), &cfg, reference)
}

fn check_inputs(x: &DataMatrix, w0: &OrthonormalFrame, k: usize, reference: Option<&OrthonormalFrame>) -> Result<()> {
    if w0.dim() != x.dim() || w0.k() != k {
        return Err(Error::mismatch(
            "initial frame",
            format!("{}x{}", x.dim(), k),
            format!("{}x{}", w0.dim(), w0.k()),
        ));
    }
    if let Some(v) = reference {
        if v.dim() != x.dim() || v.k() != k {
            return Err(Error::mismatch(
                "reference frame",
                format!("{}x{}", x.dim(), k),
                format!("{}x{}", v.dim(), v.k()),
            ));
        }
    }
    Ok(())
}

/// One variance-reduced step followed by normalization, in place.
#[inline]
pub(crate) fn vector_step(w: &mut [f64], anchor: &[f64], u: &[f64], xi: &[f64], eta: f64) -> Result<()> {
    let a = dot(xi, w) - dot(xi, anchor);
    let mut sq = 0.0;
    for j in 0..w.len() {
        let v = w[j] + eta * (a * xi[j] + u[j]);
        w[j] = v;
        sq += v * v;
    }
    if !(sq > GRAM_SINGULAR_THRESHOLD) {
        return Err(Error::DegenerateIterate {
            min_eigenvalue: sq,
            threshold: GRAM_SINGULAR_THRESHOLD,
        });
    }
    let norm = sq.sqrt();
    for v in w.iter_mut() {
        *v /= norm;
    }
    Ok(())
}

pub(crate) fn run_vector(
    src: &Columns<'_>,
    w0: &[f64],
    cfg: &SolverConfig,
    reference: Option<&OrthonormalFrame>,
) -> Result<ConvergenceTrace> {
    let d = w0.len();
    let n = src.x.len();
    let eta = cfg.eta;
    let every = cfg.record_every();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rec = Recorder::new(reference, cfg.record_wall_time);
    let mut scratch = vec![0.0; d];

    let mut anchor = w0.to_vec();
    let mut u = src.apply(&anchor)?;
    let mut w = vec![0.0; d];
    let mut samples = 0u64;

    for s in 0..=cfg.epochs {
        let boundary = rec.boundary(s, &as_column(&anchor), &as_column(&u), samples);
        if s == cfg.epochs || (cfg.early_exit && metric(boundary) <= cfg.epsilon) {
            break;
        }
        samples += n as u64;
        w.copy_from_slice(&anchor);
        for t in 1..=cfg.m {
            let i = rng.random_range(0..n);
            let xi = src.column(i, &mut scratch);
            vector_step(&mut w, &anchor, &u, xi, eta)?;
            samples += 1;
            if t % every == 0 && t < cfg.m {
                rec.inner(s + 1, t, &as_column(&w), samples);
            }
        }
        std::mem::swap(&mut anchor, &mut w);
        u = src.apply(&anchor)?;
    }

    let frame = OrthonormalFrame::new(as_column(&anchor))?;
    Ok(rec.finish(frame))
}

/// Block variance-reduced PCA on a `d×k` frame.
///
/// Each inner step aligns the anchor to the iterate with the Procrustes
/// rotation `B` (or `B = I` when `use_rotation` is off), then
///
/// ```text
/// W′ = W + η (x_i (x_iᵀW − x_iᵀW̃ B) + Ũ B),   W = W′ (W′ᵀW′)^{-1/2}
/// ```
pub fn vrpca_block(
    x: &DataMatrix,
    w0: &OrthonormalFrame,
    cfg: &SolverConfig,
    reference: Option<&OrthonormalFrame>,
) -> Result<ConvergenceTrace> {
    cfg.validate(x.dim())?;
    check_inputs(x, w0, cfg.k, reference)?;
    let n = x.len();
    let k = cfg.k;
    let eta = cfg.eta;
    let every = cfg.record_every();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rec = Recorder::new(reference, cfg.record_wall_time);

    let mut anchor = w0.clone();
    let mut u = covariance_apply(x, anchor.as_matrix())?;
    let mut samples = 0u64;

    for s in 0..=cfg.epochs {
        let boundary = rec.boundary(s, anchor.as_matrix(), &u, samples);
        if s == cfg.epochs || (cfg.early_exit && metric(boundary) <= cfg.epsilon) {
            break;
        }
        samples += n as u64;
        let a_mat = anchor.as_matrix();
        let mut w = anchor.as_matrix().clone();
        for t in 1..=cfg.m {
            let rotation = cfg.use_rotation.then(|| procrustes_from_cross(&w.tr_mul(a_mat)));
            let i = rng.random_range(0..n);
            let xi = x.column(i);
            let mut coef = vec![0.0; k];
            for (c, col) in coef.iter_mut().zip(w.column_iter()) {
                *c = dot(xi, col.as_slice());
            }
            let mut anchor_coef = vec![0.0; k];
            for (c, col) in anchor_coef.iter_mut().zip(a_mat.column_iter()) {
                *c = dot(xi, col.as_slice());
            }
            let drift = match &rotation {
                Some(b) => {
                    let b = b.as_matrix();
                    let rotated: Vec<f64> = (0..k)
                        .map(|j| (0..k).map(|l| anchor_coef[l] * b[(l, j)]).sum())
                        .collect();
                    anchor_coef = rotated;
                    std::borrow::Cow::Owned(&u * b)
                }
                None => std::borrow::Cow::Borrowed(&u),
            };
            for j in 0..k {
                let a = coef[j] - anchor_coef[j];
                let wc = w.column_mut(j);
                let dc = drift.column(j);
                for (r, wv) in wc.into_iter().enumerate() {
                    *wv += eta * (a * xi[r] + dc[r]);
                }
            }
            w = polar_normalize(&w)?.into_matrix();
            samples += 1;
            if t % every == 0 && t < cfg.m {
                rec.inner(s + 1, t, &w, samples);
            }
        }
        anchor = OrthonormalFrame::from_matrix_unchecked(w);
        u = covariance_apply(x, anchor.as_matrix())?;
    }

    Ok(rec.finish(anchor))
}

/// Outcome of [`deflation_solve`].
#[derive(Debug, Clone)]
pub struct DeflationResult {
    pub frame: OrthonormalFrame,
    /// Rayleigh quotient of each recovered direction under the full `A`.
    pub eigenvalues: Vec<f64>,
    pub warnings: Vec<String>,
    pub traces: Vec<ConvergenceTrace>,
}

/// Recovers the top `k` directions one at a time with the vector solver,
/// projecting every sampled column (and the exact pass) away from the
/// directions already found.
///
/// Stage `j` starts from column `j` of `w0` projected onto the remaining
/// complement and uses seed `cfg.seed + j`. Deflation assumes a positive gap
/// between all of the top `k` eigenvalues; near-ties are reported in
/// `warnings` but not treated as errors.
pub fn deflation_solve(x: &DataMatrix, k: usize, w0: &OrthonormalFrame, cfg: &SolverConfig) -> Result<DeflationResult> {
    let d = x.dim();
    if w0.dim() != d || w0.k() < k {
        return Err(Error::mismatch(
            "deflation initial frame",
            format!("{d}x{k}"),
            format!("{}x{}", w0.dim(), w0.k()),
        ));
    }
    let stage_cfg = SolverConfig { k: 1, ..cfg.clone() };
    stage_cfg.validate(d)?;
    if k == 0 || k > d {
        return Err(Error::invalid(format!("k = {k} must lie in [1, {d}]")));
    }

    let mut found: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut traces = Vec::with_capacity(k);
    for j in 0..k {
        let mut start = w0.column(j);
        if !found.is_empty() {
            project_out(start.as_mut_slice(), &found);
            let nrm = start.norm();
            if !(nrm * nrm > GRAM_SINGULAR_THRESHOLD) {
                return Err(Error::DegenerateIterate {
                    min_eigenvalue: nrm * nrm,
                    threshold: GRAM_SINGULAR_THRESHOLD,
                });
            }
            start /= nrm;
        }
        let cfg_j = SolverConfig {
            seed: cfg.seed.wrapping_add(j as u64),
            ..stage_cfg.clone()
        };
        let src = Columns { x, deflate: &found };
        let trace = run_vector(&src, start.as_slice(), &cfg_j, None)?;
        let mut v = trace.final_frame.column(0);
        // Re-orthogonalize against earlier stages to remove rounding drift.
        if !found.is_empty() {
            project_out(v.as_mut_slice(), &found);
            v /= v.norm();
        }
        found.push(v);
        traces.push(trace);
    }

    let cols: Vec<DVector<f64>> = found;
    let frame = OrthonormalFrame::new(DMatrix::from_columns(&cols))?;
    let av = covariance_apply(x, frame.as_matrix())?;
    let eigenvalues: Vec<f64> = (0..k).map(|j| frame.as_matrix().column(j).dot(&av.column(j))).collect();
    let mut warnings = Vec::new();
    for j in 1..k {
        let gap = (eigenvalues[j - 1] - eigenvalues[j]).abs();
        if gap < GAP_WARNING_THRESHOLD {
            let msg = format!(
                "eigenvalue estimates {} and {} differ by {gap:.3e} (< {GAP_WARNING_THRESHOLD:e}); deflation needs a gap between every pair of the top {k}",
                j,
                j + 1
            );
            warn!("{msg}");
            warnings.push(msg);
        }
    }

    Ok(DeflationResult {
        frame,
        eigenvalues,
        warnings,
        traces,
    })
}

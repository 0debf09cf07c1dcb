//! Random starts and the single-power-iteration warm start.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{covariance_apply, polar_normalize, DataMatrix, OrthonormalFrame};
use crate::oracle::{self, DENSE_LIMIT};

/// Gaussian draws that map to a zero vector are retried on the next
/// substream at most this many times.
pub const WARM_START_RETRIES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMethod {
    Gaussian,
    GaussianPlusPower,
}

#[derive(Debug, Clone)]
pub struct InitReport {
    pub frame: OrthonormalFrame,
    pub method: InitMethod,
    /// `⟨v_1, w_0⟩²` (or `‖V_kᵀW_0‖_F²/k` for blocks) when a reference was given.
    pub alignment_sq: Option<f64>,
    pub nrank: Option<f64>,
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, d: usize, k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, k, |_, _| StandardNormal.sample(rng))
}

/// Standard Gaussian `d×k` draw, orthonormalized.
pub fn gaussian_init(d: usize, k: usize, seed: u64) -> Result<OrthonormalFrame> {
    if k == 0 || k > d {
        return Err(Error::invalid(format!("cannot draw a {d}x{k} orthonormal frame")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    polar_normalize(&gaussian_matrix(&mut rng, d, k))
}

/// Gaussian draw followed by one exact power iteration: `w_0 = Aw / ‖Aw‖`.
/// For `k > 1` the same recipe is applied to a `d×k` draw and the result is
/// polar-normalized.
pub fn power_warm_start(
    x: &DataMatrix,
    k: usize,
    seed: u64,
    reference: Option<&OrthonormalFrame>,
) -> Result<InitReport> {
    let d = x.dim();
    if k == 0 || k > d {
        return Err(Error::invalid(format!("cannot draw a {d}x{k} orthonormal frame")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 0..=WARM_START_RETRIES {
        rng.set_stream(attempt as u64);
        let g = gaussian_matrix(&mut rng, d, k);
        let ag = covariance_apply(x, &g)?;
        match polar_normalize(&ag) {
            Ok(frame) => {
                let alignment_sq = reference.map(|v| alignment(v, &frame)).transpose()?;
                return Ok(InitReport {
                    frame,
                    method: InitMethod::GaussianPlusPower,
                    alignment_sq,
                    nrank: None,
                });
            }
            Err(Error::DegenerateIterate { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::WarmStartFailed {
        attempts: WARM_START_RETRIES + 1,
    })
}

/// `‖VᵀW‖_F² / k`, which is `⟨v_1, w⟩²` for single vectors.
pub fn alignment(v: &OrthonormalFrame, w: &OrthonormalFrame) -> Result<f64> {
    if v.dim() != w.dim() || v.k() != w.k() {
        return Err(Error::mismatch(
            "alignment",
            format!("{}x{}", v.dim(), v.k()),
            format!("{}x{}", w.dim(), w.k()),
        ));
    }
    Ok((v.as_matrix().tr_mul(w.as_matrix()).norm_squared() / w.k() as f64).clamp(0.0, 1.0))
}

/// `‖A‖_F² / ‖A‖_sp²` for `A = (1/n)XXᵀ`.
///
/// Works on whichever Gram matrix is smaller, `(1/n)XXᵀ` (d×d) or
/// `(1/n)XᵀX` (n×n); both share the nonzero spectrum of `A`.
pub fn numerical_rank(x: &DataMatrix) -> Result<f64> {
    let (d, n) = (x.dim(), x.len());
    let side = d.min(n);
    if side > DENSE_LIMIT {
        return Err(Error::TooLarge {
            d: side,
            limit: DENSE_LIMIT,
        });
    }
    let m = x.as_matrix();
    let gram = if n < d { m.tr_mul(m) } else { m * m.transpose() } / n as f64;
    let eig = oracle::eigen_symmetric(&gram);
    numerical_rank_from_spectrum(&eig.eigenvalues)
}

/// `Σ s_i² / max s_i²` from a list of eigenvalues.
pub fn numerical_rank_from_spectrum(eigenvalues: &[f64]) -> Result<f64> {
    let top = eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if top == 0.0 {
        return Err(Error::ZeroData);
    }
    let fro: f64 = eigenvalues.iter().map(|s| s * s).sum();
    Ok(fro / (top * top))
}

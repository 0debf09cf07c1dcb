//! Exact desk-scale reference: dense Jacobi eigendecomposition of the
//! covariance, eigengaps, and controlled-spectrum synthetic data.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jacobi::{symmetric_eigen, SymmetricEigen};
use crate::matrix::{DataMatrix, OrthonormalFrame};

/// Largest dimension the dense oracle will materialize.
pub const DENSE_LIMIT: usize = 2000;

/// Jacobi stops once the off-diagonal mass is below this fraction of `‖A‖_F`.
pub const JACOBI_REL_TOL: f64 = 1e-14;

/// Relative size below which an eigengap counts as zero.
pub const GAP_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Sorted descending.
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: OrthonormalFrame,
    /// Off-diagonal Frobenius norm after each Jacobi sweep.
    pub sweep_history: Vec<f64>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `s_k − s_{k+1}` (1-based `k`); `None` outside `1..d`.
    pub fn gap_at(&self, k: usize) -> Option<f64> {
        (k >= 1 && k < self.dim()).then(|| self.eigenvalues[k - 1] - self.eigenvalues[k])
    }

    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
    }

    /// `‖V S Vᵀ − A‖_F`.
    pub fn reconstruction_error(&self, a: &DMatrix<f64>) -> f64 {
        let v = self.eigenvectors.as_matrix();
        let mut vs = v.clone();
        for (j, s) in self.eigenvalues.iter().enumerate() {
            vs.column_mut(j).scale_mut(*s);
        }
        (vs * v.transpose() - a).norm()
    }
}

pub(crate) fn eigen_symmetric(a: &DMatrix<f64>) -> SymmetricEigen {
    symmetric_eigen(a, JACOBI_REL_TOL)
}

/// Eigendecomposition of `A = (1/n)XXᵀ` by cyclic Jacobi.
pub fn dense_eigh(x: &DataMatrix) -> Result<Spectrum> {
    if x.dim() > DENSE_LIMIT {
        return Err(Error::TooLarge {
            d: x.dim(),
            limit: DENSE_LIMIT,
        });
    }
    eigh_matrix(&x.covariance())
}

/// Eigendecomposition of an explicit symmetric matrix.
pub fn eigh_matrix(a: &DMatrix<f64>) -> Result<Spectrum> {
    if a.nrows() != a.ncols() {
        return Err(Error::mismatch(
            "eigh_matrix",
            "square",
            format!("{}x{}", a.nrows(), a.ncols()),
        ));
    }
    if a.nrows() > DENSE_LIMIT {
        return Err(Error::TooLarge {
            d: a.nrows(),
            limit: DENSE_LIMIT,
        });
    }
    let eig = eigen_symmetric(a);
    Ok(Spectrum {
        eigenvalues: eig.eigenvalues,
        eigenvectors: OrthonormalFrame::new(eig.eigenvectors)?,
        sweep_history: eig.off_norm_history,
    })
}

#[derive(Debug, Clone)]
pub struct LeadingSubspace {
    pub frame: OrthonormalFrame,
    /// Set when `s_k` and `s_{k+1}` tie, so the subspace is not unique.
    pub warning: Option<String>,
}

/// The top-`k` eigenvectors; the reference `V_k` for potentials.
pub fn leading_subspace(spec: &Spectrum, k: usize) -> Result<LeadingSubspace> {
    let frame = spec.eigenvectors.leading(k)?;
    let scale = spec.spectral_norm().max(f64::MIN_POSITIVE);
    let warning = spec.gap_at(k).and_then(|gap| {
        (gap.abs() <= GAP_TIE_TOL * scale).then(|| {
            let msg = format!(
                "eigenvalues {k} and {} coincide; the top-{k} subspace is not unique",
                k + 1
            );
            log::warn!("{msg}");
            msg
        })
    });
    Ok(LeadingSubspace { frame, warning })
}

/// Requested covariance spectrum for synthetic data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSpec {
    pub eigenvalues: Vec<f64>,
}

impl SpectrumSpec {
    pub fn new(eigenvalues: Vec<f64>) -> Self {
        SpectrumSpec { eigenvalues }
    }

    /// `head` followed by repeated multiplication by `ratio` up to length `d`.
    pub fn geometric_tail(d: usize, head: &[f64], ratio: f64) -> Self {
        let mut s: Vec<f64> = head.iter().copied().take(d).collect();
        while s.len() < d {
            let last = s.last().copied().unwrap_or(1.0);
            s.push(last * ratio);
        }
        SpectrumSpec { eigenvalues: s }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `s_k − s_{k+1}` of the sorted spectrum.
    pub fn gap_at(&self, k: usize) -> Option<f64> {
        let sorted = self.sorted();
        (k >= 1 && k < sorted.len()).then(|| sorted[k - 1] - sorted[k])
    }

    pub fn sorted(&self) -> Vec<f64> {
        let mut s = self.eigenvalues.clone();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }
}

/// Synthetic data together with its ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub data: DataMatrix,
    /// Eigenvectors of the covariance, in the order of `eigenvalues`.
    pub basis: OrthonormalFrame,
    /// The requested spectrum, sorted descending.
    pub eigenvalues: Vec<f64>,
}

impl SyntheticData {
    pub fn leading(&self, k: usize) -> Result<OrthonormalFrame> {
        self.basis.leading(k)
    }

    pub fn gap_at(&self, k: usize) -> Option<f64> {
        (k >= 1 && k < self.eigenvalues.len()).then(|| self.eigenvalues[k - 1] - self.eigenvalues[k])
    }
}

/// Haar-distributed orthonormal `rows×cols` frame from the QR factorization
/// of a Gaussian matrix (signs fixed so that `diag(R) > 0`).
fn haar_frame(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..cols {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `X = Q diag(√(n s)) Rᵀ` with `Q` a random `d×d` orthogonal matrix and `R`
/// a random `n×d` orthonormal frame, so `(1/n)XXᵀ = Q diag(s) Qᵀ` exactly
/// (up to rounding). Requires `n ≥ d`.
pub fn synthesize_dataset(spec: &SpectrumSpec, n: usize, seed: u64) -> Result<SyntheticData> {
    let d = spec.dim();
    if d == 0 {
        return Err(Error::invalid("spectrum is empty"));
    }
    if n < d {
        return Err(Error::invalid(format!("need n >= d, got n = {n}, d = {d}")));
    }
    if let Some(bad) = spec.eigenvalues.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
        return Err(Error::invalid(format!(
            "eigenvalue {bad} is not a finite nonnegative number"
        )));
    }
    if spec.eigenvalues.iter().all(|&s| s == 0.0) {
        return Err(Error::ZeroData);
    }
    let eigenvalues = spec.sorted();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = haar_frame(&mut rng, d, d);
    let r = haar_frame(&mut rng, n, d);
    let mut qs = q.clone();
    for (j, s) in eigenvalues.iter().enumerate() {
        qs.column_mut(j).scale_mut((n as f64 * s).sqrt());
    }
    let x = qs * r.transpose();
    Ok(SyntheticData {
        data: DataMatrix::new(x)?,
        basis: OrthonormalFrame::new(q)?,
        eigenvalues,
    })
}

/// Unit vector along `v` with the sign that brings it closest to `w`.
pub fn align_sign(v: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
    if v.dot(w) < 0.0 {
        -v
    } else {
        v.clone()
    }
}

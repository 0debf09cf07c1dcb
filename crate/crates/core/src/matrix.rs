//! Dense column-major data, orthonormal frames and the operations every
//! solver shares: covariance application, polar normalization, Procrustes
//! alignment and the subspace metrics.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jacobi::{one_sided_jacobi_svd, symmetric_eigen};

/// Tolerance on `‖WᵀW − I‖_max` for a matrix to count as orthonormal.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Smallest Gram eigenvalue accepted by [`polar_normalize`].
pub const GRAM_SINGULAR_THRESHOLD: f64 = 1e-12;

/// `n` data points in `d` dimensions stored column after column, with the
/// largest squared column norm `r` cached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDataMatrix", into = "RawDataMatrix")]
pub struct DataMatrix {
    data: DMatrix<f64>,
    r: f64,
}

#[derive(Serialize, Deserialize)]
struct RawDataMatrix {
    d: usize,
    n: usize,
    values: Vec<f64>,
}

impl TryFrom<RawDataMatrix> for DataMatrix {
    type Error = Error;
    fn try_from(raw: RawDataMatrix) -> Result<Self> {
        DataMatrix::from_column_major(raw.d, raw.n, raw.values)
    }
}

impl From<DataMatrix> for RawDataMatrix {
    fn from(x: DataMatrix) -> Self {
        RawDataMatrix {
            d: x.dim(),
            n: x.len(),
            values: x.data.as_slice().to_vec(),
        }
    }
}

impl DataMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::invalid(format!(
                "data matrix must be non-empty, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            let d = data.nrows();
            return Err(Error::invalid(format!(
                "non-finite entry at row {}, column {}",
                pos % d,
                pos / d
            )));
        }
        let r = max_sq_column_norm(&data);
        Ok(DataMatrix { data, r })
    }

    /// Builds from `n` columns of length `d` laid out contiguously.
    pub fn from_column_major(d: usize, n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != d * n {
            return Err(Error::mismatch("DataMatrix", d * n, values.len()));
        }
        Self::new(DMatrix::from_vec(d, n, values))
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let d = columns.first().map_or(0, Vec::len);
        if let Some(bad) = columns.iter().position(|c| c.len() != d) {
            return Err(Error::mismatch(
                "DataMatrix column",
                d,
                format!("column {bad} of length {}", columns[bad].len()),
            ));
        }
        let values = columns.iter().flatten().copied().collect();
        Self::from_column_major(d, columns.len(), values)
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    /// Always false: construction rejects empty data.
    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }

    /// `max_i ‖x_i‖²`.
    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn column(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.data.as_slice()[i * d..(i + 1) * d]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Dense `(1/n) X Xᵀ`. Only for oracle-scale problems.
    pub fn covariance(&self) -> DMatrix<f64> {
        (&self.data * self.data.transpose()) / self.len() as f64
    }
}

fn max_sq_column_norm(data: &DMatrix<f64>) -> f64 {
    data.column_iter().map(|c| c.norm_squared()).fold(0.0, f64::max)
}

/// A `d×k` matrix whose columns are orthonormal.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalFrame {
    w: DMatrix<f64>,
}

impl OrthonormalFrame {
    /// Wraps `w` after checking `‖WᵀW − I‖_max ≤ 1e-10`.
    pub fn new(w: DMatrix<f64>) -> Result<Self> {
        if w.ncols() == 0 || w.ncols() > w.nrows() {
            return Err(Error::invalid(format!(
                "frame must have 1 <= k <= d, got {}x{}",
                w.nrows(),
                w.ncols()
            )));
        }
        let dev = orthonormality_error(&w);
        if !(dev <= ORTHONORMAL_TOL) {
            return Err(Error::invalid(format!(
                "columns are not orthonormal: max |WᵀW - I| = {dev:.3e}"
            )));
        }
        Ok(OrthonormalFrame { w })
    }

    pub fn from_vector(v: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_column_slice(v.len(), 1, v))
    }

    pub(crate) fn from_matrix_unchecked(w: DMatrix<f64>) -> Self {
        debug_assert!(orthonormality_error(&w) <= ORTHONORMAL_TOL);
        OrthonormalFrame { w }
    }

    /// First `k` columns of the `d×d` identity.
    pub fn standard(d: usize, k: usize) -> Result<Self> {
        Self::new(DMatrix::identity(d, k))
    }

    pub fn dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn k(&self) -> usize {
        self.w.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.w
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        self.w.column(j).into_owned()
    }

    /// First `k` columns.
    pub fn leading(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.k() {
            return Err(Error::invalid(format!("cannot take {k} of {} columns", self.k())));
        }
        Ok(OrthonormalFrame {
            w: self.w.columns(0, k).into_owned(),
        })
    }

    /// `W·Q` for an orthogonal `Q`.
    pub fn rotated(&self, q: &Rotation) -> Result<Self> {
        if q.k() != self.k() {
            return Err(Error::mismatch("rotated", self.k(), q.k()));
        }
        Ok(OrthonormalFrame {
            w: &self.w * q.as_matrix(),
        })
    }

    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.w)
    }
}

/// `‖WᵀW − I‖_max`.
pub fn orthonormality_error(w: &DMatrix<f64>) -> f64 {
    let g = w.transpose() * w;
    let k = g.nrows();
    let mut worst = 0.0f64;
    for j in 0..k {
        for i in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// An orthogonal `k×k` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    b: DMatrix<f64>,
}

impl Rotation {
    pub fn new(b: DMatrix<f64>) -> Result<Self> {
        if b.nrows() != b.ncols() {
            return Err(Error::mismatch(
                "Rotation",
                "square",
                format!("{}x{}", b.nrows(), b.ncols()),
            ));
        }
        let dev = orthonormality_error(&b);
        if !(dev <= ORTHONORMAL_TOL) {
            return Err(Error::invalid(format!(
                "matrix is not orthogonal: max |BᵀB - I| = {dev:.3e}"
            )));
        }
        Ok(Rotation { b })
    }

    pub fn identity(k: usize) -> Self {
        Rotation {
            b: DMatrix::identity(k, k),
        }
    }

    pub fn k(&self) -> usize {
        self.b.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.b
    }
}

/// `(1/n) Σ_i x_i (x_iᵀ W)` without forming the `d×d` covariance.
pub fn covariance_apply(x: &DataMatrix, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if w.nrows() != x.dim() {
        return Err(Error::mismatch(
            "covariance_apply",
            format!("{} rows", x.dim()),
            format!("{} rows", w.nrows()),
        ));
    }
    let proj = x.as_matrix().tr_mul(w);
    let mut out = x.as_matrix() * proj;
    out /= x.len() as f64;
    Ok(out)
}

/// Gram condition number above which [`polar_normalize`] repeats the
/// factorization on its own output. Forming `WᵀW` squares the condition
/// number, so one pass loses about `cond · ε` of orthonormality.
const POLAR_REFINE_COND: f64 = 1e4;

/// `Wp (Wpᵀ Wp)^{-1/2}`, the orthonormal polar factor of `Wp`.
///
/// The inverse square root comes from a Jacobi eigendecomposition of the
/// `k×k` Gram matrix. For a single column this is division by the norm.
/// Ill-conditioned inputs get up to two more passes.
pub fn polar_normalize(wp: &DMatrix<f64>) -> Result<OrthonormalFrame> {
    let k = wp.ncols();
    if k == 0 || k > wp.nrows() {
        return Err(Error::invalid(format!(
            "polar_normalize needs 1 <= k <= d, got {}x{}",
            wp.nrows(),
            k
        )));
    }
    if k == 1 {
        let sq = wp.norm_squared();
        if !(sq > GRAM_SINGULAR_THRESHOLD) {
            return Err(Error::DegenerateIterate {
                min_eigenvalue: sq,
                threshold: GRAM_SINGULAR_THRESHOLD,
            });
        }
        return Ok(OrthonormalFrame::from_matrix_unchecked(wp / sq.sqrt()));
    }

    let (mut q, mut cond) = polar_pass(wp)?;
    for _ in 0..2 {
        if cond <= POLAR_REFINE_COND {
            break;
        }
        (q, cond) = polar_pass(&q)?;
    }
    Ok(OrthonormalFrame::from_matrix_unchecked(q))
}

fn polar_pass(wp: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let k = wp.ncols();
    let gram = wp.tr_mul(wp);
    let eig = symmetric_eigen(&gram, f64::EPSILON);
    let min = eig.eigenvalues[k - 1];
    if !(min > GRAM_SINGULAR_THRESHOLD) {
        return Err(Error::DegenerateIterate {
            min_eigenvalue: min,
            threshold: GRAM_SINGULAR_THRESHOLD,
        });
    }
    let u = &eig.eigenvectors;
    let mut scaled = u.clone();
    for (j, lam) in eig.eigenvalues.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / lam.sqrt());
    }
    let inv_sqrt = scaled * u.transpose();
    Ok((wp * inv_sqrt, eig.eigenvalues[0] / min))
}

/// Orthogonal `B = V Uᵀ` from the SVD `CᵀD = U S Vᵀ`; minimizes
/// `‖C − D B‖_F` over orthogonal `B`.
pub fn procrustes_rotation(c: &OrthonormalFrame, d: &OrthonormalFrame) -> Result<Rotation> {
    if c.dim() != d.dim() || c.k() != d.k() {
        return Err(Error::mismatch(
            "procrustes_rotation",
            format!("{}x{}", c.dim(), c.k()),
            format!("{}x{}", d.dim(), d.k()),
        ));
    }
    Ok(procrustes_from_cross(&c.as_matrix().tr_mul(d.as_matrix())))
}

/// Procrustes rotation given the `k×k` cross product `CᵀD` directly.
pub(crate) fn procrustes_from_cross(cross: &DMatrix<f64>) -> Rotation {
    if cross.nrows() == 1 {
        let s = if cross[(0, 0)] < 0.0 { -1.0 } else { 1.0 };
        return Rotation {
            b: DMatrix::from_element(1, 1, s),
        };
    }
    let svd = one_sided_jacobi_svd(cross);
    Rotation {
        b: &svd.v * svd.u.transpose(),
    }
}

/// `k − ‖VᵀW‖_F²`: zero iff the column spaces coincide, `k` when they are
/// orthogonal.
///
/// Evaluated as `‖W − V(VᵀW)‖_F²`, which is the same quantity for
/// orthonormal frames but keeps relative accuracy near zero.
pub fn potential(v: &OrthonormalFrame, w: &OrthonormalFrame) -> Result<f64> {
    if v.dim() != w.dim() || v.k() != w.k() {
        return Err(Error::mismatch(
            "potential",
            format!("{}x{}", v.dim(), v.k()),
            format!("{}x{}", w.dim(), w.k()),
        ));
    }
    Ok(residual_energy(v, w.as_matrix()).min(w.k() as f64))
}

pub(crate) fn residual_energy(v: &OrthonormalFrame, w: &DMatrix<f64>) -> f64 {
    let coeffs = v.as_matrix().tr_mul(w);
    let resid = w - v.as_matrix() * coeffs;
    resid.norm_squared()
}

/// `‖AW − W(WᵀAW)‖_F` with `A = (1/n)XXᵀ` applied implicitly.
pub fn rayleigh_residual(x: &DataMatrix, w: &OrthonormalFrame) -> Result<f64> {
    let aw = covariance_apply(x, w.as_matrix())?;
    Ok(residual_given_product(w.as_matrix(), &aw))
}

pub(crate) fn residual_given_product(w: &DMatrix<f64>, aw: &DMatrix<f64>) -> f64 {
    let small = w.tr_mul(aw);
    (aw - w * small).norm()
}

/// Divides every column by `√r` so the largest squared norm becomes 1.
/// Returns the rescaled data and `r`.
pub fn rescale_dataset(x: &DataMatrix) -> Result<(DataMatrix, f64)> {
    let r = x.r();
    if r <= 0.0 {
        return Err(Error::ZeroData);
    }
    let scaled = x.as_matrix() / r.sqrt();
    Ok((DataMatrix::new(scaled)?, r))
}

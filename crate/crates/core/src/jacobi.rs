//! Jacobi kernels for small and desk-scale dense problems.
//!
//! Two routines live here: the cyclic two-sided Jacobi method for symmetric
//! eigenproblems (used for k×k Gram matrices and by the dense oracle) and
//! the one-sided Hestenes–Jacobi SVD for the k×k alignment matrices in the
//! block solver.

use nalgebra::DMatrix;

const MAX_SWEEPS: usize = 100;

/// Result of a symmetric eigendecomposition, eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub eigenvalues: Vec<f64>,
    /// Column `j` is the unit eigenvector for `eigenvalues[j]`.
    pub eigenvectors: DMatrix<f64>,
    /// Off-diagonal Frobenius norm after each completed sweep.
    pub off_norm_history: Vec<f64>,
}

fn off_diagonal_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for j in 0..n {
        for i in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Sweeps until the off-diagonal Frobenius norm falls to `rel_tol * ‖A‖_F`
/// (or below the smallest normal number for a zero matrix). Only the lower
/// triangle and diagonal are trusted; the input is symmetrized first.
pub fn symmetric_eigen(a: &DMatrix<f64>, rel_tol: f64) -> SymmetricEigen {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "symmetric_eigen needs a square matrix");

    let mut m = a.clone();
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    let mut v = DMatrix::<f64>::identity(n, n);
    let target = (rel_tol * m.norm()).max(f64::MIN_POSITIVE);
    let mut history = Vec::new();

    let mut off = off_diagonal_norm(&m);
    let mut sweeps = 0;
    while off > target && sweeps < MAX_SWEEPS {
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
        sweeps += 1;
        off = off_diagonal_norm(&m);
        history.push(off);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let eigenvalues = order.iter().map(|&i| m[(i, i)]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);

    SymmetricEigen {
        eigenvalues,
        eigenvectors,
        off_norm_history: history,
    }
}

/// Annihilates `m[(p, q)]` with one plane rotation, accumulating it into `v`.
fn rotate(m: &mut DMatrix<f64>, v: &mut DMatrix<f64>, p: usize, q: usize) {
    let apq = m[(p, q)];
    if apq == 0.0 {
        return;
    }
    let app = m[(p, p)];
    let aqq = m[(q, q)];
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta.is_infinite() {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let n = m.nrows();

    {
        let data = m.as_mut_slice();
        for r in 0..n {
            if r == p || r == q {
                continue;
            }
            let arp = data[p * n + r];
            let arq = data[q * n + r];
            let new_p = c * arp - s * arq;
            let new_q = s * arp + c * arq;
            data[p * n + r] = new_p;
            data[q * n + r] = new_q;
            data[r * n + p] = new_p;
            data[r * n + q] = new_q;
        }
    }
    m[(p, p)] = app - t * apq;
    m[(q, q)] = aqq + t * apq;
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;

    let vd = v.as_mut_slice();
    for r in 0..n {
        let vrp = vd[p * n + r];
        let vrq = vd[q * n + r];
        vd[p * n + r] = c * vrp - s * vrq;
        vd[q * n + r] = s * vrp + c * vrq;
    }
}

/// Thin SVD `M = U diag(σ) Vᵀ` of a square matrix.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub v: DMatrix<f64>,
}

/// One-sided Jacobi SVD of a square matrix.
///
/// Columns of `U` belonging to zero singular values are completed to an
/// orthonormal basis, so `U` and `V` are always orthogonal.
pub fn one_sided_jacobi_svd(m: &DMatrix<f64>) -> Svd {
    let k = m.nrows();
    assert_eq!(k, m.ncols(), "one_sided_jacobi_svd expects a square matrix");

    let mut w = m.clone();
    let mut v = DMatrix::<f64>::identity(k, k);
    let eps = f64::EPSILON;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for r in 0..k {
                    alpha += w[(r, p)] * w[(r, p)];
                    beta += w[(r, q)] * w[(r, q)];
                    gamma += w[(r, p)] * w[(r, q)];
                }
                if gamma == 0.0 || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..k {
                    let wp = w[(r, p)];
                    let wq = w[(r, q)];
                    w[(r, p)] = c * wp - s * wq;
                    w[(r, q)] = s * wp + c * wq;
                    let vp = v[(r, p)];
                    let vq = v[(r, q)];
                    v[(r, p)] = c * vp - s * vq;
                    v[(r, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let sigma: Vec<f64> = (0..k).map(|j| w.column(j).norm()).collect();
    let scale = sigma.iter().cloned().fold(0.0, f64::max);
    let mut u = DMatrix::<f64>::zeros(k, k);
    let mut filled = vec![false; k];
    for j in 0..k {
        if sigma[j] > scale * 1e-14 && sigma[j] > 0.0 {
            let col = w.column(j) / sigma[j];
            u.set_column(j, &col);
            filled[j] = true;
        }
    }
    complete_orthonormal_columns(&mut u, &filled);

    Svd {
        u,
        singular_values: sigma,
        v,
    }
}

/// Fills the columns not marked in `filled` with unit vectors orthogonal to
/// every filled column, by Gram–Schmidt over the standard basis.
fn complete_orthonormal_columns(u: &mut DMatrix<f64>, filled: &[bool]) {
    let k = u.nrows();
    let mut basis_idx = 0;
    let mut done: Vec<usize> = (0..k).filter(|&j| filled[j]).collect();
    for (j, &is_filled) in filled.iter().enumerate().take(k) {
        if is_filled {
            continue;
        }
        while basis_idx < k {
            let mut cand = nalgebra::DVector::<f64>::zeros(k);
            cand[basis_idx] = 1.0;
            basis_idx += 1;
            // two passes of classical Gram-Schmidt
            for _ in 0..2 {
                for &c in &done {
                    let proj = u.column(c).dot(&cand);
                    cand -= u.column(c) * proj;
                }
            }
            let nrm = cand.norm();
            if nrm > 1e-8 {
                u.set_column(j, &(cand / nrm));
                done.push(j);
                break;
            }
        }
    }
}

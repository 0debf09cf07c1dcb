//! Geometry of the negative Rayleigh quotient `F(w) = −wᵀAw/‖w‖²`.
//!
//! Closed-form gradient and Hessian, a non-convexity witness, the tangent
//! region near `v_1` on which `F` is strongly convex, a sampling probe for
//! that region, and the counterexample showing the region cannot be widened
//! much.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jacobi::symmetric_eigen;
use crate::matrix::{covariance_apply, DataMatrix};
use crate::oracle::{Spectrum, DENSE_LIMIT};

/// Eigenvalues of the Hessian above `−PSD_TOL · max(1, ‖H‖)` count as
/// nonnegative.
pub const PSD_TOL: f64 = 1e-12;

/// Slack used for membership tests and for the `‖A‖_sp = 1` precondition.
pub const REGION_TOL: f64 = 1e-10;

fn apply(x: &DataMatrix, w: &DVector<f64>) -> Result<DVector<f64>> {
    let aw = covariance_apply(x, &DMatrix::from_column_slice(w.len(), 1, w.as_slice()))?;
    Ok(DVector::from_column_slice(aw.as_slice()))
}

fn check(x: &DataMatrix, w: &DVector<f64>, op: &'static str) -> Result<f64> {
    if w.len() != x.dim() {
        return Err(Error::mismatch(op, x.dim(), w.len()));
    }
    let sq = w.norm_squared();
    if sq == 0.0 || !sq.is_finite() {
        return Err(Error::invalid(format!("{op}: w must be a nonzero finite vector")));
    }
    Ok(sq)
}

/// `F(w) = −wᵀAw / ‖w‖²`.
pub fn rayleigh(x: &DataMatrix, w: &DVector<f64>) -> Result<f64> {
    let sq = check(x, w, "rayleigh")?;
    Ok(-w.dot(&apply(x, w)?) / sq)
}

/// `∇F(w) = −(2/‖w‖²)(F(w) I + A) w`.
pub fn rayleigh_grad(x: &DataMatrix, w: &DVector<f64>) -> Result<DVector<f64>> {
    let sq = check(x, w, "rayleigh_grad")?;
    let aw = apply(x, w)?;
    let f = -w.dot(&aw) / sq;
    Ok((w * f + aw) * (-2.0 / sq))
}

/// `∇²F(w) = −(1/‖w‖²)(M + Mᵀ)` with `M = (I − 4wwᵀ/‖w‖²)(F(w) I + A)`.
pub fn rayleigh_hessian(x: &DataMatrix, w: &DVector<f64>) -> Result<DMatrix<f64>> {
    let sq = check(x, w, "rayleigh_hessian")?;
    let d = w.len();
    if d > DENSE_LIMIT {
        return Err(Error::TooLarge { d, limit: DENSE_LIMIT });
    }
    let mut b = x.covariance();
    let f = -w.dot(&(&b * w)) / sq;
    for i in 0..d {
        b[(i, i)] += f;
    }
    // (I − 4wwᵀ/‖w‖²) B = B − (4/‖w‖²) w (wᵀB)
    let wtb = w.transpose() * &b;
    let m = b - (w * wtb) * (4.0 / sq);
    let mut h = DMatrix::zeros(d, d);
    for j in 0..d {
        for i in 0..d {
            h[(i, j)] = -(m[(i, j)] + m[(j, i)]) / sq;
        }
    }
    Ok(h)
}

/// `gᵀ∇²F(w) g` without forming the Hessian:
/// `−(2/‖w‖²)[F‖g‖² + gᵀAg − 4(gᵀw)(F wᵀg + wᵀAg)/‖w‖²]`.
pub fn directional_curvature(x: &DataMatrix, w: &DVector<f64>, g: &DVector<f64>) -> Result<f64> {
    let sq = check(x, w, "directional_curvature")?;
    if g.len() != w.len() {
        return Err(Error::mismatch("directional_curvature", w.len(), g.len()));
    }
    let aw = apply(x, w)?;
    let ag = apply(x, g)?;
    Ok(curvature_given(w, g, &aw, &ag, sq))
}

fn curvature_given(w: &DVector<f64>, g: &DVector<f64>, aw: &DVector<f64>, ag: &DVector<f64>, sq: f64) -> f64 {
    let f = -w.dot(aw) / sq;
    let gw = g.dot(w);
    -(2.0 / sq) * (f * g.norm_squared() + g.dot(ag) - 4.0 * gw * (f * gw + g.dot(aw)) / sq)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonconvexityCertificate {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
    /// Unit direction `g` with `gᵀ∇²F(w) g < 0`, present when not PSD.
    pub witness: Option<Vec<f64>>,
    /// `gᵀ∇²F(w) g` recomputed for the witness.
    pub witness_curvature: Option<f64>,
}

/// Smallest Hessian eigenvalue at `w` and, when it is negative, its
/// eigenvector as a direction of negative curvature.
pub fn nonconvexity_certificate(x: &DataMatrix, w: &DVector<f64>) -> Result<NonconvexityCertificate> {
    let h = rayleigh_hessian(x, w)?;
    let eig = symmetric_eigen(&h, f64::EPSILON);
    let d = w.len();
    let min = eig.eigenvalues[d - 1];
    let scale = eig.eigenvalues[0].abs().max(min.abs()).max(1.0);
    if min >= -PSD_TOL * scale {
        return Ok(NonconvexityCertificate {
            is_psd: true,
            min_eigenvalue: min,
            witness: None,
            witness_curvature: None,
        });
    }
    let g = eig.eigenvectors.column(d - 1).into_owned();
    let curvature = (g.transpose() * &h * &g)[(0, 0)];
    Ok(NonconvexityCertificate {
        is_psd: false,
        min_eigenvalue: min,
        witness: Some(g.as_slice().to_vec()),
        witness_curvature: Some(curvature),
    })
}

/// `{w : ⟨w, w_0⟩ = 1, ‖w − w_0‖ ≤ radius}` with `radius = λ/22`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexRegion {
    pub w0: Vec<f64>,
    pub radius: f64,
    pub lambda: f64,
}

impl ConvexRegion {
    pub fn new(w0: &DVector<f64>, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::NonPositiveGap(lambda));
        }
        if (w0.norm() - 1.0).abs() > REGION_TOL {
            return Err(Error::invalid(format!("w0 has norm {}, expected 1", w0.norm())));
        }
        Ok(ConvexRegion {
            w0: w0.as_slice().to_vec(),
            radius: lambda / 22.0,
            lambda,
        })
    }

    pub fn center(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.w0)
    }

    pub fn contains(&self, w: &DVector<f64>) -> bool {
        let w0 = self.center();
        w.len() == w0.len() && (w.dot(&w0) - 1.0).abs() <= REGION_TOL && (w - &w0).norm() <= self.radius + REGION_TOL
    }
}

#[derive(Debug, Clone)]
pub struct RegionReport {
    pub region: ConvexRegion,
    /// Leading eigenvector, signed to be closest to `w_0`.
    pub v1: DVector<f64>,
    /// `v_1 / ⟨v_1, w_0⟩`, where the ray through `v_1` meets the hyperplane.
    pub v1_prime: DVector<f64>,
    /// `‖w_0 − v_1‖`.
    pub distance: f64,
    /// `‖v_1′ − w_0‖`.
    pub projected_distance: f64,
}

/// Builds the strongly convex region around `w_0`.
///
/// Requires `‖A‖_sp = 1` and `‖w_0 − v_1‖ ≤ λ/44`, where `λ = s_1 − s_2`.
pub fn build_convex_region(spec: &Spectrum, w0: &DVector<f64>) -> Result<RegionReport> {
    if w0.len() != spec.dim() {
        return Err(Error::mismatch("build_convex_region", spec.dim(), w0.len()));
    }
    let top = spec.spectral_norm();
    if (top - 1.0).abs() > 1e-8 {
        return Err(Error::invalid(format!(
            "spectral norm is {top}; rescale the data to spectral norm 1"
        )));
    }
    let lambda = spec.gap_at(1).ok_or_else(|| Error::invalid("need d >= 2"))?;
    let region = ConvexRegion::new(w0, lambda)?;
    let raw = spec.eigenvectors.column(0);
    let v1 = if raw.dot(w0) < 0.0 { -raw } else { raw };
    let distance = (w0 - &v1).norm();
    let threshold = lambda / 44.0;
    if distance > threshold {
        return Err(Error::HypothesisViolated { distance, threshold });
    }
    let v1_prime = &v1 / v1.dot(w0);
    let projected_distance = (&v1_prime - w0).norm();
    Ok(RegionReport {
        region,
        v1,
        v1_prime,
        distance,
        projected_distance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureRange {
    pub min_curvature: f64,
    pub max_curvature: f64,
    pub samples: usize,
}

/// Unit vector orthogonal to `w0` with a uniformly random direction.
fn tangent_direction(rng: &mut ChaCha8Rng, w0: &DVector<f64>) -> DVector<f64> {
    loop {
        let g = DVector::from_fn(w0.len(), |_, _| StandardNormal.sample(rng));
        let t = &g - w0 * w0.dot(&g);
        let norm = t.norm();
        if norm > 1e-8 {
            return t / norm;
        }
    }
}

/// Samples points `w` uniformly from the tangent disk of the region and
/// unit tangent directions `g`, and returns the extremes of `gᵀ∇²F(w) g`.
///
/// Sample `i` draws from its own substream, so results do not depend on how
/// the samples are scheduled.
pub fn probe_strong_convexity(
    region: &ConvexRegion,
    x: &DataMatrix,
    samples: usize,
    seed: u64,
) -> Result<CurvatureRange> {
    if samples == 0 {
        return Err(Error::EmptyProbe);
    }
    let w0 = region.center();
    if w0.len() != x.dim() {
        return Err(Error::mismatch("probe_strong_convexity", x.dim(), w0.len()));
    }
    let d = w0.len();
    if d < 2 {
        return Err(Error::invalid("the tangent hyperplane is empty for d = 1"));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..samples {
        rng.set_stream(i as u64);
        rng.set_word_pos(0);
        let dir = tangent_direction(&mut rng, &w0);
        let u: f64 = rng.random();
        let rho = region.radius * u.powf(1.0 / (d - 1) as f64);
        let w = &w0 + dir * rho;
        let g = tangent_direction(&mut rng, &w0);
        let c = directional_curvature(x, &w, &g)?;
        lo = lo.min(c);
        hi = hi.max(c);
    }
    Ok(CurvatureRange {
        min_curvature: lo,
        max_curvature: hi,
        samples,
    })
}

/// Data and numbers for the instance `A = diag(1, 1−λ, 0)`,
/// `w_0 = (√(1−p²), 0, p)` with `p = √((1+ε)λ)`.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub data: DataMatrix,
    pub w0: DVector<f64>,
    /// `e_2`, orthogonal to `w_0`, so `w_0 + t e_2` stays on the hyperplane.
    pub ray: DVector<f64>,
    /// `2(3t²−1)ελ/(t²+1)³` at `t = 0`.
    pub second_derivative_at_0: f64,
    /// `e_2ᵀ∇²F(w_0) e_2` from the closed-form Hessian.
    pub measured_second_derivative: f64,
    pub v1: DVector<f64>,
    /// `‖v_1 − w_0‖`.
    pub distance: f64,
    /// `√(2(1+ε)λ)`.
    pub distance_bound: f64,
}

/// Second derivative of `t ↦ F(w_0 + t e_2)` on the counterexample.
pub fn ray_second_derivative(lambda: f64, eps: f64, t: f64) -> f64 {
    let s = t * t + 1.0;
    2.0 * (3.0 * t * t - 1.0) * eps * lambda / (s * s * s)
}

pub fn tightness_counterexample(lambda: f64, eps: f64) -> Result<Counterexample> {
    for (name, v) in [("lambda", lambda), ("eps", eps)] {
        if !(v > 0.0 && v < 0.5) {
            return Err(Error::invalid(format!("{name} = {v} must lie in (0, 1/2)")));
        }
    }
    // Three columns with n = 3: (1/3) Σ x_i x_iᵀ = diag(1, 1−λ, 0).
    let data = DataMatrix::from_columns(&[
        vec![3f64.sqrt(), 0.0, 0.0],
        vec![0.0, (3.0 * (1.0 - lambda)).sqrt(), 0.0],
        vec![0.0, 0.0, 0.0],
    ])?;
    let p = ((1.0 + eps) * lambda).sqrt();
    let w0 = DVector::from_vec(vec![(1.0 - p * p).sqrt(), 0.0, p]);
    let ray = DVector::from_vec(vec![0.0, 1.0, 0.0]);
    let v1 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
    let measured = directional_curvature(&data, &w0, &ray)?;
    Ok(Counterexample {
        distance: (&v1 - &w0).norm(),
        distance_bound: (2.0 * (1.0 + eps) * lambda).sqrt(),
        second_derivative_at_0: ray_second_derivative(lambda, eps, 0.0),
        measured_second_derivative: measured,
        data,
        w0,
        ray,
        v1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::dense_eigh;

    fn diag_data(s: &[f64]) -> DataMatrix {
        let n = s.len() as f64;
        let cols: Vec<Vec<f64>> = s
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let mut c = vec![0.0; s.len()];
                c[i] = (n * v).sqrt();
                c
            })
            .collect();
        DataMatrix::from_columns(&cols).unwrap()
    }

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn rayleigh_examples() {
        let x = diag_data(&[1.0, 0.0]);
        assert!((rayleigh(&x, &v(&[1.0, 1.0])).unwrap() + 0.5).abs() < 1e-15);
        let g = rayleigh_grad(&x, &v(&[1.0, 1.0])).unwrap();
        assert!((g[0] + 0.5).abs() < 1e-15 && (g[1] - 0.5).abs() < 1e-15);
        assert!(rayleigh(&x, &v(&[0.0, 0.0])).is_err());

        let x = diag_data(&[0.9, 0.4, 0.1]);
        assert!((rayleigh(&x, &v(&[1.0, 0.0, 0.0])).unwrap() + 0.9).abs() < 1e-15);
        assert!(rayleigh_grad(&x, &v(&[0.0, 3.0, 0.0])).unwrap().norm() < 1e-10);
    }

    #[test]
    fn hessian_on_axis_is_psd() {
        let x = diag_data(&[1.0, 0.0]);
        let cert = nonconvexity_certificate(&x, &v(&[1.0, 0.0])).unwrap();
        assert!(cert.is_psd);
        assert!(cert.min_eigenvalue >= -1e-10);
        let cert = nonconvexity_certificate(&x, &v(&[1.0, 1.0])).unwrap();
        assert!(!cert.is_psd);
        assert!(cert.witness_curvature.unwrap() < 0.0);
    }

    #[test]
    fn hessian_is_exactly_symmetric() {
        let x = DataMatrix::from_columns(&[vec![1.0, 2.0, -0.5], vec![0.3, -1.0, 2.0], vec![0.0, 1.0, 1.0]]).unwrap();
        let h = rayleigh_hessian(&x, &v(&[0.2, -1.1, 0.7])).unwrap();
        assert_eq!(h, h.transpose());
    }

    #[test]
    fn directional_matches_dense() {
        let x = DataMatrix::from_columns(&[vec![1.0, 2.0, -0.5], vec![0.3, -1.0, 2.0], vec![0.0, 1.0, 1.0]]).unwrap();
        let w = v(&[0.2, -1.1, 0.7]);
        let g = v(&[1.0, 0.5, -2.0]);
        let h = rayleigh_hessian(&x, &w).unwrap();
        let dense = (g.transpose() * h * &g)[(0, 0)];
        let free = directional_curvature(&x, &w, &g).unwrap();
        assert!((dense - free).abs() < 1e-12 * dense.abs().max(1.0));
    }

    #[test]
    fn region_examples() {
        let x = diag_data(&[1.0, 0.8, 0.3]);
        let spec = dense_eigh(&x).unwrap();
        let e1 = v(&[1.0, 0.0, 0.0]);
        let rep = build_convex_region(&spec, &e1).unwrap();
        assert!(rep.distance < 1e-15);
        assert!((&rep.v1_prime - &e1).norm() < 1e-15);
        assert!((rep.region.radius - 0.2 / 22.0).abs() < 1e-15);

        let theta: f64 = 0.9 * 0.2 / 44.0;
        let w0 = v(&[theta.cos(), theta.sin(), 0.0]);
        let rep = build_convex_region(&spec, &w0).unwrap();
        assert!(rep.projected_distance <= 1.25 * rep.distance);
        assert!(rep.region.contains(&rep.v1_prime));

        // Outside the admissible distance λ/44.
        let theta: f64 = 2.0 * 0.2 / 44.0;
        let far = v(&[theta.cos(), 0.0, theta.sin()]);
        assert!(matches!(
            build_convex_region(&spec, &far),
            Err(Error::HypothesisViolated { .. })
        ));
    }

    #[test]
    fn region_rejects_unscaled_spectrum() {
        let spec = dense_eigh(&diag_data(&[2.0, 0.5])).unwrap();
        assert!(build_convex_region(&spec, &v(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn probe_examples() {
        let x = diag_data(&[1.0, 0.8, 0.5, 0.1]);
        let region = ConvexRegion::new(&v(&[1.0, 0.0, 0.0, 0.0]), 0.2).unwrap();
        assert!(matches!(
            probe_strong_convexity(&region, &x, 0, 0),
            Err(Error::EmptyProbe)
        ));
        let range = probe_strong_convexity(&region, &x, 500, 1).unwrap();
        assert!(range.min_curvature >= 0.2 - 1e-9);
        assert!(range.max_curvature <= 20.0);
        assert_eq!(range, probe_strong_convexity(&region, &x, 500, 1).unwrap());

        // At w = v_1 along v_2: 2(s_1 − s_2) = 2λ.
        let c = directional_curvature(&x, &v(&[1.0, 0.0, 0.0, 0.0]), &v(&[0.0, 1.0, 0.0, 0.0])).unwrap();
        assert!((c - 0.4).abs() < 1e-14);
    }

    #[test]
    fn counterexample_numbers() {
        let ce = tightness_counterexample(0.2, 0.1).unwrap();
        assert!((ce.second_derivative_at_0 + 0.04).abs() < 1e-15);
        assert!((ce.measured_second_derivative + 0.04).abs() < 1e-12);
        assert!(ce.distance <= ce.distance_bound);
        assert!(ray_second_derivative(0.2, 0.1, 1.0 / 3f64.sqrt()).abs() < 1e-16);
        assert!(tightness_counterexample(0.5, 0.1).is_err());
        assert!(tightness_counterexample(0.2, 0.0).is_err());
    }
}

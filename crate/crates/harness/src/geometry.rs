//! `vrpca geometry`: numbers for the Rayleigh-quotient landscape.

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use vrpca::geometry::{build_convex_region, probe_strong_convexity, rayleigh_hessian, tightness_counterexample};
use vrpca::{dense_eigh, synthesize_dataset, DataMatrix, SpectrumSpec};

use crate::error::Result;

pub const SWEEP_POINTS: usize = 72;
pub const PROBE_SAMPLES: usize = 500;
const PROBE_DIM: usize = 10;
const PROBE_N: usize = 20;

/// Hessian determinant of `F` on the unit circle for `A = diag(1, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterminantSweep {
    pub angles: Vec<f64>,
    pub determinants: Vec<f64>,
    pub max_determinant: f64,
    pub negative: usize,
}

/// Extreme directional curvatures on the region around a point near `v_1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSummary {
    pub spectrum_head: Vec<f64>,
    pub lambda: f64,
    pub radius: f64,
    pub distance_to_v1: f64,
    pub min_curvature: f64,
    pub max_curvature: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleSummary {
    pub lambda: f64,
    pub eps: f64,
    pub w0: Vec<f64>,
    pub second_derivative_at_0: f64,
    pub measured_second_derivative: f64,
    pub distance: f64,
    pub distance_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub determinant_sweep: DeterminantSweep,
    pub probe: ProbeSummary,
    pub counterexample: CounterexampleSummary,
}

pub fn determinant_sweep(points: usize) -> Result<DeterminantSweep> {
    let x = DataMatrix::from_columns(&[vec![2f64.sqrt(), 0.0], vec![0.0, 0.0]])?;
    let mut angles = Vec::with_capacity(points);
    let mut determinants = Vec::with_capacity(points);
    for i in 0..points {
        let theta = 2.0 * PI * i as f64 / points as f64;
        let h = rayleigh_hessian(&x, &DVector::from_vec(vec![theta.cos(), theta.sin()]))?;
        angles.push(theta);
        determinants.push(h[(0, 0)] * h[(1, 1)] - h[(0, 1)] * h[(1, 0)]);
    }
    Ok(DeterminantSweep {
        max_determinant: determinants.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        negative: determinants.iter().filter(|d| **d < 0.0).count(),
        angles,
        determinants,
    })
}

/// Probes the region around `w_0 = normalize(v_1 + (λ/100) v_2)` on a
/// synthetic instance with spectrum `(1, 1 − λ, …)`.
pub fn convexity_probe(lambda: f64, samples: usize, seed: u64) -> Result<ProbeSummary> {
    let head = vec![1.0, 1.0 - lambda];
    let spec = SpectrumSpec::geometric_tail(PROBE_DIM, &head, 0.5);
    let syn = synthesize_dataset(&spec, PROBE_N, seed)?;
    let eig = dense_eigh(&syn.data)?;
    let w0 = eig.eigenvectors.column(0) + eig.eigenvectors.column(1) * (lambda / 100.0);
    let w0 = &w0 / w0.norm();
    let rep = build_convex_region(&eig, &w0)?;
    let range = probe_strong_convexity(&rep.region, &syn.data, samples, seed)?;
    Ok(ProbeSummary {
        spectrum_head: head,
        lambda: rep.region.lambda,
        radius: rep.region.radius,
        distance_to_v1: rep.distance,
        min_curvature: range.min_curvature,
        max_curvature: range.max_curvature,
        samples: range.samples,
    })
}

pub fn geometry_report(lambda: f64, eps: f64, seed: u64) -> Result<GeometryReport> {
    let c = tightness_counterexample(lambda, eps)?;
    Ok(GeometryReport {
        determinant_sweep: determinant_sweep(SWEEP_POINTS)?,
        probe: convexity_probe(lambda, PROBE_SAMPLES, seed)?,
        counterexample: CounterexampleSummary {
            lambda,
            eps,
            w0: c.w0.as_slice().to_vec(),
            second_derivative_at_0: c.second_derivative_at_0,
            measured_second_derivative: c.measured_second_derivative,
            distance: c.distance,
            distance_bound: c.distance_bound,
        },
    })
}

//! Variance-reduced stochastic PCA.
//!
//! The crate computes the leading eigenvector (or top-`k` subspace) of the
//! empirical covariance `A = (1/n) X Xᵀ` of a `d×n` data matrix. It never
//! forms `A` in the solvers. Each epoch makes one exact pass over the data,
//! followed by cheap stochastic steps whose variance shrinks as the iterate
//! approaches the anchor.
//!
//! Small problems can be checked against the dense Jacobi oracle in
//! [`oracle`]. The [`geometry`] module covers the local convexity structure
//! of the Rayleigh quotient.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod init;
pub mod jacobi;
pub mod matrix;
pub mod oracle;
pub mod solvers;
pub mod trace;

pub use error::{Error, Result};
pub use init::{gaussian_init, power_warm_start, InitMethod, InitReport};
pub use matrix::{
    covariance_apply, polar_normalize, potential, procrustes_rotation, rayleigh_residual, rescale_dataset, DataMatrix,
    OrthonormalFrame, Rotation,
};
pub use oracle::{dense_eigh, leading_subspace, synthesize_dataset, Spectrum, SpectrumSpec, SyntheticData};
pub use solvers::{
    burn_in, deflation_solve, oja_baseline, orthogonal_iteration, select_parameters, vrpca_block, vrpca_vector,
    BurnInConfig, BurnInOutcome, BurnInStop, DeflationResult, OjaSchedule, SolverConfig, SolverConstants,
    StepParameters,
};
pub use trace::{ConvergenceTrace, TraceRecord};

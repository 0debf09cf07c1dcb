use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use vrpca::geometry::{
    build_convex_region, directional_curvature, nonconvexity_certificate, probe_strong_convexity, rayleigh_hessian,
    ConvexRegion,
};
use vrpca::init::{alignment, numerical_rank, numerical_rank_from_spectrum};
use vrpca::{dense_eigh, gaussian_init, power_warm_start, synthesize_dataset, DataMatrix, SpectrumSpec};

#[test]
fn warm_start_dominates_random_start() {
    let d = 500;
    let mut s = vec![0.0; d];
    s[..5].copy_from_slice(&[1.0, 0.95, 0.9, 0.5, 0.2]);
    let syn = synthesize_dataset(&SpectrumSpec::new(s), d, 3).unwrap();
    let v1 = syn.leading(1).unwrap();
    let mut ratios: Vec<f64> = (0..200u64)
        .map(|seed| {
            let warm = power_warm_start(&syn.data, 1, seed, Some(&v1)).unwrap();
            let cold = gaussian_init(d, 1, seed).unwrap();
            warm.alignment_sq.unwrap() / alignment(&v1, &cold).unwrap()
        })
        .collect();
    ratios.sort_by(f64::total_cmp);
    let median = ratios[100];
    assert!(median >= 5.0, "median ratio {median}");
    let nrank = numerical_rank_from_spectrum(&syn.eigenvalues).unwrap();
    assert!((nrank - 3.0025).abs() < 1e-12);
}

#[test]
fn numerical_rank_gram_side_matches_oracle() {
    // n < d uses the n×n Gram matrix.
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = DataMatrix::new(DMatrix::from_fn(40, 6, |_, _| StandardNormal.sample(&mut rng))).unwrap();
    let s = dense_eigh(&x).unwrap();
    let dense = numerical_rank_from_spectrum(&s.eigenvalues).unwrap();
    assert!((numerical_rank(&x).unwrap() - dense).abs() <= 1e-10);
}

#[test]
fn witness_has_negative_curvature() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut witnesses = 0;
    for _ in 0..50 {
        let x = DataMatrix::new(DMatrix::from_fn(4, 6, |_, _| StandardNormal.sample(&mut rng))).unwrap();
        let w = DVector::from_fn(4, |_, _| StandardNormal.sample(&mut rng));
        let cert = nonconvexity_certificate(&x, &w).unwrap();
        if let Some(g) = cert.witness {
            witnesses += 1;
            let g = DVector::from_vec(g);
            let h = rayleigh_hessian(&x, &w).unwrap();
            let q = (g.transpose() * h * &g)[(0, 0)];
            assert!(q < -1e-12);
            assert!((directional_curvature(&x, &w, &g).unwrap() - q).abs() <= 1e-12 * (1.0 + q.abs()));
        } else {
            assert!(cert.is_psd);
        }
    }
    assert!(witnesses > 0);
}

#[test]
fn probe_at_center_along_second_eigenvector() {
    let syn = synthesize_dataset(&SpectrumSpec::new(vec![1.0, 0.8, 0.5, 0.3, 0.1]), 10, 4).unwrap();
    let spec = dense_eigh(&syn.data).unwrap();
    let v1 = spec.eigenvectors.column(0);
    let v2 = spec.eigenvectors.column(1);
    let rep = build_convex_region(&spec, &v1).unwrap();
    let g = &v2 - &v1 * v1.dot(&v2);
    let g = &g / g.norm();
    let c = directional_curvature(&syn.data, &v1, &g).unwrap();
    assert!(c >= rep.region.lambda);
    assert!((c - 2.0 * rep.region.lambda).abs() < 1e-12);

    let one = probe_strong_convexity(&rep.region, &syn.data, 1, 0).unwrap();
    assert_eq!(one.samples, 1);
    assert!(one.min_curvature == one.max_curvature && one.min_curvature >= 0.2 - 1e-9);
}

#[test]
fn region_membership() {
    let w0 = DVector::from_vec(vec![0.0, 1.0, 0.0]);
    let region = ConvexRegion::new(&w0, 0.22).unwrap();
    assert!((region.radius - 0.01).abs() < 1e-15);
    assert!(region.contains(&DVector::from_vec(vec![0.009, 1.0, 0.0])));
    assert!(!region.contains(&DVector::from_vec(vec![0.011, 1.0, 0.0])));
    assert!(!region.contains(&DVector::from_vec(vec![0.0, 1.001, 0.0])));
    assert!(ConvexRegion::new(&DVector::from_vec(vec![0.0, 2.0, 0.0]), 0.2).is_err());
    assert!(ConvexRegion::new(&w0, 0.0).is_err());
}

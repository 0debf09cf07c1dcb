use nalgebra::DMatrix;

use vrpca::{
    burn_in, deflation_solve, gaussian_init, oja_baseline, orthogonal_iteration, potential, select_parameters,
    synthesize_dataset, vrpca_block, vrpca_vector, BurnInConfig, BurnInStop, DataMatrix, Error, OjaSchedule,
    OrthonormalFrame, SolverConfig, SolverConstants, SpectrumSpec,
};

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

fn tuned(lambda: f64, r: f64, k: usize, delta: f64, epochs: usize, seed: u64) -> SolverConfig {
    let p = select_parameters(lambda, r, k, delta, &SolverConstants::default()).unwrap();
    SolverConfig {
        k,
        eta: p.eta,
        m: p.m as usize,
        epochs,
        seed,
        delta,
        ..SolverConfig::default()
    }
}

#[test]
fn zero_step_freezes_iterate() {
    let syn = synthesize_dataset(&SpectrumSpec::geometric_tail(8, &[1.0, 0.6], 0.5), 20, 1).unwrap();
    let v = syn.leading(1).unwrap();
    let w0 = gaussian_init(8, 1, 2).unwrap();
    let cfg = SolverConfig {
        eta: 0.0,
        m: 50,
        epochs: 3,
        ..SolverConfig::default()
    };
    let t = vrpca_vector(&syn.data, &w0, &cfg, Some(&v)).unwrap();
    assert_eq!(t.final_frame, w0);
    let p0 = t.records[0].potential.unwrap();
    assert!(t.records.iter().all(|r| r.potential == Some(p0)));
}

#[test]
fn exact_eigenvector_is_fixed_point() {
    let x = diag_data(&[1.0, 0.5]);
    let v = OrthonormalFrame::standard(2, 1).unwrap();
    let cfg = SolverConfig {
        eta: 0.1,
        m: 200,
        epochs: 2,
        ..SolverConfig::default()
    };
    let t = vrpca_vector(&x, &v, &cfg, Some(&v)).unwrap();
    assert!(t.records.iter().all(|r| r.potential.unwrap() <= 1e-12));

    let v2 = OrthonormalFrame::standard(2, 2).unwrap();
    let t = vrpca_block(&x, &v2, &SolverConfig { k: 2, ..cfg }, Some(&v2)).unwrap();
    assert!(t.records.iter().all(|r| r.potential.unwrap() <= 1e-10));
}

#[test]
fn vector_solver_standard_instance() {
    let syn = synthesize_dataset(&SpectrumSpec::geometric_tail(50, &[1.0, 0.7], 0.5), 500, 1).unwrap();
    let v = syn.leading(1).unwrap();
    let cfg = tuned(0.3, syn.data.r(), 1, 0.1, 10, 1);
    let t = vrpca_vector(&syn.data, &gaussian_init(50, 1, 101).unwrap(), &cfg, Some(&v)).unwrap();
    let p = t.epoch_potentials();
    let mut ratios: Vec<f64> = p.windows(2).map(|w| w[1] / w[0]).collect();
    ratios.sort_by(f64::total_cmp);
    let median = (ratios[4] + ratios[5]) / 2.0;
    assert!(t.final_potential().unwrap() <= 1e-8);
    assert!(median <= 0.5, "median ratio {median}");
}

#[test]
fn trace_shape() {
    let syn = synthesize_dataset(&SpectrumSpec::geometric_tail(10, &[1.0, 0.7], 0.5), 40, 3).unwrap();
    let cfg = SolverConfig {
        eta: 0.01,
        m: 100,
        epochs: 3,
        ..SolverConfig::default()
    };
    let t = vrpca_vector(&syn.data, &gaussian_init(10, 1, 4).unwrap(), &cfg, None).unwrap();
    assert_eq!(t.boundaries().count(), 4);
    assert!(t.records.windows(2).all(|w| w[0].samples <= w[1].samples));
    // 9 inner records per epoch at m/10 granularity.
    assert_eq!(t.records.len(), 4 + 3 * 9);
    assert!(t.records.iter().all(|r| r.potential.is_none() && r.elapsed_s.is_none()));
    assert!(t.boundaries().all(|r| r.residual.is_some()));
    assert_eq!(t.samples(), 3 * (40 + 100));
}

#[test]
fn rotation_on_and_off_both_converge() {
    let syn = synthesize_dataset(&SpectrumSpec::geometric_tail(20, &[1.0, 0.9, 0.5], 0.5), 100, 5).unwrap();
    let v = syn.leading(2).unwrap();
    let w0 = gaussian_init(20, 2, 6).unwrap();
    let cfg = tuned(0.4, syn.data.r(), 2, 0.5, 12, 7);
    for use_rotation in [true, false] {
        let t = vrpca_block(
            &syn.data,
            &w0,
            &SolverConfig {
                use_rotation,
                ..cfg.clone()
            },
            Some(&v),
        )
        .unwrap();
        assert!(
            t.final_potential().unwrap() <= 1e-6,
            "rotation {use_rotation}: {:?}",
            t.epoch_potentials()
        );
    }
}

#[test]
fn early_exit_stops_at_epsilon() {
    let syn = synthesize_dataset(&SpectrumSpec::geometric_tail(20, &[1.0, 0.6], 0.5), 100, 8).unwrap();
    let v = syn.leading(1).unwrap();
    let cfg = SolverConfig {
        epsilon: 1e-4,
        early_exit: true,
        ..tuned(0.4, syn.data.r(), 1, 0.1, 20, 9)
    };
    let t = vrpca_vector(&syn.data, &gaussian_init(20, 1, 1).unwrap(), &cfg, Some(&v)).unwrap();
    let p = t.epoch_potentials();
    assert!(p.len() < 21);
    assert!(*p.last().unwrap() <= 1e-4);
    assert!(p[..p.len() - 1].iter().all(|x| *x > 1e-4));
}

#[test]
fn solver_input_errors() {
    let x = diag_data(&[1.0, 0.5, 0.2]);
    let w = gaussian_init(3, 1, 0).unwrap();
    let bad = SolverConfig {
        m: 0,
        ..SolverConfig::default()
    };
    assert!(vrpca_vector(&x, &w, &bad, None).is_err());
    let wrong_dim = gaussian_init(4, 1, 0).unwrap();
    assert!(matches!(
        vrpca_vector(&x, &wrong_dim, &SolverConfig::default(), None),
        Err(Error::DimensionMismatch { .. })
    ));
    let k_too_big = SolverConfig {
        k: 4,
        ..SolverConfig::default()
    };
    assert!(vrpca_block(&x, &w, &k_too_big, None).is_err());
}

#[test]
fn orthogonal_iteration_examples() {
    let x = diag_data(&[1.0, 0.5]);
    let w0 = OrthonormalFrame::new(DMatrix::from_column_slice(2, 1, &[0.5f64.sqrt(), 0.5f64.sqrt()])).unwrap();
    let t = orthogonal_iteration(&x, &w0, 1, None).unwrap();
    let w = t.final_frame.as_matrix();
    let dense = x.covariance() * w0.as_matrix();
    let dense = &dense / dense.norm();
    assert!((w - &dense).abs().max() < 1e-15);
    assert!((w[(1, 0)] / w[(0, 0)] - 0.5).abs() < 1e-15);

    let v = OrthonormalFrame::standard(2, 1).unwrap();
    let t = orthogonal_iteration(&x, &v, 5, Some(&v)).unwrap();
    assert!(t.final_potential().unwrap() < 1e-30);

    let syn = synthesize_dataset(&SpectrumSpec::geometric_tail(20, &[1.0, 0.7], 0.5), 100, 2).unwrap();
    let v = syn.leading(1).unwrap();
    let w0 = gaussian_init(20, 1, 3).unwrap();
    let t = orthogonal_iteration(&syn.data, &w0, 50, Some(&v)).unwrap();
    // Classical rate: tan² of the angle shrinks by (s2/s1)² per sweep.
    let p0 = t.records[0].potential.unwrap();
    let tan0 = p0 / (1.0 - p0);
    let predicted = tan0 * 0.7f64.powi(100);
    let got = t.final_potential().unwrap();
    assert!(got <= 10.0 * predicted, "{got:e} vs {predicted:e}");
}

#[test]
fn oja_examples() {
    let x = diag_data(&[1.0, 0.5, 0.2]);
    let w0 = gaussian_init(3, 1, 4).unwrap();
    let frozen = oja_baseline(&x, &w0, OjaSchedule { c: 0.0, offset: 1.0 }, 100, 0, 10, None).unwrap();
    assert!((frozen.final_frame.as_matrix() - w0.as_matrix()).abs().max() <= 1e-15);

    let rank_one = DataMatrix::from_columns(&[vec![1.0, 0.0, 0.0]]).unwrap();
    let e1 = OrthonormalFrame::standard(3, 1).unwrap();
    let t = oja_baseline(
        &rank_one,
        &w0,
        OjaSchedule { c: 1.0, offset: 1.0 },
        2000,
        0,
        100,
        Some(&e1),
    )
    .unwrap();
    // Only the e_1 coordinate moves, by a factor Π (1 + 1/(t+1)) = 1001.
    let p0 = t.records[0].potential.unwrap();
    let tan_sq = p0 / (1.0 - p0) / 1001f64.powi(2);
    let expected = tan_sq / (1.0 + tan_sq);
    let got = t.final_potential().unwrap();
    assert!((got - expected).abs() <= 1e-9 * expected, "{got:e} vs {expected:e}");
    let p: Vec<f64> = t.records.iter().map(|r| r.potential.unwrap()).collect();
    assert!(p.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn vrpca_beats_oja_at_equal_samples() {
    let syn = synthesize_dataset(&SpectrumSpec::geometric_tail(50, &[1.0, 0.7], 0.5), 500, 1).unwrap();
    let v = syn.leading(1).unwrap();
    let cfg = tuned(0.3, syn.data.r(), 1, 0.1, 10, 1);
    let w0 = gaussian_init(50, 1, 101).unwrap();
    let vr = vrpca_vector(&syn.data, &w0, &cfg, Some(&v)).unwrap();
    let schedule = OjaSchedule {
        c: 1.0 / 0.3,
        offset: 100.0,
    };
    let oja = oja_baseline(&syn.data, &w0, schedule, vr.samples(), 1, vr.samples() / 10, Some(&v)).unwrap();
    assert_eq!(oja.samples(), vr.samples());
    assert!(vr.final_potential().unwrap() < oja.final_potential().unwrap());
}

#[test]
fn deflation_examples() {
    let syn = synthesize_dataset(&SpectrumSpec::new(vec![1.0, 0.8, 0.6]), 30, 2).unwrap();
    let v2 = syn.leading(2).unwrap();
    let w0 = gaussian_init(3, 2, 5).unwrap();
    let cfg = tuned(0.2, syn.data.r(), 1, 0.1, 12, 3);
    let res = deflation_solve(&syn.data, 2, &w0, &cfg).unwrap();
    assert!(potential(&v2, &res.frame).unwrap() <= 1e-6);
    assert!(res.warnings.is_empty());
    assert!((res.eigenvalues[0] - 1.0).abs() < 1e-6 && (res.eigenvalues[1] - 0.8).abs() < 1e-6);

    // k = 1 is the plain vector solver.
    let w1 = gaussian_init(3, 1, 5).unwrap();
    let res = deflation_solve(&syn.data, 1, &w1, &cfg).unwrap();
    let plain = vrpca_vector(&syn.data, &w1, &cfg, None).unwrap();
    assert!((res.frame.as_matrix() - plain.final_frame.as_matrix()).abs().max() <= 1e-12);

    // Tied top eigenvalues: only termination and the warning are checked.
    let tied = synthesize_dataset(&SpectrumSpec::new(vec![1.0, 1.0, 0.3]), 30, 4).unwrap();
    let res = deflation_solve(&tied.data, 2, &w0, &SolverConfig { epochs: 3, ..cfg }).unwrap();
    assert!(!res.warnings.is_empty());
}

#[test]
fn burn_in_already_aligned() {
    let x = diag_data(&[1.0, 0.6, 0.2]);
    let v = OrthonormalFrame::standard(3, 1).unwrap();
    let w0 = OrthonormalFrame::from_vector(&[0.9f64.sqrt(), 0.1f64.sqrt(), 0.0]).unwrap();
    let out = burn_in(&x, &w0, &BurnInConfig::default(), Some(&v)).unwrap();
    assert_eq!(out.iterations, 0);
    assert_eq!(out.stop, BurnInStop::AlreadyAligned);
    assert_eq!(out.frame, w0);
}

#[test]
fn burn_in_from_random_start() {
    let d = 30;
    let syn = synthesize_dataset(&SpectrumSpec::geometric_tail(d, &[1.0, 0.7], 0.5), 300, 11).unwrap();
    let v = syn.leading(1).unwrap();
    let cfg = BurnInConfig {
        lambda: 0.3,
        delta: 0.25,
        zeta: 1.0 / d as f64,
        seed: 1,
        ..BurnInConfig::default()
    };
    let w0 = gaussian_init(d, 1, 12).unwrap();
    let out = burn_in(&syn.data, &w0, &cfg, Some(&v)).unwrap();
    assert_eq!(out.stop, BurnInStop::PotentialReached);
    assert!(potential(&v, &out.frame).unwrap() <= 0.5);
    assert!(out.iterations > 0 && out.iterations <= out.budget);

    // Without a reference it runs until the residual plateaus.
    let blind = burn_in(&syn.data, &w0, &cfg, None).unwrap();
    assert_eq!(blind.stop, BurnInStop::Plateau);
    assert!(blind.trace.records.iter().all(|r| r.potential.is_none()));
}

#[test]
fn burn_in_with_oversized_step_fails() {
    let d = 30;
    let syn = synthesize_dataset(&SpectrumSpec::geometric_tail(d, &[1.0, 0.95], 0.9), 300, 13).unwrap();
    let v = syn.leading(1).unwrap();
    let base = BurnInConfig {
        lambda: 0.05,
        delta: 0.25,
        // The iteration budget shrinks with eta * zeta; a generous zeta
        // leaves too few steps once the step size is inflated.
        zeta: 0.8,
        seed: 0,
        ..BurnInConfig::default()
    };
    let eta = base.step_size(syn.data.r());
    let cfg = BurnInConfig {
        eta_override: Some(100.0 * eta),
        ..base
    };
    let w0 = gaussian_init(d, 1, 14).unwrap();
    match burn_in(&syn.data, &w0, &cfg, Some(&v)) {
        Err(Error::NonConvergence {
            iterations,
            budget,
            trace,
        }) => {
            assert_eq!(iterations, budget);
            assert!(!trace.records.is_empty());
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn burn_in_rejects_bad_config() {
    let x = diag_data(&[1.0, 0.5]);
    let w0 = gaussian_init(2, 1, 0).unwrap();
    for cfg in [
        BurnInConfig {
            lambda: 0.0,
            ..BurnInConfig::default()
        },
        BurnInConfig {
            zeta: 0.0,
            ..BurnInConfig::default()
        },
        BurnInConfig {
            delta: 1.0,
            ..BurnInConfig::default()
        },
    ] {
        assert!(burn_in(&x, &w0, &cfg, None).is_err());
    }
}

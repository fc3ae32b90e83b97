use std::f64::consts::PI;

use tricov::data::SurfaceKind;
use tricov::experiments::{example2_truth, truth_for, Example, ExperimentConfig};
use tricov::simulate::{analytic_covariance, eval_g3, example2_basis, ProcessSpec, EXAMPLE2_COEF_VARIANCE};
use tricov::spectral::{eigendecompose, hs_distance, inner_product};
use tricov::{EvaluationGrid, SurfaceEstimate};

/// Composite Simpson rule on `[0, 1]`.
fn simpson(f: impl Fn(f64) -> f64, intervals: usize) -> f64 {
    let h = 1.0 / intervals as f64;
    let inner: f64 = (1..intervals).map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h)).sum();
    (f(0.0) + f(1.0) + inner) * h / 3.0
}

#[test]
fn example2_trace_matches_quadrature() {
    let grid = EvaluationGrid::uniform(201).unwrap();
    let (_, _, eigen) = example2_truth(&grid).unwrap();
    let norm_g3 = simpson(|s| eval_g3(s).unwrap().powi(2), 2000);
    // trace = 0.2 (||1||^2 + ||sin 2 pi s||^2 + ||g3||^2)
    let expected = EXAMPLE2_COEF_VARIANCE * (1.0 + 0.5 + norm_g3);
    let trace: f64 = eigen.eigenvalues.iter().sum();
    assert!((trace - expected).abs() < 5e-3 * expected, "{trace} vs {expected}");
    assert!(eigen.eigenvalues[3].abs() < 1e-10);
}

#[test]
fn example2_eigenfunctions_span_the_basis() {
    let grid = EvaluationGrid::uniform(101).unwrap();
    let (_, _, eigen) = example2_truth(&grid).unwrap();
    for k in 0..3 {
        let psi = &eigen.eigenfunctions[k];
        // residual after projecting psi on the basis functions is small
        let basis: Vec<Vec<f64>> =
            (0..3).map(|b| grid.points().iter().map(|&s| example2_basis(s)[b]).collect()).collect();
        let gram = nalgebra::Matrix3::from_fn(|a, b| inner_product(&grid, &basis[a], &basis[b]));
        let rhs = nalgebra::Vector3::from_fn(|a, _| inner_product(&grid, &basis[a], psi));
        let coef = gram.lu().solve(&rhs).unwrap();
        let resid: Vec<f64> =
            (0..grid.len()).map(|i| psi[i] - (0..3).map(|b| coef[b] * basis[b][i]).sum::<f64>()).collect();
        assert!(inner_product(&grid, &resid, &resid).sqrt() < 1e-8);
    }
}

#[test]
fn brownian_truth_is_min() {
    let cfg = ExperimentConfig { grid_size: 101, ..ExperimentConfig::new(Example::Example1Bm, 10, 5) };
    let grid = EvaluationGrid::uniform(101).unwrap();
    let truth = truth_for(&cfg, &grid).unwrap();
    assert_eq!(truth.eigenvalues.len(), 20);
    for (k, l) in truth.eigenvalues.iter().enumerate() {
        let expected = 4.0 / (((2 * k + 1) as f64).powi(2) * PI * PI);
        assert!((l - expected).abs() < 1e-15);
    }
    assert_eq!(truth.covariance.get(30, 70), 0.3);
}

#[test]
fn quadrature_spectrum_approaches_analytic_values() {
    let proc = ProcessSpec::BrownianMotion;
    let mut errors = Vec::new();
    for m in [51, 101, 201] {
        let grid = EvaluationGrid::uniform(m).unwrap();
        let c = SurfaceEstimate::from_fn(&grid, SurfaceKind::Covariance, |s, t| analytic_covariance(&proc, s, t));
        let eig = eigendecompose(&c, 3).unwrap();
        errors.push((eig.eigenvalues[0] - 4.0 / (PI * PI)).abs());
    }
    assert!(errors[0] > errors[1] && errors[1] > errors[2]);
    assert!(errors[2] / (4.0 / (PI * PI)) < 0.01);
}

#[test]
fn hs_distance_of_brownian_covariance() {
    let grid = EvaluationGrid::uniform(201).unwrap();
    let c = SurfaceEstimate::from_fn(&grid, SurfaceKind::Covariance, f64::min);
    let zero = SurfaceEstimate::from_fn(&grid, SurfaceKind::Covariance, |_, _| 0.0);
    // int int min(s, t)^2 = 1/6
    let d = hs_distance(&c, &zero).unwrap();
    assert!((d - (1.0f64 / 6.0).sqrt()).abs() < 0.01, "{d}");
}

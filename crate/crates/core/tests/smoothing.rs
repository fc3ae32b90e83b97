use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tricov::data::Curve;
use tricov::kernels::KernelConfig;
use tricov::simulate::{simulate_dataset, ProcessSpec};
use tricov::smoothers::{
    build_pairs, estimate_covariance, estimate_mean, estimate_noise_variance, estimate_surface_g, fit_second_moment_at,
    Bandwidths,
};
use tricov::{EvaluationGrid, KernelFamily, KernelSpec, Method, NoiseModel, SparseFunctionalDataset};

fn random_dataset(seed: u64, n: usize, r_max: usize) -> SparseFunctionalDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let curves = (0..n)
        .map(|_| {
            let r = rng.gen_range(2..=r_max);
            let mut t: Vec<f64> = (0..r).map(|_| rng.gen()).collect();
            t.sort_by(f64::total_cmp);
            Curve::new(t, (0..r).map(|_| rng.gen_range(-1.5..1.5)).collect())
        })
        .collect();
    SparseFunctionalDataset::validated(curves).unwrap()
}

#[test]
fn grid_surface_matches_pointwise_fits() {
    let ds = random_dataset(11, 25, 9);
    let grid = EvaluationGrid::uniform(9).unwrap();
    for family in [KernelFamily::ExpSequence, KernelFamily::HybridSequence] {
        let spec = KernelSpec::scheduled(family, 0.3).unwrap();
        for method in [Method::Triangle, Method::Square] {
            let surface = estimate_surface_g(&ds, &spec, &grid, method).unwrap();
            assert_eq!(surface.remediated_nodes, 0);
            let pairs = build_pairs(&ds, method.restriction());
            let pts = grid.points();
            for i in 0..pts.len() {
                for j in 0..=i {
                    let direct = fit_second_moment_at(&pairs, &spec, pts[i], pts[j]).unwrap().a0;
                    let expected = match method {
                        Method::Triangle => direct,
                        Method::Square => {
                            let other = fit_second_moment_at(&pairs, &spec, pts[j], pts[i]).unwrap().a0;
                            (direct + other) / 2.0
                        }
                    };
                    let got = surface.get(i, j);
                    assert!((got - expected).abs() <= 1e-10 * expected.abs().max(1.0), "{method} ({i},{j}): {got} vs {expected}");
                    assert_eq!(got.to_bits(), surface.get(j, i).to_bits());
                }
            }
        }
    }
}

#[test]
fn scaling_and_shift_equivariance() {
    let ds = random_dataset(12, 30, 8);
    let grid = EvaluationGrid::uniform(11).unwrap();
    let cfg = KernelConfig::default();
    let bw = Bandwidths::equal(0.3);
    let base = estimate_covariance(&ds, &cfg, bw, &grid, Method::Triangle).unwrap();
    let scaled = estimate_covariance(&ds.map_values(|y| 3.0 * y), &cfg, bw, &grid, Method::Triangle).unwrap();
    for (a, b) in base.second_moment.values.iter().zip(&scaled.second_moment.values) {
        assert!((9.0 * a - b).abs() <= 1e-10 * b.abs().max(1.0));
    }
    for (a, b) in base.covariance.values.iter().zip(&scaled.covariance.values) {
        assert!((9.0 * a - b).abs() <= 1e-10 * b.abs().max(1.0));
    }
    let spec = cfg.at_bandwidth(0.3).unwrap();
    let mu = estimate_mean(&ds, &spec, &grid).unwrap();
    let shifted = estimate_mean(&ds.map_values(|y| y + 2.5), &spec, &grid).unwrap();
    for (a, b) in mu.values.iter().zip(&shifted.values) {
        assert!((a + 2.5 - b).abs() < 1e-10);
    }
}

#[test]
fn recovers_constant_level_covariance() {
    // X(t) = Z with Var Z = 0.2: covariance is the constant 0.2
    let proc = ProcessSpec::CustomCovariance(tricov::simulate::CustomCovariance::new("level", |_, _| 0.2));
    let sim = simulate_dataset(&proc, 200, 20, NoiseModel::gaussian(0.1).unwrap(), 3).unwrap();
    let grid = EvaluationGrid::uniform(21).unwrap();
    let fit = estimate_covariance(&sim.dataset, &KernelConfig::default(), Bandwidths::equal(0.4), &grid, Method::Triangle)
        .unwrap();
    let center = fit.covariance.get(10, 5);
    assert!((center - 0.2).abs() <= 0.15 * 0.2, "{center}");
}

#[test]
fn noise_level_is_recovered() {
    let sim = simulate_dataset(&ProcessSpec::BrownianMotion, 150, 30, NoiseModel::gaussian(0.3).unwrap(), 8).unwrap();
    let grid = EvaluationGrid::uniform(31).unwrap();
    let fit = estimate_covariance(&sim.dataset, &KernelConfig::default(), Bandwidths::equal(0.4), &grid, Method::Triangle)
        .unwrap();
    let sigma = estimate_noise_variance(&sim.dataset, &fit.mu_kernel, &fit.second_moment).unwrap();
    assert!((sigma - 0.3).abs() < 0.06, "{sigma}");
}

#[test]
fn invalid_dataset_is_rejected() {
    let ds = SparseFunctionalDataset::new(vec![Curve::new(vec![0.5, 0.2], vec![1.0, 1.0])]);
    let grid = EvaluationGrid::uniform(5).unwrap();
    let spec = KernelSpec::scheduled(KernelFamily::ExpSequence, 0.3).unwrap();
    assert!(estimate_surface_g(&ds, &spec, &grid, Method::Triangle).is_err());
    assert!(estimate_mean(&ds, &spec, &grid).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn triangle_output_is_bitwise_symmetric(seed in any::<u64>(), n in 2usize..20, m in 2usize..25, h in 0.05f64..1.0) {
        let ds = random_dataset(seed, n, 10);
        let grid = EvaluationGrid::uniform(m).unwrap();
        if let Ok(fit) = estimate_covariance(&ds, &KernelConfig::default(), Bandwidths::equal(h), &grid, Method::Triangle) {
            prop_assert!(fit.second_moment.is_exactly_symmetric());
            prop_assert!(fit.covariance.is_exactly_symmetric());
        }
    }

    #[test]
    fn square_output_is_symmetric(seed in any::<u64>(), n in 2usize..20, m in 2usize..25, h in 0.05f64..1.0) {
        let ds = random_dataset(seed, n, 10);
        let grid = EvaluationGrid::uniform(m).unwrap();
        let spec = KernelSpec::scheduled(KernelFamily::ExpSequence, h.min(0.99)).unwrap();
        if let Ok(g) = estimate_surface_g(&ds, &spec, &grid, Method::Square) {
            prop_assert!(g.is_exactly_symmetric());
        }
    }

    #[test]
    fn curve_order_does_not_matter(seed in any::<u64>(), n in 3usize..12) {
        let ds = random_dataset(seed, n, 7);
        let reversed: Vec<usize> = (0..n).rev().collect();
        let grid = EvaluationGrid::uniform(7).unwrap();
        let spec = KernelSpec::scheduled(KernelFamily::ExpSequence, 0.4).unwrap();
        let a = estimate_surface_g(&ds, &spec, &grid, Method::Triangle).unwrap();
        let b = estimate_surface_g(&ds.select(&reversed), &spec, &grid, Method::Triangle).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
        }
    }
}

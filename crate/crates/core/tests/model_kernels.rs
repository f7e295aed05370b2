use chibar::gp::{build_covariance, check_kernel, Kernel};
use chibar::models::{
    self, lrt, FiniteSampleKind, Mix1Kernel, Mix2Kernel, Mix3Kernel, ModelConfig,
};
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

// e^x from its Taylor series with compensated summation.
fn exp_series(x: f64) -> f64 {
    let (mut sum, mut comp, mut term) = (1.0f64, 0.0f64, 1.0f64);
    for k in 1..80 {
        term *= x / k as f64;
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

#[test]
fn mix1_correlation_at_one_and_two() {
    let e = exp_series(1.0);
    let want = (exp_series(2.0) - 1.0) / ((e - 1.0) * (exp_series(4.0) - 1.0)).sqrt();
    let got = Mix1Kernel.rho(&[1.0], &[2.0])[(0, 0)];
    assert!((got - want).abs() < 1e-13, "{got} vs {want}");
    assert!(Mix1Kernel.is_singular(&[0.0]));
}

#[test]
fn mix2_information_against_monte_carlo() {
    let t = [0.5, 1.2];
    let exact = Mix2Kernel::information(&t, &t).unwrap();
    let mut g = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let n = 10_000_000usize;
    let (mut s, mut s2) = (0.0f64, 0.0f64);
    for _ in 0..n {
        let y: f64 = g.sample(StandardNormal);
        let v = Mix2Kernel::score(&t, y).powi(2);
        s += v;
        s2 += v * v;
    }
    let mean = s / n as f64;
    let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
    assert!(
        (mean - exact).abs() < 3.0 * se,
        "{mean} vs {exact} (se {se})"
    );
    let quad = Mix2Kernel::information_quadrature(&t, &t, 60).unwrap();
    assert!((quad - exact).abs() < 1e-8);
    assert_eq!(
        Mix2Kernel::information(&[0.0, 1.0], &[0.0, 1.0]).unwrap(),
        0.0
    );
}

#[test]
fn mix3_second_component_correlation() {
    let e = exp_series(1.0);
    // sigma_{1,-1} = e^{-1} - 1 + 1, sigma_1^2 = sigma_{-1}^2 = e - 2
    let want = (1.0 / e) / (e - 2.0);
    let rho = Mix3Kernel.rho(&[1.0], &[-1.0]);
    assert!((rho[(1, 1)] - want).abs() < 1e-12);
    assert_eq!(rho[(0, 0)], 1.0);
    assert_eq!(rho[(0, 1)], 0.0);
    assert_eq!(rho[(1, 0)], 0.0);
}

#[test]
fn registered_kernels_are_valid_correlations() {
    let cfg = ModelConfig::default();
    for name in models::model_names() {
        let m = models::model(&name, &cfg).unwrap();
        let grid = m.grid(Some(9)).unwrap();
        check_kernel(m.kernel.as_ref(), &grid, 1e-10).unwrap_or_else(|e| panic!("{name}: {e}"));
        for (t, masked) in grid.points().iter().zip(grid.mask()) {
            assert_eq!(*masked, m.kernel.is_singular(t), "{name} at {t:?}");
        }
        let cones = m.cones(&grid).unwrap();
        assert_eq!(cones.len(), grid.unmasked().len());
        assert!(cones.iter().all(|c| c.dim() == m.p));
    }
}

#[test]
fn mix1_grid_covariance_needs_no_jitter() {
    let m = models::mix1(&ModelConfig::default()).unwrap();
    let grid = m.grid(Some(41)).unwrap();
    assert_eq!(grid.unmasked().len(), 40);
    let f = build_covariance(m.kernel.as_ref(), &grid).unwrap();
    assert!(f.jitter() <= 1e-10);
}

#[test]
fn mix1_sample_mean_under_alternative() {
    let n = 50_000;
    let theta = lrt::Theta {
        xi: vec![0.5],
        t: 2.0,
    };
    let y = lrt::generate_data(FiniteSampleKind::Mix1, &theta, n, 3).unwrap();
    let mean = y.iter().sum::<f64>() / n as f64;
    assert!((mean - 1.0).abs() < 4.0 / (n as f64).sqrt());
}

#[test]
fn lrt_is_zero_for_data_at_the_null_mean_only_when_degenerate() {
    let m = models::mix1(&ModelConfig::default()).unwrap();
    let grid = m.grid(None).unwrap();
    let stat = lrt::lrt_statistic(&m, &[0.0; 20], &grid).unwrap();
    assert_eq!(stat.lambda, 0.0);
    let y = lrt::generate_data(
        FiniteSampleKind::Mix1,
        &lrt::Theta {
            xi: vec![0.5],
            t: 1.0,
        },
        2000,
        5,
    )
    .unwrap();
    let stat = lrt::lrt_statistic(&m, &y, &grid).unwrap();
    assert!(stat.lambda > 10.0, "{}", stat.lambda);
}

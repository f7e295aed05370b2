use std::sync::Arc;

use chibar::chibar::{chibar_cdf, weights_closed_form, ChiBarWeights};
use chibar::cone::PolyhedralCone;
use chibar::gp::{
    build_covariance, critical_value, power_curve, simulate_sup, ConstantKernel, GridSpec,
    KernelSpec, Simulator,
};
use chibar::models::{self, ModelConfig};
use chibar::special::chi2_sf;
use chibar::stats::{dkw_epsilon, ks_one_sample};
use nalgebra::Matrix2;

#[test]
fn constant_process_sup_follows_chibar_law() {
    let spec = KernelSpec::null(Arc::new(ConstantKernel { p: 2 }));
    let grid = GridSpec::uniform(0.0, 1.0, 5).unwrap();
    let cone = PolyhedralCone::orthant(2).unwrap();
    let n = 20_000;
    let s = simulate_sup(&spec, &grid, &[cone], n, 9).unwrap();
    let w = ChiBarWeights::new(vec![0.25, 0.5, 0.25]).unwrap();
    let ks = ks_one_sample(&s.draws, |x| chibar_cdf(&w, x));
    assert!(ks <= dkw_epsilon(n, 0.01), "ks {ks}");
}

#[test]
fn chi_square_quantile_from_sup() {
    let spec = KernelSpec::null(Arc::new(ConstantKernel { p: 1 }));
    let grid = GridSpec::uniform(0.0, 0.0, 1).unwrap();
    let cone = PolyhedralCone::whole_space(1).unwrap();
    let s = simulate_sup(&spec, &grid, &[cone], 100_000, 4).unwrap();
    let c = critical_value(&s, 0.05).unwrap();
    assert!((c - 3.8415).abs() < 0.1, "{c}");
}

// P(chi2_p(lambda) > x) as a Poisson mixture of central tails.
fn noncentral_sf(p: usize, lambda: f64, x: f64) -> f64 {
    let mut weight = (-lambda / 2.0).exp();
    let mut total = 0.0;
    for j in 0..200 {
        total += weight * chi2_sf(p + 2 * j, x);
        weight *= lambda / 2.0 / (j + 1) as f64;
    }
    total
}

#[test]
fn unconstrained_power_is_noncentral_chi_square() {
    let spec = KernelSpec::null(Arc::new(ConstantKernel { p: 2 }));
    let grid = GridSpec::uniform(0.0, 0.0, 1).unwrap();
    let cone = PolyhedralCone::whole_space(2).unwrap();
    let v = vec![10f64.sqrt(), 0.0];
    let (crit, pts) = power_curve(&spec, &grid, &[cone], &[0.0], &[v], 0.05, 50_000, 8).unwrap();
    let want = noncentral_sf(2, 10.0, crit);
    assert!(
        (pts[0].power - want).abs() < 4.0 * pts[0].std_error + 1e-3,
        "{} vs {want}",
        pts[0].power
    );
}

#[test]
fn mix1_marginal_is_half_chi_square() {
    let m = models::mix1(&ModelConfig::default()).unwrap();
    let grid = m.grid(Some(41)).unwrap();
    let cones = m.cones(&grid).unwrap();
    let factor = build_covariance(m.kernel.as_ref(), &grid).unwrap();
    let sim = Simulator::new(&factor, None, &cones).unwrap();
    let n = 20_000;
    let profiles = sim.profiles(n, 21);
    let w = weights_closed_form(&cones[7]).unwrap();
    assert_eq!(w.as_slice(), &[0.5, 0.5]);
    let draws: Vec<f64> = profiles.iter().map(|x| x[7]).collect();
    assert!(ks_one_sample(&draws, |x| chibar_cdf(&w, x)) <= dkw_epsilon(n, 0.01));
}

#[test]
fn polar_sup_recovers_bivariate_norm() {
    let m = models::polar_model(Matrix2::identity(), false).unwrap();
    let grid = m
        .grid_on(&[(0.0, 2.0 * std::f64::consts::PI, 512)])
        .unwrap();
    let cones = m.cones(&grid).unwrap();
    let factor = build_covariance(m.kernel.as_ref(), &grid).unwrap();
    assert_eq!(factor.rank(), 2);
    let sim = Simulator::new(&factor, None, &cones).unwrap();
    let (mut e, mut z) = (vec![0.0; factor.rank()], vec![0.0; factor.len()]);
    let mut x = vec![0.0; factor.n_points()];
    for rep in 0..200 {
        sim.draw(5, rep, &mut e, &mut z);
        sim.profile(&z, &mut x);
        let sup = x.iter().copied().fold(0.0, f64::max);
        let norm = e[0] * e[0] + e[1] * e[1];
        assert!(
            (sup - norm).abs() <= 1e-3 * norm.max(1e-12),
            "rep {rep}: {sup} vs {norm}"
        );
    }
}

#[test]
fn composite_decomposition_is_pathwise() {
    let cfg = ModelConfig::default();
    let full = models::mix3(&cfg).unwrap();
    let comp = models::composite_limit_mix3(&cfg).unwrap();
    let grid = full.grid(Some(21)).unwrap();
    let cones = full.cones(&grid).unwrap();
    let factor = build_covariance(full.kernel.as_ref(), &grid).unwrap();
    let sim = Simulator::new(&factor, None, &cones).unwrap();
    let drift = 10.0 * factor.jitter().sqrt() + 1e-12;
    for z in sim.paths(200, 6) {
        for (i, c) in cones.iter().enumerate() {
            let zi = &z[2 * i..2 * i + 2];
            assert!((zi[0] - z[0]).abs() < drift, "{} vs {}", zi[0], z[0]);
            let lhs = c.delta().projected_sq_norm(zi) - zi[0] * zi[0];
            let rhs = comp.decomposition.project_k(zi).norm_squared();
            assert!((lhs - rhs).abs() < 1e-10);
            assert!((rhs - zi[1].max(0.0).powi(2)).abs() < 1e-10);
        }
    }
}

#[test]
fn marginal_covariance_is_identity() {
    let m = models::mix3(&ModelConfig::default()).unwrap();
    let grid = m.grid(Some(11)).unwrap();
    let cones = m.cones(&grid).unwrap();
    let factor = build_covariance(m.kernel.as_ref(), &grid).unwrap();
    let sim = Simulator::new(&factor, None, &cones).unwrap();
    let n = 5000;
    let paths = sim.paths(n, 14);
    for i in 0..factor.n_points() {
        let mut cov = Matrix2::<f64>::zeros();
        for z in &paths {
            let v = nalgebra::Vector2::new(z[2 * i], z[2 * i + 1]);
            cov += v * v.transpose();
        }
        cov /= n as f64;
        let err = (cov - Matrix2::identity()).norm();
        assert!(err <= 5.0 / (n as f64).sqrt() * 2.0, "point {i}: {err}");
    }
}

#[test]
fn sup_dominates_profile_and_nested_grids() {
    let m = models::mix1(&ModelConfig::default()).unwrap();
    let fine = m.grid(Some(81)).unwrap();
    let cones = m.cones(&fine).unwrap();
    let factor = build_covariance(m.kernel.as_ref(), &fine).unwrap();
    let sim = Simulator::new(&factor, None, &cones).unwrap();
    let sups = sim.run(500, 3);
    let profiles = sim.profiles(500, 3);
    // every other fine point is the 41-point grid, so its draw is the same path restricted
    let fine_pts = fine.unmasked_points();
    let coarse: Vec<usize> = (0..fine_pts.len())
        .filter(|&i| {
            let k = ((fine_pts[i][0] + 1.0) * 40.0).round() as i64;
            k % 2 == 0
        })
        .collect();
    assert_eq!(coarse.len(), 40);
    for (sup, x) in sups.iter().zip(&profiles) {
        assert_eq!(*sup, x.iter().copied().fold(0.0, f64::max));
        let coarse_sup = coarse.iter().map(|&i| x[i]).fold(0.0, f64::max);
        assert!(*sup >= coarse_sup);
    }
}

#[test]
fn sample_is_independent_of_thread_count() {
    let m = models::mix3(&ModelConfig::default()).unwrap();
    let grid = m.grid(None).unwrap();
    let cones = m.cones(&grid).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| simulate_sup(&m.kernel_spec(), &grid, &cones, 3000, 17).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}

#[test]
fn power_curve_recovers_level_and_grows() {
    let m = models::mix1(&ModelConfig::default()).unwrap();
    let grid = m.grid(None).unwrap();
    let cones = m.cones(&grid).unwrap();
    let vs: Vec<Vec<f64>> = [0.0, 1.0, 2.0, 3.0, 20.0]
        .iter()
        .map(|&v| vec![v])
        .collect();
    let n = 20_000;
    let (_, pts) = power_curve(&m.kernel_spec(), &grid, &cones, &[0.5], &vs, 0.05, n, 2).unwrap();
    let se0 = (0.05f64 * 0.95 / n as f64).sqrt();
    assert!((pts[0].power - 0.05).abs() <= 3.0 * se0, "{}", pts[0].power);
    for w in pts.windows(2) {
        assert!(w[1].power >= w[0].power - 2.0 * w[1].std_error);
    }
    assert!(pts[4].power > 0.999);
}

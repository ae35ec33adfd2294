mod common;

use common::QuarticPair;
use coopdyn_core::fractal::{
    classify_plane_grid, hyperbolicity_probe, julia_backward_cloud, kernel_julia_probe, sample_lambda, ClassifyConfig,
    KernelProbeConfig,
};
use coopdyn_core::minimal::{find_attracting_minimal_sets, MinimalSearchConfig};
use coopdyn_core::semigroup::{estimate_t_monte_carlo, MonteCarloConfig};
use coopdyn_core::{systems, Complex64, GridGeometry, Label, RngStreams, SpherePoint, Target};
use std::f64::consts::{PI, SQRT_2};

fn z_squared() -> coopdyn_core::DiscreteMeasure {
    systems::quadratic(Complex64::new(0.0, 0.0)).unwrap()
}

#[test]
fn julia_cloud_of_z_squared_is_the_circle() {
    let c = julia_backward_cloud(&z_squared(), 10_000, 100, RngStreams::new(1)).unwrap();
    assert_eq!(c.len(), 10_000);
    for p in &c.points {
        assert!((p.modulus() - 1.0).abs() <= 0.01);
    }
}

#[test]
fn julia_cloud_of_quartic_pair_avoids_the_center() {
    let m = systems::quartic_pair(0.5).unwrap();
    let r = m.system().escape_radius().unwrap();
    let c = julia_backward_cloud(&m, 4096, 100, RngStreams::new(2)).unwrap();
    for p in &c.points {
        let a = p.modulus();
        assert!(a >= 0.4 && a <= r, "{a}");
    }
    let again = julia_backward_cloud(&m, 4096, 100, RngStreams::new(2)).unwrap();
    assert_eq!(c.points, again.points);
}

#[test]
fn basin_labels() {
    let m = systems::quartic_pair(0.5).unwrap();
    let g = GridGeometry::new(Complex64::new(0.0, 0.0), 12.0, 121).unwrap();
    let s = RngStreams::new(4);
    let sets = find_attracting_minimal_sets(&m, &MinimalSearchConfig::for_grid(&g), s.fork(1)).unwrap();
    let zero_idx = sets.iter().position(|l| !l.is_infinity()).unwrap();
    let b = classify_plane_grid(&m, &sets, &g, &ClassifyConfig::default(), s).unwrap();
    assert_eq!(b.label_near(Complex64::new(10.0, 0.0)), Label::Escaping);
    assert_eq!(b.label_near(Complex64::new(0.0, 0.0)), Label::Basin(zero_idx as u16));

    let mut last = f64::INFINITY;
    for depth in [4, 8, 16, 32] {
        let cfg = ClassifyConfig { depth, n_words: 8 };
        let f = classify_plane_grid(&m, &sets, &g, &cfg, s)
            .unwrap()
            .undecided_fraction();
        assert!(f <= last, "depth {depth}: {f} > {last}");
        last = f;
    }
}

#[test]
fn kernel_probe_examples() {
    let d = QuarticPair::new(256);
    let julia = julia_backward_cloud(&d.measure, 4096, 100, RngStreams::new(10)).unwrap();
    let rep = kernel_julia_probe(
        &d.measure,
        &julia.points,
        &d.basins,
        &KernelProbeConfig::default(),
        RngStreams::new(3),
    )
    .unwrap();
    assert_eq!(rep.fraction, 1.0);
    assert!(rep.max_depth <= 20);
    assert!(rep.consistent_with_empty_kernel);

    let m = z_squared();
    let g = GridGeometry::new(Complex64::new(0.0, 0.0), 2.0, 128).unwrap();
    let sets = find_attracting_minimal_sets(&m, &MinimalSearchConfig::for_grid(&g), RngStreams::new(1)).unwrap();
    let b = classify_plane_grid(&m, &sets, &g, &ClassifyConfig::default(), RngStreams::new(2)).unwrap();
    let rep = kernel_julia_probe(
        &m,
        &[SpherePoint::real(1.0)],
        &b,
        &KernelProbeConfig::default(),
        RngStreams::new(3),
    )
    .unwrap();
    assert_eq!(rep.fraction, 0.0);

    assert!(kernel_julia_probe(&m, &[], &b, &KernelProbeConfig::default(), RngStreams::new(3)).is_err());
}

#[test]
fn hyperbolicity_examples() {
    let d = systems::quartic_pair(0.5).unwrap();
    let j = julia_backward_cloud(&d, 4096, 100, RngStreams::new(5)).unwrap();
    assert!(
        hyperbolicity_probe(&d, &j, 40, 64, RngStreams::new(6))
            .unwrap()
            .hyperbolic_consistent
    );

    // chordal distance from {0, ∞} to the unit circle
    let m = z_squared();
    let j = julia_backward_cloud(&m, 4096, 100, RngStreams::new(5)).unwrap();
    let rep = hyperbolicity_probe(&m, &j, 40, 8, RngStreams::new(6)).unwrap();
    assert!((rep.min_distance - SQRT_2).abs() < 1e-6, "{}", rep.min_distance);
    assert!(rep.hyperbolic_consistent);

    let cheb = systems::quadratic(Complex64::new(-2.0, 0.0)).unwrap();
    let j = julia_backward_cloud(&cheb, 4096, 100, RngStreams::new(5)).unwrap();
    assert!(
        !hyperbolicity_probe(&cheb, &j, 40, 8, RngStreams::new(6))
            .unwrap()
            .hyperbolic_consistent
    );
}

#[test]
fn lambda_samples() {
    let m = systems::quartic_pair(0.5).unwrap();
    let g = GridGeometry::new(Complex64::new(0.0, 0.0), 4.0, 256).unwrap();
    let julia = julia_backward_cloud(&m, 100_000, 100, RngStreams::new(8)).unwrap();
    let idx = julia.index(g.cell_diagonal());
    let lam = sample_lambda(&m, 2000, 100, RngStreams::new(9)).unwrap();
    for p in &lam.points {
        assert!(idx.any_within(*p, 2.0 * g.cell_diagonal()), "{p:?}");
    }
    let again = sample_lambda(&m, 2000, 100, RngStreams::new(9)).unwrap();
    assert_eq!(lam.points, again.points);

    let n = 16_000;
    let circle = sample_lambda(&z_squared(), n, 100, RngStreams::new(11)).unwrap();
    let mut bins = [0usize; 16];
    for p in &circle.points {
        let z = p.finite().unwrap();
        let a = z.im.atan2(z.re).rem_euclid(2.0 * PI);
        bins[((a / (2.0 * PI) * 16.0) as usize).min(15)] += 1;
    }
    let expect = n as f64 / 16.0;
    let sigma = (expect * 15.0 / 16.0).sqrt();
    for b in bins {
        assert!((b as f64 - expect).abs() <= 4.0 * sigma, "{bins:?}");
    }
}

#[test]
fn t_strictly_between_on_the_julia_cloud() {
    let m = systems::quartic_pair(0.5).unwrap();
    let julia = julia_backward_cloud(&m, 64, 100, RngStreams::new(12)).unwrap();
    let zero = coopdyn_core::PointCloud::new(vec![SpherePoint::ZERO], coopdyn_core::Provenance::MinimalSet).unwrap();
    let cfg = MonteCarloConfig {
        n_samples: 2000,
        n_steps: 200,
        capture_dist: 1e-3,
    };
    for (k, p) in julia.points.iter().take(8).enumerate() {
        let est = estimate_t_monte_carlo(
            &m,
            Target::Infinity,
            &[Target::Cloud(&zero)],
            *p,
            &cfg,
            RngStreams::new(k as u64),
        )
        .unwrap();
        assert!(est.estimate > 0.0 && est.estimate < 1.0, "{p:?}: {}", est.estimate);
    }
}

use greenlab_core::geometry::uniform_sample;
use greenlab_core::kernels::pair_energy;
use greenlab_core::optimize::{energy_gradient, min_separation, minimize};
use greenlab_core::{KernelKind, KernelSpec, Manifold, OptimizerParams, PointConfiguration};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Moves every point by h·v_i and maps back onto the manifold.
fn perturb(c: &PointConfiguration, v: &[f64], h: f64) -> PointConfiguration {
    let coords: Vec<f64> = c.coords().iter().zip(v).map(|(x, d)| x + h * d).collect();
    if c.manifold().is_sphere() {
        PointConfiguration::from_flat_normalizing(*c.manifold(), coords).unwrap()
    } else {
        PointConfiguration::from_flat(*c.manifold(), coords).unwrap()
    }
}

fn tangent_field(c: &PointConfiguration, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = c.manifold().ambient_dim();
    let mut v: Vec<f64> = (0..c.coords().len())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    if c.manifold().is_sphere() {
        for (x, w) in c.points().zip(v.chunks_exact_mut(s)) {
            let d = dot(x, w);
            w.iter_mut().zip(x).for_each(|(a, b)| *a -= d * b);
        }
    }
    v
}

fn random_rotation(s: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    while rows.len() < s {
        let mut v: Vec<f64> = (0..s).map(|_| StandardNormal.sample(&mut rng)).collect();
        for r in &rows {
            let d = dot(&v, r);
            v.iter_mut().zip(r).for_each(|(a, b)| *a -= d * b);
        }
        let norm = dot(&v, &v).sqrt();
        rows.push(v.iter().map(|a| a / norm).collect());
    }
    rows
}

fn rotate(c: &PointConfiguration, rot: &[Vec<f64>]) -> PointConfiguration {
    let coords = c
        .points()
        .flat_map(|p| rot.iter().map(move |r| dot(r, p)))
        .collect();
    PointConfiguration::from_flat_normalizing(*c.manifold(), coords).unwrap()
}

#[test]
fn gradients_match_central_differences() {
    let cases = [
        (Manifold::torus(1), KernelSpec::green_torus(1)),
        (Manifold::torus(2), KernelSpec::green_torus(2)),
        (Manifold::torus(3), KernelSpec::green_torus(3)),
        (
            Manifold::sphere(2),
            KernelSpec::new(KernelKind::GreenSphere2 { truncation: 60 }),
        ),
        (Manifold::sphere(2), KernelSpec::new(KernelKind::LogSphere2)),
        (
            Manifold::sphere(3),
            KernelSpec::new(KernelKind::CoulombSphere { dim: 3 }),
        ),
        (
            Manifold::sphere(4),
            KernelSpec::mean_zero(KernelKind::CoulombSphere { dim: 4 }),
        ),
        (
            Manifold::sphere(2),
            KernelSpec::new(KernelKind::Riesz { exponent: 1.0 }),
        ),
        (
            Manifold::sphere(3),
            KernelSpec::mean_zero(KernelKind::Riesz { exponent: 0.5 }),
        ),
    ];
    let h = 1e-4;
    for (manifold, spec) in cases {
        for seed in 0..3 {
            let c = uniform_sample(manifold, 12, seed);
            let grad = energy_gradient(&c, &spec).unwrap();
            let v = tangent_field(&c, 100 + seed);
            let analytic = dot(&grad, &v);
            let e = |s: f64| pair_energy(&perturb(&c, &v, s * h), &spec).unwrap().total;
            // Five-point stencil, truncation error O(h⁴).
            let fd = (8.0 * (e(1.0) - e(-1.0)) - (e(2.0) - e(-2.0))) / (12.0 * h);
            let rel = (analytic - fd).abs() / analytic.abs();
            assert!(
                rel < 1e-6,
                "{manifold} {spec:?}: {analytic} vs {fd} ({rel:e})"
            );
        }
    }
}

#[test]
fn two_log_charges_on_s2_end_antipodal() {
    let c = uniform_sample(Manifold::sphere(2), 2, 3);
    let params = OptimizerParams {
        restarts: 1,
        ..Default::default()
    };
    let r = minimize(&c, &KernelSpec::new(KernelKind::LogSphere2), &params).unwrap();
    let inner = dot(r.config.point(0), r.config.point(1));
    assert!((inner + 1.0).abs() < 1e-8, "{inner}");
}

#[test]
fn four_riesz_charges_form_a_tetrahedron() {
    let c = uniform_sample(Manifold::sphere(2), 4, 11);
    let params = OptimizerParams {
        restarts: 1,
        max_iters: 5000,
        ..Default::default()
    };
    let r = minimize(
        &c,
        &KernelSpec::new(KernelKind::Riesz { exponent: 1.0 }),
        &params,
    )
    .unwrap();
    for i in 0..4 {
        for j in 0..i {
            let inner = dot(r.config.point(i), r.config.point(j));
            assert!((inner + 1.0 / 3.0).abs() < 1e-4, "{i},{j}: {inner}");
        }
    }
}

#[test]
fn antipodal_pair_on_s3_is_stationary() {
    let c = PointConfiguration::from_flat(
        Manifold::sphere(3),
        vec![0.6, 0.0, 0.8, 0.0, -0.6, 0.0, -0.8, 0.0],
    )
    .unwrap();
    let grad = energy_gradient(
        &c,
        &KernelSpec::mean_zero(KernelKind::CoulombSphere { dim: 3 }),
    )
    .unwrap();
    assert!(grad.iter().all(|g| g.abs() < 1e-14), "{grad:?}");
}

#[test]
fn energy_history_strictly_decreases() {
    let c = uniform_sample(Manifold::sphere(2), 20, 4);
    let params = OptimizerParams {
        restarts: 1,
        max_iters: 200,
        ..Default::default()
    };
    let r = minimize(&c, &KernelSpec::new(KernelKind::LogSphere2), &params).unwrap();
    assert!(r.energy_history.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn minimizer_separation_scales_like_spacing() {
    let spec = KernelSpec::green_torus(3);
    let params = OptimizerParams {
        restarts: 1,
        max_iters: 300,
        grad_tol: 1e-6,
        ..Default::default()
    };
    let scaled: Vec<f64> = [27usize, 64, 125]
        .iter()
        .map(|&n| {
            let c = uniform_sample(Manifold::torus(3), n, n as u64);
            let r = minimize(&c, &spec, &params)
                .or_else(|e| e.into_stalled())
                .unwrap();
            min_separation(&r.config).unwrap() * (n as f64).cbrt()
        })
        .collect();
    let hi = scaled.iter().cloned().fold(0.0, f64::max);
    let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(hi / lo <= 2.0, "{scaled:?}");
}

#[test]
fn descent_commutes_with_rotations() {
    let spec = KernelSpec::new(KernelKind::Riesz { exponent: 1.0 });
    let params = OptimizerParams {
        restarts: 1,
        max_iters: 40,
        ..Default::default()
    };
    let c = uniform_sample(Manifold::sphere(2), 10, 6);
    let rot = random_rotation(3, 9);
    let a = minimize(&c, &spec, &params).unwrap();
    let b = minimize(&rotate(&c, &rot), &spec, &params).unwrap();
    assert_eq!(a.iterations_used, b.iterations_used);
    let ra = rotate(&a.config, &rot);
    for (x, y) in ra.coords().iter().zip(b.config.coords()) {
        assert!((x - y).abs() < 1e-10, "{x} vs {y}");
    }
}

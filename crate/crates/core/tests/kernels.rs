use std::f64::consts::PI;

use greenlab_core::geometry::{grid_torus, uniform_sample};
use greenlab_core::kernels::{cd_constant, green_sphere2, green_torus_spectral, pair_energy};
use greenlab_core::special::sphere_zonal_mean;
use greenlab_core::{KernelKind, KernelSpec, Manifold, PointConfiguration};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn gaussian_unit(rng: &mut ChaCha8Rng, s: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..s).map(|_| StandardNormal.sample(rng)).collect();
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.iter().map(|a| a / norm).collect()
}

/// Orthonormal rows by Gram–Schmidt on Gaussian vectors.
fn random_rotation(s: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    while rows.len() < s {
        let mut v: Vec<f64> = (0..s).map(|_| StandardNormal.sample(&mut rng)).collect();
        for r in &rows {
            let d: f64 = v.iter().zip(r).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(r).for_each(|(a, b)| *a -= d * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        rows.push(v.iter().map(|a| a / norm).collect());
    }
    rows
}

fn apply(rot: &[Vec<f64>], p: &[f64]) -> Vec<f64> {
    rot.iter()
        .map(|r| r.iter().zip(p).map(|(a, b)| a * b).sum())
        .collect()
}

#[test]
fn torus_green_at_the_half_period() {
    let g = green_torus_spectral(&[0.5, 0.5], None, None).unwrap();
    // Square partial sums of the Fourier series, |k|_∞ ≤ 400.
    let k = 400i64;
    let mut direct = 0.0;
    for a in -k..=k {
        for b in -k..=k {
            if a == 0 && b == 0 {
                continue;
            }
            let sign = if (a + b) % 2 == 0 { 1.0 } else { -1.0 };
            direct += sign / (4.0 * PI * PI * (a * a + b * b) as f64);
        }
    }
    assert!((g - direct).abs() < 1e-6, "{g} vs {direct}");
    // Lattice-sum closed form −ln 2/(4π).
    assert!((g + 2f64.ln() / (4.0 * PI)).abs() < 1e-9);
}

#[test]
fn torus_green_is_even() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for d in 2..=3 {
        for _ in 0..20 {
            let z: Vec<f64> = (0..d).map(|_| rand::Rng::gen::<f64>(&mut rng)).collect();
            let mz: Vec<f64> = z.iter().map(|x| -x).collect();
            let (a, b) = (
                green_torus_spectral(&z, None, None).unwrap(),
                green_torus_spectral(&mz, None, None).unwrap(),
            );
            assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
        }
    }
}

#[test]
fn torus_green_has_vanishing_grid_mean() {
    let grid = grid_torus(64, 2).unwrap();
    let mean: f64 = grid
        .points()
        .map(|p| green_torus_spectral(p, None, None).unwrap())
        .sum::<f64>()
        / grid.len() as f64;
    assert!(mean.abs() < 1e-4, "{mean}");
}

#[test]
fn sphere_green_has_zero_mean() {
    let x = [0.0, 0.0, 1.0];
    let mean = sphere_zonal_mean(
        2,
        |t, _| {
            let s = (1.0 - t * t).max(0.0).sqrt();
            // Offset by one so the relative stopping rule is meaningful.
            1.0 + green_sphere2(&x, &[s, 0.0, t], 50).unwrap_or(0.0)
        },
        1e-12,
    )
    .unwrap()
        - 1.0;
    assert!(mean.abs() < 1e-10, "{mean}");
}

#[test]
fn sphere_green_is_rotation_invariant() {
    let rot = random_rotation(3, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let (x, y) = (gaussian_unit(&mut rng, 3), gaussian_unit(&mut rng, 3));
        let (rx, ry) = (apply(&rot, &x), apply(&rot, &y));
        let norm = |v: Vec<f64>| {
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            v.into_iter().map(|a| a / n).collect::<Vec<_>>()
        };
        let a = green_sphere2(&x, &y, 200).unwrap();
        let b = green_sphere2(&norm(rx), &norm(ry), 200).unwrap();
        assert!((a - b).abs() < 1e-11, "{a} vs {b}");
    }
}

#[test]
fn sphere_green_converges_at_the_antipode() {
    let (x, y) = ([0.0, 0.0, 1.0], [0.0, 0.0, -1.0]);
    let exact = -1.0 / (4.0 * PI);
    for l in [500usize, 2000, 4000] {
        let g = green_sphere2(&x, &y, l).unwrap();
        // Alternating series: the error is below the first omitted term.
        let lf = (l + 1) as f64;
        let next = (2.0 * lf + 1.0) / (4.0 * PI * lf * (lf + 1.0));
        assert!((g - exact).abs() <= next, "L={l}: {g}");
    }
}

#[test]
fn coulomb_mean_on_s3_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let samples = 1_000_000;
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..samples {
        let (x, y) = (gaussian_unit(&mut rng, 4), gaussian_unit(&mut rng, 4));
        let r = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        s1 += 1.0 / r;
        s2 += 1.0 / (r * r);
    }
    let n = samples as f64;
    let mean = s1 / n;
    let se = ((s2 / n - mean * mean) / n).sqrt();
    let c3 = cd_constant(3).unwrap();
    assert!((mean - c3).abs() < 3.0 * se, "{mean} ± {se} vs {c3}");
}

#[test]
fn renormalized_coulomb_energy_of_random_points_averages_to_zero() {
    let spec = KernelSpec::mean_zero(KernelKind::CoulombSphere { dim: 3 });
    let values: Vec<f64> = (0..20)
        .map(|seed| {
            pair_energy(
                &uniform_sample(Manifold::sphere(3), 2000, 500 + seed),
                &spec,
            )
            .unwrap()
            .normalized
        })
        .collect();
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
    let se = (var / k).sqrt();
    assert!(mean.abs() < 3.0 * se, "{mean} ± {se}");
}

#[test]
fn pair_energy_is_invariant_under_symmetries() {
    let specs = [
        (Manifold::torus(1), KernelSpec::green_torus(1)),
        (Manifold::torus(2), KernelSpec::green_torus(2)),
        (Manifold::torus(3), KernelSpec::green_torus(3)),
        (
            Manifold::sphere(2),
            KernelSpec::new(KernelKind::GreenSphere2 { truncation: 100 }),
        ),
        (Manifold::sphere(2), KernelSpec::new(KernelKind::LogSphere2)),
        (
            Manifold::sphere(3),
            KernelSpec::mean_zero(KernelKind::CoulombSphere { dim: 3 }),
        ),
        (
            Manifold::sphere(2),
            KernelSpec::new(KernelKind::Riesz { exponent: 1.5 }),
        ),
    ];
    for (manifold, spec) in specs {
        let c = uniform_sample(manifold, 30, 8);
        let e = pair_energy(&c, &spec).unwrap().total;
        let tol = 1e-10 * e.abs().max(1.0);

        let reversed: Vec<Vec<f64>> = c.points().rev().map(|p| p.to_vec()).collect();
        let r = pair_energy(
            &PointConfiguration::from_points(manifold, &reversed).unwrap(),
            &spec,
        )
        .unwrap();
        assert!((r.total - e).abs() < tol, "{manifold} reorder");

        let moved: Vec<Vec<f64>> = if manifold.is_torus() {
            c.points()
                .map(|p| {
                    p.iter()
                        .enumerate()
                        .map(|(i, x)| x + 0.137 * (i + 1) as f64)
                        .collect()
                })
                .collect()
        } else {
            let rot = random_rotation(manifold.ambient_dim(), 1);
            c.points().map(|p| apply(&rot, p)).collect()
        };
        let flat: Vec<f64> = moved.concat();
        let moved = if manifold.is_torus() {
            PointConfiguration::from_flat(manifold, flat).unwrap()
        } else {
            PointConfiguration::from_flat_normalizing(manifold, flat).unwrap()
        };
        let m = pair_energy(&moved, &spec).unwrap();
        assert!(
            (m.total - e).abs() < tol,
            "{manifold} {spec:?}: {} vs {e}",
            m.total
        );
    }
}

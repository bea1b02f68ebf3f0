use greenlab_core::geometry::{lowdisc_sequence, uniform_sample, LowDiscrepancy};
use greenlab_core::spectral::heat_density_torus;
use greenlab_core::transport::{
    star_discrepancy_t1, w2_empirical_pair, w2_semidiscrete, w_p_circle_exact, wp_semidiscrete,
    DiscreteMeasure, SinkhornParams, Solver,
};
use greenlab_core::{fit::loglog_fit, Manifold, PointConfiguration};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn circle(xs: Vec<f64>) -> PointConfiguration {
    PointConfiguration::from_flat(Manifold::torus(1), xs).unwrap()
}

fn sorted(c: &PointConfiguration) -> Vec<f64> {
    let mut xs = c.coords().to_vec();
    xs.sort_by(f64::total_cmp);
    xs
}

/// Quantile formulation on the line: W₂² = min_θ ∫₀¹ (X(t) − t − θ)² dt with
/// X the quantile function, i.e. the variance of X(t) − t.
fn quantile_w2(c: &PointConfiguration) -> f64 {
    let xs = sorted(c);
    let n = xs.len() as f64;
    let (mut m1, mut m2) = (0.0, 0.0);
    for (i, x) in xs.iter().enumerate() {
        let (a, b) = (i as f64 / n, (i + 1) as f64 / n);
        m1 += x * (b - a) - (b * b - a * a) / 2.0;
        m2 += ((b - x).powi(3) - (a - x).powi(3)) / 3.0;
    }
    (m2 - m1 * m1).sqrt()
}

/// W₁ = min_θ ∫₀¹ |X(t) − t − θ| dt, minimized by ternary search.
fn quantile_w1(c: &PointConfiguration) -> f64 {
    let xs = sorted(c);
    let n = xs.len() as f64;
    // ∫_a^b |c − t| dt
    let abs_int = |c: f64, a: f64, b: f64| {
        let f = |t: f64| {
            if t <= c {
                c * t - t * t / 2.0
            } else {
                c * c - c * t + t * t / 2.0
            }
        };
        f(b) - f(a)
    };
    let cost = |theta: f64| -> f64 {
        xs.iter()
            .enumerate()
            .map(|(i, x)| abs_int(x - theta, i as f64 / n, (i + 1) as f64 / n))
            .sum()
    };
    let (mut lo, mut hi) = (-2.0, 2.0);
    for _ in 0..300 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if cost(m1) < cost(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    cost(0.5 * (lo + hi))
}

/// Sup over closed and open arcs with endpoints at the points.
fn brute_discrepancy(c: &PointConfiguration) -> f64 {
    let xs = c.coords();
    let n = xs.len();
    let mut best = 0.0f64;
    for &a in xs {
        for &b in xs {
            let len = (b - a).rem_euclid(1.0);
            let inside_closed = xs
                .iter()
                .filter(|&&x| (x - a).rem_euclid(1.0) <= len)
                .count();
            // The open arc from a to b; for a = b, the circle minus that point.
            let open_len = if len == 0.0 { 1.0 } else { len };
            let inside_open = xs
                .iter()
                .filter(|&&x| {
                    let o = (x - a).rem_euclid(1.0);
                    o > 0.0 && o < open_len
                })
                .count();
            best = best.max(inside_closed as f64 / n as f64 - len);
            best = best.max(open_len - inside_open as f64 / n as f64);
        }
    }
    best
}

#[test]
fn circle_exact_matches_quantile_formulas() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..40 {
        let n = 1 + trial % 13;
        let xs: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let c = circle(xs);
        let w2 = w_p_circle_exact(&c, 2).unwrap().value;
        let w1 = w_p_circle_exact(&c, 1).unwrap().value;
        assert!(
            (w2 - quantile_w2(&c)).abs() < 1e-12,
            "n={n}: {w2} vs {}",
            quantile_w2(&c)
        );
        assert!(
            (w1 - quantile_w1(&c)).abs() < 1e-12,
            "n={n}: {w1} vs {}",
            quantile_w1(&c)
        );
    }
}

#[test]
fn discrepancy_matches_endpoint_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..60 {
        let n = 1 + trial % 20;
        let xs: Vec<f64> = (0..n)
            .map(|_| (rng.gen::<f64>() * 40.0).floor() / 40.0)
            .collect();
        let c = circle(xs);
        let d = star_discrepancy_t1(&c).unwrap();
        assert!(
            (d - brute_discrepancy(&c)).abs() < 1e-12,
            "{:?}: {d} vs {}",
            c.coords(),
            brute_discrepancy(&c)
        );
        assert!(d >= 1.0 / n as f64 - 1e-15 && d <= 1.0);
    }
}

#[test]
fn w1_below_discrepancy_and_w2() {
    for seed in 0..100 {
        let c = uniform_sample(Manifold::torus(1), 1 + (seed as usize * 7) % 50, seed);
        let w1 = w_p_circle_exact(&c, 1).unwrap().value;
        let w2 = w_p_circle_exact(&c, 2).unwrap().value;
        assert!(w1 <= star_discrepancy_t1(&c).unwrap() + 1e-12);
        assert!(w1 <= w2 + 1e-12);
    }
}

proptest! {
    #[test]
    fn circle_exact_is_rotation_invariant(xs in prop::collection::vec(0.0f64..1.0, 1..20), shift in 0.0f64..1.0) {
        let a = w_p_circle_exact(&circle(xs.clone()), 2).unwrap().value;
        let b = w_p_circle_exact(&circle(xs.iter().map(|x| x + shift).collect()), 2).unwrap().value;
        prop_assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn network_flow_on_the_circle_agrees_with_exact() {
    let grid = greenlab_core::geometry::grid_torus(8, 1).unwrap();
    let nf = w2_semidiscrete(&grid, 512, &Solver::NetworkFlow).unwrap();
    let exact = w_p_circle_exact(&grid, 2).unwrap().value;
    assert_eq!(nf.m, Some(512));
    assert!(
        (nf.value - exact).abs() <= nf.error_bound,
        "{nf:?} vs {exact}"
    );
    for seed in 0..50 {
        let c = uniform_sample(Manifold::torus(1), 10, 100 + seed);
        let nf = w2_semidiscrete(&c, 500, &Solver::NetworkFlow).unwrap();
        let exact = w_p_circle_exact(&c, 2).unwrap().value;
        assert!(
            (nf.value - exact).abs() <= nf.error_bound,
            "seed {seed}: {nf:?} vs {exact}"
        );
    }
}

#[test]
fn solvers_bracket_each_other() {
    let cases = [
        (uniform_sample(Manifold::torus(1), 10, 1), 200),
        (uniform_sample(Manifold::torus(2), 16, 2), 256),
        (uniform_sample(Manifold::sphere(2), 12, 3), 144),
    ];
    for (c, m) in cases {
        let nf = w2_semidiscrete(&c, m, &Solver::NetworkFlow).unwrap();
        // Six halvings: the eighth costs ~10⁵ iterations on T² without moving the value.
        let params = SinkhornParams {
            halvings: 6,
            ..Default::default()
        };
        let sk = wp_semidiscrete(&c, m, 2, &Solver::Sinkhorn(params)).unwrap();
        let sk = sk.estimate;
        assert_eq!(nf.m, sk.m);
        assert!(
            (nf.value - sk.value).abs() <= nf.error_bound + sk.error_bound,
            "{}: {nf:?} vs {sk:?}",
            c.manifold()
        );
        // The discrete optimum itself lies inside the entropic bracket.
        let radius = nf.error_bound;
        let solver_gap = sk.error_bound - radius;
        assert!(
            (nf.value - sk.value).abs() <= solver_gap + 1e-9,
            "{nf:?} vs {sk:?}"
        );
        assert!(sk.epsilon.unwrap() > 0.0 && sk.iterations.unwrap() > 0);
    }
}

#[test]
fn entropic_values_decrease_towards_the_optimum() {
    let c = uniform_sample(Manifold::torus(2), 12, 8);
    let m = 144;
    let nf = w2_semidiscrete(&c, m, &Solver::NetworkFlow).unwrap();
    let mut previous = f64::INFINITY;
    let mut last = None;
    for k in 0..8 {
        let params = SinkhornParams {
            epsilon0: Some(0.05 / 2f64.powi(k)),
            halvings: 0,
            ..Default::default()
        };
        let sk = w2_semidiscrete(&c, m, &Solver::Sinkhorn(params)).unwrap();
        assert!(
            sk.value <= previous + 1e-6,
            "k={k}: {} after {previous}",
            sk.value
        );
        assert!(sk.value >= nf.value - 1e-9);
        previous = sk.value;
        last = Some(sk);
    }
    let last = last.unwrap();
    assert!((last.value - nf.value).abs() <= last.error_bound + nf.error_bound);
}

#[test]
fn debiased_value_stays_in_the_bracket() {
    let c = uniform_sample(Manifold::sphere(2), 8, 4);
    let params = SinkhornParams {
        debias: true,
        ..Default::default()
    };
    let sk = w2_semidiscrete(&c, 89, &Solver::Sinkhorn(params)).unwrap();
    let nf = w2_semidiscrete(&c, 89, &Solver::NetworkFlow).unwrap();
    assert!((nf.value - sk.value).abs() <= nf.error_bound + sk.error_bound);
}

#[test]
fn point_mass_against_heat_density_scales_like_sqrt_t() {
    let grid: Vec<f64> = (0..1024).map(|j| j as f64 / 1024.0).collect();
    let nodes = circle(grid.clone());
    let delta = circle(vec![0.0]);
    let times = [1e-4, 4e-4, 1.6e-3];
    let mut values = Vec::new();
    for &t in &times {
        let dens: Vec<f64> = grid
            .iter()
            .map(|x| heat_density_torus(&[*x], &[0.0], t).unwrap())
            .collect();
        let total: f64 = dens.iter().sum();
        let weights: Vec<f64> = dens.iter().map(|w| w / total).collect();
        // One source point: every coupling is the product coupling.
        let direct: f64 = grid
            .iter()
            .zip(&weights)
            .map(|(x, w)| {
                let d = x.min(1.0 - x);
                w * d * d
            })
            .sum::<f64>()
            .sqrt();
        let w = w2_empirical_pair(
            &delta,
            &DiscreteMeasure::new(nodes.clone(), weights).unwrap(),
        )
        .unwrap();
        assert!(
            (w.value - direct).abs() < 1e-9 * direct,
            "{} vs {direct}",
            w.value
        );
        values.push(w.value);
    }
    let fit = loglog_fit(&times, &values).unwrap();
    assert!((fit.slope - 0.5).abs() < 0.05, "slope {}", fit.slope);
}

#[test]
fn triangle_inequality_on_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let manifold = Manifold::sphere(2);
    for seed in 0..20 {
        let mu = uniform_sample(manifold, 6, 3 * seed);
        let weighted = |k: u64, rng: &mut ChaCha8Rng| {
            let pts = uniform_sample(manifold, 7, 3 * seed + k);
            let raw: Vec<f64> = (0..7).map(|_| rng.gen::<f64>() + 0.1).collect();
            let s: f64 = raw.iter().sum();
            let mut w: Vec<f64> = raw.iter().map(|x| x / s).collect();
            let fix = 1.0 - w.iter().sum::<f64>();
            w[0] += fix;
            DiscreteMeasure::new(pts, w).unwrap()
        };
        let rho = weighted(1, &mut rng);
        let nu_pts = uniform_sample(manifold, 6, 3 * seed + 2);
        let nu = DiscreteMeasure::uniform(nu_pts.clone()).unwrap();
        let mu_nu = w2_empirical_pair(&mu, &nu).unwrap();
        let mu_rho = w2_empirical_pair(&mu, &rho).unwrap();
        let nu_rho = w2_empirical_pair(&nu_pts, &rho).unwrap();
        assert!(mu_nu.value <= mu_rho.value + nu_rho.value + 1e-9);
    }
}

#[test]
fn low_discrepancy_sets_are_closer_to_uniform() {
    let kron = lowdisc_sequence(
        LowDiscrepancy::Kronecker {
            alpha: (5f64.sqrt() - 1.0) / 2.0,
        },
        64,
    )
    .unwrap();
    let random = uniform_sample(Manifold::torus(1), 64, 9);
    assert!(
        w_p_circle_exact(&kron, 2).unwrap().value < w_p_circle_exact(&random, 2).unwrap().value
    );
}

#[test]
fn semidiscrete_w1_below_w2() {
    for (manifold, m) in [
        (Manifold::torus(2), 400),
        (Manifold::sphere(2), 377),
        (Manifold::sphere(3), 512),
    ] {
        let c = uniform_sample(manifold, 20, 6);
        let w1 = wp_semidiscrete(&c, m, 1, &Solver::NetworkFlow)
            .unwrap()
            .estimate;
        let w2 = wp_semidiscrete(&c, m, 2, &Solver::NetworkFlow)
            .unwrap()
            .estimate;
        assert!(w1.value <= w2.value + 1e-12, "{manifold}: {w1:?} {w2:?}");
    }
}

//! Special functions and quadrature shared by the kernels and spectral code.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Surface area |S^d| of the unit sphere in R^{d+1}.
///
/// Uses |S^0| = 2, |S^1| = 2π and |S^d| = 2π/(d-1) |S^{d-2}|.
pub fn sphere_area(d: usize) -> f64 {
    let mut area = if d.is_multiple_of(2) { 2.0 } else { 2.0 * PI };
    let mut k = if d.is_multiple_of(2) { 2 } else { 3 };
    while k <= d {
        area *= 2.0 * PI / (k - 1) as f64;
        k += 2;
    }
    area
}

/// Dimension of the space of degree-`l` spherical harmonics on S^d.
pub fn harmonic_dimension(l: usize, d: usize) -> f64 {
    if l == 0 {
        return 1.0;
    }
    if d == 1 {
        return 2.0;
    }
    // (2l + d - 1)/l * binom(l + d - 2, l - 1)
    let mut binom = 1.0;
    for i in 1..=(l - 1) {
        binom *= (d - 1 + i) as f64 / i as f64;
    }
    (2 * l + d - 1) as f64 / l as f64 * binom
}

/// Eigenvalue l(l + d - 1) of -Δ on degree-`l` harmonics of S^d.
pub fn sphere_eigenvalue(l: usize, d: usize) -> f64 {
    (l * (l + d - 1)) as f64
}

/// Fills `out[l]` with the Gegenbauer polynomial of index (d-1)/2 and
/// degree `l`, normalized so every entry equals 1 at `t = 1`.
///
/// For d = 2 these are the Legendre polynomials, for d = 1 the Chebyshev
/// polynomials cos(lθ).
pub fn normalized_gegenbauer(d: usize, t: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() == 1 {
        return;
    }
    out[1] = t;
    let two_alpha = (d as f64) - 1.0;
    for l in 1..out.len() - 1 {
        let lf = l as f64;
        let denom = lf + two_alpha;
        out[l + 1] = (2.0 * lf + two_alpha) / denom * t * out[l] - lf / denom * out[l - 1];
    }
}

/// Exponential integral E1(x) for x > 0.
pub fn exp_integral_e1(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x <= 1.0 {
        let mut sum = -EULER_GAMMA - x.ln();
        let mut fact = 1.0;
        for i in 1..200 {
            fact *= -x / i as f64;
            let del = -fact / i as f64;
            sum += del;
            if del.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        sum
    } else {
        // Modified Lentz evaluation of the continued fraction.
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..400 {
            let a = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Upper incomplete gamma Γ(s, a) for half-integer s = `twice_s`/2 ≥ -1/2.
pub fn upper_gamma_half_integer(twice_s: i32, a: f64) -> f64 {
    assert!(twice_s >= -1, "order below -1/2 not supported");
    let ea = (-a).exp();
    let (mut s2, mut value) = if twice_s % 2 == 0 {
        (0, exp_integral_e1(a))
    } else {
        let half = PI.sqrt() * libm::erfc(a.sqrt());
        if twice_s == -1 {
            return 2.0 * ea / a.sqrt() - 2.0 * half;
        }
        (1, half)
    };
    // Γ(s + 1, a) = s Γ(s, a) + a^s e^{-a}
    while s2 < twice_s {
        let s = s2 as f64 / 2.0;
        value = s * value + a.powf(s) * ea;
        s2 += 2;
    }
    value
}

/// Σ_{k∈Z} e^{-b k²} for b > 0, summed directly.
pub fn theta_sum(b: f64) -> f64 {
    debug_assert!(b > 0.0);
    let mut sum = 1.0;
    let mut k = 1.0f64;
    loop {
        let term = (-b * k * k).exp();
        sum += 2.0 * term;
        if term < 1e-18 * sum {
            return sum;
        }
        k += 1.0;
    }
}

/// Outcome of an adaptive quadrature.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    /// Change between the last two refinement levels.
    pub last_change: f64,
    pub evaluations: usize,
}

/// Tanh-sinh (double exponential) quadrature of `f` over `[a, b]`.
///
/// The integrand receives `(x, dist_a, dist_b)` where the distances to the
/// endpoints are computed without cancellation, so integrands with endpoint
/// singularities can be evaluated accurately. Refinement halves the step until
/// two successive levels agree to `rel_tol`.
pub fn tanh_sinh<F>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<Quadrature>
where
    F: Fn(f64, f64, f64) -> f64,
{
    const MAX_LEVEL: u32 = 14;
    const TAU_MAX: f64 = 6.0;
    let half = 0.5 * (b - a);
    let mut evaluations = 0usize;

    let mut node = |tau: f64| -> f64 {
        let u = 0.5 * PI * tau.sinh();
        let cu = u.cosh();
        let w = 0.5 * PI * tau.cosh() / (cu * cu);
        // 1 - tanh(u) and 1 + tanh(u) without cancellation.
        let e = (-2.0 * u.abs()).exp();
        let small = 2.0 * e / (1.0 + e);
        let (da, db) = if u >= 0.0 {
            (half * (2.0 - small), half * small)
        } else {
            (half * small, half * (2.0 - small))
        };
        // Nodes this close to an endpoint contribute nothing measurable to an
        // integrable singularity, and evaluating there risks 0 * inf.
        if da.min(db) < 1e-250 * (b - a) || w == 0.0 {
            return 0.0;
        }
        let x = if u >= 0.0 { b - db } else { a + da };
        evaluations += 1;
        w * f(x, da, db)
    };

    let mut h = 1.0;
    let mut sum = node(0.0);
    let mut k = 1;
    while k as f64 * h <= TAU_MAX {
        let t = k as f64 * h;
        sum += node(t) + node(-t);
        k += 1;
    }
    let mut estimate = half * h * sum;
    let mut last_change = f64::INFINITY;

    for level in 1..=MAX_LEVEL {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= TAU_MAX {
            let t = k as f64 * h;
            sum += node(t) + node(-t);
            k += 2;
        }
        let next = half * h * sum;
        last_change = (next - estimate).abs();
        estimate = next;
        if level >= 3 && last_change <= rel_tol * estimate.abs() {
            return Ok(Quadrature {
                value: estimate,
                last_change,
                evaluations,
            });
        }
    }
    Err(Error::numerical(format!(
        "tanh-sinh quadrature did not reach relative change {rel_tol:e} (last change {last_change:.3e}, value {estimate:.6e})"
    )))
}

/// Mean of a zonal function over S^d against the normalized surface measure.
///
/// `f(t, one_minus_t)` is evaluated at t = ⟨x, y⟩; the second argument is
/// 1 - t computed without cancellation near t = 1.
pub fn sphere_zonal_mean<F>(d: usize, f: F, rel_tol: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    if d == 0 {
        return Err(Error::invalid("sphere dimension must be at least 1"));
    }
    let ratio = sphere_area(d - 1) / sphere_area(d);
    let exponent = (d as f64 - 2.0) / 2.0;
    // ∫_{-1}^{1} f(t) (1 - t²)^{(d-2)/2} dt
    let q = tanh_sinh(
        |t, dist_lo, dist_hi| {
            let weight = (dist_lo * dist_hi).powf(exponent);
            f(t, dist_hi) * weight
        },
        -1.0,
        1.0,
        rel_tol,
    )?;
    Ok(ratio * q.value)
}

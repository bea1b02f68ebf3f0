//! Exact transport between an empirical measure on the circle R/Z and the
//! uniform measure, and the interval discrepancy.

use crate::error::{Error, Result};
use crate::geometry::PointConfiguration;

use super::{Method, W2Estimate};

fn sorted_circle_points(config: &PointConfiguration) -> Result<Vec<f64>> {
    let m = config.manifold();
    if !(m.is_torus() && m.dim() == 1) {
        return Err(Error::invalid(format!(
            "expected a configuration on T^1, got {m}"
        )));
    }
    if config.is_empty() {
        return Err(Error::invalid("need at least one point"));
    }
    let mut xs = config.coords().to_vec();
    xs.sort_by(f64::total_cmp);
    Ok(xs)
}

/// Antiderivative of w ↦ dist(w, Z)^p, continuous on all of R.
#[inline]
fn dist_power_integral(z: f64, p: i32) -> f64 {
    let k = (z + 0.5).floor();
    let w = z - k;
    let q = (p + 1) as f64;
    let period = 2.0 * 0.5f64.powi(p + 1) / q;
    k * period + w.signum() * w.abs().powi(p + 1) / q
}

/// Cost of assigning sorted point i the arc [s + i/n, s + (i+1)/n).
fn shift_cost(xs: &[f64], s: f64, p: i32) -> f64 {
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            dist_power_integral(s + (i + 1) as f64 / n - x, p)
                - dist_power_integral(s + i as f64 / n - x, p)
        })
        .sum()
}

/// Exact W_p(μ, dx) on T¹ for p ∈ {1, 2}.
///
/// The arc assignment is monotone up to a cyclic shift s. The cost is a
/// piecewise quadratic in s with breakpoints where an arc end
/// meets a point or its antipode; it is minimized piece by piece.
pub fn w_p_circle_exact(config: &PointConfiguration, p: u32) -> Result<W2Estimate> {
    if p != 1 && p != 2 {
        return Err(Error::invalid("circle transport supports p = 1 or p = 2"));
    }
    let xs = sorted_circle_points(config)?;
    let n = xs.len();
    let pi = p as i32;
    let mut breaks = Vec::with_capacity(4 * n + 2);
    for (i, &x) in xs.iter().enumerate() {
        for j in [i, i + 1] {
            let b = x - j as f64 / n as f64;
            breaks.push(b.rem_euclid(1.0));
            breaks.push((b + 0.5).rem_euclid(1.0));
        }
    }
    breaks.push(0.0);
    breaks.push(1.0);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

    let mut best = f64::INFINITY;
    let mut left = shift_cost(&xs, breaks[0], pi);
    best = best.min(left);
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let right = shift_cost(&xs, b, pi);
        best = best.min(right);
        if b - a > 1e-14 {
            // Quadratic through the two ends and the midpoint.
            let mid = shift_cost(&xs, 0.5 * (a + b), pi);
            let h = 0.5 * (b - a);
            let curv = (left - 2.0 * mid + right) / (h * h);
            if curv > 0.0 {
                let vertex = 0.5 * (a + b) - (right - left) / (2.0 * h) / curv;
                if vertex > a && vertex < b {
                    best = best.min(shift_cost(&xs, vertex, pi));
                }
            }
        }
        left = right;
    }
    let cost = best.max(0.0);
    Ok(W2Estimate {
        p,
        value: if p == 2 { cost.sqrt() } else { cost },
        method: Method::CircleExact,
        error_bound: 0.0,
        m: None,
        epsilon: None,
        iterations: None,
    })
}

/// Extreme discrepancy over all wrapped intervals of T¹:
/// 1/n + max_i(x_(i) − i/n) − min_i(x_(i) − i/n), with the sorted points
/// x_(1) ≤ … ≤ x_(n). Closed intervals are admitted, so n coincident points
/// give 1.
pub fn star_discrepancy_t1(config: &PointConfiguration) -> Result<f64> {
    let xs = sorted_circle_points(config)?;
    let n = xs.len() as f64;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (i, &x) in xs.iter().enumerate() {
        let v = x - (i + 1) as f64 / n;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((1.0 / n + hi - lo).min(1.0))
}

//! Frequency-side quantities: Fourier coefficients and spherical-harmonic
//! degree powers of empirical measures, heat-smoothed Ḣ⁻¹ norms, diaphony,
//! heat kernels and Funk–Hecke eigenvalues.
//!
//! Eigenvalues are those of −Δ: 4π²|k|² on the unit torus and ℓ(ℓ+d−1) on
//! S^d. A heat time t multiplies each mode of the measure by e^{−λt}, so the
//! Ḣ⁻¹ norm of e^{tΔ}(μ − dx) weights mode powers by e^{−2λt}/λ.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{dot, Manifold, PointConfiguration};
use crate::special::{
    harmonic_dimension, normalized_gegenbauer, sphere_area, sphere_eigenvalue, tanh_sinh, theta_sum,
};

/// Largest truncation the streaming circle sums will use.
pub const MAX_T1_TRUNCATION: usize = 1 << 26;

const FOUR_PI2: f64 = 4.0 * PI * PI;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourierCoefficient {
    pub k: Vec<i32>,
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralData {
    /// μ̂(k) = (1/n) Σ_j e^{−2πik·x_j} for 0 < |k|_∞ ≤ K, lexicographic in k.
    Coefficients(Vec<FourierCoefficient>),
    /// p_ℓ = Σ_m |⟨μ, Y_ℓm⟩|² for ℓ = 1..=L (entry ℓ − 1).
    DegreePowers(Vec<f64>),
}

/// Truncated frequency content of an empirical measure. The stored
/// coefficients are those of μ itself; `heat_time` enters through the norms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralMeasure {
    pub manifold: Manifold,
    pub truncation: usize,
    pub heat_time: f64,
    #[serde(flatten)]
    pub data: SpectralData,
    /// Bound on the omitted modes' contribution to the squared Ḣ⁻¹ norm of
    /// e^{tΔ}(μ − dx); infinite when that tail diverges.
    pub tail_bound: f64,
}

/// Ḣ⁻¹ norm of a heat-smoothed, centered empirical measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HMinus1Norm {
    /// Truncated sum of mode weights; a lower bound for the squared norm.
    pub squared: f64,
    pub value: f64,
    /// Bound on the omitted part of `squared`.
    pub tail_bound: f64,
    pub truncation: usize,
}

impl HMinus1Norm {
    fn new(squared: f64, tail_bound: f64, truncation: usize) -> Self {
        let squared = squared.max(0.0);
        HMinus1Norm {
            squared,
            value: squared.sqrt(),
            tail_bound,
            truncation,
        }
    }

    /// Upper bound for the norm itself.
    pub fn upper(&self) -> f64 {
        (self.squared + self.tail_bound).sqrt()
    }
}

/// Diaphony of a circle configuration, F_N² = Σ_{k≠0} |μ̂(k)|²/(4π²k²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiaphonyEstimate {
    pub squared: f64,
    /// F_N itself.
    pub value: f64,
    /// Bound on the omitted part of `squared`.
    pub tail_bound: f64,
    pub truncation: usize,
}

fn check_heat_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!(
            "heat time must be finite and >= 0, got {t}"
        )));
    }
    Ok(())
}

/// Frequency content of the empirical measure of `config`.
pub fn spectral_measure(
    config: &PointConfiguration,
    truncation: usize,
    heat_time: f64,
) -> Result<SpectralMeasure> {
    check_heat_time(heat_time)?;
    if truncation == 0 {
        return Err(Error::invalid("truncation must be at least 1"));
    }
    let manifold = *config.manifold();
    if manifold.is_torus() {
        (2 * truncation as u64 + 1)
            .checked_pow(manifold.dim() as u32)
            .filter(|m| *m <= 50_000_000)
            .ok_or_else(|| Error::invalid("too many Fourier modes requested"))?;
        let coefficients = torus_coefficients(config, truncation);
        let tail_bound = torus_tail(&manifold, config, truncation, heat_time);
        Ok(SpectralMeasure {
            manifold,
            truncation,
            heat_time,
            data: SpectralData::Coefficients(coefficients),
            tail_bound,
        })
    } else {
        let powers = sphere_degree_powers(config, truncation);
        let tail_bound = sphere_tail(manifold.dim(), truncation, heat_time);
        Ok(SpectralMeasure {
            manifold,
            truncation,
            heat_time,
            data: SpectralData::DegreePowers(powers),
            tail_bound,
        })
    }
}

fn torus_coefficients(config: &PointConfiguration, k_max: usize) -> Vec<FourierCoefficient> {
    let d = config.manifold().dim();
    let n = config.len();
    let stride = k_max + 1;
    // e^{−2πi k x} for k = 0..=K, per point and axis.
    let tables: Vec<Complex64> = config
        .points()
        .flat_map(|p| {
            p.iter()
                .flat_map(move |&x| (0..=k_max).map(move |k| phase(k as f64, x, -1.0)))
                .collect::<Vec<_>>()
        })
        .collect();
    let side = 2 * k_max as i64 + 1;
    let total = side.pow(d as u32);
    (0..total)
        .into_par_iter()
        .filter_map(|code| {
            let mut rest = code;
            let mut k = vec![0i32; d];
            for v in k.iter_mut().rev() {
                *v = (rest % side - k_max as i64) as i32;
                rest /= side;
            }
            if k.iter().all(|v| *v == 0) {
                return None;
            }
            let mut sum = Complex64::new(0.0, 0.0);
            for j in 0..n {
                let base = j * d * stride;
                let mut acc = Complex64::new(1.0, 0.0);
                for (axis, &kj) in k.iter().enumerate() {
                    let e = tables[base + axis * stride + kj.unsigned_abs() as usize];
                    acc *= if kj >= 0 { e } else { e.conj() };
                }
                sum += acc;
            }
            let value = if n == 0 { sum } else { sum / n as f64 };
            Some(FourierCoefficient { k, value })
        })
        .collect()
}

/// e^{sign·2πi k x} with the phase k·x reduced mod 1 exactly.
#[inline]
fn phase(k: f64, x: f64, sign: f64) -> Complex64 {
    let p = k * x;
    let err = k.mul_add(x, -p);
    let frac = (p - p.floor()) + err;
    Complex64::from_polar(1.0, sign * 2.0 * PI * frac)
}

/// Σ_{j ≥ from} e^{−b j²} / j², bounded above when it cannot be summed.
fn weighted_tail(from: usize, b: f64) -> f64 {
    let f = from as f64;
    let plain = 1.0 / (f - 0.5);
    if b <= 0.0 {
        return plain;
    }
    // Ratio of consecutive terms is at most e^{−b(2j+1)}.
    let first = (-b * f * f).exp() / (f * f);
    let ratio = (-b * (2.0 * f + 1.0)).exp();
    if ratio < 1.0 {
        plain.min(first / (1.0 - ratio))
    } else {
        plain
    }
}

fn min_circle_separation(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 1.0;
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best = 1.0 - sorted[sorted.len() - 1] + sorted[0];
    for w in sorted.windows(2) {
        best = best.min(w[1] - w[0]);
    }
    best
}

/// Bound on Σ_{|k|>K} e^{−2λt}|μ̂(k)|²/λ for equal-weight points on the circle.
///
/// Combines |μ̂| ≤ 1 with the large sieve: for δ-separated points, N
/// consecutive frequencies carry total power at most (N − 1 + 1/δ)/n. Abel
/// summation against the decreasing weights then gives
/// (2/(4π²n)) [w_{K+1}/δ + Σ_{m≥K+2} w_m] with w_m = e^{−2λ_m t}/m².
fn t1_tail(xs: &[f64], k_max: usize, t: f64) -> f64 {
    let b = 2.0 * FOUR_PI2 * t;
    let trivial = 2.0 / FOUR_PI2 * weighted_tail(k_max + 1, b);
    let n = xs.len();
    let delta = min_circle_separation(xs);
    if n == 0 || delta <= 0.0 {
        return trivial;
    }
    let k1 = (k_max + 1) as f64;
    let w1 = (-b * k1 * k1).exp() / (k1 * k1);
    let sieve = 2.0 / (FOUR_PI2 * n as f64) * (w1 / delta + weighted_tail(k_max + 2, b));
    trivial.min(sieve)
}

fn torus_tail(manifold: &Manifold, config: &PointConfiguration, k_max: usize, t: f64) -> f64 {
    let d = manifold.dim();
    if d == 1 {
        return t1_tail(config.coords(), k_max, t);
    }
    if t == 0.0 {
        return f64::INFINITY;
    }
    torus_tail_generic(d, k_max, t)
}

/// Σ_{|k|_∞>K} e^{−8π²|k|²t}/(4π²|k|²) ≤ (θ^d − s_K^d)/(4π²(K+1)²).
fn torus_tail_generic(d: usize, k_max: usize, t: f64) -> f64 {
    let b = 2.0 * FOUR_PI2 * t;
    let mut outside = 0.0;
    let mut j = k_max + 1;
    loop {
        let term = (-b * (j * j) as f64).exp();
        outside += 2.0 * term;
        if term < 1e-20 * outside || term == 0.0 {
            break;
        }
        j += 1;
    }
    let full = theta_sum(b);
    let inside = full - outside;
    // a^d − c^d = (a − c) Σ a^i c^{d−1−i}
    let sum: f64 = (0..d)
        .map(|i| full.powi(i as i32) * inside.powi((d - 1 - i) as i32))
        .sum();
    outside * sum / (FOUR_PI2 * ((k_max + 1) * (k_max + 1)) as f64)
}

/// Degree powers via the addition theorem:
/// p_ℓ = (N(ℓ,d)/|S^d|) (1/n²) Σ_{j,k} P̃_ℓ(⟨x_j, x_k⟩).
fn sphere_degree_powers(config: &PointConfiguration, l_max: usize) -> Vec<f64> {
    let d = config.manifold().dim();
    let n = config.len();
    if n == 0 {
        return vec![0.0; l_max];
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut acc = vec![0.0; l_max + 1];
            let mut p = vec![0.0; l_max + 1];
            let a = config.point(j);
            for k in 0..n {
                let t = dot(a, config.point(k)).clamp(-1.0, 1.0);
                normalized_gegenbauer(d, t, &mut p);
                for (s, v) in acc.iter_mut().zip(&p) {
                    *s += v;
                }
            }
            acc
        })
        .collect();
    let area = sphere_area(d);
    let n2 = (n * n) as f64;
    (1..=l_max)
        .map(|l| {
            let s: f64 = rows.iter().map(|r| r[l]).sum();
            (harmonic_dimension(l, d) / area * s / n2).max(0.0)
        })
        .collect()
}

/// Σ_{ℓ>L} e^{−2λ_ℓ t} N(ℓ,d)/(|S^d| λ_ℓ), using p_ℓ ≤ N(ℓ,d)/|S^d|.
fn sphere_tail(d: usize, l_max: usize, t: f64) -> f64 {
    let area = sphere_area(d);
    if t == 0.0 {
        return if d == 1 {
            // Σ_{ℓ>L} 2/(2π ℓ²) ≤ (1/π)/(L + 1/2)
            1.0 / (PI * (l_max as f64 + 0.5))
        } else {
            f64::INFINITY
        };
    }
    let term = |l: usize| {
        let lambda = sphere_eigenvalue(l, d);
        (-2.0 * lambda * t).exp() * harmonic_dimension(l, d) / (area * lambda)
    };
    let mut sum = 0.0;
    let mut l = l_max + 1;
    let mut prev = term(l);
    sum += prev;
    loop {
        l += 1;
        let cur = term(l);
        sum += cur;
        let ratio = if prev > 0.0 { cur / prev } else { 0.0 };
        // Ratios decrease from here on, so a geometric series bounds the rest.
        if ratio < 0.5 && (cur <= 1e-18 * sum || cur == 0.0) {
            return sum + cur * ratio / (1.0 - ratio);
        }
        if l > l_max + 10_000_000 {
            return f64::INFINITY;
        }
        prev = cur;
    }
}

/// Ḣ⁻¹ norm of e^{tΔ}(μ − dx) from a stored spectral measure.
pub fn hminus1_norm(sm: &SpectralMeasure) -> HMinus1Norm {
    let t = sm.heat_time;
    let squared = match &sm.data {
        SpectralData::Coefficients(cs) => cs
            .iter()
            .map(|c| {
                let k2: i64 = c.k.iter().map(|v| (*v as i64) * (*v as i64)).sum();
                let lambda = FOUR_PI2 * k2 as f64;
                (-2.0 * lambda * t).exp() * c.value.norm_sqr() / lambda
            })
            .sum(),
        SpectralData::DegreePowers(ps) => {
            let d = sm.manifold.dim();
            ps.iter()
                .enumerate()
                .map(|(i, p)| {
                    let lambda = sphere_eigenvalue(i + 1, d);
                    (-2.0 * lambda * t).exp() * p / lambda
                })
                .sum()
        }
    };
    HMinus1Norm::new(squared, sm.tail_bound, sm.truncation)
}

/// Ḣ⁻¹ norm on a torus with an explicit truncation. On T¹ the sum is
/// streamed, so truncations in the millions are affordable.
pub fn hminus1_torus(
    config: &PointConfiguration,
    heat_time: f64,
    truncation: usize,
) -> Result<HMinus1Norm> {
    if !config.manifold().is_torus() {
        return Err(Error::invalid("hminus1_torus needs a torus configuration"));
    }
    check_heat_time(heat_time)?;
    if truncation == 0 {
        return Err(Error::invalid("truncation must be at least 1"));
    }
    if config.manifold().dim() == 1 {
        let xs = config.coords();
        let squared = t1_power_sum(xs, truncation, 2.0 * FOUR_PI2 * heat_time);
        return Ok(HMinus1Norm::new(
            squared,
            t1_tail(xs, truncation, heat_time),
            truncation,
        ));
    }
    Ok(hminus1_norm(&spectral_measure(
        config, truncation, heat_time,
    )?))
}

/// Ḣ⁻¹ norm on a torus with the truncation chosen so the tail bound is at
/// most `tol`. On T^d with d ≥ 2 this needs t > 0.
pub fn hminus1_torus_auto(
    config: &PointConfiguration,
    heat_time: f64,
    tol: f64,
) -> Result<HMinus1Norm> {
    check_heat_time(heat_time)?;
    let manifold = *config.manifold();
    if !manifold.is_torus() {
        return Err(Error::invalid(
            "hminus1_torus_auto needs a torus configuration",
        ));
    }
    let d = manifold.dim();
    if d >= 2 && heat_time == 0.0 {
        return Err(Error::invalid(
            "the Ḣ⁻¹ norm of point masses diverges on T^d, d >= 2; use a positive heat time",
        ));
    }
    let tail = |k: usize| torus_tail(&manifold, config, k, heat_time);
    let cap = if d == 1 { MAX_T1_TRUNCATION } else { 4096 };
    let k = smallest_truncation(tail, tol, cap)?;
    hminus1_torus(config, heat_time, k)
}

/// Ḣ⁻¹ norm on a sphere with degrees 1..=L.
pub fn hminus1_sphere(
    config: &PointConfiguration,
    heat_time: f64,
    truncation: usize,
) -> Result<HMinus1Norm> {
    if !config.manifold().is_sphere() {
        return Err(Error::invalid(
            "hminus1_sphere needs a sphere configuration",
        ));
    }
    Ok(hminus1_norm(&spectral_measure(
        config, truncation, heat_time,
    )?))
}

/// Smallest K ≤ cap with tail(K) ≤ tol, for a tail decreasing in K.
fn smallest_truncation(tail: impl Fn(usize) -> f64, tol: f64, cap: usize) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let mut hi = 1;
    while tail(hi) > tol {
        if hi >= cap {
            return Err(Error::numerical(format!(
                "truncation {cap} leaves a tail bound of {:.3e} above {tol:.1e}",
                tail(cap)
            )));
        }
        hi = (hi * 2).min(cap);
    }
    if hi == 1 {
        return Ok(1);
    }
    // tail(hi / 2) > tol from the doubling loop.
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if tail(mid) <= tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Σ_{k=1}^{K} 2 e^{−b k²}/(4π²k²) |μ̂(k)|² for equal-weight points on the
/// circle, streamed by rotating per-point phases.
fn t1_power_sum(xs: &[f64], k_max: usize, b: f64) -> f64 {
    const BLOCK: usize = 1024;
    let n = xs.len();
    if n == 0 {
        return 0.0;
    }
    // Beyond this the heat weight is below 1e-40 and nothing measurable is left.
    let k_max = if b > 0.0 {
        k_max.min((92.0 / b).sqrt() as usize + 1)
    } else {
        k_max
    };
    let padded = n.div_ceil(4) * 4;
    let mut step_re = vec![1.0; padded];
    let mut step_im = vec![0.0; padded];
    for (j, &x) in xs.iter().enumerate() {
        let z = phase(1.0, x, -1.0);
        step_re[j] = z.re;
        step_im[j] = z.im;
    }
    let blocks = k_max.div_ceil(BLOCK);
    let inv_n2 = 1.0 / (n * n) as f64;
    let partials: Vec<(f64, f64)> = (0..blocks)
        .into_par_iter()
        .map(|blk| {
            let k0 = blk * BLOCK + 1;
            let k1 = ((blk + 1) * BLOCK).min(k_max);
            let mut re = vec![0.0; padded];
            let mut im = vec![0.0; padded];
            for (j, &x) in xs.iter().enumerate() {
                let z = phase(k0 as f64, x, -1.0);
                re[j] = z.re;
                im[j] = z.im;
            }
            let mut sum = 0.0;
            let mut comp = 0.0;
            for k in k0..=k1 {
                let mut sr = [0.0f64; 4];
                let mut si = [0.0f64; 4];
                for (((r, i), cr), ci) in re
                    .chunks_exact_mut(4)
                    .zip(im.chunks_exact_mut(4))
                    .zip(step_re.chunks_exact(4))
                    .zip(step_im.chunks_exact(4))
                {
                    for l in 0..4 {
                        let a = r[l];
                        let c = i[l];
                        sr[l] += a;
                        si[l] += c;
                        r[l] = a * cr[l] - c * ci[l];
                        i[l] = a * ci[l] + c * cr[l];
                    }
                }
                // Padding lanes start at zero and stay there.
                let s_re = (sr[0] + sr[1]) + (sr[2] + sr[3]);
                let s_im = (si[0] + si[1]) + (si[2] + si[3]);
                let kf = k as f64;
                let w = 2.0 * (-b * kf * kf).exp() / (FOUR_PI2 * kf * kf);
                let term = w * (s_re * s_re + s_im * s_im) * inv_n2 - comp;
                let next = sum + term;
                comp = (next - sum) - term;
                sum = next;
            }
            (sum, comp)
        })
        .collect();
    let mut sum = 0.0;
    let mut comp = 0.0;
    for (s, c) in partials {
        let term = s - c - comp;
        let next = sum + term;
        comp = (next - sum) - term;
        sum = next;
    }
    sum
}

/// Diaphony with a fixed truncation K.
pub fn diaphony_t1(config: &PointConfiguration, truncation: usize) -> Result<DiaphonyEstimate> {
    check_circle(config)?;
    if truncation == 0 {
        return Err(Error::invalid("truncation must be at least 1"));
    }
    let xs = config.coords();
    let squared = t1_power_sum(xs, truncation, 0.0);
    Ok(DiaphonyEstimate {
        squared,
        value: squared.sqrt(),
        tail_bound: t1_tail(xs, truncation, 0.0),
        truncation,
    })
}

/// Diaphony with K chosen so the tail bound on F_N² is at most `tol`.
pub fn diaphony_t1_auto(config: &PointConfiguration, tol: f64) -> Result<DiaphonyEstimate> {
    check_circle(config)?;
    let xs = config.coords();
    let k = smallest_truncation(|k| t1_tail(xs, k, 0.0), tol, MAX_T1_TRUNCATION)?;
    diaphony_t1(config, k)
}

fn check_circle(config: &PointConfiguration) -> Result<()> {
    let m = config.manifold();
    if !(m.is_torus() && m.dim() == 1) {
        return Err(Error::invalid(format!(
            "expected a configuration on T^1, got {m}"
        )));
    }
    if config.is_empty() {
        return Err(Error::invalid("configuration is empty"));
    }
    Ok(())
}

/// Heat kernel of the unit circle by its Fourier series,
/// 1 + 2 Σ_{k≥1} e^{−4π²k²t} cos(2πku).
pub fn theta_fourier(u: f64, t: f64) -> f64 {
    let mut sum = 1.0;
    let mut k = 1.0f64;
    loop {
        let w = (-FOUR_PI2 * k * k * t).exp();
        sum += 2.0 * w * (2.0 * PI * k * u).cos();
        if w < 1e-18 * sum.abs().max(1e-300) {
            return sum;
        }
        k += 1.0;
    }
}

/// Heat kernel of the unit circle by its image sum,
/// (4πt)^{−1/2} Σ_m e^{−(u+m)²/4t}.
pub fn theta_images(u: f64, t: f64) -> f64 {
    let u = u - u.round();
    let scale = (4.0 * PI * t).sqrt().recip();
    let mut sum = (-u * u / (4.0 * t)).exp();
    let mut m = 1.0f64;
    loop {
        let a = (-(u + m) * (u + m) / (4.0 * t)).exp();
        let b = (-(u - m) * (u - m) / (4.0 * t)).exp();
        sum += a + b;
        if a + b < 1e-18 * sum {
            return scale * sum;
        }
        m += 1.0;
    }
}

/// One-dimensional heat kernel, choosing the faster representation.
pub fn theta_1d(u: f64, t: f64) -> f64 {
    if 4.0 * PI * t >= 1.0 {
        theta_fourier(u, t)
    } else {
        theta_images(u, t)
    }
}

/// Density of e^{tΔ}δ_center at x on the unit torus: a product of
/// one-dimensional heat kernels.
pub fn heat_density_torus(x: &[f64], center: &[f64], t: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!(
            "heat time must be positive, got {t}"
        )));
    }
    if x.len() != center.len() || x.is_empty() {
        return Err(Error::invalid(
            "heat density needs points of equal dimension",
        ));
    }
    Ok(x.iter()
        .zip(center)
        .map(|(a, c)| theta_1d(a - c, t))
        .product())
}

/// Heat kernel of S^d as a function of the inner product u = ⟨x, y⟩:
/// Σ_ℓ e^{−λ_ℓ t} N(ℓ,d)/|S^d| P̃_ℓ(u).
pub fn heat_kernel_sphere(d: usize, t: f64, u: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!(
            "heat time must be positive, got {t}"
        )));
    }
    let area = sphere_area(d);
    let l_max = degree_cutoff(d, t);
    let mut p = vec![0.0; l_max + 1];
    normalized_gegenbauer(d, u.clamp(-1.0, 1.0), &mut p);
    Ok((0..=l_max)
        .map(|l| (-sphere_eigenvalue(l, d) * t).exp() * harmonic_dimension(l, d) / area * p[l])
        .sum())
}

/// Degree beyond which e^{−λ t} N(ℓ, d) is negligible (< 1e-17 relative).
fn degree_cutoff(d: usize, t: f64) -> usize {
    let mut l = 1;
    loop {
        let w = (-sphere_eigenvalue(l, d) * t).exp() * harmonic_dimension(l, d);
        if w < 1e-17 && l > 4 {
            return l;
        }
        l += 1;
    }
}

/// Funk–Hecke eigenvalue of ‖x − y‖^{−(d−2)} on degree-ℓ harmonics with
/// respect to the normalized surface measure, so a₀ = c_d.
pub fn funk_hecke_eigenvalue(d: usize, l: usize) -> Result<f64> {
    if d < 3 {
        return Err(Error::invalid(format!(
            "Funk–Hecke eigenvalues need d >= 3, got {d}"
        )));
    }
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().unwrap().get(&(d, l)) {
        return Ok(*v);
    }
    let e = (d as f64 - 2.0) / 2.0;
    // (2(1−t))^{−(d−2)/2} (1 − t²)^{(d−2)/2} = 2^{−e} (1 + t)^e
    let q = tanh_sinh(
        |t, one_plus_t, _| {
            let mut p = vec![0.0; l + 1];
            normalized_gegenbauer(d, t, &mut p);
            2f64.powf(-e) * one_plus_t.powf(e) * p[l]
        },
        -1.0,
        1.0,
        1e-11,
    )?;
    let value = sphere_area(d - 1) / sphere_area(d) * q.value;
    cache.lock().unwrap().insert((d, l), value);
    Ok(value)
}

/// ∫ e^{2tΔ}δ_x(y) ‖z − y‖^{−(d−2)} dy for ⟨x, z⟩ = u, summed over degrees:
/// Σ_ℓ e^{−2λ_ℓ t} a_ℓ N(ℓ,d) P̃_ℓ(u).
pub fn heat_smoothed_coulomb(d: usize, t: f64, u: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!(
            "heat time must be positive, got {t}"
        )));
    }
    let l_max = degree_cutoff(d, 2.0 * t);
    let mut p = vec![0.0; l_max + 1];
    normalized_gegenbauer(d, u.clamp(-1.0, 1.0), &mut p);
    let mut sum = 0.0;
    for (l, pl) in p.iter().enumerate() {
        let a = funk_hecke_eigenvalue(d, l)?;
        sum += (-2.0 * sphere_eigenvalue(l, d) * t).exp() * a * harmonic_dimension(l, d) * pl;
    }
    Ok(sum)
}

/// Ratio Δf/f at polar angle θ for f(θ) = (2 − 2cos θ)^{−(d−2)/2}, with the
/// zonal Laplacian f'' + (d−1) cot θ f' taken by 8th-order differences.
pub fn coulomb_laplacian_ratio(d: usize, theta: f64) -> f64 {
    let f = |th: f64| (2.0 - 2.0 * th.cos()).powf(-(d as f64 - 2.0) / 2.0);
    let h = 5e-3;
    let c1 = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
    let c2 = [8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0];
    let f0 = f(theta);
    let mut d1 = 0.0;
    let mut d2 = -205.0 / 72.0 * f0;
    for (m, (a, b)) in c1.iter().zip(&c2).enumerate() {
        let s = (m + 1) as f64 * h;
        let (fp, fm) = (f(theta + s), f(theta - s));
        d1 += a * (fp - fm);
        d2 += b * (fp + fm);
    }
    d1 /= h;
    d2 /= h * h;
    (d2 + (d as f64 - 1.0) / theta.tan() * d1) / f0
}

/// Constant c₁ in Δ_y ‖x − y‖^{−(d−2)} = c₁ ‖x − y‖^{−(d−2)} away from the
/// diagonal, fitted from [`coulomb_laplacian_ratio`] on a lattice of angles.
/// Fails when the ratio is not constant to 1e-6 relative.
pub fn riesz_laplacian_constant(d: usize) -> Result<f64> {
    if d < 3 {
        return Err(Error::invalid(format!("needs d >= 3, got {d}")));
    }
    let ratios: Vec<f64> = (4..=12)
        .map(|i| coulomb_laplacian_ratio(d, PI * i as f64 / 16.0))
        .collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let residual = ratios
        .iter()
        .map(|r| (r - mean).abs())
        .fold(0.0f64, f64::max)
        / mean.abs();
    if !(residual < 1e-6) {
        return Err(Error::numerical(format!(
            "Δf/f varies by {residual:.2e} relative; the Coulomb kernel is not an eigenfunction here"
        )));
    }
    Ok(mean)
}

/// Σ_{k≠0} e^{−8π²|k|²t}/(4π²|k|²) on T^d: the heat-smoothed Green function
/// on the diagonal, ∫ G(x, y) e^{2tΔ}δ_x(y) dy.
pub fn smoothed_green_diagonal_torus(d: usize, t: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!(
            "heat time must be positive, got {t}"
        )));
    }
    if d == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let b = 2.0 * FOUR_PI2 * t;
    // Cube truncation whose tail bound is below 1e-14.
    let mut k_max = 1;
    while torus_tail_generic(d, k_max, t) > 1e-14 {
        k_max += 1;
    }
    let side = 2 * k_max as i64 + 1;
    let total = side.pow(d as u32);
    let sum: f64 = (0..total)
        .into_par_iter()
        .map(|code| {
            let mut rest = code;
            let mut k2 = 0i64;
            for _ in 0..d {
                let v = rest % side - k_max as i64;
                k2 += v * v;
                rest /= side;
            }
            if k2 == 0 {
                0.0
            } else {
                (-b * k2 as f64).exp() / (FOUR_PI2 * k2 as f64)
            }
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    Ok(sum)
}

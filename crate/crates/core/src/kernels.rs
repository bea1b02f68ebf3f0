//! Pair interaction kernels and O(n²) pair-energy sums.
//!
//! Energies are always ordered double sums Σ_{k≠ℓ}, so every unordered pair
//! contributes twice.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{chordal_unchecked, torus_delta, Manifold, ManifoldKind, PointConfiguration};
use crate::special::{sphere_area, tanh_sinh, theta_sum, upper_gamma_half_integer};

/// Default heat-split time for pointwise evaluation of the torus Green function.
pub const DEFAULT_SPLIT: f64 = 1.0 / (2.0 * PI * PI);

/// Target bound on the omitted Fourier modes of the torus Green function.
pub const FOURIER_TAIL_TOL: f64 = 1e-10;

/// Images with |z + m|² / 4T above this are dropped (Γ(s, 36) ~ e^{-36}).
const IMAGE_CUTOFF: f64 = 36.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelKind {
    /// Closed-form Green function of the unit circle.
    GreenTorus1,
    /// Spectral Green function of T^d, d ≥ 2, evaluated by a heat split.
    /// `truncation` and `split` default to automatic choices.
    GreenTorusSpectral {
        dim: usize,
        #[serde(default)]
        truncation: Option<usize>,
        #[serde(default)]
        split: Option<f64>,
    },
    /// Truncated Legendre series of the mean-zero Green function of S².
    GreenSphere2 { truncation: usize },
    /// ‖x − y‖^{-(d-2)} on S^d, d ≥ 3.
    CoulombSphere { dim: usize },
    /// −ln ‖x − y‖ on S².
    LogSphere2,
    /// ‖x − y‖^{-s} on a sphere.
    Riesz { exponent: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    #[default]
    Raw,
    /// Subtract the kernel's mean over the manifold.
    MeanZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    #[serde(flatten)]
    pub kind: KernelKind,
    #[serde(default)]
    pub normalization: Normalization,
}

impl KernelSpec {
    pub fn new(kind: KernelKind) -> Self {
        KernelSpec {
            kind,
            normalization: Normalization::Raw,
        }
    }

    pub fn mean_zero(kind: KernelKind) -> Self {
        KernelSpec {
            kind,
            normalization: Normalization::MeanZero,
        }
    }

    pub fn green_torus(dim: usize) -> Self {
        if dim == 1 {
            Self::new(KernelKind::GreenTorus1)
        } else {
            Self::new(KernelKind::GreenTorusSpectral {
                dim,
                truncation: None,
                split: None,
            })
        }
    }

    /// Whether the kernel blows up on the diagonal.
    pub fn is_singular(&self) -> bool {
        match self.kind {
            KernelKind::GreenTorus1 => false,
            KernelKind::Riesz { exponent } => exponent > 0.0,
            _ => true,
        }
    }

    /// Checks that the kernel makes sense on `manifold`.
    pub fn validate(&self, manifold: &Manifold) -> Result<()> {
        let d = manifold.dim();
        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "{what} cannot be used on {manifold}"
                )))
            }
        };
        match self.kind {
            KernelKind::GreenTorus1 => need(manifold.is_torus() && d == 1, "green-torus1"),
            KernelKind::GreenTorusSpectral {
                dim,
                truncation,
                split,
            } => {
                need(
                    manifold.is_torus() && d == dim && dim >= 2,
                    "green-torus-spectral",
                )?;
                if truncation == Some(0) {
                    return Err(Error::invalid("spectral truncation must be at least 1"));
                }
                if let Some(t) = split {
                    if !(t > 0.0 && t.is_finite()) {
                        return Err(Error::invalid("heat split time must be positive"));
                    }
                }
                Ok(())
            }
            KernelKind::GreenSphere2 { truncation } => {
                need(manifold.is_sphere() && d == 2, "green-sphere2")?;
                if truncation == 0 {
                    return Err(Error::invalid("Legendre truncation must be at least 1"));
                }
                Ok(())
            }
            KernelKind::CoulombSphere { dim } => {
                if dim < 3 {
                    return Err(Error::invalid(format!(
                        "coulomb-sphere needs d >= 3, got d = {dim}"
                    )));
                }
                need(manifold.is_sphere() && d == dim, "coulomb-sphere")
            }
            KernelKind::LogSphere2 => need(manifold.is_sphere() && d == 2, "log-sphere2"),
            KernelKind::Riesz { exponent } => {
                need(manifold.is_sphere(), "riesz")?;
                if !(exponent > 0.0 && exponent.is_finite()) {
                    return Err(Error::invalid("riesz exponent must be positive"));
                }
                if self.normalization == Normalization::MeanZero && exponent >= d as f64 {
                    return Err(Error::invalid(format!(
                        "riesz exponent {exponent} >= {d} has no finite mean on {manifold}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Pair energy of a configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub kernel: KernelSpec,
    pub n: usize,
    /// Σ_{k≠ℓ} K(x_k, x_ℓ).
    pub total: f64,
    /// total / n².
    pub normalized: f64,
    /// Minimum pairwise geodesic distance; `None` for fewer than two points.
    pub min_separation: Option<f64>,
}

/// Closed-form Green function of the unit circle at wrapped distance `u`.
pub fn green_t1(u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::invalid(format!(
            "green_t1 needs u in [0, 1], got {u}"
        )));
    }
    Ok(green_t1_value(u))
}

#[inline]
fn green_t1_value(u: f64) -> f64 {
    u * u / 2.0 - u / 2.0 + 1.0 / 12.0
}

/// Spectral Green function of T^d at displacement `z`.
pub fn green_torus_spectral(
    z: &[f64],
    truncation: Option<usize>,
    split: Option<f64>,
) -> Result<f64> {
    let g = TorusGreen::new(z.len(), truncation, split.unwrap_or(DEFAULT_SPLIT))?;
    if z.iter().all(|c| torus_delta(*c, 0.0) == 0.0) {
        return Err(Error::Singularity { i: 0, j: 1 });
    }
    Ok(g.value(z))
}

/// Truncated Legendre series of the mean-zero Green function of S².
pub fn green_sphere2(x: &[f64], y: &[f64], truncation: usize) -> Result<f64> {
    check_sphere_pair(x, y, 3)?;
    if truncation == 0 {
        return Err(Error::invalid("Legendre truncation must be at least 1"));
    }
    if chordal_unchecked(x, y) == 0.0 {
        return Err(Error::Singularity { i: 0, j: 1 });
    }
    Ok(legendre_green(truncation, dot_clamped(x, y)).0)
}

/// Coulomb kernel ‖x − y‖^{-(d-2)} on S^d.
pub fn coulomb_sphere(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() < 4 {
        return Err(Error::invalid("coulomb_sphere needs d >= 3"));
    }
    check_sphere_pair(x, y, x.len())?;
    let r = chordal_unchecked(x, y);
    if r == 0.0 {
        return Err(Error::Singularity { i: 0, j: 1 });
    }
    Ok(r.powi(-(x.len() as i32 - 3)))
}

fn check_sphere_pair(x: &[f64], y: &[f64], len: usize) -> Result<()> {
    if x.len() != len || y.len() != len {
        return Err(Error::invalid(format!(
            "expected points with {len} coordinates"
        )));
    }
    for p in [x, y] {
        let norm = crate::geometry::norm(p);
        if (norm - 1.0).abs() > crate::geometry::UNIT_TOLERANCE {
            return Err(Error::invalid(format!("point has norm {norm}, expected 1")));
        }
    }
    Ok(())
}

/// Mean of the Coulomb kernel over S^d × S^d, cached per dimension.
pub fn cd_constant(d: usize) -> Result<f64> {
    if d < 3 {
        return Err(Error::invalid(format!(
            "c_d is defined for d >= 3, got {d}"
        )));
    }
    riesz_mean(d, (d - 2) as f64)
}

/// Mean of ‖x − y‖^{-s} over S^d × S^d.
pub fn riesz_mean(d: usize, s: f64) -> Result<f64> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64), f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (d, s.to_bits());
    if let Some(v) = cache.lock().unwrap().get(&key) {
        return Ok(*v);
    }
    if !(s < d as f64) {
        return Err(Error::invalid(format!(
            "‖x-y‖^-{s} is not integrable on S^{d}"
        )));
    }
    // With ‖x − y‖² = 2(1 − t) the kernel and the (1 − t²)^{(d-2)/2} density
    // combine into powers of 1 − t and 1 + t, which avoids 0·∞ near t = 1.
    let e = (d as f64 - 2.0) / 2.0;
    let q = tanh_sinh(
        |_, one_plus_t, one_minus_t| {
            2f64.powf(-s / 2.0) * one_minus_t.powf(e - s / 2.0) * one_plus_t.powf(e)
        },
        -1.0,
        1.0,
        1e-10,
    )?;
    let value = sphere_area(d - 1) / sphere_area(d) * q.value;
    cache.lock().unwrap().insert(key, value);
    Ok(value)
}

#[inline]
fn dot_clamped(a: &[f64], b: &[f64]) -> f64 {
    crate::geometry::dot(a, b).clamp(-1.0, 1.0)
}

/// Σ_{ℓ=1}^{L} (2ℓ+1)/(4π ℓ(ℓ+1)) P_ℓ(t) and its t-derivative.
fn legendre_green(l_max: usize, t: f64) -> (f64, f64) {
    let (mut p_prev, mut p) = (1.0, t);
    let (mut dp_prev, mut dp) = (0.0, 1.0);
    let mut value = 0.0;
    let mut deriv = 0.0;
    for l in 1..=l_max {
        let lf = l as f64;
        let c = (2.0 * lf + 1.0) / (4.0 * PI * lf * (lf + 1.0));
        value += c * p;
        deriv += c * dp;
        // (ℓ+1) P_{ℓ+1} = (2ℓ+1) t P_ℓ − ℓ P_{ℓ−1};  P'_{ℓ+1} = P'_{ℓ−1} + (2ℓ+1) P_ℓ
        let p_next = ((2.0 * lf + 1.0) * t * p - lf * p_prev) / (lf + 1.0);
        let dp_next = dp_prev + (2.0 * lf + 1.0) * p;
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
    }
    (value, deriv)
}

/// Heat-split evaluator for the spectral Green function of T^d:
/// G(z) = Σ_m f(|z + m|) − T + Σ_{0<|k|≤K} e^{-4π²|k|²T}/(4π²|k|²) e^{2πik·z}
/// with f(r) = ∫₀^T (4πt)^{-d/2} e^{-r²/4t} dt.
#[derive(Debug, Clone)]
pub struct TorusGreen {
    dim: usize,
    split: f64,
    truncation: usize,
    /// Half-space modes (first nonzero component positive), `dim` entries each.
    modes: Vec<i32>,
    /// 2 e^{-4π²|k|²T} / (4π²|k|²) for each stored mode.
    weights: Vec<f64>,
    tail_bound: f64,
    image_radius: f64,
    prefactor: f64,
    deriv_factor: f64,
}

impl TorusGreen {
    pub fn new(dim: usize, truncation: Option<usize>, split: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::invalid("spectral torus Green function needs d >= 2"));
        }
        if !(split > 0.0 && split.is_finite()) {
            return Err(Error::invalid("heat split time must be positive"));
        }
        let c = 4.0 * PI * PI * split;
        let theta = theta_sum(c / 2.0).powi(dim as i32);
        let bound = |k: usize| {
            let k2 = (k * k) as f64;
            (-c * k2 / 2.0).exp() * theta / (4.0 * PI * PI * k2)
        };
        let truncation = match truncation {
            Some(0) => return Err(Error::invalid("spectral truncation must be at least 1")),
            Some(k) => k,
            None => {
                let mut k = 1;
                while bound(k) >= FOURIER_TAIL_TOL {
                    k += 1;
                }
                k
            }
        };
        let kk = truncation as i64;
        let mut modes = Vec::new();
        let mut weights = Vec::new();
        let side = 2 * kk + 1;
        let mut idx = vec![0i64; dim];
        for code in 0..side.pow(dim as u32) {
            let mut rest = code;
            for v in idx.iter_mut().rev() {
                *v = rest % side - kk;
                rest /= side;
            }
            let norm2: i64 = idx.iter().map(|v| v * v).sum();
            let first_nonzero = idx.iter().find(|v| **v != 0);
            if norm2 > 0 && norm2 <= kk * kk && first_nonzero.is_some_and(|v| *v > 0) {
                let lambda = 4.0 * PI * PI * norm2 as f64;
                modes.extend(idx.iter().map(|v| *v as i32));
                weights.push(2.0 * (-lambda * split).exp() / lambda);
            }
        }
        let df = dim as f64;
        Ok(TorusGreen {
            dim,
            split,
            truncation,
            modes,
            weights,
            tail_bound: bound(truncation),
            image_radius: (4.0 * split * IMAGE_CUTOFF).sqrt(),
            prefactor: PI.powf(-df / 2.0) / 4.0,
            deriv_factor: (4.0 * split).powf(2.0 - df / 2.0) / (2.0 * split),
        })
    }

    /// Split time balancing the image and Fourier work of an n-point pair sum.
    pub fn balanced_split(dim: usize, n: usize) -> f64 {
        // Per-pair image cost ~ 40 ns each, per-point mode cost ~ 3 ns each.
        let ratio: f64 = 3.0 / (2.0 * 40.0 * n.max(2) as f64);
        let t = (0.95 / 12.0) * ratio.powf(1.0 / dim as f64);
        t.clamp(1e-4, DEFAULT_SPLIT)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn split(&self) -> f64 {
        self.split
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn mode_count(&self) -> usize {
        self.weights.len()
    }

    /// Bound on the omitted Fourier modes at any displacement.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    #[inline]
    fn radial(&self, r2: f64) -> f64 {
        let a = r2 / (4.0 * self.split);
        let g = upper_gamma_half_integer(self.dim as i32 - 2, a);
        self.prefactor * r2.powf(1.0 - self.dim as f64 / 2.0) * g
    }

    /// f(r) and f'(r)/r.
    #[inline]
    fn radial_with_deriv(&self, r2: f64) -> (f64, f64) {
        let a = r2 / (4.0 * self.split);
        let g = upper_gamma_half_integer(self.dim as i32 - 2, a);
        let df = self.dim as f64;
        let r = r2.sqrt();
        let r_pow = r2.powf(1.0 - df / 2.0);
        let f = self.prefactor * r_pow * g;
        let fp = self.prefactor * ((2.0 - df) * r_pow / r * g - self.deriv_factor * (-a).exp() / r);
        (f, fp / r)
    }

    /// Calls `visit(offset, |z+m|²)` for every image within the cutoff, where
    /// `z` is the minimal-image displacement.
    #[inline]
    fn for_each_image(&self, z: &[f64], mut visit: impl FnMut(&[f64], f64)) {
        let d = self.dim;
        let rad = self.image_radius;
        let rad2 = rad * rad;
        let mut lo = [0i64; 8];
        let mut hi = [0i64; 8];
        let mut cur = [0i64; 8];
        let mut shifted = [0.0f64; 8];
        debug_assert!(d <= 8);
        for j in 0..d {
            lo[j] = (-rad - z[j]).ceil() as i64;
            hi[j] = (rad - z[j]).floor() as i64;
            if lo[j] > hi[j] {
                return;
            }
            cur[j] = lo[j];
        }
        loop {
            let mut r2 = 0.0;
            for j in 0..d {
                shifted[j] = z[j] + cur[j] as f64;
                r2 += shifted[j] * shifted[j];
            }
            if r2 <= rad2 {
                visit(&shifted[..d], r2);
            }
            let mut j = 0;
            loop {
                cur[j] += 1;
                if cur[j] <= hi[j] {
                    break;
                }
                cur[j] = lo[j];
                j += 1;
                if j == d {
                    return;
                }
            }
        }
    }

    fn image_value(&self, z: &[f64]) -> f64 {
        let mut sum = 0.0;
        self.for_each_image(z, |_, r2| sum += self.radial(r2));
        sum - self.split
    }

    /// Adds ∇ of the image part to `grad` and returns its value.
    fn image_value_grad(&self, z: &[f64], grad: &mut [f64]) -> f64 {
        let mut sum = 0.0;
        self.for_each_image(z, |v, r2| {
            let (f, fp_over_r) = self.radial_with_deriv(r2);
            sum += f;
            for (g, c) in grad.iter_mut().zip(v) {
                *g += fp_over_r * c;
            }
        });
        sum - self.split
    }

    /// Per-axis powers e^{2πi k x} for k = 0..=K.
    fn axis_powers(&self, x: &[f64], out: &mut Vec<Complex64>) {
        let k = self.truncation;
        out.clear();
        for &c in x {
            let step = Complex64::from_polar(1.0, 2.0 * PI * c);
            let mut cur = Complex64::new(1.0, 0.0);
            for _ in 0..=k {
                out.push(cur);
                cur *= step;
            }
            // Resynchronize against drift for long tables.
            if k > 64 {
                let base = out.len() - (k + 1);
                for m in (0..=k).step_by(32) {
                    out[base + m] = Complex64::from_polar(1.0, 2.0 * PI * c * m as f64);
                    for r in 1..32.min(k + 1 - m) {
                        out[base + m + r] = out[base + m + r - 1] * step;
                    }
                }
            }
        }
    }

    #[inline]
    fn mode_phase(&self, powers: &[Complex64], mode: &[i32]) -> Complex64 {
        let stride = self.truncation + 1;
        let mut acc = Complex64::new(1.0, 0.0);
        for (j, &kj) in mode.iter().enumerate() {
            let e = powers[j * stride + kj.unsigned_abs() as usize];
            acc *= if kj >= 0 { e } else { e.conj() };
        }
        acc
    }

    fn fourier_value(&self, z: &[f64]) -> f64 {
        let mut powers = Vec::new();
        self.axis_powers(z, &mut powers);
        self.modes
            .chunks_exact(self.dim)
            .zip(&self.weights)
            .map(|(m, w)| w * self.mode_phase(&powers, m).re)
            .sum()
    }

    fn fourier_value_grad(&self, z: &[f64], grad: &mut [f64]) -> f64 {
        let mut powers = Vec::new();
        self.axis_powers(z, &mut powers);
        let mut value = 0.0;
        for (m, w) in self.modes.chunks_exact(self.dim).zip(&self.weights) {
            let ph = self.mode_phase(&powers, m);
            value += w * ph.re;
            for (g, &kj) in grad.iter_mut().zip(m) {
                *g -= w * 2.0 * PI * kj as f64 * ph.im;
            }
        }
        value
    }

    /// G(z); `z` must be nonzero modulo the lattice.
    pub fn value(&self, z: &[f64]) -> f64 {
        let z: Vec<f64> = z.iter().map(|c| torus_delta(*c, 0.0)).collect();
        self.image_value(&z) + self.fourier_value(&z)
    }

    /// G(z), writing ∇G(z) into `grad`.
    pub fn value_grad(&self, z: &[f64], grad: &mut [f64]) -> f64 {
        let z: Vec<f64> = z.iter().map(|c| torus_delta(*c, 0.0)).collect();
        grad.iter_mut().for_each(|g| *g = 0.0);
        self.image_value_grad(&z, grad) + self.fourier_value_grad(&z, grad)
    }

    /// Structure factors S_k = Σ_j e^{2πik·x_j} for the stored modes.
    fn structure_factors(&self, config: &PointConfiguration) -> Vec<Complex64> {
        let tables = self.point_tables(config);
        let stride = self.dim * (self.truncation + 1);
        self.modes
            .par_chunks_exact(self.dim)
            .map(|m| {
                tables
                    .chunks_exact(stride)
                    .map(|p| self.mode_phase(p, m))
                    .sum::<Complex64>()
            })
            .collect()
    }

    fn point_tables(&self, config: &PointConfiguration) -> Vec<Complex64> {
        let per_point: Vec<Vec<Complex64>> = config
            .points()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|p| {
                let mut t = Vec::new();
                self.axis_powers(p, &mut t);
                t
            })
            .collect();
        per_point.concat()
    }

    /// Fourier part of Σ_{k≠ℓ} G(x_k − x_ℓ) via structure factors.
    fn fourier_pair_sum(&self, config: &PointConfiguration) -> f64 {
        let n = config.len() as f64;
        let s = self.structure_factors(config);
        s.iter()
            .zip(&self.weights)
            .map(|(sk, w)| w * (sk.norm_sqr() - n))
            .sum()
    }

    /// Fourier part of the pair sum and its gradient (added to `grad`).
    fn fourier_pair_sum_grad(&self, config: &PointConfiguration, grad: &mut [f64]) -> f64 {
        let n = config.len() as f64;
        let tables = self.point_tables(config);
        let stride = self.dim * (self.truncation + 1);
        let s: Vec<Complex64> = self
            .modes
            .par_chunks_exact(self.dim)
            .map(|m| {
                tables
                    .chunks_exact(stride)
                    .map(|p| self.mode_phase(p, m))
                    .sum::<Complex64>()
            })
            .collect();
        let d = self.dim;
        let per_point: Vec<Vec<f64>> = tables
            .par_chunks_exact(stride)
            .map(|p| {
                let mut g = vec![0.0; d];
                for ((m, w), sk) in self.modes.chunks_exact(d).zip(&self.weights).zip(&s) {
                    // ∂/∂x_i of W(|S|² − n) is −2W·2πk·Im(e^{2πik·x_i} conj S)
                    let im = (self.mode_phase(p, m) * sk.conj()).im;
                    for (gj, &kj) in g.iter_mut().zip(m) {
                        *gj -= 2.0 * w * 2.0 * PI * kj as f64 * im;
                    }
                }
                g
            })
            .collect();
        for (gi, pg) in grad.chunks_exact_mut(d).zip(per_point) {
            for (a, b) in gi.iter_mut().zip(pg) {
                *a += b;
            }
        }
        s.iter()
            .zip(&self.weights)
            .map(|(sk, w)| w * (sk.norm_sqr() - n))
            .sum()
    }
}

enum Imp {
    Green1,
    Torus(Box<TorusGreen>),
    Sphere2 {
        truncation: usize,
    },
    /// ‖x − y‖^{-s}; `log` selects −ln‖x − y‖ instead.
    Power {
        exponent: f64,
        log: bool,
    },
}

/// A kernel bound to a manifold, with any constants precomputed.
pub struct Kernel {
    spec: KernelSpec,
    manifold: Manifold,
    imp: Imp,
    shift: f64,
}

impl std::fmt::Debug for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Kernel")
            .field("spec", &self.spec)
            .field("manifold", &self.manifold)
            .field("shift", &self.shift)
            .finish()
    }
}

impl Kernel {
    pub fn new(spec: &KernelSpec, manifold: &Manifold) -> Result<Self> {
        Self::build(spec, manifold, None)
    }

    /// Like [`new`](Self::new), but an automatic heat split is chosen for
    /// pair sums over `n` points rather than for pointwise evaluation.
    pub fn for_pair_sums(spec: &KernelSpec, manifold: &Manifold, n: usize) -> Result<Self> {
        Self::build(spec, manifold, Some(n))
    }

    fn build(spec: &KernelSpec, manifold: &Manifold, n: Option<usize>) -> Result<Self> {
        spec.validate(manifold)?;
        let d = manifold.dim();
        let imp = match spec.kind {
            KernelKind::GreenTorus1 => Imp::Green1,
            KernelKind::GreenTorusSpectral {
                dim,
                truncation,
                split,
            } => {
                let split = split.unwrap_or_else(|| match n {
                    Some(n) => TorusGreen::balanced_split(dim, n),
                    None => DEFAULT_SPLIT,
                });
                Imp::Torus(Box::new(TorusGreen::new(dim, truncation, split)?))
            }
            KernelKind::GreenSphere2 { truncation } => Imp::Sphere2 { truncation },
            KernelKind::CoulombSphere { dim } => Imp::Power {
                exponent: (dim - 2) as f64,
                log: false,
            },
            KernelKind::LogSphere2 => Imp::Power {
                exponent: 0.0,
                log: true,
            },
            KernelKind::Riesz { exponent } => Imp::Power {
                exponent,
                log: false,
            },
        };
        let shift = match (spec.normalization, &imp) {
            (Normalization::Raw, _) => 0.0,
            (Normalization::MeanZero, Imp::Power { log: true, .. }) => 0.5 - 2f64.ln(),
            (Normalization::MeanZero, Imp::Power { exponent, .. }) => riesz_mean(d, *exponent)?,
            (Normalization::MeanZero, _) => 0.0,
        };
        Ok(Kernel {
            spec: *spec,
            manifold: *manifold,
            imp,
            shift,
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    /// Constant subtracted from the raw kernel (zero unless mean-zero).
    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn torus_green(&self) -> Option<&TorusGreen> {
        match &self.imp {
            Imp::Torus(g) => Some(g),
            _ => None,
        }
    }

    fn coincide(&self, a: &[f64], b: &[f64]) -> bool {
        match self.manifold.kind() {
            ManifoldKind::FlatTorus => a.iter().zip(b).all(|(x, y)| torus_delta(*x, *y) == 0.0),
            ManifoldKind::Sphere => a == b,
        }
    }

    /// K(a, b), or a singularity error when a singular kernel is evaluated at
    /// coincident points.
    pub fn eval(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if self.spec.is_singular() && self.coincide(a, b) {
            return Err(Error::Singularity { i: 0, j: 1 });
        }
        Ok(self.value(a, b))
    }

    /// K(a, b) without the coincidence check.
    pub fn value(&self, a: &[f64], b: &[f64]) -> f64 {
        let raw = match &self.imp {
            Imp::Green1 => green_t1_value(torus_delta(a[0], b[0]).abs()),
            Imp::Torus(g) => {
                let z: Vec<f64> = a.iter().zip(b).map(|(x, y)| torus_delta(*x, *y)).collect();
                g.image_value(&z) + g.fourier_value(&z)
            }
            Imp::Sphere2 { truncation } => legendre_green(*truncation, dot_clamped(a, b)).0,
            Imp::Power { exponent, log } => {
                let r = chordal_unchecked(a, b);
                if *log {
                    -r.ln()
                } else {
                    r.powf(-exponent)
                }
            }
        };
        raw - self.shift
    }

    /// K(a, b) and its ambient gradient with respect to `a`, written into
    /// `grad_a`. The gradient in `b` is the negative for torus kernels and
    /// follows by symmetry on spheres.
    pub fn value_grad(&self, a: &[f64], b: &[f64], grad_a: &mut [f64]) -> f64 {
        let raw = match &self.imp {
            Imp::Green1 => {
                let delta = torus_delta(a[0], b[0]);
                let u = delta.abs();
                grad_a[0] = if delta == 0.0 {
                    0.0
                } else {
                    (u - 0.5) * delta.signum()
                };
                green_t1_value(u)
            }
            Imp::Torus(g) => {
                let z: Vec<f64> = a.iter().zip(b).map(|(x, y)| torus_delta(*x, *y)).collect();
                grad_a.iter_mut().for_each(|c| *c = 0.0);
                g.image_value_grad(&z, grad_a) + g.fourier_value_grad(&z, grad_a)
            }
            Imp::Sphere2 { truncation } => {
                let (v, dv) = legendre_green(*truncation, dot_clamped(a, b));
                for (g, y) in grad_a.iter_mut().zip(b) {
                    *g = dv * y;
                }
                v
            }
            Imp::Power { exponent, log } => {
                let r2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                let (v, coef) = if *log {
                    (-0.5 * r2.ln(), -1.0 / r2)
                } else {
                    let v = r2.powf(-exponent / 2.0);
                    (v, -exponent * v / r2)
                };
                for ((g, x), y) in grad_a.iter_mut().zip(a).zip(b) {
                    *g = coef * (x - y);
                }
                v
            }
        };
        raw - self.shift
    }

    fn check_config(&self, config: &PointConfiguration) -> Result<()> {
        if config.manifold() != &self.manifold {
            return Err(Error::invalid(format!(
                "kernel is bound to {} but the configuration lives on {}",
                self.manifold,
                config.manifold()
            )));
        }
        Ok(())
    }

    /// Σ_{k≠ℓ} K(x_k, x_ℓ) and the minimum pairwise geodesic distance.
    pub fn pair_sum(&self, config: &PointConfiguration) -> Result<(f64, Option<f64>)> {
        self.check_config(config)?;
        let n = config.len();
        let singular = self.spec.is_singular();
        let torus = self.torus_green();
        let rows: Vec<Result<(f64, f64)>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let a = config.point(i);
                let mut sum = 0.0;
                let mut sep = f64::INFINITY;
                let mut z = [0.0f64; 8];
                for j in i + 1..n {
                    let b = config.point(j);
                    let dist = self.manifold.distance(a, b);
                    sep = sep.min(dist);
                    if singular && self.coincide(a, b) {
                        return Err(Error::Singularity { i, j });
                    }
                    sum += match torus {
                        Some(g) => {
                            let d = g.dim;
                            for k in 0..d {
                                z[k] = torus_delta(a[k], b[k]);
                            }
                            g.image_value(&z[..d]) - self.shift
                        }
                        None => self.value(a, b),
                    };
                }
                Ok((sum, sep))
            })
            .collect();
        let mut total = 0.0;
        let mut sep = f64::INFINITY;
        for row in rows {
            let (s, m) = row?;
            total += s;
            sep = sep.min(m);
        }
        total *= 2.0;
        if let Some(g) = torus {
            total += g.fourier_pair_sum(config);
        }
        Ok((total, (n >= 2).then_some(sep)))
    }

    /// Σ_{k≠ℓ} K(x_k, x_ℓ) and its ambient gradient with respect to every
    /// point, laid out like the configuration coordinates.
    pub fn pair_sum_grad(&self, config: &PointConfiguration) -> Result<(f64, Vec<f64>)> {
        self.check_config(config)?;
        let n = config.len();
        let s = self.manifold.ambient_dim();
        let singular = self.spec.is_singular();
        let torus = self.torus_green();
        // Full rows (j over all of 0..n) keep each point's gradient local to
        // one task; the energy is then half the sum of row values.
        let rows: Vec<Result<(f64, Vec<f64>)>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let a = config.point(i);
                let mut sum = 0.0;
                let mut grad = vec![0.0; s];
                let mut g = vec![0.0; s];
                for j in (0..n).filter(|&j| j != i) {
                    let b = config.point(j);
                    if singular && self.coincide(a, b) {
                        return Err(Error::Singularity {
                            i: i.min(j),
                            j: i.max(j),
                        });
                    }
                    let v = match torus {
                        Some(tg) => {
                            let z: Vec<f64> =
                                a.iter().zip(b).map(|(x, y)| torus_delta(*x, *y)).collect();
                            g.iter_mut().for_each(|c| *c = 0.0);
                            tg.image_value_grad(&z, &mut g) - self.shift
                        }
                        None => self.value_grad(a, b, &mut g),
                    };
                    sum += v;
                    for (acc, gc) in grad.iter_mut().zip(&g) {
                        *acc += 2.0 * gc;
                    }
                }
                Ok((sum, grad))
            })
            .collect();
        let mut total = 0.0;
        let mut grad = Vec::with_capacity(n * s);
        for row in rows {
            let (v, g) = row?;
            total += v;
            grad.extend(g);
        }
        if let Some(tg) = torus {
            total += tg.fourier_pair_sum_grad(config, &mut grad);
        }
        Ok((total, grad))
    }
}

/// Pair energy Σ_{k≠ℓ} K(x_k, x_ℓ) over ordered pairs.
pub fn pair_energy(config: &PointConfiguration, spec: &KernelSpec) -> Result<EnergyReport> {
    let kernel = Kernel::for_pair_sums(spec, config.manifold(), config.len())?;
    energy_report(config, &kernel)
}

/// Pair energy with an already constructed kernel.
pub fn energy_report(config: &PointConfiguration, kernel: &Kernel) -> Result<EnergyReport> {
    let (total, min_separation) = kernel.pair_sum(config)?;
    let n = config.len();
    Ok(EnergyReport {
        kernel: *kernel.spec(),
        n,
        total,
        normalized: if n == 0 { 0.0 } else { total / (n * n) as f64 },
        min_separation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::uniform_sample;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn green_t1_values() {
        assert_abs_diff_eq!(green_t1(0.0).unwrap(), 1.0 / 12.0, epsilon = 1e-16);
        assert_abs_diff_eq!(green_t1(0.5).unwrap(), -1.0 / 24.0, epsilon = 1e-16);
        assert!(green_t1(1.5).is_err());
        assert!(green_t1(-0.1).is_err());
        // ∫₀¹ G = 1/6 − 1/4 + 1/12 = 0, checked by Simpson's rule (exact for quadratics).
        let simpson =
            (green_t1(0.0).unwrap() + 4.0 * green_t1(0.5).unwrap() + green_t1(1.0).unwrap()) / 6.0;
        assert_abs_diff_eq!(simpson, 0.0, epsilon = 1e-16);
    }

    #[test]
    fn coulomb_values() {
        let a = [1.0, 0.0, 0.0, 0.0];
        let b = [-1.0, 0.0, 0.0, 0.0];
        assert_abs_diff_eq!(coulomb_sphere(&a, &b).unwrap(), 0.5);
        let a5 = [1.0, 0.0, 0.0, 0.0, 0.0];
        let c5 = [0.0, 1.0, 0.0, 0.0, 0.0];
        assert_relative_eq!(coulomb_sphere(&a5, &c5).unwrap(), 0.5, max_relative = 1e-15);
        assert!(matches!(
            coulomb_sphere(&a, &a),
            Err(Error::Singularity { .. })
        ));
    }

    #[test]
    fn cd_matches_closed_form() {
        // c_d = (|S^{d-1}|/|S^d|) · 4/d
        for d in 3..=6 {
            let closed = sphere_area(d - 1) / sphere_area(d) * 4.0 / d as f64;
            assert_relative_eq!(cd_constant(d).unwrap(), closed, max_relative = 1e-10);
        }
        assert_relative_eq!(
            cd_constant(3).unwrap(),
            8.0 / (3.0 * PI),
            max_relative = 1e-10
        );
        assert!(cd_constant(2).is_err());
    }

    #[test]
    fn pair_energy_examples() {
        let m = Manifold::torus(1);
        let c = PointConfiguration::from_flat(m, vec![0.0, 0.5]).unwrap();
        let r = pair_energy(&c, &KernelSpec::new(KernelKind::GreenTorus1)).unwrap();
        assert_abs_diff_eq!(r.total, -1.0 / 12.0, epsilon = 1e-16);
        assert_eq!(r.min_separation, Some(0.5));

        let one = PointConfiguration::from_flat(m, vec![0.3]).unwrap();
        let r = pair_energy(&one, &KernelSpec::new(KernelKind::GreenTorus1)).unwrap();
        assert_eq!(r.total, 0.0);
        assert_eq!(r.min_separation, None);

        let s3 = Manifold::sphere(3);
        let c = PointConfiguration::from_flat(s3, vec![1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0])
            .unwrap();
        let r = pair_energy(&c, &KernelSpec::new(KernelKind::CoulombSphere { dim: 3 })).unwrap();
        assert_abs_diff_eq!(r.total, 1.0, epsilon = 1e-15);
        assert_relative_eq!(r.normalized * 4.0, r.total, max_relative = 1e-12);
    }

    #[test]
    fn singular_kernels_reject_duplicates() {
        let s3 = Manifold::sphere(3);
        let p = vec![0.0, 1.0, 0.0, 0.0];
        let c =
            PointConfiguration::from_flat(s3, [p.clone(), vec![1.0, 0.0, 0.0, 0.0], p].concat())
                .unwrap();
        let err =
            pair_energy(&c, &KernelSpec::new(KernelKind::CoulombSphere { dim: 3 })).unwrap_err();
        assert!(matches!(err, Error::Singularity { i: 0, j: 2 }));
        let t1 = PointConfiguration::from_flat(Manifold::torus(1), vec![0.2, 0.2]).unwrap();
        let r = pair_energy(&t1, &KernelSpec::new(KernelKind::GreenTorus1)).unwrap();
        assert_abs_diff_eq!(r.total, 2.0 / 12.0, epsilon = 1e-16);
    }

    #[test]
    fn kernel_validation() {
        let s2 = Manifold::sphere(2);
        assert!(KernelSpec::new(KernelKind::CoulombSphere { dim: 2 })
            .validate(&s2)
            .is_err());
        assert!(KernelSpec::new(KernelKind::GreenTorus1)
            .validate(&s2)
            .is_err());
        assert!(KernelSpec::mean_zero(KernelKind::Riesz { exponent: 2.0 })
            .validate(&s2)
            .is_err());
        assert!(KernelSpec::mean_zero(KernelKind::Riesz { exponent: 1.0 })
            .validate(&s2)
            .is_ok());
        assert!(KernelSpec::green_torus(3)
            .validate(&Manifold::torus(2))
            .is_err());
    }

    #[test]
    fn legendre_series_matches_closed_form() {
        // Σ_{ℓ≥1} (2ℓ+1)/(4πℓ(ℓ+1)) P_ℓ(t) = −(ln(1−t) − ln 2 + 1)/(4π)
        for t in [-0.6f64, 0.0, 0.4, 0.8] {
            let exact = -((1.0 - t).ln() - 2f64.ln() + 1.0) / (4.0 * PI);
            let (v, _) = legendre_green(20_000, t);
            assert_abs_diff_eq!(v, exact, epsilon = 2e-5);
        }
    }

    #[test]
    fn spectral_green_is_split_independent() {
        let z = [0.31, -0.12, 0.4];
        let a = TorusGreen::new(3, None, DEFAULT_SPLIT).unwrap().value(&z);
        let b = TorusGreen::new(3, None, 0.003).unwrap().value(&z);
        let c = TorusGreen::new(3, None, 0.02).unwrap().value(&z);
        assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        assert_abs_diff_eq!(a, c, epsilon = 1e-9);
        let z2 = [0.5, 0.5];
        let a = TorusGreen::new(2, None, DEFAULT_SPLIT).unwrap().value(&z2);
        let b = TorusGreen::new(2, None, 0.004).unwrap().value(&z2);
        assert_abs_diff_eq!(a, b, epsilon = 1e-9);
    }

    #[test]
    fn spectral_pair_sum_matches_pointwise() {
        let m = Manifold::torus(3);
        let c = uniform_sample(m, 12, 4);
        let spec = KernelSpec::green_torus(3);
        let fast = Kernel::for_pair_sums(&spec, &m, 12).unwrap();
        let slow = Kernel::new(&spec, &m).unwrap();
        let (total, _) = fast.pair_sum(&c).unwrap();
        let mut brute = 0.0;
        for i in 0..12 {
            for j in 0..12 {
                if i != j {
                    brute += slow.value(c.point(i), c.point(j));
                }
            }
        }
        assert_relative_eq!(total, brute, max_relative = 1e-9);
        let (total2, grad) = fast.pair_sum_grad(&c).unwrap();
        assert_relative_eq!(total, total2, max_relative = 1e-12);
        let mut g = vec![0.0; 3];
        let mut brute_grad = [0.0; 3];
        for j in 1..12 {
            slow.value_grad(c.point(0), c.point(j), &mut g);
            for k in 0..3 {
                brute_grad[k] += 2.0 * g[k];
            }
        }
        for k in 0..3 {
            assert_abs_diff_eq!(grad[k], brute_grad[k], epsilon = 1e-8);
        }
    }
}

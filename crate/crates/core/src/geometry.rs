//! Ambient spaces, point configurations and the distance primitives used by
//! every other module.
//!
//! The flat torus is the unit cell `[0,1)^d` with volume 1, so its normalized
//! volume measure is plain Lebesgue measure on the cell. Sphere points are
//! stored as unit vectors in R^{d+1}.

use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::sphere_area;

/// Sphere points must have unit norm to within this tolerance.
pub const UNIT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ManifoldKind {
    FlatTorus,
    Sphere,
}

impl ManifoldKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ManifoldKind::FlatTorus => "torus",
            ManifoldKind::Sphere => "sphere",
        }
    }
}

impl std::str::FromStr for ManifoldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "torus" | "flat-torus" => Ok(ManifoldKind::FlatTorus),
            "sphere" => Ok(ManifoldKind::Sphere),
            other => Err(Error::invalid(format!("unknown manifold kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Manifold {
    kind: ManifoldKind,
    dim: usize,
    volume: f64,
}

impl Manifold {
    pub fn new(kind: ManifoldKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("manifold dimension must be at least 1"));
        }
        let volume = match kind {
            ManifoldKind::FlatTorus => 1.0,
            ManifoldKind::Sphere => sphere_area(dim),
        };
        Ok(Manifold { kind, dim, volume })
    }

    pub fn torus(dim: usize) -> Self {
        Self::new(ManifoldKind::FlatTorus, dim).expect("torus dimension must be positive")
    }

    pub fn sphere(dim: usize) -> Self {
        Self::new(ManifoldKind::Sphere, dim).expect("sphere dimension must be positive")
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    /// Intrinsic dimension d.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Number of stored coordinates per point.
    pub fn ambient_dim(&self) -> usize {
        match self.kind {
            ManifoldKind::FlatTorus => self.dim,
            ManifoldKind::Sphere => self.dim + 1,
        }
    }

    pub fn is_torus(&self) -> bool {
        self.kind == ManifoldKind::FlatTorus
    }

    pub fn is_sphere(&self) -> bool {
        self.kind == ManifoldKind::Sphere
    }

    /// Geodesic diameter: √d/2 on the unit torus, π on the sphere.
    pub fn diameter(&self) -> f64 {
        match self.kind {
            ManifoldKind::FlatTorus => (self.dim as f64).sqrt() / 2.0,
            ManifoldKind::Sphere => PI,
        }
    }

    /// Geodesic distance between two stored points, without validation.
    #[inline]
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.kind {
            ManifoldKind::FlatTorus => torus_distance_unchecked(a, b),
            ManifoldKind::Sphere => sphere_geodesic_unchecked(a, b),
        }
    }
}

impl fmt::Display for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ManifoldKind::FlatTorus => write!(f, "T^{}", self.dim),
            ManifoldKind::Sphere => write!(f, "S^{}", self.dim),
        }
    }
}

/// An ordered list of points on a manifold, stored as a flat coordinate array.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointConfiguration {
    manifold: Manifold,
    coords: Vec<f64>,
}

impl PointConfiguration {
    /// Builds a configuration from flat coordinates. Torus coordinates are
    /// wrapped into `[0,1)`; sphere points must already be unit vectors.
    pub fn from_flat(manifold: Manifold, mut coords: Vec<f64>) -> Result<Self> {
        let stride = manifold.ambient_dim();
        if !coords.len().is_multiple_of(stride) {
            return Err(Error::invalid(format!(
                "coordinate count {} is not a multiple of {stride}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("coordinates must be finite"));
        }
        match manifold.kind {
            ManifoldKind::FlatTorus => coords.iter_mut().for_each(|c| *c = wrap_unit(*c)),
            ManifoldKind::Sphere => {
                for (i, p) in coords.chunks_exact(stride).enumerate() {
                    let norm = norm(p);
                    if (norm - 1.0).abs() > UNIT_TOLERANCE {
                        return Err(Error::invalid(format!(
                            "point {i} has norm {norm}, expected a unit vector"
                        )));
                    }
                }
            }
        }
        Ok(PointConfiguration { manifold, coords })
    }

    /// Like [`from_flat`](Self::from_flat) but projects sphere points onto the
    /// unit sphere instead of rejecting them.
    pub fn from_flat_normalizing(manifold: Manifold, mut coords: Vec<f64>) -> Result<Self> {
        if manifold.is_sphere() {
            let stride = manifold.ambient_dim();
            for (i, p) in coords.chunks_exact_mut(stride).enumerate() {
                let n = norm(p);
                if n == 0.0 || !n.is_finite() {
                    return Err(Error::invalid(format!("point {i} cannot be normalized")));
                }
                p.iter_mut().for_each(|c| *c /= n);
            }
        }
        Self::from_flat(manifold, coords)
    }

    pub fn from_points(manifold: Manifold, points: &[Vec<f64>]) -> Result<Self> {
        let stride = manifold.ambient_dim();
        if let Some(p) = points.iter().find(|p| p.len() != stride) {
            return Err(Error::invalid(format!(
                "point has {} coordinates, expected {stride}",
                p.len()
            )));
        }
        Self::from_flat(manifold, points.concat())
    }

    pub fn empty(manifold: Manifold) -> Self {
        PointConfiguration {
            manifold,
            coords: Vec::new(),
        }
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.manifold.ambient_dim()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let s = self.manifold.ambient_dim();
        &self.coords[i * s..(i + 1) * s]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.manifold.ambient_dim())
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    /// Geodesic distance between points `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.manifold.distance(self.point(i), self.point(j))
    }

    /// Minimum pairwise geodesic distance; `None` when fewer than two points.
    pub fn min_pair_distance(&self) -> Option<f64> {
        let n = self.len();
        if n < 2 {
            return None;
        }
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                best = best.min(self.distance(i, j));
            }
        }
        Some(best)
    }

    /// Writes the configuration as CSV with a `# manifold=... dim=... n=...`
    /// header line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "# manifold={} dim={} n={}",
            self.manifold.kind.as_str(),
            self.manifold.dim,
            self.len()
        )?;
        for p in self.points() {
            let row: Vec<String> = p.iter().map(|c| format!("{c:?}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Reads the CSV format produced by [`write_csv`](Self::write_csv).
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut manifold = None;
        let mut declared_n = None;
        let mut coords = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::invalid(format!("reading csv: {e}")))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('#') {
                if manifold.is_none() && header.contains("manifold=") {
                    let (m, n) = parse_header(header)?;
                    manifold = Some(m);
                    declared_n = n;
                }
                continue;
            }
            let m = manifold.ok_or_else(|| {
                Error::invalid("csv is missing the `# manifold=<kind> dim=<d>` header")
            })?;
            let row: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::invalid(format!("line {}: {e}", lineno + 1)))?;
            if row.len() != m.ambient_dim() {
                return Err(Error::invalid(format!(
                    "line {}: expected {} columns, found {}",
                    lineno + 1,
                    m.ambient_dim(),
                    row.len()
                )));
            }
            coords.extend(row);
        }
        let manifold = manifold.ok_or_else(|| Error::invalid("csv has no header"))?;
        let config = Self::from_flat(manifold, coords)?;
        if let Some(n) = declared_n {
            if n != config.len() {
                return Err(Error::invalid(format!(
                    "header declares n={n} but {} rows were read",
                    config.len()
                )));
            }
        }
        Ok(config)
    }
}

fn parse_header(header: &str) -> Result<(Manifold, Option<usize>)> {
    let mut kind = None;
    let mut dim = None;
    let mut n = None;
    for field in header.split_whitespace() {
        let Some((key, value)) = field.split_once('=') else {
            continue;
        };
        match key {
            "manifold" => kind = Some(value.parse::<ManifoldKind>()?),
            "dim" => {
                dim = Some(
                    value
                        .parse::<usize>()
                        .map_err(|e| Error::invalid(format!("bad dim `{value}`: {e}")))?,
                )
            }
            "n" => {
                n = Some(
                    value
                        .parse::<usize>()
                        .map_err(|e| Error::invalid(format!("bad n `{value}`: {e}")))?,
                )
            }
            _ => {}
        }
    }
    let kind = kind.ok_or_else(|| Error::invalid("header lacks manifold="))?;
    let dim = dim.ok_or_else(|| Error::invalid("header lacks dim="))?;
    Ok((Manifold::new(kind, dim)?, n))
}

#[inline]
pub(crate) fn wrap_unit(x: f64) -> f64 {
    let w = x - x.floor();
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Signed minimal-image displacement in `[-1/2, 1/2)` for one torus axis.
#[inline]
pub fn torus_delta(a: f64, b: f64) -> f64 {
    let d = a - b;
    d - (d + 0.5).floor()
}

#[inline]
pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn torus_distance_unchecked(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = torus_delta(*x, *y);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

#[inline]
pub(crate) fn chordal_unchecked(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[inline]
fn sphere_geodesic_unchecked(a: &[f64], b: &[f64]) -> f64 {
    // 2 atan2(|a-b|, |a+b|) is accurate at both ends of [0, π].
    let mut diff = 0.0;
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b) {
        diff += (x - y) * (x - y);
        sum += (x + y) * (x + y);
    }
    2.0 * diff.sqrt().atan2(sum.sqrt())
}

/// Flat geodesic distance on the unit torus: per-axis wrap-around distance
/// combined in the Euclidean norm.
pub fn torus_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::invalid(format!(
            "torus points have mismatched dimensions {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(torus_distance_unchecked(a, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SphereMetric {
    Chordal,
    Geodesic,
}

pub fn sphere_distance(a: &[f64], b: &[f64], metric: SphereMetric) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::invalid("sphere points have mismatched dimensions"));
    }
    for p in [a, b] {
        if (norm(p) - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::invalid(format!(
                "sphere point has norm {}, expected 1",
                norm(p)
            )));
        }
    }
    Ok(match metric {
        SphereMetric::Chordal => chordal_unchecked(a, b),
        SphereMetric::Geodesic => sphere_geodesic_unchecked(a, b),
    })
}

/// `n` independent uniform points, deterministic in `seed`.
pub fn uniform_sample(manifold: Manifold, n: usize, seed: u64) -> PointConfiguration {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stride = manifold.ambient_dim();
    let mut coords = Vec::with_capacity(n * stride);
    match manifold.kind {
        ManifoldKind::FlatTorus => {
            for _ in 0..n * stride {
                coords.push(rng.gen::<f64>());
            }
        }
        ManifoldKind::Sphere => {
            let mut p = vec![0.0; stride];
            for _ in 0..n {
                loop {
                    p.iter_mut().for_each(|c| *c = rng.sample(StandardNormal));
                    let r = norm(&p);
                    if r > 1e-8 {
                        coords.extend(p.iter().map(|c| c / r));
                        break;
                    }
                }
            }
        }
    }
    PointConfiguration { manifold, coords }
}

/// `n` points drawn uniformly from a geodesic ball of the given radius around
/// a random center; used to build strongly clustered test configurations.
pub fn cluster_sample(
    manifold: Manifold,
    n: usize,
    radius: f64,
    seed: u64,
) -> Result<PointConfiguration> {
    if !(radius > 0.0) {
        return Err(Error::invalid("cluster radius must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = uniform_sample(manifold, 1, rng.gen()).into_coords();
    let stride = manifold.ambient_dim();
    let mut coords = Vec::with_capacity(n * stride);
    match manifold.kind {
        ManifoldKind::FlatTorus => {
            let d = manifold.dim;
            let mut off = vec![0.0; d];
            for _ in 0..n {
                loop {
                    off.iter_mut()
                        .for_each(|c| *c = rng.gen_range(-radius..radius));
                    if norm(&off) <= radius {
                        break;
                    }
                }
                coords.extend(center.iter().zip(&off).map(|(c, o)| wrap_unit(c + o)));
            }
        }
        ManifoldKind::Sphere => {
            // Uniform in a tangent ball, then mapped with the exponential map.
            let d = manifold.dim;
            let mut v = vec![0.0; stride];
            for _ in 0..n {
                loop {
                    v.iter_mut()
                        .for_each(|c| *c = rng.gen_range(-radius..radius));
                    let v_t = tangent_project(&center, &v);
                    let r = norm(&v_t);
                    if r <= radius && r > 0.0 {
                        // Reject extra samples so the density follows sin^{d-1}.
                        let accept = (r.sin() / r).powi(d as i32 - 1);
                        if rng.gen::<f64>() <= accept {
                            let (s, c) = r.sin_cos();
                            coords.extend(center.iter().zip(&v_t).map(|(x, t)| c * x + s * t / r));
                            break;
                        }
                    }
                }
            }
            return PointConfiguration::from_flat_normalizing(manifold, coords);
        }
    }
    PointConfiguration::from_flat(manifold, coords)
}

/// The `m^d` centers of the cubes of side `1/m` partitioning the unit torus.
pub fn grid_torus(m: usize, d: usize) -> Result<PointConfiguration> {
    if m == 0 || d == 0 {
        return Err(Error::invalid("grid needs m >= 1 and d >= 1"));
    }
    let n = m
        .checked_pow(d as u32)
        .ok_or_else(|| Error::invalid("grid size overflows"))?;
    let mut coords = Vec::with_capacity(n * d);
    let mut idx = vec![0usize; d];
    for _ in 0..n {
        coords.extend(
            idx.iter()
                .rev()
                .map(|&i| (2 * i + 1) as f64 / (2 * m) as f64),
        );
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < m {
                break;
            }
            *slot = 0;
        }
    }
    PointConfiguration::from_flat(Manifold::torus(d), coords)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LowDiscrepancy {
    /// x_k = frac(k α), k = 1..n.
    Kronecker { alpha: f64 },
    /// Radical inverse of k = 1..n in the given base.
    VanDerCorput { base: u32 },
}

pub fn lowdisc_sequence(kind: LowDiscrepancy, n: usize) -> Result<PointConfiguration> {
    let coords: Vec<f64> = match kind {
        LowDiscrepancy::Kronecker { alpha } => {
            if !alpha.is_finite() {
                return Err(Error::invalid("rotation number must be finite"));
            }
            (1..=n).map(|k| wrap_unit(k as f64 * alpha)).collect()
        }
        LowDiscrepancy::VanDerCorput { base } => {
            if base < 2 {
                return Err(Error::invalid(format!("van der Corput base {base} < 2")));
            }
            (1..=n)
                .map(|k| radical_inverse(k as u64, base as u64))
                .collect()
        }
    };
    PointConfiguration::from_flat(Manifold::torus(1), coords)
}

fn radical_inverse(mut k: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut x = 0.0;
    while k > 0 {
        x += (k % base) as f64 * scale;
        k /= base;
        scale *= inv;
    }
    x
}

/// Removes the normal component: v - ⟨v, x⟩ x.
pub fn tangent_project(x: &[f64], v: &[f64]) -> Vec<f64> {
    let s = dot(v, x);
    v.iter().zip(x).map(|(vi, xi)| vi - s * xi).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn torus_distance_examples() {
        assert_abs_diff_eq!(
            torus_distance(&[0.1], &[0.9]).unwrap(),
            0.2,
            epsilon = 1e-15
        );
        assert_eq!(torus_distance(&[0.3, 0.4], &[0.3, 0.4]).unwrap(), 0.0);
        assert_abs_diff_eq!(
            torus_distance(&[0.0, 0.0], &[0.5, 0.5]).unwrap(),
            0.5f64.sqrt(),
            epsilon = 1e-15
        );
        assert!(matches!(
            torus_distance(&[0.1], &[0.1, 0.2]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn sphere_distance_examples() {
        let a = [1.0, 0.0, 0.0];
        let b = [-1.0, 0.0, 0.0];
        let c = [0.0, 1.0, 0.0];
        assert_abs_diff_eq!(sphere_distance(&a, &b, SphereMetric::Chordal).unwrap(), 2.0);
        assert_abs_diff_eq!(
            sphere_distance(&a, &c, SphereMetric::Chordal).unwrap(),
            2f64.sqrt(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            sphere_distance(&a, &c, SphereMetric::Geodesic).unwrap(),
            PI / 2.0,
            epsilon = 1e-15
        );
        assert_eq!(sphere_distance(&a, &a, SphereMetric::Chordal).unwrap(), 0.0);
        assert_eq!(
            sphere_distance(&a, &a, SphereMetric::Geodesic).unwrap(),
            0.0
        );
        assert!(sphere_distance(&[1.0, 0.1, 0.0], &a, SphereMetric::Chordal).is_err());
    }

    #[test]
    fn manifold_volumes() {
        assert_eq!(Manifold::torus(3).volume(), 1.0);
        assert!((Manifold::sphere(2).volume() - 4.0 * PI).abs() < 1e-12);
        assert!(Manifold::new(ManifoldKind::Sphere, 0).is_err());
    }

    #[test]
    fn grid_examples() {
        assert_eq!(grid_torus(2, 1).unwrap().coords(), &[0.25, 0.75]);
        let g = grid_torus(3, 1).unwrap();
        for (got, want) in g.coords().iter().zip([1.0 / 6.0, 0.5, 5.0 / 6.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
        let g = grid_torus(2, 2).unwrap();
        assert_eq!(g.len(), 4);
        assert_abs_diff_eq!(g.min_pair_distance().unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn grid_separation_and_mean() {
        for (m, d) in [(3, 1), (4, 2), (3, 3), (5, 2)] {
            let g = grid_torus(m, d).unwrap();
            assert_eq!(g.len(), m.pow(d as u32));
            assert_abs_diff_eq!(
                g.min_pair_distance().unwrap(),
                1.0 / m as f64,
                epsilon = 1e-12
            );
            for axis in 0..d {
                let mean = g.points().map(|p| p[axis]).sum::<f64>() / g.len() as f64;
                assert_abs_diff_eq!(mean, 0.5, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn low_discrepancy_examples() {
        let v = lowdisc_sequence(LowDiscrepancy::VanDerCorput { base: 2 }, 3).unwrap();
        assert_eq!(v.coords(), &[0.5, 0.25, 0.75]);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let k = lowdisc_sequence(LowDiscrepancy::Kronecker { alpha: phi }, 2).unwrap();
        assert_abs_diff_eq!(k.coords()[0], 0.61803, epsilon = 1e-5);
        assert_abs_diff_eq!(k.coords()[1], 0.23607, epsilon = 1e-5);
        assert!(lowdisc_sequence(LowDiscrepancy::VanDerCorput { base: 1 }, 3).is_err());
        for kind in [
            LowDiscrepancy::VanDerCorput { base: 3 },
            LowDiscrepancy::Kronecker { alpha: 2f64.sqrt() },
        ] {
            let one = lowdisc_sequence(kind, 1).unwrap();
            let two = lowdisc_sequence(kind, 2).unwrap();
            assert_eq!(one.point(0), two.point(0));
        }
    }

    #[test]
    fn tangent_projection_examples() {
        let x = [1.0, 0.0, 0.0];
        assert_eq!(tangent_project(&x, &[1.0, 1.0, 0.0]), vec![0.0, 1.0, 0.0]);
        assert!(norm(&tangent_project(&x, &[3.0, 0.0, 0.0])) == 0.0);
        let v = [0.0, 0.3, -0.2];
        assert_eq!(tangent_project(&x, &v), v.to_vec());
    }

    #[test]
    fn sampling_is_deterministic_and_wrapped() {
        let m = Manifold::torus(3);
        assert_eq!(uniform_sample(m, 50, 7), uniform_sample(m, 50, 7));
        assert_ne!(uniform_sample(m, 50, 7), uniform_sample(m, 50, 8));
        assert!(uniform_sample(m, 0, 1).is_empty());
        let s = uniform_sample(Manifold::sphere(3), 20, 3);
        for p in s.points() {
            assert!((norm(p) - 1.0).abs() < 1e-12);
        }
        let c = PointConfiguration::from_flat(Manifold::torus(1), vec![1.25, -0.25, 1.0]).unwrap();
        assert_eq!(c.coords(), &[0.25, 0.75, 0.0]);
    }

    #[test]
    fn sphere_sample_octant_chi_square() {
        // 8 octants, 10^4 points: chi-square with 7 dof, p > 0.001 ⇔ stat < 24.32.
        let s = uniform_sample(Manifold::sphere(2), 10_000, 2024);
        let mut counts = [0usize; 8];
        for p in s.points() {
            let idx =
                (p[0] > 0.0) as usize | ((p[1] > 0.0) as usize) << 1 | ((p[2] > 0.0) as usize) << 2;
            counts[idx] += 1;
        }
        let expected = 10_000.0 / 8.0;
        let stat: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(stat < 24.322, "chi-square {stat}");
    }

    #[test]
    fn cluster_points_stay_in_ball() {
        let c = cluster_sample(Manifold::torus(3), 64, 0.01, 5).unwrap();
        for i in 0..c.len() {
            for j in 0..c.len() {
                assert!(c.distance(i, j) <= 0.02 + 1e-12);
            }
        }
        let s = cluster_sample(Manifold::sphere(3), 32, 0.05, 5).unwrap();
        for i in 0..s.len() {
            assert!(s.distance(0, i) <= 0.1 + 1e-12);
        }
    }

    #[test]
    fn csv_round_trip() {
        let s = uniform_sample(Manifold::sphere(2), 5, 1);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# manifold=sphere dim=2 n=5\n"));
        let back = PointConfiguration::read_csv(&buf[..]).unwrap();
        assert_eq!(back, s);
        assert!(PointConfiguration::read_csv("0.1,0.2\n".as_bytes()).is_err());
        assert!(
            PointConfiguration::read_csv("# manifold=torus dim=2 n=2\n0.1,0.2\n".as_bytes())
                .is_err()
        );
    }

    fn torus_point(d: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0..1.0f64, d)
    }

    fn sphere_point() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-1.0..1.0f64, 3)
            .prop_filter("nonzero", |v| norm(v) > 1e-3)
            .prop_map(|v| {
                let n = norm(&v);
                v.into_iter().map(|c| c / n).collect()
            })
    }

    proptest! {
        #[test]
        fn torus_metric_axioms(a in torus_point(3), b in torus_point(3), c in torus_point(3)) {
            let ab = torus_distance(&a, &b).unwrap();
            let ba = torus_distance(&b, &a).unwrap();
            let bc = torus_distance(&b, &c).unwrap();
            let ac = torus_distance(&a, &c).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-12);
            prop_assert!(ac <= ab + bc + 1e-12);
            prop_assert!(ab <= 3f64.sqrt() / 2.0 + 1e-12);
        }

        #[test]
        fn sphere_metric_axioms(a in sphere_point(), b in sphere_point(), c in sphere_point()) {
            for metric in [SphereMetric::Chordal, SphereMetric::Geodesic] {
                let ab = sphere_distance(&a, &b, metric).unwrap();
                let ba = sphere_distance(&b, &a, metric).unwrap();
                let bc = sphere_distance(&b, &c, metric).unwrap();
                let ac = sphere_distance(&a, &c, metric).unwrap();
                prop_assert!((ab - ba).abs() <= 1e-12);
                prop_assert!(ac <= ab + bc + 1e-12);
            }
            let ch = sphere_distance(&a, &b, SphereMetric::Chordal).unwrap();
            let ge = sphere_distance(&a, &b, SphereMetric::Geodesic).unwrap();
            prop_assert!(ch <= ge + 1e-12);
            prop_assert!(ge <= PI / 2.0 * ch + 1e-12);
        }

        #[test]
        fn projection_is_tangent(x in sphere_point(), v in proptest::collection::vec(-5.0..5.0f64, 3)) {
            let t = tangent_project(&x, &v);
            prop_assert!(dot(&t, &x).abs() <= 1e-12);
            let tt = tangent_project(&x, &t);
            for (p, q) in t.iter().zip(&tt) {
                prop_assert!((p - q).abs() <= 1e-12);
            }
        }
    }
}

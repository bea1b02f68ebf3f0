//! Equal-weight node sets standing in for the uniform measure.
//!
//! Every node set comes with a partition of the manifold into cells of equal
//! mass, one per node. Coupling each cell uniformly to its node gives
//! W₂(nodes, dx) ≤ (mean over cells of ∫ d(y, node)²)^{1/2}, the `rms_radius`.
//!
//! Tori use the cell-centred grid. Spheres S² and S³ use rank-1 lattices in a
//! parameter cube pushed forward by a measure-preserving map, so the lattice
//! Voronoi cells in the cube map to equal-mass cells on the sphere. The first
//! parameter is folded by the tent map u ↦ 1 − |2u − 1|, which keeps the map
//! continuous across the periodic boundary of the cube; without it, cells
//! straddling u = 0 would be split between the two poles.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{grid_torus, Manifold, PointConfiguration};

/// Cell offsets sampled per lattice to estimate the radii.
const CELL_PROBES: usize = 256;

#[derive(Debug, Clone)]
pub struct QuadratureNodes {
    pub nodes: PointConfiguration,
    /// Bound on W₂ between the equal-weight nodes and the uniform measure.
    pub rms_radius: f64,
    /// Largest distance from a cell point to its node.
    pub max_radius: f64,
    /// False when the radii are Monte Carlo estimates.
    pub exact: bool,
}

impl QuadratureNodes {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Sphere node sets keyed by (d, M); the S³ lattice search is costly.
type NodeCache = HashMap<(usize, usize), Arc<QuadratureNodes>>;

/// Node set with at least `m` nodes (the count is rounded up to the nearest
/// admissible size: a perfect d-th power on T^d, a Fibonacci number on S²).
pub fn quadrature_nodes(manifold: &Manifold, m: usize) -> Result<QuadratureNodes> {
    if m == 0 {
        return Err(Error::invalid("quadrature needs at least one node"));
    }
    let d = manifold.dim();
    if manifold.is_torus() {
        let mut side = (m as f64).powf(1.0 / d as f64).round().max(1.0) as usize;
        while side.checked_pow(d as u32).is_some_and(|v| v < m) {
            side += 1;
        }
        let nodes = grid_torus(side, d)?;
        let h = 1.0 / side as f64;
        return Ok(QuadratureNodes {
            nodes,
            rms_radius: h * (d as f64 / 12.0).sqrt(),
            max_radius: h * (d as f64).sqrt() / 2.0,
            exact: true,
        });
    }
    match d {
        1 => {
            let coords = (0..m)
                .flat_map(|i| {
                    let a = TAU * (i as f64 + 0.5) / m as f64;
                    [a.cos(), a.sin()]
                })
                .collect();
            let h = PI / m as f64;
            Ok(QuadratureNodes {
                nodes: PointConfiguration::from_flat_normalizing(*manifold, coords)?,
                rms_radius: h / 3f64.sqrt(),
                max_radius: h,
                exact: true,
            })
        }
        2 | 3 => {
            static CACHE: OnceLock<Mutex<NodeCache>> = OnceLock::new();
            let cache = CACHE.get_or_init(Default::default);
            if let Some(q) = cache.lock().expect("cache lock").get(&(d, m)) {
                return Ok((**q).clone());
            }
            let q = if d == 2 {
                fibonacci_s2(m)?
            } else {
                lattice_s3(m)?
            };
            cache
                .lock()
                .expect("cache lock")
                .insert((d, m), Arc::new(q.clone()));
            Ok(q)
        }
        _ => Err(Error::invalid(format!(
            "no quadrature node set for {manifold}"
        ))),
    }
}

/// Rank-1 lattice {frac(i·g/M + shift)} in [0,1)^s with an anisotropic
/// metric used only to shape the Voronoi cells.
struct Lattice {
    m: usize,
    gen: Vec<usize>,
    shift: Vec<f64>,
    scale: Vec<f64>,
}

impl Lattice {
    fn point(&self, i: usize) -> Vec<f64> {
        self.gen
            .iter()
            .zip(&self.shift)
            .map(|(&g, &s)| ((i * g) % self.m) as f64 / self.m as f64 + s)
            .collect()
    }

    /// Scaled squared torus norm of the lattice vector i·g/M.
    fn norm2_of_index(&self, i: usize) -> f64 {
        self.gen
            .iter()
            .zip(&self.scale)
            .map(|(&g, &w)| {
                let mut t = ((i * g) % self.m) as f64 / self.m as f64;
                if t > 0.5 {
                    t -= 1.0;
                }
                (w * t) * (w * t)
            })
            .sum()
    }

    /// Offset from y to the nearest lattice point, as a vector in the cube.
    fn cell_offset(&self, y: &[f64]) -> Vec<f64> {
        let mut best = (f64::INFINITY, Vec::new());
        for i in 0..self.m {
            let x = self.point(i);
            let off: Vec<f64> = y
                .iter()
                .zip(&x)
                .map(|(a, b)| {
                    let t = a - b;
                    t - t.round()
                })
                .collect();
            let r: f64 = off
                .iter()
                .zip(&self.scale)
                .map(|(o, w)| (o * w) * (o * w))
                .sum();
            if r < best.0 {
                best = (r, off);
            }
        }
        best.1
    }

    /// RMS and maximal manifold distance between lattice points and the
    /// points of their Voronoi cells, pushed through `map`.
    fn radii<F>(&self, map: F, manifold: &Manifold, seed: u64) -> (f64, f64)
    where
        F: Fn(&[f64]) -> Vec<f64> + Sync,
    {
        let s = self.gen.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let probes: Vec<Vec<f64>> = (0..CELL_PROBES)
            .map(|_| (0..s).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let offsets: Vec<Vec<f64>> = probes.par_iter().map(|y| self.cell_offset(y)).collect();
        // Per-offset mean square over all cells, then mean ± 3 standard errors.
        let per_offset: Vec<(f64, f64)> = offsets
            .par_iter()
            .map(|off| {
                let mut sum = 0.0;
                let mut max = 0.0f64;
                for i in 0..self.m {
                    let x = self.point(i);
                    let y: Vec<f64> = x
                        .iter()
                        .zip(off)
                        .map(|(a, b)| (a + b).rem_euclid(1.0))
                        .collect();
                    let dist = manifold.distance(&map(&x), &map(&y));
                    sum += dist * dist;
                    max = max.max(dist);
                }
                (sum / self.m as f64, max)
            })
            .collect();
        let k = per_offset.len() as f64;
        let mean = per_offset.iter().map(|v| v.0).sum::<f64>() / k;
        let var = per_offset.iter().map(|v| (v.0 - mean).powi(2)).sum::<f64>() / (k - 1.0);
        let max = per_offset.iter().map(|v| v.1).fold(0.0, f64::max);
        ((mean + 3.0 * (var / k).sqrt()).sqrt(), max)
    }
}

#[inline]
fn tent(u: f64) -> f64 {
    1.0 - (2.0 * u - 1.0).abs()
}

fn s2_map(p: &[f64]) -> Vec<f64> {
    let z = 2.0 * tent(p[0]) - 1.0;
    let r = (1.0 - z * z).max(0.0).sqrt();
    let phi = TAU * p[1];
    vec![r * phi.cos(), r * phi.sin(), z]
}

fn s3_map(p: &[f64]) -> Vec<f64> {
    let u = tent(p[0]);
    let (a, b) = ((1.0 - u).max(0.0).sqrt(), u.sqrt());
    let (v, w) = (TAU * p[1], TAU * p[2]);
    vec![a * v.cos(), a * v.sin(), b * w.cos(), b * w.sin()]
}

fn build(lattice: Lattice, dim: usize, map: fn(&[f64]) -> Vec<f64>) -> Result<QuadratureNodes> {
    let manifold = Manifold::sphere(dim);
    let coords: Vec<f64> = (0..lattice.m)
        .flat_map(|i| map(&lattice.point(i)))
        .collect();
    let nodes = PointConfiguration::from_flat_normalizing(manifold, coords)?;
    let (rms_radius, max_radius) = lattice.radii(map, &manifold, 0x5eed + dim as u64);
    Ok(QuadratureNodes {
        nodes,
        rms_radius,
        max_radius,
        exact: false,
    })
}

/// Fibonacci lattice (u, v) = ((i + ¼)/F_k, frac(i F_{k−1}/F_k)) on S² under
/// the area-preserving map z = 2·tent(u) − 1, φ = 2πv.
/// The quarter shift keeps nodes off the fold line, so no node coincides
/// with the mirror image of another.
fn fibonacci_s2(m: usize) -> Result<QuadratureNodes> {
    let (mut prev, mut cur) = (1usize, 1usize);
    while cur < m {
        let next = prev + cur;
        prev = cur;
        cur = next;
    }
    let lattice = Lattice {
        m: cur,
        gen: vec![1, prev],
        shift: vec![0.25 / cur as f64, 0.0],
        scale: vec![4.0, TAU],
    };
    build(lattice, 2, s2_map)
}

/// Korobov lattice (1, a, a² mod M) on S³ under the measure-preserving map
/// (u, v, w) ↦ (√(1−s) e^{2πiv}, √s e^{2πiw}), s = tent(u). The multiplier a maximizes the
/// shortest scaled lattice vector.
fn lattice_s3(m: usize) -> Result<QuadratureNodes> {
    let scale = vec![2.0, PI * 2f64.sqrt(), PI * 2f64.sqrt()];
    let candidates: Vec<usize> = if m <= 4096 {
        (1..m.max(2)).collect()
    } else {
        let stride = m / 4096;
        (1..m).step_by(stride.max(1)).collect()
    };
    let best = candidates
        .par_iter()
        .map(|&a| {
            let lat = Lattice {
                m,
                gen: vec![1, a % m.max(1), (a * a) % m.max(1)],
                shift: vec![0.0; 3],
                scale: scale.clone(),
            };
            let shortest = (1..m)
                .map(|i| lat.norm2_of_index(i))
                .fold(f64::INFINITY, f64::min);
            (shortest, a)
        })
        .reduce(
            || (f64::NEG_INFINITY, 1),
            |x, y| {
                if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) {
                    y
                } else {
                    x
                }
            },
        );
    let a = best.1;
    let lattice = Lattice {
        m,
        gen: vec![1, a % m, (a * a) % m],
        shift: vec![0.25 / m as f64, 0.0, 0.0],
        scale,
    };
    build(lattice, 3, s3_map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn torus_grid_sizes_and_radii() {
        let q = quadrature_nodes(&Manifold::torus(2), 60).unwrap();
        assert_eq!(q.len(), 64);
        assert_abs_diff_eq!(q.rms_radius, (2.0f64 / 12.0).sqrt() / 8.0, epsilon = 1e-15);
        assert!(q.exact);
    }

    #[test]
    fn fibonacci_rounds_up() {
        let q = quadrature_nodes(&Manifold::sphere(2), 100).unwrap();
        assert_eq!(q.len(), 144);
        // Equal-area cells of a well-spread set have radius ~ sqrt(4π/M).
        let h = (4.0 * PI / 144.0).sqrt();
        assert!(
            q.rms_radius > 0.2 * h && q.rms_radius < h,
            "{}",
            q.rms_radius
        );
        assert!(q.max_radius >= q.rms_radius);
    }

    #[test]
    fn s3_lattice_covers() {
        let q = quadrature_nodes(&Manifold::sphere(3), 512).unwrap();
        assert_eq!(q.len(), 512);
        let h = (2.0 * PI * PI / 512.0).cbrt();
        assert!(
            q.rms_radius < h,
            "rms radius {} vs spacing {h}",
            q.rms_radius
        );
        assert!(
            q.max_radius < 3.0 * h,
            "max radius {} vs spacing {h}",
            q.max_radius
        );
        let finer = quadrature_nodes(&Manifold::sphere(3), 4096).unwrap();
        assert!(finer.rms_radius < 0.6 * q.rms_radius);
    }

    #[test]
    fn sphere_nodes_have_vanishing_mean() {
        for d in [1, 2, 3] {
            let q = quadrature_nodes(&Manifold::sphere(d), 1000).unwrap();
            let s = d + 1;
            let mut mean = vec![0.0; s];
            for p in q.nodes.points() {
                for (m, x) in mean.iter_mut().zip(p) {
                    *m += x / q.len() as f64;
                }
            }
            assert!(mean.iter().all(|m| m.abs() < 5e-3), "S^{d}: {mean:?}");
        }
    }
}

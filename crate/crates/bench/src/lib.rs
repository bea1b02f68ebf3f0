//! Fixtures shared by the benchmarks.

use greenlab_core::geometry::uniform_sample;
use greenlab_core::{Manifold, PointConfiguration};

/// Uniform sample with a fixed seed so runs compare like with like.
pub fn sample(manifold: Manifold, n: usize) -> PointConfiguration {
    uniform_sample(manifold, n, 0x5eed)
}

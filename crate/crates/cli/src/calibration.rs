//! Pass constants for the verification commands.
//!
//! The inequalities being checked hold up to unspecified constants. Each
//! value below is the largest ratio seen on the reference corpus, rounded up
//! with headroom, and then frozen. Re-calibrating means changing these
//! numbers deliberately, never adjusting them to make a run pass.

use crate::config::Space;

/// W₂ / (√(log n / n) + (1/n)|Σ G|^{1/2}) on T². Corpus maximum 0.455
/// (clustered points, n = 256).
pub const VERIFY_T2: f64 = 0.6;

/// W₂ / (n^{−1/3} + (1/n)|Σ G|^{1/2}) on T³. Corpus maximum 0.742 (random
/// points, n = 216).
pub const VERIFY_T3: f64 = 1.0;

/// W₂ / (n^{−1/3} + (1/n)|X|^{1/2}) on S³, X the renormalized Coulomb sum.
/// Corpus maximum 1.888 (random points, n = 64).
pub const VERIFY_S3: f64 = 2.5;

/// W₂ / F_N on T¹. The two agree on every corpus member to the diaphony
/// tail, so the fitted value is 1.
pub const DIAPHONY_W2: f64 = 1.01;

/// C in (1/n²) Σ G ≥ −C n^{−2/3} on T³. Corpus maximum 0.191 (minimizer,
/// n = 216); grids approach 0.226 as n grows.
pub const COROLLARY_T3: f64 = 0.25;

/// C in Σ G ≥ −C n log n on T². Minimizers sit at 0.080 for every n.
pub const COROLLARY_T2: f64 = 0.1;

pub fn verify_constant(space: Space, dim: usize) -> Option<f64> {
    match (space, dim) {
        (Space::Torus, 2) => Some(VERIFY_T2),
        (Space::Torus, 3) => Some(VERIFY_T3),
        (Space::Sphere, 3) => Some(VERIFY_S3),
        _ => None,
    }
}

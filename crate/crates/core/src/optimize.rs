//! Pair-energy minimization by projected gradient descent with Armijo
//! backtracking.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{uniform_sample, PointConfiguration};
use crate::kernels::{Kernel, KernelSpec};

/// Trial steps bringing two points closer than this are rejected.
pub const COLLISION_GUARD: f64 = 1e-9;

/// Consecutive step halvings after which the line search gives up.
pub const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerParams {
    pub max_iters: usize,
    /// Stop once the Euclidean norm of the full Riemannian gradient is below this.
    pub grad_tol: f64,
    /// First trial step. When absent the step is chosen so the largest point
    /// moves a tenth of the typical spacing n^{-1/d}.
    pub initial_step: Option<f64>,
    pub shrink: f64,
    /// Sufficient-decrease constant of the Armijo test.
    pub armijo: f64,
    pub seed: u64,
    /// Number of runs; run 0 starts from the given configuration, run r ≥ 1
    /// from a uniform sample seeded with `seed + r`.
    pub restarts: usize,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        OptimizerParams {
            max_iters: 1000,
            grad_tol: 1e-8,
            initial_step: None,
            shrink: 0.5,
            armijo: 1e-4,
            seed: 0,
            restarts: 4,
        }
    }
}

impl OptimizerParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be positive"));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::invalid("grad_tol must be positive"));
        }
        if let Some(s) = self.initial_step {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::invalid("initial_step must be positive"));
            }
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::invalid("shrink factor must lie in (0, 1)"));
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return Err(Error::invalid("armijo constant must lie in (0, 1)"));
        }
        if self.restarts == 0 {
            return Err(Error::invalid("restarts must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimizationResult {
    pub config: PointConfiguration,
    /// Pair energy Σ_{k≠ℓ} of every accepted iterate, starting configuration first.
    pub energy_history: Vec<f64>,
    pub grad_norm_final: f64,
    pub iterations_used: usize,
    pub converged: bool,
    /// `None` for fewer than two points.
    pub min_separation: Option<f64>,
}

impl MinimizationResult {
    pub fn final_energy(&self) -> f64 {
        *self
            .energy_history
            .last()
            .expect("history holds the starting energy")
    }
}

/// Riemannian gradient of Σ_{k≠ℓ} K(x_k, x_ℓ), laid out like the coordinates:
/// tangent vectors on spheres, plain gradients on tori.
pub fn energy_gradient(config: &PointConfiguration, spec: &KernelSpec) -> Result<Vec<f64>> {
    let kernel = Kernel::for_pair_sums(spec, config.manifold(), config.len())?;
    let (_, mut grad) = kernel.pair_sum_grad(config)?;
    project(config, &mut grad);
    Ok(grad)
}

fn project(config: &PointConfiguration, grad: &mut [f64]) {
    if config.manifold().is_sphere() {
        let s = config.manifold().ambient_dim();
        for (x, g) in config.points().zip(grad.chunks_exact_mut(s)) {
            let dot: f64 = x.iter().zip(g.iter()).map(|(a, b)| a * b).sum();
            for (gc, xc) in g.iter_mut().zip(x) {
                *gc -= dot * xc;
            }
        }
    }
}

/// Moves every point along −step·grad and maps back onto the manifold.
fn retract(config: &PointConfiguration, grad: &[f64], step: f64) -> Result<PointConfiguration> {
    let coords: Vec<f64> = config
        .coords()
        .iter()
        .zip(grad)
        .map(|(x, g)| x - step * g)
        .collect();
    if config.manifold().is_sphere() {
        PointConfiguration::from_flat_normalizing(*config.manifold(), coords)
    } else {
        PointConfiguration::from_flat(*config.manifold(), coords)
    }
}

/// Minimum pairwise geodesic distance.
pub fn min_separation(config: &PointConfiguration) -> Result<f64> {
    config
        .min_pair_distance()
        .ok_or_else(|| Error::invalid("min_separation needs at least two points"))
}

fn descend(
    start: PointConfiguration,
    kernel: &Kernel,
    params: &OptimizerParams,
) -> Result<MinimizationResult> {
    let n = start.len();
    let spacing = (n.max(1) as f64).powf(-1.0 / start.manifold().dim() as f64);
    let mut config = start;
    let (mut energy, mut grad) = kernel.pair_sum_grad(&config)?;
    project(&config, &mut grad);
    let norm = |g: &[f64]| g.iter().map(|c| c * c).sum::<f64>().sqrt();
    let mut grad_norm = norm(&grad);
    let mut history = vec![energy];
    let mut step = match params.initial_step {
        Some(s) => s,
        None => {
            let s = config.manifold().ambient_dim();
            let max_move = grad.chunks_exact(s).map(norm).fold(0.0f64, f64::max);
            if max_move > 0.0 {
                0.1 * spacing / max_move
            } else {
                1.0
            }
        }
    };
    let mut iterations = 0;
    let finish =
        |config: PointConfiguration, history: Vec<f64>, grad_norm: f64, iterations: usize| {
            let min_separation = config.min_pair_distance();
            MinimizationResult {
                config,
                energy_history: history,
                grad_norm_final: grad_norm,
                iterations_used: iterations,
                converged: grad_norm <= params.grad_tol,
                min_separation,
            }
        };
    while iterations < params.max_iters && grad_norm > params.grad_tol {
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial = retract(&config, &grad, step)?;
            if trial == config {
                break;
            }
            match kernel.pair_sum(&trial) {
                Ok((e, sep)) => {
                    let separated = sep.is_none_or(|s| s >= COLLISION_GUARD);
                    if separated
                        && e < energy
                        && e <= energy - params.armijo * step * grad_norm * grad_norm
                    {
                        accepted = Some((trial, e));
                        break;
                    }
                }
                Err(Error::Singularity { .. }) => {}
                Err(other) => return Err(other),
            }
            step *= params.shrink;
        }
        let Some((trial, _)) = accepted else {
            let result = finish(config, history, grad_norm, iterations);
            return Err(Error::Stall(Box::new(result)));
        };
        config = trial;
        let (e, mut g) = kernel.pair_sum_grad(&config)?;
        project(&config, &mut g);
        energy = e.min(energy);
        history.push(e);
        grad = g;
        grad_norm = norm(&grad);
        iterations += 1;
        step /= params.shrink;
    }
    Ok(finish(config, history, grad_norm, iterations))
}

/// Minimizes the pair energy starting from `config0`, keeping the best of
/// `params.restarts` runs. A stalled best run is reported as [`Error::Stall`].
pub fn minimize(
    config0: &PointConfiguration,
    spec: &KernelSpec,
    params: &OptimizerParams,
) -> Result<MinimizationResult> {
    params.validate()?;
    let manifold = *config0.manifold();
    let n = config0.len();
    let kernel = Kernel::for_pair_sums(spec, &manifold, n)?;
    let runs: Vec<(bool, MinimizationResult)> = (0..params.restarts)
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                config0.clone()
            } else {
                uniform_sample(manifold, n, params.seed.wrapping_add(r as u64))
            };
            match descend(start, &kernel, params) {
                Ok(res) => Ok((false, res)),
                Err(Error::Stall(res)) => Ok((true, *res)),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let (stalled, best) = runs
        .into_iter()
        .reduce(|a, b| {
            if b.1.final_energy() < a.1.final_energy() {
                b
            } else {
                a
            }
        })
        .expect("at least one run");
    if stalled {
        Err(Error::Stall(Box::new(best)))
    } else {
        Ok(best)
    }
}

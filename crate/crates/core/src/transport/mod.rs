//! Wasserstein distances between empirical measures and the uniform measure,
//! or between two weighted point sets.

mod circle;
pub mod network_simplex;
mod quadrature;
pub mod sinkhorn;

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointConfiguration;

pub use circle::{star_discrepancy_t1, w_p_circle_exact};
pub use quadrature::{quadrature_nodes, QuadratureNodes};
pub use sinkhorn::SinkhornParams;

/// Transport problems with more unknowns than this are refused by the exact solver.
pub const NETWORK_FLOW_LIMIT: usize = 10_000_000;

/// Weight sums must match 1 to this tolerance.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

/// Integer resolution of general weights in the exact solver.
const FLOW_SCALE: f64 = (1u64 << 40) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    CircleExact,
    NetworkFlow,
    Sinkhorn,
}

/// A Wasserstein value with an additive error bound: the true distance lies
/// within `error_bound` of `value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct W2Estimate {
    pub p: u32,
    pub value: f64,
    pub error_bound: f64,
    pub method: Method,
    /// Number of target nodes.
    #[serde(rename = "M")]
    pub m: Option<usize>,
    /// Final regularization of the entropic solver.
    pub epsilon: Option<f64>,
    pub iterations: Option<usize>,
}

impl W2Estimate {
    pub fn lower(&self) -> f64 {
        (self.value - self.error_bound).max(0.0)
    }

    pub fn upper(&self) -> f64 {
        self.value + self.error_bound
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub row: usize,
    pub col: usize,
    pub mass: f64,
}

#[derive(Debug, Clone)]
pub struct TransportSolution {
    pub estimate: W2Estimate,
    /// Nonzero entries of the optimal (or rounded entropic) plan.
    pub plan: Vec<PlanEntry>,
}

/// Writes a sparse plan as `row,col,mass` lines under a `#` header.
pub fn write_plan_csv<W: Write>(plan: &[PlanEntry], mut w: W) -> std::io::Result<()> {
    writeln!(w, "# row,col,mass")?;
    for e in plan {
        writeln!(w, "{},{},{:.17e}", e.row, e.col, e.mass)?;
    }
    Ok(())
}

/// Points with probability weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    points: PointConfiguration,
    weights: Vec<f64>,
    uniform: bool,
}

impl DiscreteMeasure {
    pub fn new(points: PointConfiguration, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::invalid("need one weight per point"));
        }
        if points.is_empty() {
            return Err(Error::invalid("measure needs at least one point"));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::invalid("weights must be nonnegative and finite"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(DiscreteMeasure {
            points,
            weights,
            uniform: false,
        })
    }

    /// Weight 1/n on every point.
    pub fn uniform(points: PointConfiguration) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::invalid("measure needs at least one point"));
        }
        Ok(DiscreteMeasure {
            points,
            weights: vec![1.0 / n as f64; n],
            uniform: true,
        })
    }

    pub fn points(&self) -> &PointConfiguration {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Source and target measures on one manifold. `target_radius` bounds the
/// W₂ distance from the target to the measure it stands for (zero when the
/// target is itself the measure of interest).
#[derive(Debug, Clone)]
pub struct TransportProblem {
    pub source: DiscreteMeasure,
    pub target: DiscreteMeasure,
    pub target_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "solver", rename_all = "kebab-case")]
pub enum Solver {
    NetworkFlow,
    Sinkhorn(SinkhornParams),
}

/// Row-major matrix of d(x_i, y_j)^p.
pub fn cost_matrix(source: &PointConfiguration, target: &PointConfiguration, p: u32) -> Vec<f64> {
    let manifold = *source.manifold();
    let m = target.len();
    let mut cost = vec![0.0; source.len() * m];
    cost.par_chunks_mut(m.max(1))
        .zip(source.coords().par_chunks(manifold.ambient_dim()))
        .for_each(|(row, x)| {
            for (c, y) in row.iter_mut().zip(target.points()) {
                *c = manifold.distance(x, y).powi(p as i32);
            }
        });
    cost
}

/// Integer supplies proportional to the weights, with the total rounding
/// error in mass (L¹) returned alongside.
fn integer_supplies(a: &DiscreteMeasure, b: &DiscreteMeasure) -> (Vec<i64>, Vec<i64>, f64, f64) {
    let (n, m) = (a.len() as u64, b.len() as u64);
    if a.uniform && b.uniform {
        let l = lcm(n, m);
        return (
            vec![(l / n) as i64; a.len()],
            vec![(l / m) as i64; b.len()],
            l as f64,
            0.0,
        );
    }
    let scaled = |w: &[f64]| -> Vec<i64> {
        let mut s: Vec<i64> = w.iter().map(|x| (x * FLOW_SCALE).round() as i64).collect();
        let diff = FLOW_SCALE as i64 - s.iter().sum::<i64>();
        let k = (0..s.len()).max_by_key(|&i| s[i]).expect("nonempty");
        s[k] += diff;
        s
    };
    let (sa, sb) = (scaled(&a.weights), scaled(&b.weights));
    let err = |s: &[i64], w: &[f64]| -> f64 {
        s.iter()
            .zip(w)
            .map(|(x, y)| (*x as f64 / FLOW_SCALE - y).abs())
            .sum()
    };
    let mass_err = err(&sa, &a.weights) + err(&sb, &b.weights);
    (sa, sb, FLOW_SCALE, mass_err)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

fn root(x: f64, p: u32) -> f64 {
    let x = x.max(0.0);
    if p == 2 {
        x.sqrt()
    } else {
        x
    }
}

/// Solves the discrete problem and widens the bound by `target_radius`.
pub fn solve(problem: &TransportProblem, p: u32, solver: &Solver) -> Result<TransportSolution> {
    if p != 1 && p != 2 {
        return Err(Error::invalid("only p = 1 and p = 2 are supported"));
    }
    let (src, tgt) = (&problem.source, &problem.target);
    if src.points.manifold() != tgt.points.manifold() {
        return Err(Error::invalid(
            "source and target live on different manifolds",
        ));
    }
    let manifold = *src.points.manifold();
    let (n, m) = (src.len(), tgt.len());
    let cost = cost_matrix(&src.points, &tgt.points, p);
    match solver {
        Solver::NetworkFlow => {
            if n.saturating_mul(m) > NETWORK_FLOW_LIMIT {
                return Err(Error::invalid(format!(
                    "network flow limited to n·M ≤ {NETWORK_FLOW_LIMIT}, got {n}·{m}"
                )));
            }
            let (sa, sb, scale, mass_err) = integer_supplies(src, tgt);
            let sol = network_simplex::solve_transportation(&cost, &sa, &sb)?;
            let value = root(sol.total_cost / scale, p);
            // Moving mass_err of mass changes the cost by at most mass_err·diam^p.
            let solver_err = root(mass_err * manifold.diameter().powi(p as i32), p);
            let plan = sol
                .flows
                .iter()
                .map(|&(row, col, f)| PlanEntry {
                    row,
                    col,
                    mass: f as f64 / scale,
                })
                .collect();
            Ok(TransportSolution {
                estimate: W2Estimate {
                    p,
                    value,
                    error_bound: solver_err + problem.target_radius,
                    method: Method::NetworkFlow,
                    m: Some(m),
                    epsilon: None,
                    iterations: Some(sol.pivots),
                },
                plan,
            })
        }
        Solver::Sinkhorn(params) => {
            let eps0 = params
                .epsilon0
                .unwrap_or(0.1 * manifold.diameter().powi(p as i32));
            let out = sinkhorn::sinkhorn(&cost, &src.weights, &tgt.weights, eps0, params)?;
            let (lo, hi) = (root(out.lower, p), root(out.upper, p));
            let value = if params.debias {
                if n.max(m) > 5000 {
                    return Err(Error::invalid(
                        "debiasing needs at most 5000 points per side",
                    ));
                }
                let self_src = sinkhorn::symmetric_entropic(
                    &cost_matrix(&src.points, &src.points, p),
                    &src.weights,
                    out.epsilon,
                    params,
                )?;
                let self_tgt = sinkhorn::symmetric_entropic(
                    &cost_matrix(&tgt.points, &tgt.points, p),
                    &tgt.weights,
                    out.epsilon,
                    params,
                )?;
                root(out.entropic - 0.5 * (self_src + self_tgt), p).clamp(lo, hi)
            } else {
                hi
            };
            let plan = out
                .plan
                .iter()
                .enumerate()
                .filter(|(_, v)| **v > 0.0)
                .map(|(k, &mass)| PlanEntry {
                    row: k / m,
                    col: k % m,
                    mass,
                })
                .collect();
            Ok(TransportSolution {
                estimate: W2Estimate {
                    p,
                    value,
                    error_bound: (hi - value).max(value - lo) + problem.target_radius,
                    method: Method::Sinkhorn,
                    m: Some(m),
                    epsilon: Some(out.epsilon),
                    iterations: Some(out.iterations),
                },
                plan,
            })
        }
    }
}

/// W_p between the empirical measure of `config` and the uniform measure,
/// with the uniform side replaced by at least `m` equal-weight nodes.
pub fn wp_semidiscrete(
    config: &PointConfiguration,
    m: usize,
    p: u32,
    solver: &Solver,
) -> Result<TransportSolution> {
    if config.is_empty() {
        return Err(Error::invalid("need at least one point"));
    }
    if m < config.len() {
        return Err(Error::invalid(format!(
            "quadrature size {m} must be at least the number of points {}",
            config.len()
        )));
    }
    let nodes = quadrature_nodes(config.manifold(), m)?;
    let problem = TransportProblem {
        source: DiscreteMeasure::uniform(config.clone())?,
        target: DiscreteMeasure::uniform(nodes.nodes)?,
        target_radius: nodes.rms_radius,
    };
    solve(&problem, p, solver)
}

pub fn w2_semidiscrete(
    config: &PointConfiguration,
    m: usize,
    solver: &Solver,
) -> Result<W2Estimate> {
    Ok(wp_semidiscrete(config, m, 2, solver)?.estimate)
}

/// Exact W₂ between the empirical measure of `a` and the weighted points `b`.
pub fn w2_empirical_pair(a: &PointConfiguration, b: &DiscreteMeasure) -> Result<W2Estimate> {
    let problem = TransportProblem {
        source: DiscreteMeasure::uniform(a.clone())?,
        target: b.clone(),
        target_radius: 0.0,
    };
    Ok(solve(&problem, 2, &Solver::NetworkFlow)?.estimate)
}

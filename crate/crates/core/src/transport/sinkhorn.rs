//! Entropic transport in the log domain with ε-scaling.
//!
//! The final iterate is turned into two certificates: a feasible plan obtained
//! by the Altschuler–Weed–Rigollet rounding (an upper bound on the transport
//! cost) and the c-transformed dual potentials (a lower bound).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SinkhornParams {
    /// Starting regularization; `None` means 0.1·diameter^p.
    pub epsilon0: Option<f64>,
    /// ε is halved this many times after the first stage.
    pub halvings: usize,
    /// Stage stops once the row marginals are within this L¹ distance.
    pub tolerance: f64,
    /// Iteration budget over all stages.
    pub max_iter: usize,
    /// Report the Sinkhorn divergence instead of the rounded primal cost.
    pub debias: bool,
    /// Over-relaxation ω of the potential updates, in [1, 2). A stage falls
    /// back to ω = 1 as soon as its marginal error grows.
    pub relaxation: f64,
}

impl Default for SinkhornParams {
    fn default() -> Self {
        SinkhornParams {
            epsilon0: None,
            halvings: 8,
            tolerance: 1e-7,
            max_iter: 100_000,
            debias: false,
            relaxation: 1.8,
        }
    }
}

impl SinkhornParams {
    pub fn validate(&self) -> Result<()> {
        if let Some(e) = self.epsilon0 {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::invalid("epsilon0 must be positive"));
            }
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("sinkhorn tolerance must be positive"));
        }
        if !(self.relaxation >= 1.0 && self.relaxation < 2.0) {
            return Err(Error::invalid("relaxation must lie in [1, 2)"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SinkhornOutput {
    /// Cost of the rounded, exactly feasible plan.
    pub upper: f64,
    /// Dual objective of c-transformed potentials.
    pub lower: f64,
    /// Regularized dual objective ⟨a,f⟩ + ⟨b,g⟩ at the final ε.
    pub entropic: f64,
    pub epsilon: f64,
    pub iterations: usize,
    /// Rounded plan, row-major.
    pub plan: Vec<f64>,
}

/// −ε log Σ_j exp((g_j − c_j)/ε + log b_j), stabilized by the maximum.
#[inline]
fn soft_min(costs: &[f64], pot: &[f64], logw: &[f64], eps: f64) -> f64 {
    let mut mx = f64::NEG_INFINITY;
    for ((c, g), lw) in costs.iter().zip(pot).zip(logw) {
        mx = mx.max((g - c) / eps + lw);
    }
    let s: f64 = costs
        .iter()
        .zip(pot)
        .zip(logw)
        .map(|((c, g), lw)| ((g - c) / eps + lw - mx).exp())
        .sum();
    -eps * (mx + s.ln())
}

fn transpose(cost: &[f64], n: usize, m: usize) -> Vec<f64> {
    let mut t = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            t[j * n + i] = cost[i * m + j];
        }
    }
    t
}

fn log_weights(w: &[f64]) -> Vec<f64> {
    w.iter()
        .map(|x| if *x > 0.0 { x.ln() } else { f64::NEG_INFINITY })
        .collect()
}

/// Row sums of the plan a_i b_j exp((f_i + g_j − C_ij)/ε).
fn row_marginal_error(cost: &[f64], a: &[f64], b: &[f64], f: &[f64], g: &[f64], eps: f64) -> f64 {
    let m = b.len();
    cost.par_chunks(m)
        .zip(a.par_iter().zip(f.par_iter()))
        .map(|(row, (&ai, &fi))| {
            let s: f64 = row
                .iter()
                .zip(b.iter().zip(g))
                .map(|(c, (bj, gj))| bj * ((fi + gj - c) / eps).exp())
                .sum();
            (ai * s - ai).abs()
        })
        .collect::<Vec<_>>()
        .iter()
        .sum()
}

/// Solves min ⟨C, P⟩ over couplings of a and b approximately.
pub fn sinkhorn(
    cost: &[f64],
    a: &[f64],
    b: &[f64],
    eps0: f64,
    params: &SinkhornParams,
) -> Result<SinkhornOutput> {
    params.validate()?;
    let (n, m) = (a.len(), b.len());
    if cost.len() != n * m || n == 0 || m == 0 {
        return Err(Error::invalid("cost matrix has the wrong size"));
    }
    let cost_t = transpose(cost, n, m);
    let (la, lb) = (log_weights(a), log_weights(b));
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];
    let mut iterations = 0;
    let mut eps = eps0;
    let mut gap = f64::INFINITY;
    for stage in 0..=params.halvings {
        if stage > 0 {
            eps *= 0.5;
        }
        let mut w = params.relaxation;
        let mut previous = f64::INFINITY;
        loop {
            f.par_iter_mut()
                .zip(cost.par_chunks(m))
                .for_each(|(fi, row)| *fi = (1.0 - w) * *fi + w * soft_min(row, &g, &lb, eps));
            g.par_iter_mut()
                .zip(cost_t.par_chunks(n))
                .for_each(|(gj, col)| *gj = (1.0 - w) * *gj + w * soft_min(col, &f, &la, eps));
            iterations += 1;
            if iterations % 10 == 0 || iterations >= params.max_iter {
                gap = row_marginal_error(cost, a, b, &f, &g, eps);
                if gap <= params.tolerance {
                    break;
                }
                if gap > previous {
                    w = 1.0;
                }
                previous = gap;
                if iterations >= params.max_iter {
                    return Err(Error::NonConvergence {
                        iterations,
                        last_gap: gap,
                    });
                }
            }
        }
    }
    debug_assert!(gap <= params.tolerance);

    // Rounding onto the transport polytope.
    let mut plan: Vec<f64> = cost
        .par_chunks(m)
        .zip(f.par_iter())
        .zip(a.par_iter())
        .flat_map_iter(|((row, &fi), &ai)| {
            row.iter()
                .zip(b.iter().zip(&g))
                .map(move |(c, (bj, gj))| ai * bj * ((fi + gj - c) / eps).exp())
                .collect::<Vec<_>>()
        })
        .collect();
    for (row, &ai) in plan.chunks_mut(m).zip(a) {
        let r: f64 = row.iter().sum();
        if r > ai {
            let s = ai / r;
            row.iter_mut().for_each(|p| *p *= s);
        }
    }
    let mut col = vec![0.0; m];
    for row in plan.chunks(m) {
        for (c, p) in col.iter_mut().zip(row) {
            *c += p;
        }
    }
    let col_scale: Vec<f64> = col
        .iter()
        .zip(b)
        .map(|(c, bj)| if *c > *bj { bj / c } else { 1.0 })
        .collect();
    for row in plan.chunks_mut(m) {
        for (p, s) in row.iter_mut().zip(&col_scale) {
            *p *= s;
        }
    }
    let err_r: Vec<f64> = plan
        .chunks(m)
        .zip(a)
        .map(|(row, ai)| (ai - row.iter().sum::<f64>()).max(0.0))
        .collect();
    let mut err_c = b.to_vec();
    for row in plan.chunks(m) {
        for (e, p) in err_c.iter_mut().zip(row) {
            *e -= p;
        }
    }
    err_c.iter_mut().for_each(|e| *e = e.max(0.0));
    let total: f64 = err_r.iter().sum();
    if total > 0.0 {
        for (row, er) in plan.chunks_mut(m).zip(&err_r) {
            for (p, ec) in row.iter_mut().zip(&err_c) {
                *p += er * ec / total;
            }
        }
    }
    let upper: f64 = plan.iter().zip(cost).map(|(p, c)| p * c).sum();

    // Dual certificate: g̃ = f^c, then f̃ = g̃^c.
    let gt: Vec<f64> = cost_t
        .par_chunks(n)
        .map(|col| {
            col.iter()
                .zip(&f)
                .map(|(c, fi)| c - fi)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let ft: Vec<f64> = cost
        .par_chunks(m)
        .map(|row| {
            row.iter()
                .zip(&gt)
                .map(|(c, gj)| c - gj)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let lower = ft.iter().zip(a).map(|(x, w)| x * w).sum::<f64>()
        + gt.iter().zip(b).map(|(x, w)| x * w).sum::<f64>();
    let entropic = f.iter().zip(a).map(|(x, w)| x * w).sum::<f64>()
        + g.iter().zip(b).map(|(x, w)| x * w).sum::<f64>();
    Ok(SinkhornOutput {
        upper,
        lower: lower.min(upper),
        entropic,
        epsilon: eps,
        iterations,
        plan,
    })
}

/// Regularized self-transport value OT_ε(a, a) by the symmetric fixed point
/// f ← ½(f + T(f)), used for debiasing.
pub fn symmetric_entropic(
    cost: &[f64],
    a: &[f64],
    eps: f64,
    params: &SinkhornParams,
) -> Result<f64> {
    let n = a.len();
    if cost.len() != n * n {
        return Err(Error::invalid("cost matrix has the wrong size"));
    }
    let la = log_weights(a);
    let mut f = vec![0.0; n];
    for it in 1..=params.max_iter {
        let t: Vec<f64> = cost
            .par_chunks(n)
            .map(|row| soft_min(row, &f, &la, eps))
            .collect();
        let change = f
            .iter()
            .zip(&t)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        for (x, y) in f.iter_mut().zip(&t) {
            *x = 0.5 * (*x + y);
        }
        if change <= params.tolerance {
            return Ok(2.0 * f.iter().zip(a).map(|(x, w)| x * w).sum::<f64>());
        }
        if it == params.max_iter {
            return Err(Error::NonConvergence {
                iterations: it,
                last_gap: change,
            });
        }
    }
    unreachable!("max_iter is positive")
}

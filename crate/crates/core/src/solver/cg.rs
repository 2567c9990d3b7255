use alloc::vec;

use super::{Operator, Preconditioner, SolveConfig, SolveStats};
use crate::{math, Error, Result};

/// A linear system `B u = b` for [`pcg`].
pub struct CgProblem<'a> {
    pub op: &'a Operator,
    /// Free unknowns; entries outside the mask stay fixed at their initial value.
    pub mask: Option<&'a [bool]>,
    /// Keep residuals orthogonal to constants (pure Neumann systems).
    pub project_constants: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn remove_mean(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    for x in v.iter_mut() {
        *x -= mean;
    }
}

/// Preconditioned conjugate gradients, warm-started from `u`.
///
/// Convergence is declared when `‖b - Bu‖ ≤ tol·‖b‖` (free rows only); when
/// fixed entries are present, `b` includes their action on the free rows.
pub fn pcg(problem: &CgProblem<'_>, b: &[f64], u: &mut [f64], config: &SolveConfig) -> Result<SolveStats> {
    let op = problem.op;
    let n = op.len();
    let free = |i: usize| problem.mask.map_or(true, |m| m[i]);
    let unknowns = (0..n).filter(|&i| free(i)).count();
    let max_iter = config.max_iter(unknowns);

    // effective right-hand side: b minus the action of the fixed values
    let mut r = vec![0.0; n];
    let lift: alloc::vec::Vec<f64> = (0..n).map(|i| if free(i) { 0.0 } else { u[i] }).collect();
    op.apply(&lift, &mut r, problem.mask);
    let scale = math::sqrt((0..n).filter(|&i| free(i)).map(|i| (b[i] - r[i]) * (b[i] - r[i])).sum());
    let mut stats = SolveStats { iterations: 0, rel_residual: 0.0, unknowns, wall_time_s: 0.0 };
    if scale == 0.0 || unknowns == 0 {
        return Ok(stats);
    }
    let inv_diag: alloc::vec::Vec<f64> = match config.preconditioner {
        Preconditioner::Diagonal => op.diagonal().iter().map(|&x| if x > 0.0 { 1.0 / x } else { 1.0 }).collect(),
        Preconditioner::None => vec![1.0; n],
    };
    let precondition = |r: &[f64], z: &mut [f64]| {
        for i in 0..n {
            z[i] = if free(i) { r[i] * inv_diag[i] } else { 0.0 };
        }
    };
    let true_residual = |u: &[f64], r: &mut [f64]| {
        op.apply(u, r, problem.mask);
        for i in 0..n {
            r[i] = if free(i) { b[i] - r[i] } else { 0.0 };
        }
        if problem.project_constants {
            remove_mean(r);
        }
        math::sqrt(dot(r, r)) / scale
    };

    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    // restart from the true residual whenever the recursive one has drifted
    loop {
        stats.rel_residual = true_residual(u, &mut r);
        if stats.rel_residual <= config.cg_rel_tol {
            return Ok(stats);
        }
        precondition(&r, &mut z);
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);
        let mut rel = stats.rel_residual;
        while rel > config.cg_rel_tol {
            if stats.iterations >= max_iter || !rel.is_finite() {
                stats.rel_residual = rel;
                return Err(Error::NoConvergence { stats });
            }
            op.apply(&p, &mut q, problem.mask);
            let pq = dot(&p, &q);
            if !(pq > 0.0) {
                stats.rel_residual = rel;
                return Err(Error::NoConvergence { stats });
            }
            let alpha = rz / pq;
            for i in 0..n {
                u[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            if problem.project_constants {
                remove_mean(&mut r);
            }
            precondition(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
            rel = math::sqrt(dot(&r, &r)) / scale;
            stats.iterations += 1;
        }
        if stats.iterations >= max_iter {
            stats.rel_residual = true_residual(u, &mut r);
            if stats.rel_residual <= config.cg_rel_tol {
                return Ok(stats);
            }
            return Err(Error::NoConvergence { stats });
        }
    }
}

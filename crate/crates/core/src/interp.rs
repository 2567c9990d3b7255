//! The multilinear interpolant of nodal values: point evaluation, exact
//! extrema over boxes, and Gauss quadrature over boxes that need not align
//! with the grid.

use alloc::vec::Vec;

use serde::Serialize;

use crate::grid::{GridMode, GridSpec, ScalarGridFunction};
use crate::{math, Error, Result, MAX_DIM};

/// Axis-aligned box in centred coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoxRegion {
    pub dim: usize,
    pub lo: [f64; MAX_DIM],
    pub hi: [f64; MAX_DIM],
}

impl BoxRegion {
    /// `ρ□_0 = (-ρ/2, ρ/2)^d`.
    pub fn centered(dim: usize, rho: f64) -> Self {
        let mut lo = [0.0; MAX_DIM];
        let mut hi = [0.0; MAX_DIM];
        for k in 0..dim {
            lo[k] = -0.5 * rho;
            hi[k] = 0.5 * rho;
        }
        BoxRegion { dim, lo, hi }
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|k| self.hi[k] - self.lo[k]).product()
    }

    fn validate(&self, grid: &GridSpec) -> Result<()> {
        let ok = self.dim == grid.dim()
            && (0..self.dim).all(|k| self.lo[k] >= -0.5 - 1e-15 && self.hi[k] <= 0.5 + 1e-15 && self.lo[k] < self.hi[k]);
        if ok {
            Ok(())
        } else {
            Err(Error::range("region", alloc::format!("{self:?} is not a nonempty box inside □_0")))
        }
    }
}

fn require_nodal(u: &ScalarGridFunction) -> Result<()> {
    if u.mode() != GridMode::Nodal {
        return Err(Error::Validation("expected a nodal function".into()));
    }
    Ok(())
}

/// Containing cell and local coordinates in `[0,1]^d`.
fn locate(grid: &GridSpec, x: &[f64]) -> ([usize; MAX_DIM], [f64; MAX_DIM]) {
    let n = grid.cells_per_side();
    let mut cell = [0; MAX_DIM];
    let mut t = [0.0; MAX_DIM];
    for k in 0..grid.dim() {
        let y = (x[k] + 0.5) * n as f64;
        let i = (math::floor(y).max(0.0) as usize).min(n - 1);
        cell[k] = i;
        t[k] = (y - i as f64).clamp(0.0, 1.0);
    }
    (cell, t)
}

/// Value and gradient of the interpolant at `x`.
pub fn eval_with_gradient(u: &ScalarGridFunction, x: &[f64]) -> (f64, [f64; MAX_DIM]) {
    let grid = u.grid();
    let d = grid.dim();
    let n = grid.cells_per_side() as f64;
    let (cell, t) = locate(grid, x);
    let mut value = 0.0;
    let mut grad = [0.0; MAX_DIM];
    for corner in 0..(1usize << d) {
        let mut node = [0; MAX_DIM];
        let mut w = 1.0;
        let mut dw = [1.0; MAX_DIM];
        for k in 0..d {
            let b = (corner >> (d - 1 - k)) & 1;
            node[k] = cell[k] + b;
            let (f, df) = if b == 1 { (t[k], n) } else { (1.0 - t[k], -n) };
            for (j, g) in dw.iter_mut().enumerate().take(d) {
                *g *= if j == k { df } else { f };
            }
            w *= f;
        }
        let v = u.values()[grid.node_index(&node)];
        value += w * v;
        for k in 0..d {
            grad[k] += dw[k] * v;
        }
    }
    (value, grad)
}

pub fn eval(u: &ScalarGridFunction, x: &[f64]) -> f64 {
    eval_with_gradient(u, x).0
}

/// Per-axis breakpoints: the box bounds and every grid line strictly inside.
fn breakpoints(grid: &GridSpec, lo: f64, hi: f64) -> Vec<f64> {
    let n = grid.cells_per_side();
    let mut out = alloc::vec![lo];
    for i in 0..=n {
        let x = -0.5 + i as f64 / n as f64;
        if x > lo && x < hi {
            out.push(x);
        }
    }
    out.push(hi);
    out
}

/// Exact `(sup, inf)` of the interpolant over the closed box.
///
/// The interpolant is multilinear on each clipped cell, so its extrema sit
/// at clipped-cell vertices, all of which lie on the tensor set of breakpoints.
pub fn sup_inf(u: &ScalarGridFunction, region: &BoxRegion) -> Result<(f64, f64)> {
    require_nodal(u)?;
    region.validate(u.grid())?;
    let d = region.dim;
    let axes: Vec<Vec<f64>> = (0..d).map(|k| breakpoints(u.grid(), region.lo[k], region.hi[k])).collect();
    let counts: Vec<usize> = axes.iter().map(Vec::len).collect();
    let total: usize = counts.iter().product();
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut x = [0.0; MAX_DIM];
    for mut idx in 0..total {
        for k in (0..d).rev() {
            x[k] = axes[k][idx % counts[k]];
            idx /= counts[k];
        }
        let v = eval(u, &x[..d]);
        hi = hi.max(v);
        lo = lo.min(v);
    }
    Ok((hi, lo))
}

const GAUSS_NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GAUSS_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

/// Calls `f(cell_index, x, weight)` at the 3-point tensor Gauss nodes of every
/// clipped cell in the box; the weights sum to the box volume.
pub fn for_each_quadrature_point(grid: &GridSpec, region: &BoxRegion, mut f: impl FnMut(usize, &[f64], f64)) -> Result<()> {
    region.validate(grid)?;
    let d = region.dim;
    // per axis: (cell, node, weight) triples
    let axes: Vec<Vec<(usize, f64, f64)>> = (0..d)
        .map(|k| {
            let bp = breakpoints(grid, region.lo[k], region.hi[k]);
            let mut pts = Vec::new();
            for w in bp.windows(2) {
                let (a, b) = (w[0], w[1]);
                if b <= a {
                    continue;
                }
                let mid = 0.5 * (a + b);
                let half = 0.5 * (b - a);
                let cell = locate(grid, &[mid, mid, mid]).0[0];
                for (g, wt) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
                    pts.push((cell, mid + half * g, half * wt));
                }
            }
            pts
        })
        .collect();
    let counts: Vec<usize> = axes.iter().map(Vec::len).collect();
    let total: usize = counts.iter().product();
    let mut x = [0.0; MAX_DIM];
    let mut c = [0; MAX_DIM];
    for mut idx in 0..total {
        let mut w = 1.0;
        for k in (0..d).rev() {
            let (cell, xk, wk) = axes[k][idx % counts[k]];
            idx /= counts[k];
            x[k] = xk;
            c[k] = cell;
            w *= wk;
        }
        f(grid.cell_index(&c), &x[..d], w);
    }
    Ok(())
}

/// `⨍_box g(u)`.
pub fn box_mean(u: &ScalarGridFunction, region: &BoxRegion, g: impl Fn(f64) -> f64) -> Result<f64> {
    require_nodal(u)?;
    let mut acc = 0.0;
    for_each_quadrature_point(u.grid(), region, |_, x, w| acc += w * g(eval(u, x)))?;
    Ok(acc / region.volume())
}

/// Volume-normalised `‖g(u)‖_{L̲^p(box)}`; `p = ∞` gives the sup of `|g(u)|` at quadrature nodes.
pub fn box_norm(u: &ScalarGridFunction, region: &BoxRegion, p: f64, g: impl Fn(f64) -> f64) -> Result<f64> {
    if p.is_infinite() {
        require_nodal(u)?;
        let mut m = 0.0f64;
        for_each_quadrature_point(u.grid(), region, |_, x, _| m = m.max(math::abs(g(eval(u, x)))))?;
        return Ok(m);
    }
    if !(p >= 1.0) {
        return Err(Error::range("p", alloc::format!("{p} < 1")));
    }
    let mean = box_mean(u, region, |v| math::powf(math::abs(g(v)), p))?;
    Ok(math::powf(mean, 1.0 / p))
}

//! Discrete solvers on a triadic cube for `-∇·(a∇u) = 0` with Dirichlet
//! data, and for the pure-Neumann problems `B(u, v) = L(v)` whose maximizers
//! define the coarse-grained matrices.
//!
//! Unknowns sit on the vertices of the fine cells inside the cube. Two
//! bilinear forms are available: exact `Q1` finite elements (any symmetric
//! field) and the five-point (in 2D) vertex scheme `FD5`, which uses edge
//! conductances averaged over the cells sharing the edge and is an M-matrix.

mod assembly;
mod cg;

use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;

use crate::grid::{multi_index, CoefficientField, GridMode, ScalarGridFunction, TriadicCube};
use crate::{math, Error, Result, MAX_DIM};

pub use assembly::{assemble, element_gradient_weights, Operator};
pub use cg::{pcg, CgProblem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Discretization {
    /// Vertex finite differences; diagonal fields only; discrete maximum principle.
    Fd5,
    /// Bilinear (trilinear) elements, exact for piecewise-constant `a`.
    Q1Fem,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Preconditioner {
    Diagonal,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolveConfig {
    pub discretization: Discretization,
    pub cg_rel_tol: f64,
    /// `None` means `50·√unknowns + 10⁴`.
    pub cg_max_iter: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            discretization: Discretization::Q1Fem,
            cg_rel_tol: 1e-10,
            cg_max_iter: None,
            preconditioner: Preconditioner::Diagonal,
        }
    }
}

impl SolveConfig {
    pub fn fd5() -> Self {
        SolveConfig { discretization: Discretization::Fd5, ..Self::default() }
    }

    pub fn validate(&self, field: &CoefficientField) -> Result<()> {
        if !(self.cg_rel_tol > 0.0 && self.cg_rel_tol < 1.0) {
            return Err(Error::Config(alloc::format!("cg_rel_tol {} not in (0,1)", self.cg_rel_tol)));
        }
        if self.cg_max_iter == Some(0) {
            return Err(Error::Config("cg_max_iter must be positive".into()));
        }
        if self.discretization == Discretization::Fd5 && !field.is_diagonal() {
            return Err(Error::Config("FD5 requires a diagonal field; use Q1FEM".into()));
        }
        Ok(())
    }

    pub fn max_iter(&self, unknowns: usize) -> usize {
        self.cg_max_iter.unwrap_or_else(|| (50.0 * math::sqrt(unknowns as f64)) as usize + 10_000)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub rel_residual: f64,
    pub unknowns: usize,
    /// Filled in by callers that own a clock; excluded from reports.
    #[serde(skip)]
    pub wall_time_s: f64,
}

/// Right-hand side of the Neumann problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RhsKind {
    /// `L(v) = ∫ q·∇v`; the maximizer defines `q·a_*^{-1}(Q) q`.
    Gradient,
    /// `L(v) = ∫ a p·∇v`; the maximizer defines `p·a(Q;max) p`.
    Flux,
}

/// Vertex mesh of a triadic cube: `m` cells and `m + 1` nodes per side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubeMesh {
    dim: usize,
    cells_per_side: usize,
    first_cell: [usize; MAX_DIM],
    h: f64,
}

impl CubeMesh {
    pub fn new(field: &CoefficientField, cube: &TriadicCube) -> Result<Self> {
        let grid = field.grid();
        if !grid.contains(cube) {
            return Err(Error::range("cube", alloc::format!("{cube:?} not inside the grid")));
        }
        Ok(CubeMesh {
            dim: grid.dim(),
            cells_per_side: cube.side_cells(grid),
            first_cell: cube.first_cell(grid),
            h: grid.h(),
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn cells_per_side(&self) -> usize {
        self.cells_per_side
    }

    #[inline]
    pub fn nodes_per_side(&self) -> usize {
        self.cells_per_side + 1
    }

    pub fn node_count(&self) -> usize {
        self.nodes_per_side().pow(self.dim as u32)
    }

    pub fn cell_count(&self) -> usize {
        self.cells_per_side.pow(self.dim as u32)
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Cube volume in units of `|□_0|`.
    pub fn volume(&self) -> f64 {
        math::powf(self.h * self.cells_per_side as f64, self.dim as f64)
    }

    pub fn node_coords(&self, idx: usize) -> [usize; MAX_DIM] {
        multi_index(idx, self.nodes_per_side(), self.dim)
    }

    pub fn is_boundary_node(&self, idx: usize) -> bool {
        let c = self.node_coords(idx);
        c[..self.dim].iter().any(|&i| i == 0 || i == self.cells_per_side)
    }

    /// Global grid node coordinates of a local node.
    pub fn global_node(&self, idx: usize) -> [usize; MAX_DIM] {
        let mut c = self.node_coords(idx);
        for k in 0..self.dim {
            c[k] += self.first_cell[k];
        }
        c
    }

    /// Centred position `x ∈ [-1/2,1/2]^d` of a local node in `□_0`.
    pub fn node_position(&self, idx: usize) -> [f64; MAX_DIM] {
        let c = self.global_node(idx);
        let mut x = [0.0; MAX_DIM];
        for k in 0..self.dim {
            x[k] = -0.5 + c[k] as f64 * self.h;
        }
        x
    }

    /// Global cell index of a local cell.
    pub fn global_cell(&self, field: &CoefficientField, local: usize) -> usize {
        let lc = multi_index(local, self.cells_per_side, self.dim);
        let mut gc = [0; MAX_DIM];
        for k in 0..self.dim {
            gc[k] = self.first_cell[k] + lc[k];
        }
        field.grid().cell_index(&gc)
    }

    /// Local node indices of the `2^d` corners of a local cell, corner bit
    /// `d-1-k` selecting the upper vertex along axis `k`.
    pub fn cell_corners(&self, local: usize) -> [usize; 1 << MAX_DIM] {
        let lc = multi_index(local, self.cells_per_side, self.dim);
        let np = self.nodes_per_side();
        let mut out = [0; 1 << MAX_DIM];
        for (corner, slot) in out.iter_mut().enumerate().take(1 << self.dim) {
            let mut idx = 0;
            for k in 0..self.dim {
                idx = idx * np + lc[k] + ((corner >> (self.dim - 1 - k)) & 1);
            }
            *slot = idx;
        }
        out
    }
}

/// Solution of a Neumann problem with its functional value `L(u)/|Q|`.
#[derive(Clone, Debug, PartialEq)]
pub struct ForcingSolution {
    pub mesh: CubeMesh,
    /// Zero-mean nodal values on the cube mesh.
    pub u: Vec<f64>,
    pub value: f64,
    pub stats: SolveStats,
}

fn load_vector(field: &CoefficientField, mesh: &CubeMesh, direction: &[f64], kind: RhsKind) -> Vec<f64> {
    let d = mesh.dim();
    let w = element_gradient_weights(d, mesh.h());
    let mut b = vec![0.0; mesh.node_count()];
    let mut q = [0.0; MAX_DIM];
    q[..d].copy_from_slice(&direction[..d]);
    for lc in 0..mesh.cell_count() {
        let v = match kind {
            RhsKind::Gradient => q,
            RhsKind::Flux => field.cell(mesh.global_cell(field, lc)).mul_vec(&q),
        };
        let corners = mesh.cell_corners(lc);
        for (corner, &node) in corners.iter().enumerate().take(1 << d) {
            let mut s = 0.0;
            for i in 0..d {
                s += v[i] * w[corner][i];
            }
            b[node] += s;
        }
    }
    b
}

/// `L(v)` for the given right-hand side kind.
pub fn load_functional(field: &CoefficientField, cube: &TriadicCube, direction: &[f64], kind: RhsKind, v: &[f64]) -> Result<f64> {
    let mesh = CubeMesh::new(field, cube)?;
    let b = load_vector(field, &mesh, direction, kind);
    Ok(b.iter().zip(v).map(|(x, y)| x * y).sum())
}

/// An assembled pure-Neumann system on one cube, reusable across right-hand sides.
pub struct CubeProblem<'a> {
    field: &'a CoefficientField,
    mesh: CubeMesh,
    op: Operator,
    config: SolveConfig,
}

impl<'a> CubeProblem<'a> {
    pub fn new(field: &'a CoefficientField, cube: &TriadicCube, config: &SolveConfig) -> Result<Self> {
        config.validate(field)?;
        let mesh = CubeMesh::new(field, cube)?;
        let op = assemble(field, &mesh, config.discretization);
        Ok(CubeProblem { field, mesh, op, config: *config })
    }

    pub fn mesh(&self) -> &CubeMesh {
        &self.mesh
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    /// Nodal load vector of `L`.
    pub fn load(&self, direction: &[f64], kind: RhsKind) -> Vec<f64> {
        load_vector(self.field, &self.mesh, direction, kind)
    }

    /// Maximizes `⨍(-∇u·a∇u + 2 L-density)` over nodal functions on the cube.
    pub fn solve(&self, direction: &[f64], kind: RhsKind) -> Result<ForcingSolution> {
        let d = self.mesh.dim();
        if direction.len() != d || direction.iter().all(|x| *x == 0.0) || direction.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation(alloc::format!("direction {direction:?} must be a nonzero finite {d}-vector")));
        }
        let mut b = self.load(direction, kind);
        project_mean_zero(&mut b);
        let mut u = vec![0.0; self.mesh.node_count()];
        if kind == RhsKind::Flux {
            // the affine function p·x is the exact discrete maximizer
            for (i, ui) in u.iter_mut().enumerate() {
                let x = self.mesh.node_position(i);
                *ui = (0..d).map(|k| direction[k] * x[k]).sum();
            }
        }
        let problem = CgProblem { op: &self.op, mask: None, project_constants: true };
        let stats = pcg(&problem, &b, &mut u, &self.config)?;
        project_mean_zero(&mut u);
        let value = b.iter().zip(&u).map(|(x, y)| x * y).sum::<f64>() / self.mesh.volume();
        Ok(ForcingSolution { mesh: self.mesh, u, value, stats })
    }
}

/// Maximizes `⨍(-∇u·a∇u + 2 L-density)` over all nodal functions on the cube.
pub fn solve_linear_forcing(
    field: &CoefficientField,
    cube: &TriadicCube,
    direction: &[f64],
    kind: RhsKind,
    config: &SolveConfig,
) -> Result<ForcingSolution> {
    CubeProblem::new(field, cube, config)?.solve(direction, kind)
}

fn project_mean_zero(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    for x in v.iter_mut() {
        *x -= mean;
    }
}

/// Solves `-∇·(a∇u) = 0` in the cube with `u = boundary` on its boundary.
///
/// `boundary` is a nodal function on the whole grid; only its values on the
/// cube boundary are read. The result is nodal on the whole grid, equal to
/// the solution inside the cube and to `boundary` elsewhere.
pub fn solve_dirichlet(
    field: &CoefficientField,
    cube: &TriadicCube,
    boundary: &ScalarGridFunction,
    config: &SolveConfig,
) -> Result<(ScalarGridFunction, SolveStats)> {
    config.validate(field)?;
    let grid = field.grid();
    if boundary.grid() != grid || boundary.mode() != GridMode::Nodal {
        return Err(Error::Validation("boundary data must be nodal on the field's grid".into()));
    }
    let mesh = CubeMesh::new(field, cube)?;
    let op = assemble(field, &mesh, config.discretization);
    let n = mesh.node_count();
    let mut mask = vec![false; n];
    let mut u = vec![0.0; n];
    let (mut sum, mut count) = (0.0, 0usize);
    for i in 0..n {
        if mesh.is_boundary_node(i) {
            let g = boundary.values()[grid.node_index(&mesh.global_node(i))];
            u[i] = g;
            sum += g;
            count += 1;
        } else {
            mask[i] = true;
        }
    }
    let start = sum / count as f64;
    for i in 0..n {
        if mask[i] {
            u[i] = start;
        }
    }
    let b = vec![0.0; n];
    let problem = CgProblem { op: &op, mask: Some(&mask), project_constants: false };
    let stats = pcg(&problem, &b, &mut u, config)?;
    let mut out = boundary.values().to_vec();
    for (i, ui) in u.iter().enumerate() {
        out[grid.node_index(&mesh.global_node(i))] = *ui;
    }
    Ok((ScalarGridFunction::new(*grid, GridMode::Nodal, out)?, stats))
}

/// `B(u, v)` on the cube mesh.
pub fn bilinear(op: &Operator, u: &[f64], v: &[f64]) -> f64 {
    let mut au = vec![0.0; u.len()];
    op.apply(u, &mut au, None);
    au.iter().zip(v).map(|(x, y)| x * y).sum()
}

/// Volume-normalised energy `B(u,u)/|Q|` of nodal values on the cube mesh.
pub fn energy(field: &CoefficientField, cube: &TriadicCube, u: &[f64], discretization: Discretization) -> Result<f64> {
    let mesh = CubeMesh::new(field, cube)?;
    if u.len() != mesh.node_count() {
        return Err(Error::Validation(alloc::format!("{} nodal values for a mesh of {} nodes", u.len(), mesh.node_count())));
    }
    let op = assemble(field, &mesh, discretization);
    Ok(bilinear(&op, u, u) / mesh.volume())
}

/// Nodal values on the cube mesh taken from a nodal function on the whole grid.
pub fn restrict_to_cube(field: &CoefficientField, cube: &TriadicCube, u: &ScalarGridFunction) -> Result<Vec<f64>> {
    let mesh = CubeMesh::new(field, cube)?;
    let grid = field.grid();
    Ok((0..mesh.node_count()).map(|i| u.values()[grid.node_index(&mesh.global_node(i))]).collect())
}

/// Cell-mean gradient of the multilinear interpolant, one `d`-vector per cell.
pub fn discrete_gradient(u: &ScalarGridFunction) -> Result<Vec<[f64; MAX_DIM]>> {
    if u.mode() != GridMode::Nodal {
        return Err(Error::Validation("gradient needs a nodal function".into()));
    }
    let grid = u.grid();
    let d = grid.dim();
    let w = element_gradient_weights(d, grid.h());
    let vol = math::powf(grid.h(), d as f64);
    Ok((0..grid.cell_count())
        .map(|ci| {
            let c = grid.cell_coords(ci);
            let mut g = [0.0; MAX_DIM];
            for corner in 0..(1usize << d) {
                let mut nc = [0; MAX_DIM];
                for k in 0..d {
                    nc[k] = c[k] + ((corner >> (d - 1 - k)) & 1);
                }
                let val = u.values()[grid.node_index(&nc)];
                for i in 0..d {
                    g[i] += val * w[corner][i] / vol;
                }
            }
            g
        })
        .collect())
}

#[cfg(test)]
mod tests;

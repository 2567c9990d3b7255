//! Triadic cube hierarchy over the unit cube and piecewise-constant fields.
//!
//! Fine cells are indexed row-major with the last coordinate fastest. The
//! unit cube is stored in `[0,1)^d` index space; [`GridSpec::node_coord`]
//! and [`GridSpec::cell_center`] return coordinates centred at the origin,
//! i.e. in `(-1/2, 1/2)^d`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;

use crate::math::{self, ipow3};
use crate::symmat::SymMat;
use crate::{Error, Result, MAX_DIM};

/// Dimension and resolution level `N` of a grid with `3^N` cells per side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct GridSpec {
    dim: usize,
    level: u32,
}

impl GridSpec {
    pub fn new(dim: usize, level: u32) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::range("dimension", alloc::format!("{dim} not in 1..=3")));
        }
        if level == 0 {
            return Err(Error::range("resolution level", "N must be at least 1"));
        }
        // 3^{dN} cells must stay addressable and sane in memory
        if (dim as u32) * level > 24 {
            return Err(Error::range("resolution level", alloc::format!("3^(d·N) with d={dim}, N={level} is too large")));
        }
        Ok(GridSpec { dim, level })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `N`: fine cells have side `3^{-N}`.
    #[inline]
    pub fn level(&self) -> u32 {
        self.level
    }

    #[inline]
    pub fn cells_per_side(&self) -> usize {
        ipow3(self.level)
    }

    #[inline]
    pub fn cell_count(&self) -> usize {
        self.cells_per_side().pow(self.dim as u32)
    }

    #[inline]
    pub fn nodes_per_side(&self) -> usize {
        self.cells_per_side() + 1
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.nodes_per_side().pow(self.dim as u32)
    }

    /// Fine cell width `h = 3^{-N}`.
    #[inline]
    pub fn h(&self) -> f64 {
        1.0 / self.cells_per_side() as f64
    }

    #[inline]
    pub fn cell_index(&self, c: &[usize]) -> usize {
        linear_index(c, self.cells_per_side(), self.dim)
    }

    #[inline]
    pub fn cell_coords(&self, idx: usize) -> [usize; MAX_DIM] {
        multi_index(idx, self.cells_per_side(), self.dim)
    }

    #[inline]
    pub fn node_index(&self, c: &[usize]) -> usize {
        linear_index(c, self.nodes_per_side(), self.dim)
    }

    #[inline]
    pub fn node_coords(&self, idx: usize) -> [usize; MAX_DIM] {
        multi_index(idx, self.nodes_per_side(), self.dim)
    }

    /// Centred coordinates of a node, in `[-1/2, 1/2]^d`.
    pub fn node_coord(&self, c: &[usize]) -> [f64; MAX_DIM] {
        let h = self.h();
        let mut x = [0.0; MAX_DIM];
        for k in 0..self.dim {
            x[k] = -0.5 + c[k] as f64 * h;
        }
        x
    }

    /// Centred coordinates of a cell centre.
    pub fn cell_center(&self, c: &[usize]) -> [f64; MAX_DIM] {
        let h = self.h();
        let mut x = [0.0; MAX_DIM];
        for k in 0..self.dim {
            x[k] = -0.5 + (c[k] as f64 + 0.5) * h;
        }
        x
    }

    pub fn is_boundary_node(&self, c: &[usize]) -> bool {
        let n = self.cells_per_side();
        c[..self.dim].iter().any(|&i| i == 0 || i == n)
    }

    /// The cube `□_0` itself.
    pub fn root(&self) -> TriadicCube {
        TriadicCube { level: 0, dim: self.dim as u8, offset: [0; MAX_DIM] }
    }

    fn check_level(&self, level: i32) -> Result<()> {
        if level > 0 || level < -(self.level as i32) {
            return Err(Error::range("cube level", alloc::format!("{level} not in -{}..=0", self.level)));
        }
        Ok(())
    }

    /// Cubes per side at `level`, i.e. `3^{-k}`.
    pub fn cubes_per_side(&self, level: i32) -> usize {
        ipow3((-level) as u32)
    }

    /// The non-overlapping triadic partition of `□_0` at `level`, ordered
    /// row-major in the offset (last coordinate fastest).
    pub fn partition(&self, level: i32) -> Result<Vec<TriadicCube>> {
        self.check_level(level)?;
        let per = self.cubes_per_side(level);
        let total = per.pow(self.dim as u32);
        Ok((0..total)
            .map(|z| {
                let c = multi_index(z, per, self.dim);
                let mut offset = [0u32; MAX_DIM];
                for k in 0..self.dim {
                    offset[k] = c[k] as u32;
                }
                TriadicCube { level, dim: self.dim as u8, offset }
            })
            .collect())
    }

    pub fn contains(&self, cube: &TriadicCube) -> bool {
        if cube.dim() != self.dim || self.check_level(cube.level).is_err() {
            return false;
        }
        let per = self.cubes_per_side(cube.level) as u32;
        cube.offset().iter().all(|&z| z < per)
    }
}

#[inline]
pub(crate) fn linear_index(c: &[usize], n: usize, dim: usize) -> usize {
    let mut idx = 0;
    for k in 0..dim {
        idx = idx * n + c[k];
    }
    idx
}

#[inline]
pub(crate) fn multi_index(mut idx: usize, n: usize, dim: usize) -> [usize; MAX_DIM] {
    let mut c = [0; MAX_DIM];
    for k in (0..dim).rev() {
        c[k] = idx % n;
        idx /= n;
    }
    c
}

/// A cube `z·3^k + □_k` of the level-`k` partition of `□_0`, `-N ≤ k ≤ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TriadicCube {
    pub level: i32,
    dim: u8,
    offset: [u32; MAX_DIM],
}

impl TriadicCube {
    pub fn new(level: i32, offset: &[u32]) -> Result<Self> {
        let dim = offset.len();
        if !(1..=MAX_DIM).contains(&dim) || level > 0 {
            return Err(Error::range("cube", alloc::format!("level {level}, offset {offset:?}")));
        }
        let mut o = [0; MAX_DIM];
        o[..dim].copy_from_slice(offset);
        Ok(TriadicCube { level, dim: dim as u8, offset: o })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn offset(&self) -> &[u32] {
        &self.offset[..self.dim()]
    }

    /// Depth `-k ≥ 0` below `□_0`.
    #[inline]
    pub fn depth(&self) -> u32 {
        (-self.level) as u32
    }

    /// Side length in fine cells, `3^{k+N}`.
    #[inline]
    pub fn side_cells(&self, grid: &GridSpec) -> usize {
        ipow3((self.level + grid.level() as i32) as u32)
    }

    /// Side length in the unit of `□_0`.
    #[inline]
    pub fn side(&self) -> f64 {
        math::pow3(self.level as f64)
    }

    /// Number of fine cells, `3^{d(k+N)}`.
    pub fn cell_count(&self, grid: &GridSpec) -> usize {
        self.side_cells(grid).pow(self.dim as u32)
    }

    /// First fine cell along each axis.
    pub fn first_cell(&self, grid: &GridSpec) -> [usize; MAX_DIM] {
        let s = self.side_cells(grid);
        let mut c = [0; MAX_DIM];
        for k in 0..self.dim() {
            c[k] = self.offset[k] as usize * s;
        }
        c
    }

    /// Position of this cube in [`GridSpec::partition`] order.
    pub fn index_in_level(&self) -> usize {
        let per = ipow3(self.depth());
        let mut idx = 0;
        for k in 0..self.dim() {
            idx = idx * per + self.offset[k] as usize;
        }
        idx
    }

    /// Global fine-cell indices covered by this cube, in local row-major order.
    pub fn cells(&self, grid: &GridSpec) -> Vec<usize> {
        let s = self.side_cells(grid);
        let first = self.first_cell(grid);
        let d = self.dim();
        let mut out = Vec::with_capacity(s.pow(d as u32));
        for local in 0..s.pow(d as u32) {
            let lc = multi_index(local, s, d);
            let mut gc = [0; MAX_DIM];
            for k in 0..d {
                gc[k] = first[k] + lc[k];
            }
            out.push(grid.cell_index(&gc));
        }
        out
    }

    /// The `3^d` cubes one level down, in partition order.
    pub fn children(&self) -> Vec<TriadicCube> {
        let d = self.dim();
        (0..ipow3(d as u32))
            .map(|c| {
                let lc = multi_index(c, 3, d);
                let mut offset = [0u32; MAX_DIM];
                for k in 0..d {
                    offset[k] = self.offset[k] * 3 + lc[k] as u32;
                }
                TriadicCube { level: self.level - 1, dim: self.dim, offset }
            })
            .collect()
    }

    pub fn parent(&self) -> Option<TriadicCube> {
        if self.level == 0 {
            return None;
        }
        let mut offset = [0u32; MAX_DIM];
        for k in 0..self.dim() {
            offset[k] = self.offset[k] / 3;
        }
        Some(TriadicCube { level: self.level + 1, dim: self.dim, offset })
    }

    /// Descendants at `level ≤ self.level`, in partition order restricted to this cube.
    pub fn descendants(&self, level: i32) -> Vec<TriadicCube> {
        debug_assert!(level <= self.level);
        let d = self.dim();
        let per = ipow3((self.level - level) as u32);
        (0..per.pow(d as u32))
            .map(|c| {
                let lc = multi_index(c, per, d);
                let mut offset = [0u32; MAX_DIM];
                for k in 0..d {
                    offset[k] = self.offset[k] * per as u32 + lc[k] as u32;
                }
                TriadicCube { level, dim: self.dim, offset }
            })
            .collect()
    }
}

/// Piecewise-constant symmetric positive-definite matrix field on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientField {
    grid: GridSpec,
    cells: Vec<SymMat>,
    inverse: Vec<SymMat>,
    descriptor: String,
}

impl CoefficientField {
    /// Validates that every cell is SPD and that `a`, `a^{-1}` have finite means.
    pub fn new(grid: GridSpec, cells: Vec<SymMat>, descriptor: impl Into<String>) -> Result<Self> {
        if cells.len() != grid.cell_count() {
            return Err(Error::Validation(alloc::format!(
                "field has {} cells, grid needs {}",
                cells.len(),
                grid.cell_count()
            )));
        }
        let mut inverse = Vec::with_capacity(cells.len());
        for (i, m) in cells.iter().enumerate() {
            if m.dim() != grid.dim() {
                return Err(Error::Validation(alloc::format!("cell {i} has dimension {}", m.dim())));
            }
            if !m.is_finite() {
                return Err(Error::Validation(alloc::format!("cell {i} has non-finite entries")));
            }
            if !m.is_spd() {
                return Err(Error::DegenerateCell { cell: i });
            }
            let inv = m.inverse().ok_or(Error::DegenerateCell { cell: i })?;
            if !inv.is_finite() {
                return Err(Error::DegenerateCell { cell: i });
            }
            inverse.push(inv);
        }
        let field = CoefficientField { grid, cells, inverse, descriptor: descriptor.into() };
        let mean = field.cube_average(&grid.root(), false)?;
        let mean_inv = field.cube_average(&grid.root(), true)?;
        if !mean.is_finite() || !mean_inv.is_finite() {
            return Err(Error::Validation("mean of a or a^-1 is not finite".into()));
        }
        Ok(field)
    }

    /// Builds a scalar field `a(x) = f(x) I`.
    pub fn scalar(grid: GridSpec, values: &[f64], descriptor: impl Into<String>) -> Result<Self> {
        let d = grid.dim();
        Self::new(grid, values.iter().map(|v| SymMat::scalar(d, *v)).collect(), descriptor)
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    #[inline]
    pub fn cells(&self) -> &[SymMat] {
        &self.cells
    }

    #[inline]
    pub fn cell(&self, idx: usize) -> &SymMat {
        &self.cells[idx]
    }

    #[inline]
    pub fn cell_inverse(&self, idx: usize) -> &SymMat {
        &self.inverse[idx]
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn set_descriptor(&mut self, descriptor: impl Into<String>) {
        self.descriptor = descriptor.into();
    }

    /// True when every cell carries only diagonal entries.
    pub fn is_diagonal(&self) -> bool {
        self.cells.iter().all(SymMat::is_diagonal)
    }

    /// Arithmetic mean of `a` (or of `a^{-1}`) over the cube's fine cells.
    pub fn cube_average(&self, cube: &TriadicCube, inverted: bool) -> Result<SymMat> {
        if !self.grid.contains(cube) {
            return Err(Error::range("cube", alloc::format!("{cube:?} not inside grid")));
        }
        let src = if inverted { &self.inverse } else { &self.cells };
        let cells = cube.cells(&self.grid);
        let mut acc = SymMat::zeros(self.dim());
        for &c in &cells {
            acc += src[c];
        }
        Ok(acc * (1.0 / cells.len() as f64))
    }

    /// True when every cell in the cube holds bitwise the same matrix.
    pub fn is_uniform_on(&self, cube: &TriadicCube) -> bool {
        let cells = cube.cells(&self.grid);
        let first = self.cells[cells[0]];
        cells.iter().all(|&c| self.cells[c] == first)
    }

    /// Largest cell spectral norm over a cube.
    pub fn max_cell_norm(&self, cube: &TriadicCube, inverted: bool) -> f64 {
        let src = if inverted { &self.inverse } else { &self.cells };
        cube.cells(&self.grid).iter().map(|&c| src[c].norm()).fold(0.0, f64::max)
    }

    /// The same field represented on a grid refined by one level.
    pub fn refined(&self) -> Result<Self> {
        let fine = GridSpec::new(self.dim(), self.grid.level() + 1)?;
        let mut cells = Vec::with_capacity(fine.cell_count());
        for i in 0..fine.cell_count() {
            let c = fine.cell_coords(i);
            let mut coarse = [0; MAX_DIM];
            for k in 0..self.dim() {
                coarse[k] = c[k] / 3;
            }
            cells.push(self.cells[self.grid.cell_index(&coarse)]);
        }
        Self::new(fine, cells, self.descriptor.clone())
    }

    /// Multiplies every cell by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.grid, self.cells.iter().map(|m| *m * c).collect(), self.descriptor.clone())
    }
}

/// Whether a [`ScalarGridFunction`] lives on vertices or on cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GridMode {
    Nodal,
    Cell,
}

/// Real values on the vertices (solutions) or cells (densities) of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarGridFunction {
    grid: GridSpec,
    mode: GridMode,
    values: Vec<f64>,
}

impl ScalarGridFunction {
    pub fn new(grid: GridSpec, mode: GridMode, values: Vec<f64>) -> Result<Self> {
        let expected = match mode {
            GridMode::Nodal => grid.node_count(),
            GridMode::Cell => grid.cell_count(),
        };
        if values.len() != expected {
            return Err(Error::Validation(alloc::format!("expected {expected} values, got {}", values.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(alloc::format!("value {i} is not finite")));
        }
        Ok(ScalarGridFunction { grid, mode, values })
    }

    pub fn zeros(grid: GridSpec, mode: GridMode) -> Self {
        let n = match mode {
            GridMode::Nodal => grid.node_count(),
            GridMode::Cell => grid.cell_count(),
        };
        ScalarGridFunction { grid, mode, values: vec![0.0; n] }
    }

    /// Samples `f` at nodes (centred coordinates).
    pub fn from_nodes(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let d = grid.dim();
        let values = (0..grid.node_count()).map(|i| f(&grid.node_coord(&grid.node_coords(i))[..d])).collect();
        Self::new(grid, GridMode::Nodal, values)
    }

    /// Samples `f` at cell centres (centred coordinates).
    pub fn from_cells(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let d = grid.dim();
        let values = (0..grid.cell_count()).map(|i| f(&grid.cell_center(&grid.cell_coords(i))[..d])).collect();
        Self::new(grid, GridMode::Cell, values)
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn mode(&self) -> GridMode {
        self.mode
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Per-cell values: cells as stored, nodal functions by the mean of the
    /// cell's `2^d` corners (the exact cell mean of the multilinear interpolant).
    pub fn cell_values(&self) -> Vec<f64> {
        match self.mode {
            GridMode::Cell => self.values.clone(),
            GridMode::Nodal => {
                let g = &self.grid;
                let d = g.dim();
                let corners = 1usize << d;
                (0..g.cell_count())
                    .map(|ci| {
                        let c = g.cell_coords(ci);
                        let mut sum = 0.0;
                        for corner in 0..corners {
                            let mut nc = [0; MAX_DIM];
                            for k in 0..d {
                                nc[k] = c[k] + ((corner >> (d - 1 - k)) & 1);
                            }
                            sum += self.values[g.node_index(&nc)];
                        }
                        sum / corners as f64
                    })
                    .collect()
            }
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Min and max over boundary nodes.
    pub fn boundary_range(&self) -> (f64, f64) {
        assert_eq!(self.mode, GridMode::Nodal);
        let g = &self.grid;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..g.node_count() {
            if g.is_boundary_node(&g.node_coords(i)) {
                lo = lo.min(self.values[i]);
                hi = hi.max(self.values[i]);
            }
        }
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_counts() {
        let g = GridSpec::new(2, 2).unwrap();
        let whole = g.partition(0).unwrap();
        assert_eq!(whole.len(), 1);
        assert_eq!(whole[0].cell_count(&g), 81);
        let level1 = g.partition(-1).unwrap();
        assert_eq!(level1.len(), 9);
        assert!(level1.iter().all(|c| c.cell_count(&g) == 9));

        let g1 = GridSpec::new(1, 3).unwrap();
        let p = g1.partition(-2).unwrap();
        assert_eq!(p.len(), 9);
        assert!(p.iter().all(|c| c.cell_count(&g1) == 3));
    }

    #[test]
    fn partition_level_out_of_range() {
        let g = GridSpec::new(2, 2).unwrap();
        assert!(matches!(g.partition(-3), Err(Error::Range { .. })));
        assert!(matches!(g.partition(1), Err(Error::Range { .. })));
    }

    #[test]
    fn partition_covers_every_cell_once() {
        for (d, n) in [(1, 3), (2, 2), (3, 2)] {
            let g = GridSpec::new(d, n).unwrap();
            for k in -(n as i32)..=0 {
                let mut hits = vec![0u32; g.cell_count()];
                for cube in g.partition(k).unwrap() {
                    for c in cube.cells(&g) {
                        hits[c] += 1;
                    }
                }
                assert!(hits.iter().all(|&h| h == 1), "d={d} N={n} k={k}");
            }
        }
    }

    #[test]
    fn nesting_and_parent() {
        let g = GridSpec::new(2, 3).unwrap();
        for cube in g.partition(-1).unwrap() {
            let kids = cube.children();
            assert_eq!(kids.len(), 9);
            let mut cells: Vec<usize> = kids.iter().flat_map(|k| k.cells(&g)).collect();
            cells.sort_unstable();
            let mut mine = cube.cells(&g);
            mine.sort_unstable();
            assert_eq!(cells, mine);
            assert!(kids.iter().all(|k| k.parent() == Some(cube)));
        }
    }

    #[test]
    fn index_in_level_matches_partition_order() {
        let g = GridSpec::new(3, 2).unwrap();
        for (i, c) in g.partition(-1).unwrap().iter().enumerate() {
            assert_eq!(c.index_in_level(), i);
        }
    }

    #[test]
    fn averages_of_two_cell_field() {
        let g = GridSpec::new(1, 1).unwrap();
        // cells {1, 4, 1}: the cube [0,1/3) holds one cell; check a 2-valued cube via a coarse average
        let f = CoefficientField::scalar(g, &[1.0, 4.0, 4.0], "t").unwrap();
        let avg = f.cube_average(&g.root(), false).unwrap();
        assert!((avg.get(0, 0) - 3.0).abs() < 1e-15);
        let inv = f.cube_average(&g.root(), true).unwrap();
        assert!((inv.get(0, 0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn laminate_means() {
        let g = GridSpec::new(1, 2).unwrap();
        let vals: Vec<f64> = (0..9).map(|i| if i < 3 { 1.0 } else if i < 6 { 4.0 } else { 1.0 }).collect();
        let f = CoefficientField::scalar(g, &vals, "t").unwrap();
        let cube = TriadicCube::new(-1, &[0]).unwrap();
        assert_eq!(f.cube_average(&cube, false).unwrap().get(0, 0), 1.0);
        let _ = f.cube_average(&g.root(), false).unwrap();
    }

    #[test]
    fn singular_cell_rejected() {
        let g = GridSpec::new(2, 1).unwrap();
        let mut cells = vec![SymMat::identity(2); 9];
        cells[4] = SymMat::diag(&[1.0, 0.0]);
        assert_eq!(CoefficientField::new(g, cells, "bad"), Err(Error::DegenerateCell { cell: 4 }));
    }

    #[test]
    fn average_consistent_under_nesting() {
        let g = GridSpec::new(2, 2).unwrap();
        let vals: Vec<f64> = (0..81).map(|i| 1.0 + (i * 37 % 11) as f64).collect();
        let f = CoefficientField::scalar(g, &vals, "t").unwrap();
        for inv in [false, true] {
            let parent = f.cube_average(&g.root(), inv).unwrap().get(0, 0);
            let kids: f64 = g.root().children().iter().map(|c| f.cube_average(c, inv).unwrap().get(0, 0)).sum::<f64>() / 9.0;
            assert!((parent - kids).abs() < 1e-13);
        }
    }

    #[test]
    fn nodal_cell_values_are_corner_means() {
        let g = GridSpec::new(2, 1).unwrap();
        let u = ScalarGridFunction::from_nodes(g, |x| x[0] + 2.0 * x[1]).unwrap();
        let cells = u.cell_values();
        let centers = ScalarGridFunction::from_cells(g, |x| x[0] + 2.0 * x[1]).unwrap();
        for (a, b) in cells.iter().zip(centers.values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}

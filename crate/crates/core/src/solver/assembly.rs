use alloc::vec;
use alloc::vec::Vec;

use super::{CubeMesh, Discretization};
use crate::grid::CoefficientField;
use crate::math::{self, ipow3};
use crate::MAX_DIM;

const CORNERS: usize = 1 << MAX_DIM;

type ElementMatrix = [[f64; CORNERS]; CORNERS];

/// Symmetric nodal operator stored as a `3^d`-point stencil per node.
#[derive(Clone, Debug)]
pub struct Operator {
    dim: usize,
    nodes_per_side: usize,
    stencil: Vec<f64>,
    deltas: Vec<isize>,
    on_boundary: Vec<bool>,
}

#[inline]
fn bit(corner: usize, k: usize, d: usize) -> usize {
    (corner >> (d - 1 - k)) & 1
}

#[inline]
fn sign(b: usize) -> f64 {
    if b == 1 {
        1.0
    } else {
        -1.0
    }
}

/// `∫_cell ∂_i φ_α` for each corner `α` and axis `i`.
pub fn element_gradient_weights(d: usize, h: f64) -> [[f64; MAX_DIM]; CORNERS] {
    let scale = math::powf(0.5, (d - 1) as f64) * math::powf(h, (d - 1) as f64);
    let mut w = [[0.0; MAX_DIM]; CORNERS];
    for (alpha, row) in w.iter_mut().enumerate().take(1 << d) {
        for (i, x) in row.iter_mut().enumerate().take(d) {
            *x = sign(bit(alpha, i, d)) * scale;
        }
    }
    w
}

/// Reference tensors `E_ij[α][β]` on the unit cell, so that the element
/// matrix of a cell with coefficient `a` is `h^{d-2} Σ_ij a_ij E_ij`.
fn reference_tensors(d: usize, disc: Discretization) -> [[ElementMatrix; MAX_DIM]; MAX_DIM] {
    let mut e = [[[[0.0; CORNERS]; CORNERS]; MAX_DIM]; MAX_DIM];
    let n = 1 << d;
    let mass = |a: usize, b: usize| if a == b { 1.0 / 3.0 } else { 1.0 / 6.0 };
    for i in 0..d {
        for j in 0..d {
            if disc == Discretization::Fd5 && i != j {
                continue;
            }
            for alpha in 0..n {
                for beta in 0..n {
                    e[i][j][alpha][beta] = match disc {
                        Discretization::Q1Fem => {
                            let mut v = if i == j {
                                sign(bit(alpha, i, d)) * sign(bit(beta, i, d))
                            } else {
                                0.5 * sign(bit(alpha, i, d)) * 0.5 * sign(bit(beta, j, d))
                            };
                            for k in (0..d).filter(|&k| k != i && k != j) {
                                v *= mass(bit(alpha, k, d), bit(beta, k, d));
                            }
                            v
                        }
                        Discretization::Fd5 => {
                            let w = math::powf(0.5, (d - 1) as f64);
                            let differs = alpha ^ beta;
                            if alpha == beta {
                                w
                            } else if differs == 1 << (d - 1 - i) {
                                -w
                            } else {
                                0.0
                            }
                        }
                    };
                }
            }
        }
    }
    e
}

/// Assembles the pure-Neumann operator `B` of the cube mesh.
pub fn assemble(field: &CoefficientField, mesh: &CubeMesh, disc: Discretization) -> Operator {
    let d = mesh.dim();
    let np = mesh.nodes_per_side();
    let n_nodes = mesh.node_count();
    let width = ipow3(d as u32);
    let reference = reference_tensors(d, disc);
    let scale = math::powf(mesh.h(), d as f64 - 2.0);
    let corners = 1 << d;

    let mut deltas = vec![0isize; width];
    for (o, delta) in deltas.iter_mut().enumerate() {
        let mut acc = 0isize;
        let mut rem = o;
        let mut stride = 1isize;
        for _ in 0..d {
            acc += ((rem % 3) as isize - 1) * stride;
            rem /= 3;
            stride *= np as isize;
        }
        *delta = acc;
    }
    // stencil slot of corner β as seen from corner α
    let mut slot = [[0usize; CORNERS]; CORNERS];
    for (alpha, row) in slot.iter_mut().enumerate().take(corners) {
        for (beta, s) in row.iter_mut().enumerate().take(corners) {
            let mut code = 0;
            for k in 0..d {
                let off = bit(beta, k, d) as isize - bit(alpha, k, d) as isize + 1;
                code = code * 3 + off as usize;
            }
            *s = code;
        }
    }

    let mut stencil = vec![0.0; n_nodes * width];
    let mut ke: ElementMatrix = [[0.0; CORNERS]; CORNERS];
    for lc in 0..mesh.cell_count() {
        let a = field.cell(mesh.global_cell(field, lc));
        for row in ke.iter_mut().take(corners) {
            row[..corners].fill(0.0);
        }
        for i in 0..d {
            for j in 0..d {
                let aij = a.get(i, j);
                if aij == 0.0 {
                    continue;
                }
                let r = &reference[i][j];
                for alpha in 0..corners {
                    for beta in 0..corners {
                        ke[alpha][beta] += aij * r[alpha][beta];
                    }
                }
            }
        }
        let nodes = mesh.cell_corners(lc);
        for alpha in 0..corners {
            let base = nodes[alpha] * width;
            for beta in 0..corners {
                stencil[base + slot[alpha][beta]] += scale * ke[alpha][beta];
            }
        }
    }
    let on_boundary = (0..n_nodes).map(|i| mesh.is_boundary_node(i)).collect();
    Operator { dim: d, nodes_per_side: np, stencil, deltas, on_boundary }
}

impl Operator {
    pub fn len(&self) -> usize {
        self.on_boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.on_boundary.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes_per_side(&self) -> usize {
        self.nodes_per_side
    }

    fn width(&self) -> usize {
        self.deltas.len()
    }

    /// Diagonal entries.
    pub fn diagonal(&self) -> Vec<f64> {
        let w = self.width();
        let centre = w / 2;
        (0..self.len()).map(|i| self.stencil[i * w + centre]).collect()
    }

    /// Stencil coefficients of node `i`, slot `Σ_k (δ_k+1) 3^{d-1-k}`.
    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.stencil[i * w..(i + 1) * w]
    }

    /// `y = B x`; rows outside `mask` are set to zero.
    pub fn apply(&self, x: &[f64], y: &mut [f64], mask: Option<&[bool]>) {
        let w = self.width();
        for i in 0..self.len() {
            if let Some(m) = mask {
                if !m[i] {
                    y[i] = 0.0;
                    continue;
                }
            }
            let row = &self.stencil[i * w..(i + 1) * w];
            let mut acc = 0.0;
            if self.on_boundary[i] {
                for (c, &delta) in row.iter().zip(&self.deltas) {
                    if *c != 0.0 {
                        acc += c * x[(i as isize + delta) as usize];
                    }
                }
            } else {
                for (c, &delta) in row.iter().zip(&self.deltas) {
                    acc += c * x[(i as isize + delta) as usize];
                }
            }
            y[i] = acc;
        }
    }

    /// Largest off-diagonal entry; nonpositive for an M-matrix stencil.
    pub fn max_off_diagonal(&self) -> f64 {
        let w = self.width();
        let centre = w / 2;
        self.stencil
            .chunks(w)
            .flat_map(|row| row.iter().enumerate().filter(move |(k, _)| *k != centre).map(|(_, v)| *v))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

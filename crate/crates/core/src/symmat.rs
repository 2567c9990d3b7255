//! Small symmetric matrices (d ≤ 3) stored as their upper triangle.

use core::ops::{Add, AddAssign, Mul, Sub};

use serde::Serialize;

use crate::math;
use crate::{Error, Result, MAX_DIM};

/// Number of stored components `d(d+1)/2`.
#[inline]
pub const fn n_components(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

#[inline]
const fn upper_index(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    // row i starts at i*d - i(i-1)/2
    i * dim - (i * i.saturating_sub(1)) / 2 + (j - i)
}

/// Symmetric `d×d` matrix, row-major upper-triangle storage.
#[derive(Clone, Copy, PartialEq, Serialize)]
pub struct SymMat {
    dim: u8,
    #[serde(serialize_with = "ser_components")]
    upper: [f64; 6],
}

fn ser_components<S: serde::Serializer>(upper: &[f64; 6], s: S) -> core::result::Result<S::Ok, S::Error> {
    // trailing unused slots are always zero and are trimmed by `components`
    let n = upper.iter().rposition(|v| *v != 0.0).map_or(0, |p| p + 1);
    s.collect_seq(upper[..n.max(1)].iter())
}

impl core::fmt::Debug for SymMat {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("SymMat").field("dim", &self.dim).field("upper", &self.components()).finish()
    }
}

impl SymMat {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} unsupported");
        SymMat { dim: dim as u8, upper: [0.0; 6] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scalar(dim, 1.0)
    }

    pub fn scalar(dim: usize, c: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, c);
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, v) in values.iter().enumerate() {
            m.set(i, i, *v);
        }
        m
    }

    /// Builds from row-major upper-triangle components.
    pub fn from_upper(dim: usize, comps: &[f64]) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::range("dimension", alloc::format!("{dim} not in 1..=3")));
        }
        if comps.len() != n_components(dim) {
            return Err(Error::Validation(alloc::format!(
                "expected {} matrix components, got {}",
                n_components(dim),
                comps.len()
            )));
        }
        let mut m = Self::zeros(dim);
        m.upper[..comps.len()].copy_from_slice(comps);
        Ok(m)
    }

    /// Builds from a full matrix, rejecting asymmetric input.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        if !(1..=MAX_DIM).contains(&dim) || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Validation("matrix must be square with dimension 1..=3".into()));
        }
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let (a, b) = (rows[i][j], rows[j][i]);
                let scale = math::abs(a).max(math::abs(b)).max(1.0);
                if math::abs(a - b) > 1e-12 * scale {
                    return Err(Error::Validation(alloc::format!(
                        "matrix is not symmetric: entry ({i},{j}) = {a} but ({j},{i}) = {b}"
                    )));
                }
                m.set(i, j, a);
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn components(&self) -> &[f64] {
        &self.upper[..n_components(self.dim())]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[upper_index(self.dim(), i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = upper_index(self.dim(), i, j);
        self.upper[k] = v;
    }

    pub fn is_diagonal(&self) -> bool {
        let d = self.dim();
        (0..d).all(|i| (i + 1..d).all(|j| self.get(i, j) == 0.0))
    }

    pub fn is_finite(&self) -> bool {
        self.components().iter().all(|v| v.is_finite())
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    pub fn mul_vec(&self, v: &[f64]) -> [f64; MAX_DIM] {
        let d = self.dim();
        let mut out = [0.0; MAX_DIM];
        for i in 0..d {
            out[i] = (0..d).map(|j| self.get(i, j) * v[j]).sum();
        }
        out
    }

    /// `v · M v`.
    pub fn quad(&self, v: &[f64]) -> f64 {
        let mv = self.mul_vec(v);
        (0..self.dim()).map(|i| mv[i] * v[i]).sum()
    }

    /// `u · M v`.
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        let mv = self.mul_vec(v);
        (0..self.dim()).map(|i| mv[i] * u[i]).sum()
    }

    /// Largest absolute component, used to scale tolerances.
    pub fn max_abs(&self) -> f64 {
        self.components().iter().fold(0.0, |m, v| m.max(math::abs(*v)))
    }

    pub fn det(&self) -> f64 {
        match self.dim() {
            1 => self.get(0, 0),
            2 => self.get(0, 0) * self.get(1, 1) - self.get(0, 1) * self.get(0, 1),
            _ => {
                let (a, b, c) = (self.get(0, 0), self.get(0, 1), self.get(0, 2));
                let (e, f, i) = (self.get(1, 1), self.get(1, 2), self.get(2, 2));
                a * (e * i - f * f) - b * (b * i - f * c) + c * (b * f - e * c)
            }
        }
    }

    /// Inverse by the adjugate formula; `None` when the determinant is not
    /// positive-and-finite relative to the matrix scale.
    pub fn inverse(&self) -> Option<SymMat> {
        let d = self.dim();
        let det = self.det();
        let scale = self.max_abs();
        if !(det.is_finite()) || scale == 0.0 || math::abs(det) <= 1e-300 || math::abs(det) <= f64::EPSILON * 1e-3 * math::powf(scale, d as f64) {
            return None;
        }
        let mut inv = SymMat::zeros(d);
        match d {
            1 => inv.set(0, 0, 1.0 / det),
            2 => {
                inv.set(0, 0, self.get(1, 1) / det);
                inv.set(1, 1, self.get(0, 0) / det);
                inv.set(0, 1, -self.get(0, 1) / det);
            }
            _ => {
                let g = |i, j| self.get(i, j);
                inv.set(0, 0, (g(1, 1) * g(2, 2) - g(1, 2) * g(1, 2)) / det);
                inv.set(0, 1, (g(0, 2) * g(1, 2) - g(0, 1) * g(2, 2)) / det);
                inv.set(0, 2, (g(0, 1) * g(1, 2) - g(0, 2) * g(1, 1)) / det);
                inv.set(1, 1, (g(0, 0) * g(2, 2) - g(0, 2) * g(0, 2)) / det);
                inv.set(1, 2, (g(0, 2) * g(0, 1) - g(0, 0) * g(1, 2)) / det);
                inv.set(2, 2, (g(0, 0) * g(1, 1) - g(0, 1) * g(0, 1)) / det);
            }
        }
        Some(inv)
    }

    /// Eigenvalues (ascending) and eigenvectors (columns of the returned
    /// matrix, `vecs[row][col]`) by cyclic Jacobi rotations.
    pub fn eigen(&self) -> ([f64; MAX_DIM], [[f64; MAX_DIM]; MAX_DIM]) {
        let d = self.dim();
        let mut a = [[0.0; MAX_DIM]; MAX_DIM];
        let mut v = [[0.0; MAX_DIM]; MAX_DIM];
        for i in 0..d {
            v[i][i] = 1.0;
            for j in 0..d {
                a[i][j] = self.get(i, j);
            }
        }
        for _sweep in 0..64 {
            let mut off = 0.0;
            for i in 0..d {
                for j in i + 1..d {
                    off += a[i][j] * a[i][j];
                }
            }
            let diag: f64 = (0..d).map(|i| a[i][i] * a[i][i]).sum();
            if off <= 1e-32 * diag || off == 0.0 {
                break;
            }
            for p in 0..d {
                for q in p + 1..d {
                    if a[p][q] == 0.0 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (math::abs(theta) + math::sqrt(theta * theta + 1.0));
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / math::sqrt(t * t + 1.0);
                    let s = t * c;
                    for k in 0..d {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..d {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                    for k in 0..d {
                        let (vkp, vkq) = (v[k][p], v[k][q]);
                        v[k][p] = c * vkp - s * vkq;
                        v[k][q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut order = [0usize, 1, 2];
        let vals_raw = [a[0][0], a[1][1], a[2][2]];
        order[..d].sort_by(|x, y| vals_raw[*x].total_cmp(&vals_raw[*y]));
        let mut vals = [0.0; MAX_DIM];
        let mut vecs = [[0.0; MAX_DIM]; MAX_DIM];
        for (new, &old) in order[..d].iter().enumerate() {
            vals[new] = vals_raw[old];
            for k in 0..d {
                vecs[k][new] = v[k][old];
            }
        }
        (vals, vecs)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen().0[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigen().0[self.dim() - 1]
    }

    /// Spectral norm `|M|`.
    pub fn norm(&self) -> f64 {
        let (vals, _) = self.eigen();
        vals[..self.dim()].iter().fold(0.0, |m, v| m.max(math::abs(*v)))
    }

    pub fn is_spd(&self) -> bool {
        self.is_finite() && self.min_eigenvalue() > 0.0
    }

    /// PSD up to the floor `-1e-12·|M|`.
    pub fn is_psd(&self) -> bool {
        self.is_finite() && self.min_eigenvalue() >= -1e-12 * self.norm()
    }

    /// `self ≼ other + slack·I` in the Loewner order.
    pub fn loewner_le(&self, other: &SymMat, slack: f64) -> bool {
        (*other - *self).min_eigenvalue() >= -slack
    }
}

impl Add for SymMat {
    type Output = SymMat;
    fn add(mut self, rhs: SymMat) -> SymMat {
        self += rhs;
        self
    }
}

impl AddAssign for SymMat {
    fn add_assign(&mut self, rhs: SymMat) {
        debug_assert_eq!(self.dim, rhs.dim);
        for (a, b) in self.upper.iter_mut().zip(rhs.upper) {
            *a += b;
        }
    }
}

impl Sub for SymMat {
    type Output = SymMat;
    fn sub(mut self, rhs: SymMat) -> SymMat {
        debug_assert_eq!(self.dim, rhs.dim);
        for (a, b) in self.upper.iter_mut().zip(rhs.upper) {
            *a -= b;
        }
        self
    }
}

impl Mul<f64> for SymMat {
    type Output = SymMat;
    fn mul(mut self, c: f64) -> SymMat {
        for a in self.upper.iter_mut() {
            *a *= c;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upper_layout_matches_row_major() {
        assert_eq!(upper_index(3, 0, 0), 0);
        assert_eq!(upper_index(3, 0, 1), 1);
        assert_eq!(upper_index(3, 0, 2), 2);
        assert_eq!(upper_index(3, 1, 1), 3);
        assert_eq!(upper_index(3, 1, 2), 4);
        assert_eq!(upper_index(3, 2, 2), 5);
        assert_eq!(upper_index(3, 2, 1), 4);
        assert_eq!(upper_index(2, 0, 0), 0);
        assert_eq!(upper_index(2, 0, 1), 1);
        assert_eq!(upper_index(2, 1, 1), 2);
        assert_eq!(upper_index(1, 0, 0), 0);
    }

    #[test]
    fn eigen_of_known_matrix() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3
        let m = SymMat::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let (vals, _) = m.eigen();
        assert!((vals[0] - 1.0).abs() < 1e-14);
        assert!((vals[1] - 3.0).abs() < 1e-14);
        assert!((m.norm() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn eigen_3d_reconstructs() {
        let m = SymMat::from_rows(&[&[4.0, 1.0, -2.0], &[1.0, 3.0, 0.5], &[-2.0, 0.5, 5.0]]).unwrap();
        let (vals, vecs) = m.eigen();
        for i in 0..3 {
            for j in 0..3 {
                let r: f64 = (0..3).map(|k| vecs[i][k] * vals[k] * vecs[j][k]).sum();
                assert!((r - m.get(i, j)).abs() < 1e-12, "({i},{j}): {r}");
            }
        }
        assert!(vals[0] <= vals[1] && vals[1] <= vals[2]);
    }

    #[test]
    fn inverse_roundtrip() {
        let m = SymMat::from_rows(&[&[4.0, 1.0, -2.0], &[1.0, 3.0, 0.5], &[-2.0, 0.5, 5.0]]).unwrap();
        let inv = m.inverse().unwrap();
        for i in 0..3 {
            let e = [(i == 0) as u8 as f64, (i == 1) as u8 as f64, (i == 2) as u8 as f64];
            let x = inv.mul_vec(&e);
            let back = m.mul_vec(&x);
            for j in 0..3 {
                assert!((back[j] - e[j]).abs() < 1e-13);
            }
        }
        assert!(SymMat::zeros(2).inverse().is_none());
    }

    #[test]
    fn asymmetric_rows_rejected() {
        assert!(SymMat::from_rows(&[&[1.0, 2.0], &[0.0, 1.0]]).is_err());
    }

    #[test]
    fn loewner_order() {
        let a = SymMat::diag(&[1.0, 2.0]);
        let b = SymMat::diag(&[1.5, 2.0]);
        assert!(a.loewner_le(&b, 0.0));
        assert!(!b.loewner_le(&a, 1e-3));
    }
}

//! Discrete Besov-type quantities on the triadic hierarchy and the
//! negative-regularity sufficiency criterion for coarse-grained ellipticity.

use alloc::format;
use alloc::vec::Vec;

use serde::Serialize;

use crate::grid::{linear_index, multi_index, CoefficientField, GridSpec, ScalarGridFunction};
use crate::math::{self, ipow3};
use crate::symmat::SymMat;
use crate::{c_s, Error, Result, MAX_DIM};

fn check_s(s: f64, closed_right: bool) -> Result<()> {
    let ok = s > 0.0 && (s < 1.0 || (closed_right && s == 1.0));
    if ok {
        Ok(())
    } else {
        Err(Error::range("s", format!("{s} outside the admissible range")))
    }
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::range("p", format!("{p} < 1")))
    }
}

/// Means over every cube of every level, `out[j]` for level `-j`, by aggregation.
pub fn level_means(grid: &GridSpec, cell_values: &[f64]) -> Vec<Vec<f64>> {
    aggregate(grid, cell_values.to_vec(), |acc: &mut f64, v: &f64| *acc += v, |acc, k| acc / k, 0.0)
}

/// Cube averages of `a` (or `a^{-1}`) at every level, `out[j]` for level `-j`.
pub fn level_matrix_means(field: &CoefficientField, inverted: bool) -> Vec<Vec<SymMat>> {
    let grid = field.grid();
    let start = (0..grid.cell_count()).map(|c| if inverted { *field.cell_inverse(c) } else { *field.cell(c) }).collect();
    aggregate(grid, start, |acc: &mut SymMat, v: &SymMat| *acc += *v, |acc, k| acc * (1.0 / k), SymMat::zeros(grid.dim()))
}

fn aggregate<T: Clone>(
    grid: &GridSpec,
    finest: Vec<T>,
    add: impl Fn(&mut T, &T),
    scale: impl Fn(T, f64) -> T,
    zero: T,
) -> Vec<Vec<T>> {
    let d = grid.dim();
    let n = grid.level();
    let mut levels = alloc::vec![finest];
    for j in (0..n).rev() {
        let per = ipow3(j);
        let fine_per = per * 3;
        let finer = levels.last().expect("nonempty");
        let mut coarse = alloc::vec![zero.clone(); per.pow(d as u32)];
        for (idx, v) in finer.iter().enumerate() {
            let c = multi_index(idx, fine_per, d);
            let mut pc = [0; MAX_DIM];
            for k in 0..d {
                pc[k] = c[k] / 3;
            }
            add(&mut coarse[linear_index(&pc, per, d)], v);
        }
        let k = ipow3(d as u32) as f64;
        let coarse = coarse.into_iter().map(|v| scale(v, k)).collect();
        levels.push(coarse);
    }
    levels.reverse();
    levels
}

/// One scale of the Besov seminorm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeminormTerm {
    pub level: i32,
    /// `(avg_z ⨍ |f - (f)_{z+□_n}|^p)^{1/p}`.
    pub oscillation: f64,
    /// `3^{-sn}` times the oscillation.
    pub weighted: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Seminorm {
    pub s: f64,
    pub p: f64,
    pub terms: Vec<SeminormTerm>,
    pub value: f64,
}

/// `sup_{n ≤ 0} 3^{-sn} (avg_z ⨍_{z+□_n} |f - (f)_{z+□_n}|^p)^{1/p}`, with `z`
/// running over `3^{n-1}Z^d` and `z + □_n ⊆ □_0`.
///
/// Scales stop at `n = 1-N`; single cells have no oscillation. Nodal
/// functions enter through their cell means.
pub fn besov_seminorm(f: &ScalarGridFunction, s: f64, p: f64) -> Result<Seminorm> {
    check_s(s, true)?;
    check_p(p)?;
    if p.is_infinite() {
        return Err(Error::range("p", "the seminorm needs p < ∞"));
    }
    let grid = f.grid();
    let d = grid.dim();
    let cells = f.cell_values();
    let side = grid.cells_per_side();
    let mut terms = Vec::new();
    for j in 0..grid.level() {
        let n = -(j as i32);
        let len = ipow3(grid.level() - j);
        let step = len / 3;
        let c0 = (side - len) / 2;
        // admissible shifts m with c0 + m·step ∈ [0, side - len]
        let m_lo = -((c0 / step) as i64);
        let m_hi = ((side - len - c0) / step) as i64;
        let per_axis = (m_hi - m_lo + 1) as usize;
        let count = per_axis.pow(d as u32);
        let mut total = 0.0;
        for z in 0..count {
            let m = multi_index(z, per_axis, d);
            let mut corner = [0usize; MAX_DIM];
            for k in 0..d {
                corner[k] = (c0 as i64 + (m[k] as i64 + m_lo) * step as i64) as usize;
            }
            let vol = len.pow(d as u32);
            let at = |local: usize| {
                let lc = multi_index(local, len, d);
                let mut gc = [0; MAX_DIM];
                for k in 0..d {
                    gc[k] = corner[k] + lc[k];
                }
                cells[grid.cell_index(&gc)]
            };
            let mean = (0..vol).map(at).sum::<f64>() / vol as f64;
            total += (0..vol).map(|l| math::powf(math::abs(at(l) - mean), p)).sum::<f64>() / vol as f64;
        }
        let oscillation = math::powf(total / count as f64, 1.0 / p);
        let weighted = math::pow3(-s * f64::from(n)) * oscillation;
        terms.push(SeminormTerm { level: n, oscillation, weighted });
    }
    let value = terms.iter().map(|t| t.weighted).fold(0.0, f64::max);
    Ok(Seminorm { s, p, terms, value })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DualTerm {
    pub level: i32,
    /// `(avg_z |(f)_{z+□_k}|^{p'})^{1/p'}` (the maximum when `p' = ∞`).
    pub inner: f64,
    /// `max_z |(f)_{z+□_k}|`.
    pub max_abs_mean: f64,
    pub weighted: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualSumNorm {
    pub s: f64,
    pub p_dual: f64,
    pub terms: Vec<DualTerm>,
    /// Closed-form sum over the levels below the grid.
    pub tail: f64,
    pub value: f64,
}

/// `Σ_{k ≤ 0} 3^{sk} (avg_z |(f)_{z+□_k}|^{p'})^{1/p'}` for a cell function.
pub fn dual_sum_norm(f: &ScalarGridFunction, s: f64, p_dual: f64) -> Result<DualSumNorm> {
    check_s(s, true)?;
    check_p(p_dual)?;
    let grid = f.grid();
    let means = level_means(grid, &f.cell_values());
    let mut terms = Vec::with_capacity(means.len());
    for (j, level) in means.iter().enumerate() {
        let k = -(j as i32);
        let max_abs_mean = level.iter().map(|v| math::abs(*v)).fold(0.0, f64::max);
        let inner = if p_dual.is_infinite() {
            max_abs_mean
        } else {
            let avg = level.iter().map(|v| math::powf(math::abs(*v), p_dual)).sum::<f64>() / level.len() as f64;
            math::powf(avg, 1.0 / p_dual)
        };
        terms.push(DualTerm { level: k, inner, max_abs_mean, weighted: math::pow3(s * f64::from(k)) * inner });
    }
    let n = grid.level() as f64;
    let finest = terms.last().expect("at least one level").inner;
    let tail = math::pow3(-s * (n + 1.0)) / (1.0 - math::pow3(-s)) * finest;
    // ascending scale order
    let value = terms.iter().rev().map(|t| t.weighted).sum::<f64>() + tail;
    Ok(DualSumNorm { s, p_dual, terms, tail, value })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Component {
    A,
    AInv,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscountedAverages {
    pub s: f64,
    pub component: Component,
    /// `(level, max_z |(a)_{z+□_k}|^{1/2})` from level 0 down to `-N`.
    pub series: Vec<(i32, f64)>,
    pub tail: f64,
    /// `(c_s Σ_{k ≤ 0} 3^{sk} max_z |(a)_{z+□_k}|^{1/2})²`.
    pub total: f64,
}

/// Solve-free upper bound for `Λ_s` (component `A`) or `λ_s^{-1}` (component `AInv`).
pub fn scale_discounted_averages(field: &CoefficientField, s: f64, component: Component) -> Result<DiscountedAverages> {
    check_s(s, false)?;
    let means = level_matrix_means(field, component == Component::AInv);
    Ok(discounted_from_means(&means, s, component))
}

fn discounted_from_means(means: &[Vec<SymMat>], s: f64, component: Component) -> DiscountedAverages {
    let series: Vec<(i32, f64)> = means
        .iter()
        .enumerate()
        .map(|(j, level)| (-(j as i32), math::sqrt(level.iter().map(SymMat::norm).fold(0.0, f64::max))))
        .collect();
    let cs = c_s(s);
    let sum: f64 = series.iter().rev().map(|(k, m)| cs * math::pow3(s * f64::from(*k)) * m).sum();
    let (finest_level, finest) = *series.last().expect("nonempty");
    let tail = math::pow3(s * f64::from(finest_level - 1)) * finest;
    let root = sum + tail;
    DiscountedAverages { s, component, series, tail, total: root * root }
}

/// `[f]_{W^{s,p}(□_0)}` by the midpoint rule over ordered pairs of distinct cells.
pub fn fractional_seminorm(f: &ScalarGridFunction, s: f64, p: f64) -> Result<f64> {
    check_s(s, false)?;
    check_p(p)?;
    if p.is_infinite() {
        return Err(Error::range("p", "needs p < ∞"));
    }
    let grid = f.grid();
    if grid.cell_count() > ipow3(10) {
        return Err(Error::range("grid", format!("{} cells exceed the pair budget of 3^10", grid.cell_count())));
    }
    let d = grid.dim();
    let vals = f.cell_values();
    let h = grid.h();
    let w = math::powf(h, 2.0 * d as f64);
    let centres: Vec<[f64; MAX_DIM]> = (0..grid.cell_count()).map(|c| grid.cell_center(&grid.cell_coords(c))).collect();
    let expo = 0.5 * (d as f64 + s * p);
    let mut acc = 0.0;
    for i in 0..vals.len() {
        for j in (i + 1)..vals.len() {
            let diff = math::abs(vals[i] - vals[j]);
            if diff == 0.0 {
                continue;
            }
            let r2: f64 = (0..d).map(|k| (centres[i][k] - centres[j][k]) * (centres[i][k] - centres[j][k])).sum();
            acc += 2.0 * w * math::powf(diff, p) / math::powf(r2, expo);
        }
    }
    Ok(math::powf(acc, 1.0 / p))
}

/// Exponents of the sufficiency criterion for `a ∈ W^{-α,p}`, `a^{-1} ∈ W^{-β,q}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriterionInput {
    pub dim: usize,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl CriterionInput {
    /// `σ̃ = 1 - (d/2)(1/p + 1/q) - (α+β)/2`.
    pub fn sigma_tilde(&self) -> f64 {
        1.0 - 0.5 * self.dim as f64 * (1.0 / self.p + 1.0 / self.q) - 0.5 * (self.alpha + self.beta)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_DIM + 1).contains(&self.dim) {
            return Err(Error::range("dimension", format!("{}", self.dim)));
        }
        for (name, e) in [("p", self.p), ("q", self.q)] {
            if !(e > 1.0) {
                return Err(Error::range(name, format!("{e} not in (1, ∞]")));
            }
        }
        if !(self.alpha >= 0.0 && self.alpha < 1.0 - 1.0 / self.p) {
            return Err(Error::range("alpha", format!("{} not in [0, 1 - 1/p)", self.alpha)));
        }
        if !(self.beta >= 0.0 && self.beta < 1.0 - 1.0 / self.q) {
            return Err(Error::range("beta", format!("{} not in [0, 1 - 1/q)", self.beta)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionReport {
    pub input: CriterionInput,
    pub sigma_tilde: f64,
    pub satisfied: bool,
    pub epsilon: Option<f64>,
    pub s: Option<f64>,
    pub t: Option<f64>,
    pub sigma1: Option<f64>,
    pub sigma2: Option<f64>,
    /// `1/(α p'(1-αp'))` is finite, i.e. `0 < α p' < 1`; likewise for `β, q'`.
    pub lemma_constant_finite: (bool, bool),
    /// Solve-free bounds for `Λ_s` and `λ_t^{-1}` at the chosen split.
    pub upper_surrogate: Option<f64>,
    pub lower_inv_surrogate: Option<f64>,
    /// Their product, an upper bound for `Θ_{s,t}(□_0; max)`.
    pub theta_bound: Option<f64>,
    pub theta_solver: Option<f64>,
}

fn lemma_constant_finite(alpha: f64, p: f64) -> bool {
    let pd = math::conjugate(p);
    alpha > 0.0 && alpha * pd < 1.0
}

/// Evaluates the criterion `σ̃ > 0`, picks a split `s + t = 1 - ε/2` with
/// `σ_1, σ_2 > 0`, and reports the solve-free bound on `Θ_{s,t}`.
///
/// `ε` is half the largest admissible value, `min(1 - σ̃, 2σ̃)` (with `1 - σ̃`
/// replaced by 1 when `σ̃ = 1`), and the remaining slack is split evenly.
pub fn sobolev_criterion_report(
    field: Option<&CoefficientField>,
    input: CriterionInput,
    theta_solver: Option<f64>,
) -> Result<CriterionReport> {
    input.validate()?;
    if let Some(f) = field {
        if f.dim() != input.dim {
            return Err(Error::Validation(format!("field dimension {} != criterion dimension {}", f.dim(), input.dim)));
        }
    }
    let sigma_tilde = input.sigma_tilde();
    let satisfied = sigma_tilde > 0.0;
    let mut report = CriterionReport {
        input,
        sigma_tilde,
        satisfied,
        epsilon: None,
        s: None,
        t: None,
        sigma1: None,
        sigma2: None,
        lemma_constant_finite: (lemma_constant_finite(input.alpha, input.p), lemma_constant_finite(input.beta, input.q)),
        upper_surrogate: None,
        lower_inv_surrogate: None,
        theta_bound: None,
        theta_solver,
    };
    if !satisfied {
        return Ok(report);
    }
    let d = input.dim as f64;
    let s0 = 0.5 * input.alpha + 0.5 * d / input.p;
    let t0 = 0.5 * input.beta + 0.5 * d / input.q;
    let eps_max = if sigma_tilde >= 1.0 { 1.0 } else { 1.0 - sigma_tilde };
    let epsilon = 0.5 * eps_max.min(2.0 * sigma_tilde);
    let slack = sigma_tilde - 0.5 * epsilon;
    let (s, t) = (s0 + 0.5 * slack, t0 + 0.5 * slack);
    report.epsilon = Some(epsilon);
    report.s = Some(s);
    report.t = Some(t);
    report.sigma1 = Some(s - s0);
    report.sigma2 = Some(t - t0);
    if let Some(f) = field {
        let upper = scale_discounted_averages(f, s, Component::A)?.total;
        let lower = scale_discounted_averages(f, t, Component::AInv)?.total;
        report.upper_surrogate = Some(upper);
        report.lower_inv_surrogate = Some(lower);
        report.theta_bound = Some(upper * lower);
    }
    Ok(report)
}

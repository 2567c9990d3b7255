//! Regularity experiments: solve `-∇·(a∇u) = 0` in `□_0` with positive
//! boundary data and compare Harnack and local-boundedness ratios, and the
//! one-step functional inequalities, against the ellipticity ratio `Θ_{s,t}`.
//!
//! Theorem constants are not constructive, so each pass/fail threshold is a
//! calibration constant times the `Θ`-dependence of the corresponding bound.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::Serialize;

use crate::coarse::{report_from_terms, sweep, EllipticityReport};
use crate::generators::{gen_constant, gen_laminate, gen_random_spd};
use crate::grid::{CoefficientField, GridMode, GridSpec, ScalarGridFunction};
use crate::interp::{box_mean, box_norm, eval_with_gradient, for_each_quadrature_point, sup_inf, BoxRegion};
use crate::solver::{solve_dirichlet, Discretization, SolveConfig, SolveStats};
use crate::symmat::SymMat;
use crate::{math, Error, Result, MAX_DIM};

/// Boundary data for the Dirichlet problem on `□_0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum BoundaryData {
    Constant(f64),
    /// `offset + gradient·x`.
    Affine { offset: f64, gradient: Vec<f64> },
    /// `exp(√Λ x_1) cos(x_2)`, which solves the equation for `a = diag(1, Λ)`.
    AnisotropicExp { lambda: f64 },
    /// `1 + amplitude·sin(ω x_1)·cos(ω x_2)`.
    Oscillating { amplitude: f64, frequency: f64 },
}

impl BoundaryData {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            BoundaryData::Constant(c) => *c,
            BoundaryData::Affine { offset, gradient } => offset + gradient.iter().zip(x).map(|(g, y)| g * y).sum::<f64>(),
            BoundaryData::AnisotropicExp { lambda } => {
                let x2 = x.get(1).copied().unwrap_or(0.0);
                math::exp(math::sqrt(*lambda) * x[0]) * math::cos(x2)
            }
            BoundaryData::Oscillating { amplitude, frequency } => {
                let x2 = x.get(1).copied().unwrap_or(0.0);
                1.0 + amplitude * math::sin(frequency * x[0]) * math::cos(frequency * x2)
            }
        }
    }

    /// Nodal function on the whole grid (only boundary values are used by solves).
    pub fn nodal(&self, grid: GridSpec) -> Result<ScalarGridFunction> {
        ScalarGridFunction::from_nodes(grid, |x| self.eval(x))
    }

    pub fn descriptor(&self) -> String {
        match self {
            BoundaryData::Constant(c) => format!("constant({c})"),
            BoundaryData::Affine { offset, gradient } => format!("affine(offset={offset},gradient={gradient:?})"),
            BoundaryData::AnisotropicExp { lambda } => format!("exp(sqrt({lambda})*x1)*cos(x2)"),
            BoundaryData::Oscillating { amplitude, frequency } => format!("1+{amplitude}*sin({frequency}*x1)*cos({frequency}*x2)"),
        }
    }
}

/// `2*_t = 2d/(d - 2(1-t))`, infinite when the denominator is not positive.
pub fn sobolev_exponent(d: usize, t: f64) -> f64 {
    let den = d as f64 - 2.0 * (1.0 - t);
    if den <= 0.0 {
        f64::INFINITY
    } else {
        2.0 * d as f64 / den
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SubcubeExtrema {
    pub rho: f64,
    pub sup: f64,
    pub inf: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ExperimentKind {
    Harnack,
    LocalBoundedness,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub reverse_holder: f64,
    pub log_caccioppoli: Option<f64>,
    pub sobolev_poincare: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub kind: ExperimentKind,
    pub field: String,
    /// Content hash, filled in by callers that compute one.
    pub field_hash: Option<String>,
    pub boundary: String,
    pub s: f64,
    pub t: f64,
    pub sigma: f64,
    pub theta: f64,
    /// Extrema over `ρ□_0` for `ρ ∈ {1/8, 1/4, 1/2}`.
    pub extrema: Vec<SubcubeExtrema>,
    /// `‖u_+‖_{L̲²(□_0)}`.
    pub u_plus_l2: f64,
    /// `log(sup/inf)` over `(1/8)□_0`, when the infimum is positive.
    pub harnack_log_ratio: Option<f64>,
    /// `sup_{(1/2)□_0} u / ‖u_+‖_{L̲²(□_0)}`.
    pub lb_ratio: f64,
    /// Crossover exponent `p_* = t Θ^{-1/2} / 2`.
    pub p_star: f64,
    /// `‖p_*(log u - (log u)_{(1/2)□_0})‖_{L̲^{2*_t}((1/2)□_0)}`, when `u > 0`.
    pub log_w_norm: Option<f64>,
    pub diagnostics: Option<Diagnostics>,
    /// Threshold the tested ratio is compared with.
    pub bound: f64,
    pub pass: bool,
    pub stats: SolveStats,
}

/// Calibration constants fitted on the uniformly elliptic baseline suite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Calibration {
    /// Harnack: pass when `log(sup/inf) ≤ harnack · Θ^{1/2} / t`.
    pub harnack: f64,
    /// Local boundedness: pass when `lb_ratio ≤ local_bound · Θ^{d/(4σ)}`.
    pub local_bound: f64,
    pub reverse_holder_baseline: f64,
    pub log_caccioppoli_baseline: f64,
    pub sobolev_poincare_baseline: f64,
    pub reverse_holder_multiple: f64,
    pub log_caccioppoli_multiple: f64,
    pub sobolev_poincare_multiple: f64,
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration {
            harnack: FROZEN_HARNACK,
            local_bound: FROZEN_LOCAL_BOUND,
            reverse_holder_baseline: FROZEN_REVERSE_HOLDER,
            log_caccioppoli_baseline: 1.0,
            sobolev_poincare_baseline: FROZEN_SOBOLEV_POINCARE,
            reverse_holder_multiple: 50.0,
            log_caccioppoli_multiple: 10.0,
            sobolev_poincare_multiple: 20.0,
        }
    }
}

const FROZEN_HARNACK: f64 = 0.03438;
const FROZEN_LOCAL_BOUND: f64 = 1.1705;
const FROZEN_REVERSE_HOLDER: f64 = 3.9996e-6;
const FROZEN_SOBOLEV_POINCARE: f64 = 0.28641;

fn check_split(s: f64, t: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0 && t > 0.0 && t < 1.0 && s + t < 1.0) {
        return Err(Error::range("(s,t)", format!("({s},{t}) needs s,t ∈ (0,1) and s + t < 1")));
    }
    Ok(1.0 - s - t)
}

fn harnack_config(config: &SolveConfig) -> SolveConfig {
    SolveConfig { discretization: Discretization::Fd5, ..*config }
}

/// Solves the Dirichlet problem on `□_0` with the FD5 scheme and checks the
/// discrete maximum principle.
pub fn solve_with_boundary(field: &CoefficientField, boundary: &BoundaryData, config: &SolveConfig) -> Result<(ScalarGridFunction, SolveStats)> {
    let grid = *field.grid();
    let data = boundary.nodal(grid)?;
    let (lo, hi) = data.boundary_range();
    let (u, stats) = solve_dirichlet(field, &grid.root(), &data, &harnack_config(config))?;
    let slack = 1e-9 * (hi - lo).max(hi.abs().max(lo.abs()));
    if u.min() < lo - slack || u.max() > hi + slack {
        return Err(Error::MaxPrinciple(format!(
            "solution range [{}, {}] leaves boundary range [{lo}, {hi}]",
            u.min(),
            u.max()
        )));
    }
    Ok((u, stats))
}

fn base_record(
    kind: ExperimentKind,
    field: &CoefficientField,
    boundary: &BoundaryData,
    ell: &EllipticityReport,
    u: &ScalarGridFunction,
    stats: SolveStats,
) -> Result<ExperimentRecord> {
    let d = field.dim();
    let (s, t) = (ell.s, ell.t);
    let sigma = check_split(s, t)?;
    let extrema = [0.125, 0.25, 0.5]
        .iter()
        .map(|&rho| sup_inf(u, &BoxRegion::centered(d, rho)).map(|(sup, inf)| SubcubeExtrema { rho, sup, inf }))
        .collect::<Result<Vec<_>>>()?;
    let u_plus_l2 = box_norm(u, &BoxRegion::centered(d, 1.0), 2.0, |v| v.max(0.0))?;
    let eighth = extrema[0];
    let harnack_log_ratio = (eighth.inf > 0.0).then(|| math::ln(eighth.sup / eighth.inf));
    let lb_ratio = extrema[2].sup / u_plus_l2;
    let p_star = 0.5 * t / math::sqrt(ell.theta);
    let half = BoxRegion::centered(d, 0.5);
    let log_w_norm = if u.min() > 0.0 {
        let mean_log = box_mean(u, &half, math::ln)?;
        Some(box_norm(u, &half, sobolev_exponent(d, t), |v| p_star * (math::ln(v) - mean_log))?)
    } else {
        None
    };
    Ok(ExperimentRecord {
        kind,
        field: String::from(field.descriptor()),
        field_hash: None,
        boundary: boundary.descriptor(),
        s,
        t,
        sigma,
        theta: ell.theta,
        extrema,
        u_plus_l2,
        harnack_log_ratio,
        lb_ratio,
        p_star,
        log_w_norm,
        diagnostics: None,
        bound: f64::NAN,
        pass: false,
        stats,
    })
}

/// Harnack ratio on `(1/8)□_0` for positive boundary data.
pub fn harnack_experiment(
    field: &CoefficientField,
    boundary: &BoundaryData,
    ell: &EllipticityReport,
    config: &SolveConfig,
    calibration: &Calibration,
) -> Result<ExperimentRecord> {
    check_split(ell.s, ell.t)?;
    let data = boundary.nodal(*field.grid())?;
    let (lo, _) = data.boundary_range();
    if !(lo > 0.0) {
        return Err(Error::Validation(format!("boundary data must be strictly positive (minimum {lo})")));
    }
    let (u, stats) = solve_with_boundary(field, boundary, config)?;
    let mut rec = base_record(ExperimentKind::Harnack, field, boundary, ell, &u, stats)?;
    let ratio = rec
        .harnack_log_ratio
        .ok_or_else(|| Error::MaxPrinciple(format!("infimum {} on (1/8)□_0 is not positive", rec.extrema[0].inf)))?;
    rec.bound = calibration.harnack * math::sqrt(ell.theta) / ell.t;
    rec.pass = ratio <= rec.bound;
    Ok(rec)
}

/// `sup_{(1/2)□_0} u / ‖u_+‖_{L̲²(□_0)}`.
pub fn local_boundedness_experiment(
    field: &CoefficientField,
    boundary: &BoundaryData,
    ell: &EllipticityReport,
    config: &SolveConfig,
    calibration: &Calibration,
) -> Result<ExperimentRecord> {
    let sigma = check_split(ell.s, ell.t)?;
    let (u, stats) = solve_with_boundary(field, boundary, config)?;
    let mut rec = base_record(ExperimentKind::LocalBoundedness, field, boundary, ell, &u, stats)?;
    let d = field.dim() as f64;
    rec.bound = calibration.local_bound * math::powf(ell.theta, d / (4.0 * sigma));
    rec.pass = rec.lb_ratio <= rec.bound;
    Ok(rec)
}

/// The function `Ψ(u)` of the one-step inequalities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Truncation {
    /// `(u - k)_+`.
    Level(f64),
    /// `u^{p/2}`, `p ∉ {0, 1}`.
    Power(f64),
}

/// `‖Ψ(u)‖_{L̲^{2*_t}(ρ_1□_0)}` divided by the right-hand side of the one-step
/// De Giorgi (`Level`) or Moser (`Power`) inequality with `C = 1`.
pub fn reverse_holder_diagnostic(
    u: &ScalarGridFunction,
    kind: Truncation,
    rho1: f64,
    rho2: f64,
    ell: &EllipticityReport,
) -> Result<f64> {
    let (s, t) = (ell.s, ell.t);
    let sigma = check_split(s, t)?;
    if !(0.5 <= rho1 && rho1 < rho2 && rho2 <= 1.0) {
        return Err(Error::range("(ρ1,ρ2)", format!("({rho1},{rho2}) needs 1/2 ≤ ρ1 < ρ2 ≤ 1")));
    }
    let d = u.grid().dim();
    let gap = rho2 - rho1;
    let expo = (s + sigma) / sigma;
    let root_theta = math::sqrt(ell.theta);
    let (psi, factor): (alloc::boxed::Box<dyn Fn(f64) -> f64>, f64) = match kind {
        Truncation::Level(k) => (
            alloc::boxed::Box::new(move |v: f64| (v - k).max(0.0)),
            math::powf(root_theta / (sigma * t * gap), expo),
        ),
        Truncation::Power(p) => {
            if p == 0.0 || p == 1.0 {
                return Err(Error::range("p", "p must differ from 0 and 1"));
            }
            if u.min() <= 0.0 {
                return Err(Error::Validation("power truncation needs u > 0".into()));
            }
            let ratio = math::abs(p) * root_theta / (math::abs(p - 1.0) * sigma * t * gap);
            (alloc::boxed::Box::new(move |v: f64| math::powf(v, 0.5 * p)), 1.0 + math::powf(ratio, expo))
        }
    };
    let lhs = box_norm(u, &BoxRegion::centered(d, rho1), sobolev_exponent(d, t), &psi)?;
    let rhs_norm = box_norm(u, &BoxRegion::centered(d, rho2), 2.0, &psi)?;
    let rhs = math::powf(gap, -0.5 * d as f64) * factor * rhs_norm;
    if rhs == 0.0 {
        return Ok(0.0);
    }
    Ok(lhs / rhs)
}

/// `‖a^{1/2}∇ log u‖²_{L̲²((1/2)□_0)} / Λ_s(□_0)`.
pub fn log_caccioppoli_diagnostic(field: &CoefficientField, u: &ScalarGridFunction, lambda_upper: f64) -> Result<f64> {
    check_nodal_on(field, u)?;
    if is_constant(u) && u.min() > 0.0 {
        return Ok(0.0);
    }
    let d = field.dim();
    let region = BoxRegion::centered(d, 0.5);
    let mut acc = 0.0;
    let mut bad = false;
    for_each_quadrature_point(field.grid(), &region, |cell, x, w| {
        let (v, g) = eval_with_gradient(u, x);
        if v <= 0.0 {
            bad = true;
            return;
        }
        let mut gl = [0.0; MAX_DIM];
        for k in 0..d {
            gl[k] = g[k] / v;
        }
        acc += w * field.cell(cell).quad(&gl[..d]);
    })?;
    if bad {
        return Err(Error::Validation("u must be strictly positive on (1/2)□_0".into()));
    }
    Ok(acc / region.volume() / lambda_upper)
}

/// `‖u - (u)_{□_0}‖_{L̲^{2*_s}(□_0)} / (s^{-1} λ_s^{-1/2} ‖a^{1/2}∇u‖_{L̲²(□_0)})`, zero for constant `u`.
pub fn sobolev_poincare_diagnostic(field: &CoefficientField, u: &ScalarGridFunction, s: f64, lambda_s: f64) -> Result<f64> {
    check_nodal_on(field, u)?;
    if is_constant(u) {
        return Ok(0.0);
    }
    let d = field.dim();
    let region = BoxRegion::centered(d, 1.0);
    let mut energy = 0.0;
    for_each_quadrature_point(field.grid(), &region, |cell, x, w| {
        let (_, g) = eval_with_gradient(u, x);
        energy += w * field.cell(cell).quad(&g[..d]);
    })?;
    if energy <= 0.0 {
        return Ok(0.0);
    }
    let mean = box_mean(u, &region, |v| v)?;
    let lhs = box_norm(u, &region, sobolev_exponent(d, s), |v| v - mean)?;
    Ok(lhs / (math::sqrt(energy) / (s * math::sqrt(lambda_s))))
}

fn is_constant(u: &ScalarGridFunction) -> bool {
    let (lo, hi) = (u.min(), u.max());
    hi - lo <= 1e-13 * hi.abs().max(lo.abs())
}

fn check_nodal_on(field: &CoefficientField, u: &ScalarGridFunction) -> Result<()> {
    if u.mode() != GridMode::Nodal || u.grid() != field.grid() {
        return Err(Error::Validation("expected a nodal function on the field's grid".into()));
    }
    Ok(())
}

/// `λ_s(□_0)` recomputed from the per-scale terms of a report.
pub fn lambda_lower_at(ell: &EllipticityReport, s: f64) -> f64 {
    report_from_terms(ell.cube, ell.terms.clone(), s, s).lambda_lower
}

/// All three diagnostics on a solution, with the standard Moser step
/// `p = 2`, `ρ_1 = 1/2`, `ρ_2 = 1`.
pub fn diagnostics(field: &CoefficientField, u: &ScalarGridFunction, ell: &EllipticityReport) -> Result<Diagnostics> {
    let positive = u.min() > 0.0;
    let kind = if positive { Truncation::Power(2.0) } else { Truncation::Level(0.0) };
    Ok(Diagnostics {
        reverse_holder: reverse_holder_diagnostic(u, kind, 0.5, 1.0, ell)?,
        log_caccioppoli: if positive { Some(log_caccioppoli_diagnostic(field, u, ell.lambda_upper)?) } else { None },
        sobolev_poincare: sobolev_poincare_diagnostic(field, u, ell.s, lambda_lower_at(ell, ell.s))?,
    })
}

impl Calibration {
    /// Whether each diagnostic lies within its frozen multiple of the baseline.
    pub fn diagnostics_within(&self, d: &Diagnostics) -> bool {
        let finite = d.reverse_holder.is_finite() && d.sobolev_poincare.is_finite() && d.log_caccioppoli.map_or(true, f64::is_finite);
        finite
            && d.reverse_holder <= self.reverse_holder_multiple * self.reverse_holder_baseline
            && d.log_caccioppoli.map_or(true, |v| v <= self.log_caccioppoli_multiple * self.log_caccioppoli_baseline)
            && d.sobolev_poincare <= self.sobolev_poincare_multiple * self.sobolev_poincare_baseline
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SharpnessPoint {
    pub lambda: f64,
    pub sqrt_lambda: f64,
    pub record: Option<ExperimentRecord>,
    /// Continuum value `√Λ/8 + log sec(1/16)`.
    pub expected: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SharpnessReport {
    pub level: u32,
    pub points: Vec<SharpnessPoint>,
    /// Least-squares fit of the log-ratio against `√Λ` over the points that solved.
    pub slope: f64,
    pub intercept: f64,
}

/// `√Λ/8 + log sec(1/16)`.
pub fn sharpness_expected(lambda: f64) -> f64 {
    math::sqrt(lambda) / 8.0 - math::ln(math::cos(1.0 / 16.0))
}

/// Least-squares `(slope, intercept)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Harnack ratios for `a = diag(1, Λ)` with the exact solution
/// `exp(√Λ x_1) cos(x_2)` as boundary data, regressed against `Θ^{1/2} = √Λ`.
pub fn sharpness_sweep(lambdas: &[f64], s: f64, t: f64, level: u32, config: &SolveConfig, calibration: &Calibration) -> Result<SharpnessReport> {
    check_split(s, t)?;
    if lambdas.len() < 4 || lambdas.iter().any(|l| !(*l >= 1.0)) {
        return Err(Error::Validation(format!("need at least four values Λ ≥ 1, got {lambdas:?}")));
    }
    let grid = GridSpec::new(2, level)?;
    let mut points = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let field = gen_constant(grid, SymMat::diag(&[1.0, lambda]))?;
        let ell = crate::coarse::ellipticity_constants(&sweep(&field, config), s, t)?;
        let boundary = BoundaryData::AnisotropicExp { lambda };
        let outcome = harnack_experiment(&field, &boundary, &ell, config, calibration);
        let (record, error) = match outcome {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(format!("{e}"))),
        };
        points.push(SharpnessPoint { lambda, sqrt_lambda: math::sqrt(lambda), record, expected: sharpness_expected(lambda), error });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter_map(|p| p.record.as_ref().and_then(|r| r.harnack_log_ratio).map(|y| (p.sqrt_lambda, y)))
        .unzip();
    let (slope, intercept) = if xs.len() >= 2 { linear_fit(&xs, &ys) } else { (f64::NAN, f64::NAN) };
    Ok(SharpnessReport { level, points, slope, intercept })
}

/// Fields and boundary data of the uniformly elliptic baseline suite
/// (`d = 2`, `N = 3`).
pub fn baseline_cases() -> Result<Vec<(CoefficientField, BoundaryData)>> {
    let grid = GridSpec::new(2, 3)?;
    let mut fields = Vec::new();
    for lambda in [1.0, 2.0, 4.0] {
        fields.push(gen_constant(grid, SymMat::diag(&[1.0, lambda]))?);
    }
    fields.push(gen_laminate(grid, 0, &[1.0, 2.0, 1.0])?);
    fields.push(gen_laminate(grid, 1, &[2.0, 1.0, 3.0])?);
    for seed in 1..=4 {
        fields.push(gen_random_spd(grid, 0.5, 2.0, true, seed)?);
    }
    let boundaries = [
        BoundaryData::Affine { offset: 2.0, gradient: alloc::vec![1.0, 0.0] },
        BoundaryData::Affine { offset: 2.0, gradient: alloc::vec![0.5, 0.3] },
        BoundaryData::Oscillating { amplitude: 0.5, frequency: core::f64::consts::PI },
    ];
    let mut cases = Vec::new();
    for f in &fields {
        for b in &boundaries {
            cases.push((f.clone(), b.clone()));
        }
    }
    Ok(cases)
}

/// Splitting used by the baseline suite.
pub const BASELINE_S: f64 = 0.4;
pub const BASELINE_T: f64 = 0.4;

/// Refits the calibration constants on the baseline suite. The Harnack and
/// local-boundedness constants are the largest normalised ratios; the
/// diagnostic baselines are the reference cases `a = I`, `u = x_1 + 2`
/// (reverse Hölder, `p = 2`), `a = diag(1,Λ)`, `u = exp(√Λ x_1)` (log
/// Caccioppoli) and `a = I`, `u = x_1`, `s = 0.99` (Sobolev–Poincaré).
pub fn baseline_suite(config: &SolveConfig) -> Result<Calibration> {
    let open = Calibration { harnack: f64::INFINITY, local_bound: f64::INFINITY, ..Calibration::default() };
    let mut harnack: f64 = 0.0;
    let mut local: f64 = 0.0;
    for (field, boundary) in baseline_cases()? {
        let ell = crate::coarse::ellipticity_constants(&sweep(&field, config), BASELINE_S, BASELINE_T)?;
        let h = harnack_experiment(&field, &boundary, &ell, config, &open)?;
        let l = local_boundedness_experiment(&field, &boundary, &ell, config, &open)?;
        harnack = harnack.max(h.harnack_log_ratio.unwrap_or(0.0) * ell.t / math::sqrt(ell.theta));
        local = local.max(l.lb_ratio / math::powf(ell.theta, 2.0 / (4.0 * l.sigma)));
    }

    let grid = GridSpec::new(2, 3)?;
    let identity = gen_constant(grid, SymMat::identity(2))?;
    let ell = crate::coarse::ellipticity_constants(&sweep(&identity, config), BASELINE_S, BASELINE_T)?;
    let shifted = ScalarGridFunction::from_nodes(grid, |x| x[0] + 2.0)?;
    let reverse_holder = reverse_holder_diagnostic(&shifted, Truncation::Power(2.0), 0.5, 1.0, &ell)?;
    let linear = ScalarGridFunction::from_nodes(grid, |x| x[0])?;
    let sobolev_poincare = sobolev_poincare_diagnostic(&identity, &linear, 0.99, 1.0)?;

    let lambda = 4.0;
    let aniso = gen_constant(grid, SymMat::diag(&[1.0, lambda]))?;
    let ell = crate::coarse::ellipticity_constants(&sweep(&aniso, config), BASELINE_S, BASELINE_T)?;
    let exp = ScalarGridFunction::from_nodes(grid, |x| math::exp(math::sqrt(lambda) * x[0]))?;
    let log_caccioppoli = log_caccioppoli_diagnostic(&aniso, &exp, ell.lambda_upper)?;

    Ok(Calibration {
        harnack,
        local_bound: local,
        reverse_holder_baseline: reverse_holder,
        log_caccioppoli_baseline: log_caccioppoli,
        sobolev_poincare_baseline: sobolev_poincare,
        ..Calibration::default()
    })
}

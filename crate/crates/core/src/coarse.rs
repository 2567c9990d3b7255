//! Per-cube coarse-grained matrices and the multiscale ellipticity constants.
//!
//! For a cube `Q`, `a_*^{-1}(Q)` is the quadratic form of
//! `q ↦ sup_u ⨍_Q (-∇u·a∇u + 2q·∇u)` and `a(Q; max)` that of
//! `p ↦ sup_u ⨍_Q (-∇u·a∇u + 2p·a∇u)`, the supremum running over all
//! discrete functions on `Q`. Each is assembled from `d` Neumann solves by
//! polarization.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::Serialize;

use crate::grid::{CoefficientField, GridSpec, TriadicCube};
use crate::solver::{bilinear, CubeProblem, RhsKind, SolveConfig, SolveStats};
use crate::symmat::SymMat;
use crate::{c_s, math, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoarseGrainPair {
    pub cube: TriadicCube,
    /// `a_*(Q)`.
    pub astar: SymMat,
    /// `a_*^{-1}(Q)` as computed (the polarized gradient form).
    pub astar_inv: SymMat,
    /// `a(Q; max)`.
    pub amax: SymMat,
    /// `(a)_Q`.
    pub avg: SymMat,
    /// `((a^{-1})_Q)^{-1}`.
    pub inv_avg_inv: SymMat,
    /// Gradient solves followed by flux solves; empty when no solve was needed.
    pub stats: Vec<SolveStats>,
}

impl CoarseGrainPair {
    /// `‖a(Q; max)‖`.
    pub fn amax_norm(&self) -> f64 {
        self.amax.norm()
    }

    /// `|a_*^{-1}(Q)|`.
    pub fn astar_inv_norm(&self) -> f64 {
        self.astar_inv.norm()
    }

    pub fn solves(&self) -> usize {
        self.stats.len()
    }
}

fn polarize(problem: &CubeProblem<'_>, d: usize, kind: RhsKind, stats: &mut Vec<SolveStats>) -> Result<SymMat> {
    let mut loads = Vec::with_capacity(d);
    let mut sols = Vec::with_capacity(d);
    for i in 0..d {
        let mut e = [0.0; crate::MAX_DIM];
        e[i] = 1.0;
        let sol = problem.solve(&e[..d], kind)?;
        stats.push(sol.stats);
        loads.push(problem.load(&e[..d], kind));
        sols.push(sol.u);
    }
    let vol = problem.mesh().volume();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut m = SymMat::zeros(d);
    for i in 0..d {
        for j in i..d {
            // J(u_i + u_j) expanded: a lower bound on the exact form, with quadratic error
            let v = dot(&loads[i], &sols[j]) + dot(&loads[j], &sols[i]) - bilinear(problem.operator(), &sols[i], &sols[j]);
            m.set(i, j, v / vol);
        }
    }
    Ok(m)
}

/// Coarse-grained matrices of one cube.
///
/// Cubes on which the field is constant (in particular single cells) take
/// the cell matrix directly.
pub fn coarse_grain_cube(field: &CoefficientField, cube: &TriadicCube, config: &SolveConfig) -> Result<CoarseGrainPair> {
    let avg = field.cube_average(cube, false)?;
    let inv_avg = field.cube_average(cube, true)?;
    let inv_avg_inv = inv_avg
        .inverse()
        .ok_or_else(|| Error::Validation("(a^{-1})_Q is singular".into()).in_cube(*cube))?;
    if field.is_uniform_on(cube) {
        let a = *field.cell(cube.cells(field.grid())[0]);
        let ainv = *field.cell_inverse(cube.cells(field.grid())[0]);
        return Ok(CoarseGrainPair { cube: *cube, astar: a, astar_inv: ainv, amax: a, avg, inv_avg_inv, stats: Vec::new() });
    }
    coarse_grain_by_solves(field, cube, config)
}

/// [`coarse_grain_cube`] without the constant-cube shortcut.
pub fn coarse_grain_by_solves(field: &CoefficientField, cube: &TriadicCube, config: &SolveConfig) -> Result<CoarseGrainPair> {
    let avg = field.cube_average(cube, false)?;
    let inv_avg_inv = field
        .cube_average(cube, true)?
        .inverse()
        .ok_or_else(|| Error::Validation("(a^{-1})_Q is singular".into()).in_cube(*cube))?;
    let run = || -> Result<CoarseGrainPair> {
        let d = field.dim();
        let problem = CubeProblem::new(field, cube, config)?;
        let mut stats = Vec::with_capacity(2 * d);
        let astar_inv = polarize(&problem, d, RhsKind::Gradient, &mut stats)?;
        let amax = polarize(&problem, d, RhsKind::Flux, &mut stats)?;
        let astar = astar_inv
            .inverse()
            .filter(SymMat::is_spd)
            .ok_or_else(|| Error::Validation(format!("a_*^(-1) = {:?} is not invertible", astar_inv.components())))?;
        Ok(CoarseGrainPair { cube: *cube, astar, astar_inv, amax, avg, inv_avg_inv, stats })
    };
    run().map_err(|e| e.in_cube(*cube))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CubeFailure {
    pub cube: TriadicCube,
    pub message: String,
}

/// Coarse-grained pairs of every cube at every level `-N..=0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub grid: GridSpec,
    pub config: SolveConfig,
    /// `levels[j]` holds depth `j` (level `-j`) in partition order; `None` marks a failed cube.
    pub levels: Vec<Vec<Option<CoarseGrainPair>>>,
    pub failures: Vec<CubeFailure>,
}

impl SweepResult {
    /// Builds a sweep from per-cube outcomes in any order.
    pub fn from_outcomes(
        grid: GridSpec,
        config: SolveConfig,
        outcomes: impl IntoIterator<Item = (TriadicCube, Result<CoarseGrainPair>)>,
    ) -> Self {
        let d = grid.dim() as u32;
        let mut levels: Vec<Vec<Option<CoarseGrainPair>>> =
            (0..=grid.level()).map(|j| alloc::vec![None; crate::math::ipow3(j * d)]).collect();
        let mut failures = Vec::new();
        for (cube, outcome) in outcomes {
            match outcome {
                Ok(pair) => levels[cube.depth() as usize][cube.index_in_level()] = Some(pair),
                Err(e) => failures.push(CubeFailure { cube, message: format!("{e}") }),
            }
        }
        failures.sort_by(|a, b| a.cube.cmp(&b.cube));
        SweepResult { grid, config, levels, failures }
    }

    pub fn pair_count(&self) -> usize {
        self.levels.iter().flatten().filter(|p| p.is_some()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.failures.is_empty() && self.levels.iter().flatten().all(Option::is_some)
    }

    pub fn total_solves(&self) -> usize {
        self.pairs().map(CoarseGrainPair::solves).sum()
    }

    pub fn get(&self, cube: &TriadicCube) -> Option<&CoarseGrainPair> {
        self.levels.get(cube.depth() as usize)?.get(cube.index_in_level())?.as_ref()
    }

    pub fn pairs(&self) -> impl Iterator<Item = &CoarseGrainPair> {
        self.levels.iter().flatten().filter_map(Option::as_ref)
    }

    fn require(&self, cube: &TriadicCube) -> Result<&CoarseGrainPair> {
        self.get(cube).ok_or_else(|| Error::Validation(format!("sweep has no result for cube {cube:?}")))
    }

    /// Per-level maxima of `‖a(Q;max)‖^{1/2}` and `|a_*^{-1}(Q)|^{1/2}` over the
    /// level-`k` cubes inside `cube`, from `k = cube.level` down to `-N`.
    pub fn scale_maxima(&self, cube: &TriadicCube) -> Result<Vec<ScaleTerm>> {
        let n = self.grid.level() as i32;
        let mut terms = Vec::new();
        for level in (-n..=cube.level).rev() {
            let mut upper = 0.0f64;
            let mut lower = 0.0f64;
            for sub in cube.descendants(level) {
                let pair = self.require(&sub)?;
                upper = upper.max(math::sqrt(pair.amax_norm()));
                lower = lower.max(math::sqrt(pair.astar_inv_norm()));
            }
            terms.push(ScaleTerm { level, amax_sqrt: upper, astar_inv_sqrt: lower });
        }
        Ok(terms)
    }
}

/// Computes every cube's pair serially, finest level first.
pub fn sweep(field: &CoefficientField, config: &SolveConfig) -> SweepResult {
    let grid = *field.grid();
    let n = grid.level() as i32;
    let cubes = (-n..=0).flat_map(|k| grid.partition(k).unwrap_or_default());
    SweepResult::from_outcomes(grid, *config, cubes.map(|c| (c, coarse_grain_cube(field, &c, config))))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScaleTerm {
    pub level: i32,
    /// `max_z ‖a(z+□_k; max)‖^{1/2}`.
    pub amax_sqrt: f64,
    /// `max_z |a_*^{-1}(z+□_k)|^{1/2}`.
    pub astar_inv_sqrt: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EllipticityReport {
    pub cube: TriadicCube,
    pub s: f64,
    pub t: f64,
    /// `Λ_s(Q; max)`.
    pub lambda_upper: f64,
    /// `λ_t(Q)`.
    pub lambda_lower: f64,
    /// `Θ_{s,t} = Λ_s / λ_t`.
    pub theta: f64,
    pub terms: Vec<ScaleTerm>,
    /// Closed-form contribution of all levels below the grid to `Λ_s^{1/2}`.
    pub tail_upper: f64,
    /// Same for `λ_t^{-1/2}`.
    pub tail_lower: f64,
    pub c_s: f64,
    pub c_t: f64,
}

fn check_exponent(name: &'static str, x: f64) -> Result<()> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::range(name, format!("{x} not in (0,1)")));
    }
    Ok(())
}

/// `(c_s Σ_{k ≤ m} 3^{-s(m-k)} M_k)` with `M_k = M_{-N}` below the grid.
fn discounted_sum(terms: &[ScaleTerm], m: i32, s: f64, pick: impl Fn(&ScaleTerm) -> f64) -> (f64, f64) {
    let cs = c_s(s);
    let mut sum = 0.0;
    // ascending scale order keeps the reduction reproducible
    for term in terms.iter().rev() {
        sum += cs * math::pow3(-s * f64::from(m - term.level)) * pick(term);
    }
    let finest = terms.last().expect("at least one level");
    let tail = math::pow3(-s * f64::from(m - finest.level + 1)) * pick(finest);
    (sum + tail, tail)
}

/// `Λ_s(□_0; max)`, `λ_t(□_0)` and `Θ_{s,t}`.
pub fn ellipticity_constants(sweep: &SweepResult, s: f64, t: f64) -> Result<EllipticityReport> {
    ellipticity_constants_in(sweep, &sweep.grid.root(), s, t)
}

/// The same constants for a sub-cube `Q = z + □_m`.
pub fn ellipticity_constants_in(sweep: &SweepResult, cube: &TriadicCube, s: f64, t: f64) -> Result<EllipticityReport> {
    check_exponent("s", s)?;
    check_exponent("t", t)?;
    let terms = sweep.scale_maxima(cube)?;
    Ok(report_from_terms(*cube, terms, s, t))
}

/// Evaluates the constants from precomputed per-level maxima.
pub fn report_from_terms(cube: TriadicCube, terms: Vec<ScaleTerm>, s: f64, t: f64) -> EllipticityReport {
    let m = cube.level;
    let (upper, tail_upper) = discounted_sum(&terms, m, s, |x| x.amax_sqrt);
    let (lower, tail_lower) = discounted_sum(&terms, m, t, |x| x.astar_inv_sqrt);
    let lambda_upper = upper * upper;
    let lambda_lower = 1.0 / (lower * lower);
    EllipticityReport {
        cube,
        s,
        t,
        lambda_upper,
        lambda_lower,
        theta: lambda_upper / lambda_lower,
        terms,
        tail_upper,
        tail_lower,
        c_s: c_s(s),
        c_t: c_s(t),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    /// `((a^{-1})_Q)^{-1} ≼ a_*(Q) ≼ a(Q;max) ≼ (a)_Q`.
    OrderingChain,
    /// `‖a(Q;max)‖ ≤ mean_i ‖a(Q_i;max)‖`.
    SubadditivityUpper,
    /// `a_*^{-1}(Q) ≼ mean_i a_*^{-1}(Q_i)`.
    SubadditivityLower,
    /// `λ_s ≤ λ_t ≤ Λ_t ≤ Λ_s` for `s ≤ t`, and `Θ ≥ 1`.
    Monotone,
    /// `Λ_s(Q_k) ≤ 3^{-2sk} Λ_s(□_0)` and `λ_s(Q_k)^{-1} ≤ 3^{-2sk} λ_s(□_0)^{-1}`.
    Scaling,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub cube: TriadicCube,
    /// Amount by which the inequality fails, beyond the allowed slack.
    pub magnitude: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditConfig {
    /// Relative slack; each inequality is allowed `slack · scale`.
    pub slack: f64,
    /// Exponents for the monotonicity and scaling checks.
    pub s_grid: Vec<f64>,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig { slack: 1e-7, s_grid: alloc::vec![0.1, 0.3, 0.5, 0.7, 0.9] }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AuditReport {
    pub cubes_checked: usize,
    pub checks: usize,
    pub violations: Vec<Violation>,
    /// Largest relative excess over all checks (negative when every check holds strictly).
    pub worst_excess: f64,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn check(&mut self, kind: ViolationKind, cube: TriadicCube, excess: f64, scale: f64, slack: f64, detail: impl FnOnce() -> String) {
        self.checks += 1;
        let rel = excess / scale.max(f64::MIN_POSITIVE);
        self.worst_excess = self.worst_excess.max(rel);
        if rel > slack || !excess.is_finite() {
            self.violations.push(Violation { kind, cube, magnitude: excess, detail: detail() });
        }
    }
}

/// `max(λ_max(a - b), 0)`-style excess for `a ≼ b`.
fn loewner_excess(a: &SymMat, b: &SymMat) -> f64 {
    (*a - *b).max_eigenvalue()
}

/// Checks the ordering chain, subadditivity, monotonicity in the exponent
/// and the scaling bounds on a complete sweep.
pub fn audit(sweep: &SweepResult, config: &AuditConfig) -> Result<AuditReport> {
    let mut report = AuditReport { worst_excess: f64::NEG_INFINITY, ..Default::default() };
    let slack = config.slack;
    for pair in sweep.pairs() {
        report.cubes_checked += 1;
        let chain = [
            (&pair.inv_avg_inv, &pair.astar, "((a^-1)_Q)^-1 <= a_*"),
            (&pair.astar, &pair.amax, "a_* <= a(max)"),
            (&pair.amax, &pair.avg, "a(max) <= (a)_Q"),
        ];
        for (lo, hi, what) in chain {
            let excess = loewner_excess(lo, hi);
            report.check(ViolationKind::OrderingChain, pair.cube, excess, hi.norm(), slack, || what.into());
        }
        if pair.cube.level > -(sweep.grid.level() as i32) {
            let children = pair.cube.children();
            let mut norm_mean = 0.0;
            let mut inv_mean = SymMat::zeros(sweep.grid.dim());
            for child in &children {
                let c = sweep.require(child)?;
                norm_mean += c.amax_norm();
                inv_mean += c.astar_inv;
            }
            let k = children.len() as f64;
            norm_mean /= k;
            inv_mean = inv_mean * (1.0 / k);
            report.check(ViolationKind::SubadditivityUpper, pair.cube, pair.amax_norm() - norm_mean, norm_mean, slack, || {
                format!("‖a(Q)‖ = {} > mean child norm {}", pair.amax_norm(), norm_mean)
            });
            let excess = loewner_excess(&pair.astar_inv, &inv_mean);
            report.check(ViolationKind::SubadditivityLower, pair.cube, excess, inv_mean.norm(), slack, || {
                format!("a_*^-1(Q) exceeds the child mean by {excess:e}")
            });
        }
    }

    let root = sweep.grid.root();
    let root_terms = sweep.scale_maxima(&root)?;
    let mut grid_s = config.s_grid.clone();
    grid_s.sort_by(f64::total_cmp);
    let reports: Vec<EllipticityReport> =
        grid_s.iter().map(|&s| report_from_terms(root, root_terms.clone(), s, s)).collect();
    for (i, a) in reports.iter().enumerate() {
        report.check(ViolationKind::Monotone, root, 1.0 - a.theta, 1.0, slack, || format!("Θ = {} < 1 at s = {}", a.theta, a.s));
        report.check(ViolationKind::Monotone, root, a.lambda_lower - a.lambda_upper, a.lambda_upper, slack, || {
            format!("λ_s > Λ_s at s = {}", a.s)
        });
        for b in &reports[i + 1..] {
            // a.s ≤ b.s
            report.check(ViolationKind::Monotone, root, a.lambda_lower - b.lambda_lower, b.lambda_lower, slack, || {
                format!("λ_{} > λ_{}", a.s, b.s)
            });
            report.check(ViolationKind::Monotone, root, b.lambda_upper - a.lambda_upper, a.lambda_upper, slack, || {
                format!("Λ_{} > Λ_{}", b.s, a.s)
            });
        }
    }

    let n = sweep.grid.level() as i32;
    for r in &reports {
        let s = r.s;
        for k in -n..0 {
            let factor = math::pow3(-2.0 * s * f64::from(k));
            let bound_upper = factor * r.lambda_upper;
            let bound_lower_inv = factor / r.lambda_lower;
            let mut worst_upper = 0.0f64;
            let mut worst_lower_inv = 0.0f64;
            let mut worst_cube = root;
            for cube in sweep.grid.partition(k)? {
                let sub = report_from_terms(cube, sweep.scale_maxima(&cube)?, s, s);
                if sub.lambda_upper > worst_upper {
                    worst_upper = sub.lambda_upper;
                    worst_cube = cube;
                }
                worst_lower_inv = worst_lower_inv.max(1.0 / sub.lambda_lower);
            }
            report.check(ViolationKind::Scaling, worst_cube, worst_upper - bound_upper, bound_upper, slack, || {
                format!("max Λ_{s}(Q_{k}) = {worst_upper} > {bound_upper}")
            });
            report.check(ViolationKind::Scaling, worst_cube, worst_lower_inv - bound_lower_inv, bound_lower_inv, slack, || {
                format!("max λ_{s}(Q_{k})^-1 = {worst_lower_inv} > {bound_lower_inv}")
            });
        }
    }
    Ok(report)
}

/// Averages of `∇v` and `a∇v` and the energy of a test function on a cube.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RayleighData {
    pub grad_mean: [f64; crate::MAX_DIM],
    pub flux_mean: [f64; crate::MAX_DIM],
    pub energy: f64,
}

impl RayleighData {
    /// `((⨍∇v)·q)² / ⨍∇v·a∇v`, a lower bound for `q·a_*^{-1}(Q)q`.
    pub fn gradient_quotient(&self, q: &[f64]) -> f64 {
        let g: f64 = q.iter().zip(&self.grad_mean).map(|(a, b)| a * b).sum();
        g * g / self.energy
    }

    /// `((⨍a∇v)·p)² / ⨍∇v·a∇v`, a lower bound for `p·a(Q;max)p`.
    pub fn flux_quotient(&self, p: &[f64]) -> f64 {
        let g: f64 = p.iter().zip(&self.flux_mean).map(|(a, b)| a * b).sum();
        g * g / self.energy
    }
}

/// Rayleigh data of nodal values `v` on the cube mesh.
pub fn rayleigh_data(field: &CoefficientField, cube: &TriadicCube, v: &[f64], config: &SolveConfig) -> Result<RayleighData> {
    let problem = CubeProblem::new(field, cube, config)?;
    let mesh = problem.mesh();
    if v.len() != mesh.node_count() {
        return Err(Error::Validation(format!("{} values for {} nodes", v.len(), mesh.node_count())));
    }
    let d = field.dim();
    let vol = mesh.volume();
    let mut data = RayleighData { grad_mean: [0.0; 3], flux_mean: [0.0; 3], energy: 0.0 };
    for i in 0..d {
        let mut e = [0.0; crate::MAX_DIM];
        e[i] = 1.0;
        let dot = |b: Vec<f64>| b.iter().zip(v).map(|(x, y)| x * y).sum::<f64>() / vol;
        data.grad_mean[i] = dot(problem.load(&e[..d], RhsKind::Gradient));
        data.flux_mean[i] = dot(problem.load(&e[..d], RhsKind::Flux));
    }
    data.energy = bilinear(problem.operator(), v, v) / vol;
    Ok(data)
}

#[cfg(test)]
mod tests;

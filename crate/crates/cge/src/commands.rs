//! The subcommands, as functions from a resolved configuration to reports.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use cge_core::besov::{sobolev_criterion_report, CriterionInput};
use cge_core::coarse::{audit, ellipticity_constants, AuditConfig, CoarseGrainPair, CubeFailure, EllipticityReport, ScaleTerm};
use cge_core::generators::{
    gen_cantor_field, gen_cascade_density, gen_cascade_field, gen_constant, gen_laminate, gen_layered_example, gen_random_spd,
    CantorParams, CascadeParams, LayeredParams,
};
use cge_core::harness::{
    diagnostics, harnack_experiment, local_boundedness_experiment, sharpness_sweep, solve_with_boundary, BoundaryData, ExperimentRecord,
};
use cge_core::solver::SolveConfig;
use cge_core::{CoefficientField, GridSpec, SymMat};
use serde::Serialize;

use crate::cache::{parallel_sweep, SweepCache, SweepRun};
use crate::config::RunConfig;
use crate::format::{content_hash, encode, read_field, write_atomic};
use crate::report::{plot_csv, summary_csv, to_json, to_jsonl, PlotPoint, SummaryRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Gen,
    Coarse,
    Ellipticity,
    Criterion,
    Harnack,
    Sweep,
    Audit,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Gen => "gen",
            Command::Coarse => "coarse",
            Command::Ellipticity => "ellipticity",
            Command::Criterion => "criterion",
            Command::Harnack => "harnack",
            Command::Sweep => "sweep",
            Command::Audit => "audit",
        }
    }
}

/// Artifacts of a run. `report` is the main JSON document; `files` are
/// additional outputs named relative to the output directory.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: String,
    pub files: Vec<(String, String)>,
    /// Encoded field for `gen`.
    pub field: Option<Vec<u8>>,
    pub pass: bool,
    /// Solves performed and cache hits, for logging only.
    pub solves: usize,
    pub cache_hits: usize,
}

impl Outcome {
    /// Writes the artifacts. `gen` writes the field to `out`; other commands
    /// treat `out` as a directory holding `report.json` and the extra files.
    /// Without `out` the report goes to standard output.
    pub fn write(&self, out: Option<&Path>) -> Result<()> {
        if let Some(bytes) = &self.field {
            let out = out.ok_or_else(|| anyhow!("gen needs --out <file>"))?;
            write_atomic(out, bytes).with_context(|| format!("writing {}", out.display()))?;
            print!("{}", self.report);
            return Ok(());
        }
        match out {
            None => print!("{}", self.report),
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                write_atomic(&dir.join("report.json"), self.report.as_bytes())?;
                for (name, content) in &self.files {
                    write_atomic(&dir.join(name), content.as_bytes())?;
                }
            }
        }
        Ok(())
    }
}

/// Parses `constant:c`, `affine:c,g1,..,gd`, `exp:Λ` or `osc:amplitude,frequency`.
pub fn parse_boundary(spec: &str, dim: usize) -> Result<BoundaryData> {
    let (kind, args) = spec.split_once(':').ok_or_else(|| anyhow!("boundary `{spec}` needs the form kind:args"))?;
    let nums = args
        .split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("boundary `{spec}`: bad number `{v}`")))
        .collect::<Result<Vec<_>>>()?;
    let want = |n: usize| if nums.len() == n { Ok(()) } else { Err(anyhow!("boundary `{spec}` needs {n} numbers")) };
    Ok(match kind {
        "constant" => {
            want(1)?;
            BoundaryData::Constant(nums[0])
        }
        "affine" => {
            want(dim + 1)?;
            BoundaryData::Affine { offset: nums[0], gradient: nums[1..].to_vec() }
        }
        "exp" => {
            want(1)?;
            BoundaryData::AnisotropicExp { lambda: nums[0] }
        }
        "osc" => {
            want(2)?;
            BoundaryData::Oscillating { amplitude: nums[0], frequency: nums[1] }
        }
        _ => bail!("unknown boundary kind `{kind}`"),
    })
}

fn grid_of(cfg: &RunConfig) -> Result<GridSpec> {
    Ok(GridSpec::new(cfg.get("dim")?, cfg.get("level")?)?)
}

/// The configured generator at the configured grid, ignoring `field`.
pub fn generate(cfg: &RunConfig) -> Result<CoefficientField> {
    let grid = grid_of(cfg)?;
    let d = grid.dim();
    let field = match cfg.raw("generator") {
        "constant" => {
            let m = if cfg.is_set("matrix") { SymMat::from_upper(d, &cfg.list::<f64>("matrix")?)? } else { SymMat::identity(d) };
            gen_constant(grid, m)?
        }
        "laminate" => gen_laminate(grid, cfg.get("axis")?, &cfg.list::<f64>("values")?)?,
        "layered" => gen_layered_example(grid, &LayeredParams::new(cfg.get("alpha")?, cfg.get("k_max")?)?)?,
        "cantor" => gen_cantor_field(grid, &CantorParams { generation: cfg.get("generation")?, digits: cfg.list("digits")? })?,
        "cascade" => gen_cascade_field(grid, &cascade_params(cfg, cfg.get("generation")?, cfg.get("seed")?)?)?,
        "random" => gen_random_spd(grid, cfg.get("lo")?, cfg.get("hi")?, cfg.get("diagonal")?, cfg.get("seed")?)?,
        other => bail!("unknown generator `{other}`"),
    };
    Ok(field)
}

fn cascade_params(cfg: &RunConfig, generation: u32, seed: u64) -> Result<CascadeParams> {
    Ok(CascadeParams { gamma: cfg.get("gamma")?, generation, seed })
}

/// The field named by `field`, or else the configured generator.
pub fn load_field(cfg: &RunConfig) -> Result<CoefficientField> {
    if cfg.is_set("field") {
        let path = Path::new(cfg.raw("field"));
        return read_field(path).with_context(|| format!("reading {}", path.display()));
    }
    generate(cfg)
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    solve: SolveConfig,
    cache: Option<SweepCache>,
    solves: usize,
    hits: usize,
}

impl Ctx<'_> {
    fn sweep(&mut self, field: &CoefficientField) -> Result<SweepRun> {
        let run = parallel_sweep(field, &self.solve, self.cache.as_ref());
        self.solves += run.solves;
        self.hits += run.cache_hits;
        log::info!(
            "sweep of {} cubes: {} solves, {} cache hits, {:.3} s",
            run.result.levels.iter().map(Vec::len).sum::<usize>(),
            run.solves,
            run.cache_hits,
            run.wall_time_s
        );
        Ok(run)
    }

    fn ellipticity(&mut self, field: &CoefficientField, s: f64, t: f64) -> Result<(SweepRun, EllipticityReport)> {
        let run = self.sweep(field)?;
        if !run.result.is_complete() {
            let f = &run.result.failures;
            bail!("sweep incomplete: {} cubes failed, first: {}", f.len(), f.first().map_or("", |c| c.message.as_str()));
        }
        let ell = ellipticity_constants(&run.result, s, t)?;
        Ok((run, ell))
    }

    fn outcome(&self, report: String, files: Vec<(String, String)>, pass: bool) -> Outcome {
        Outcome { report, files, field: None, pass, solves: self.solves, cache_hits: self.hits }
    }
}

#[derive(Serialize)]
struct GenSummary<'a> {
    descriptor: &'a str,
    dim: usize,
    level: u32,
    cells: usize,
    bytes: usize,
}

#[derive(Serialize)]
struct CoarseSummary<'a> {
    descriptor: &'a str,
    pair_count: usize,
    total_solves: usize,
    failures: &'a [CubeFailure],
    root: Option<&'a CoarseGrainPair>,
    scale_maxima: Vec<ScaleTerm>,
}

#[derive(Serialize)]
struct HarnackSummary<'a> {
    harnack: &'a ExperimentRecord,
    local_boundedness: &'a ExperimentRecord,
    diagnostics_within_calibration: bool,
}

#[derive(Serialize)]
struct SharpnessSummary<'a> {
    report: &'a cge_core::harness::SharpnessReport,
    slope_range: (f64, f64),
}

#[derive(Serialize)]
struct CantorPoint {
    generation: u32,
    field_hash: String,
    theta: f64,
    lambda_upper: f64,
    lambda_lower: f64,
    lb_ratio: f64,
    record: ExperimentRecord,
}

#[derive(Serialize)]
struct CantorSummary {
    points: Vec<CantorPoint>,
    theta_spread: f64,
    lb_ratio_vs_first: f64,
}

#[derive(Serialize)]
struct CascadeGeneration {
    generation: u32,
    seeds: Vec<u64>,
    thetas: Vec<f64>,
    l2_masses: Vec<f64>,
    median_theta: f64,
    median_l2_mass: f64,
}

#[derive(Serialize)]
struct CascadeSummary {
    gamma: f64,
    generations: Vec<CascadeGeneration>,
    median_theta_spread: f64,
    min_mass_growth: f64,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn spread(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    let min = values.fold(f64::INFINITY, f64::min);
    max / min
}

/// Slope window for the sharpness fit.
pub const SHARPNESS_SLOPE: (f64, f64) = (0.11, 0.14);
/// Largest allowed spread of `Θ` across Cantor generations.
pub const CANTOR_THETA_SPREAD: f64 = 2.0;
/// Largest allowed local-boundedness ratio relative to the first generation.
pub const CANTOR_LB_FACTOR: f64 = 3.0;
pub const CASCADE_THETA_SPREAD: f64 = 3.0;
pub const CASCADE_MASS_GROWTH: f64 = 1.5;

/// Runs one subcommand on the current rayon pool.
pub fn run(command: Command, cfg: &RunConfig) -> Result<Outcome> {
    let cache = cfg.is_set("cache_dir").then(|| SweepCache::new(cfg.raw("cache_dir")));
    let mut ctx = Ctx { cfg, solve: cfg.solve_config()?, cache, solves: 0, hits: 0 };
    let resolved = cfg.resolved();
    let name = command.name();
    let (s, t): (f64, f64) = (cfg.get("s")?, cfg.get("t")?);
    match command {
        Command::Gen => {
            let field = generate(cfg)?;
            let bytes = encode(&field);
            let hash = content_hash(&field);
            let g = field.grid();
            let summary =
                GenSummary { descriptor: field.descriptor(), dim: g.dim(), level: g.level(), cells: g.cell_count(), bytes: bytes.len() };
            let report = to_json(name, &resolved, Some(&hash), None, &summary)?;
            Ok(Outcome { field: Some(bytes), ..ctx.outcome(report, Vec::new(), true) })
        }
        Command::Coarse => {
            let field = load_field(cfg)?;
            let run = ctx.sweep(&field)?;
            let root = field.grid().root();
            let summary = CoarseSummary {
                descriptor: field.descriptor(),
                pair_count: run.result.pair_count(),
                total_solves: run.result.total_solves(),
                failures: &run.result.failures,
                root: run.result.get(&root),
                scale_maxima: run.result.scale_maxima(&root).unwrap_or_default(),
            };
            let pass = run.result.is_complete();
            let report = to_json(name, &resolved, Some(&run.field_hash), Some(pass), &summary)?;
            Ok(ctx.outcome(report, Vec::new(), pass))
        }
        Command::Ellipticity => {
            let field = load_field(cfg)?;
            let (run, ell) = ctx.ellipticity(&field, s, t)?;
            let pass = ell.theta >= 1.0 - 1e-9 && ell.lambda_upper >= ell.lambda_lower * (1.0 - 1e-9);
            let report = to_json(name, &resolved, Some(&run.field_hash), Some(pass), &ell)?;
            Ok(ctx.outcome(report, Vec::new(), pass))
        }
        Command::Criterion => {
            let field = load_field(cfg)?;
            let input = CriterionInput {
                dim: field.dim(),
                p: cfg.get("p")?,
                q: cfg.get("q")?,
                alpha: cfg.get("criterion_alpha")?,
                beta: cfg.get("criterion_beta")?,
            };
            let first = sobolev_criterion_report(Some(&field), input, None)?;
            let theta_solver = match (first.s, first.t) {
                (Some(s), Some(t)) => Some(ctx.ellipticity(&field, s, t)?.1.theta),
                _ => None,
            };
            let rep = sobolev_criterion_report(Some(&field), input, theta_solver)?;
            let pass = match (rep.theta_bound, rep.theta_solver) {
                (Some(b), Some(th)) => th <= b * (1.0 + 1e-9),
                _ => true,
            };
            let report = to_json(name, &resolved, Some(&content_hash(&field)), Some(pass), &rep)?;
            Ok(ctx.outcome(report, Vec::new(), pass))
        }
        Command::Harnack => {
            let field = load_field(cfg)?;
            let boundary = parse_boundary(cfg.raw("boundary"), field.dim())?;
            let cal = cfg.calibration()?;
            let (run, ell) = ctx.ellipticity(&field, s, t)?;
            let mut h = harnack_experiment(&field, &boundary, &ell, &ctx.solve, &cal)?;
            let mut l = local_boundedness_experiment(&field, &boundary, &ell, &ctx.solve, &cal)?;
            let (u, _) = solve_with_boundary(&field, &boundary, &ctx.solve)?;
            let diag = diagnostics(&field, &u, &ell)?;
            for r in [&mut h, &mut l] {
                r.field_hash = Some(run.field_hash.clone());
                r.diagnostics = Some(diag);
            }
            let within = cal.diagnostics_within(&diag);
            let pass = h.pass && l.pass && within;
            let rows = [
                SummaryRow { field: h.field.clone(), param: 0.0, theta: h.theta, log_ratio: h.harnack_log_ratio, pass: h.pass },
                SummaryRow { field: l.field.clone(), param: 0.0, theta: l.theta, log_ratio: None, pass: l.pass },
            ];
            let files = vec![
                ("records.jsonl".to_string(), to_jsonl(&[&h, &l])?),
                ("summary.csv".to_string(), summary_csv(&rows)?),
            ];
            let summary = HarnackSummary { harnack: &h, local_boundedness: &l, diagnostics_within_calibration: within };
            let report = to_json(name, &resolved, Some(&run.field_hash), Some(pass), &summary)?;
            Ok(ctx.outcome(report, files, pass))
        }
        Command::Sweep => match cfg.raw("kind") {
            "sharpness" => sweep_sharpness(&mut ctx, &resolved, s, t),
            "cantor" => sweep_cantor(&mut ctx, &resolved, s, t),
            "cascade" => sweep_cascade(&mut ctx, &resolved, s, t),
            other => bail!("unknown sweep kind `{other}`"),
        },
        Command::Audit => {
            let field = load_field(cfg)?;
            let run = ctx.sweep(&field)?;
            let rep = audit(&run.result, &AuditConfig { slack: cfg.get("audit_slack")?, ..AuditConfig::default() })?;
            let pass = rep.passed();
            let report = to_json(name, &resolved, Some(&run.field_hash), Some(pass), &rep)?;
            Ok(ctx.outcome(report, Vec::new(), pass))
        }
    }
}

type Resolved = std::collections::BTreeMap<String, String>;

fn sweep_sharpness(ctx: &mut Ctx<'_>, resolved: &Resolved, s: f64, t: f64) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let lambdas: Vec<f64> = cfg.list("lambda")?;
    let level: u32 = cfg.get("level")?;
    let grid = GridSpec::new(2, level)?;
    let mut rep = sharpness_sweep(&lambdas, s, t, level, &ctx.solve, &cfg.calibration()?)?;
    let mut rows = Vec::new();
    let mut points = Vec::new();
    let mut records = Vec::new();
    for p in &mut rep.points {
        let hash = content_hash(&gen_constant(grid, SymMat::diag(&[1.0, p.lambda]))?);
        if let Some(r) = &mut p.record {
            r.field_hash = Some(hash.clone());
            rows.push(SummaryRow { field: r.field.clone(), param: p.lambda, theta: r.theta, log_ratio: r.harnack_log_ratio, pass: r.pass });
            if let Some(y) = r.harnack_log_ratio {
                points.push(PlotPoint { x: p.sqrt_lambda, y, series: "harnack_log_ratio".into(), field_hash: hash });
            }
            records.push(r.clone());
        }
    }
    let solved = rep.points.iter().all(|p| p.record.is_some());
    let pass = solved && rep.slope >= SHARPNESS_SLOPE.0 && rep.slope <= SHARPNESS_SLOPE.1 && rep.intercept >= 0.0;
    let files = vec![
        ("records.jsonl".to_string(), to_jsonl(&records)?),
        ("summary.csv".to_string(), summary_csv(&rows)?),
        ("plot.csv".to_string(), plot_csv(&points)?),
    ];
    let report = to_json("sweep", resolved, None, Some(pass), &SharpnessSummary { report: &rep, slope_range: SHARPNESS_SLOPE })?;
    Ok(ctx.outcome(report, files, pass))
}

fn sweep_cantor(ctx: &mut Ctx<'_>, resolved: &Resolved, s: f64, t: f64) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let grid = grid_of(cfg)?;
    let boundary = parse_boundary(cfg.raw("boundary"), grid.dim())?;
    let cal = cfg.calibration()?;
    let digits: Vec<u8> = cfg.list("digits")?;
    let mut points = Vec::new();
    let mut plot = Vec::new();
    for generation in cfg.list::<u32>("generations")? {
        let field = gen_cantor_field(grid, &CantorParams { generation, digits: digits.clone() })?;
        let (run, ell) = ctx.ellipticity(&field, s, t)?;
        let mut record = local_boundedness_experiment(&field, &boundary, &ell, &ctx.solve, &cal)?;
        record.field_hash = Some(run.field_hash.clone());
        for term in &ell.terms {
            plot.push(PlotPoint {
                x: f64::from(term.level),
                y: term.amax_sqrt,
                series: format!("n={generation}"),
                field_hash: run.field_hash.clone(),
            });
        }
        points.push(CantorPoint {
            generation,
            field_hash: run.field_hash,
            theta: ell.theta,
            lambda_upper: ell.lambda_upper,
            lambda_lower: ell.lambda_lower,
            lb_ratio: record.lb_ratio,
            record,
        });
    }
    if points.is_empty() {
        bail!("no generations given");
    }
    let theta_spread = spread(points.iter().map(|p| p.theta));
    let first = points[0].lb_ratio;
    let lb_ratio_vs_first = points.iter().map(|p| p.lb_ratio / first).fold(0.0, f64::max);
    let pass = theta_spread < CANTOR_THETA_SPREAD && lb_ratio_vs_first <= CANTOR_LB_FACTOR;
    let rows: Vec<SummaryRow> = points
        .iter()
        .map(|p| SummaryRow { field: p.record.field.clone(), param: f64::from(p.generation), theta: p.theta, log_ratio: None, pass: p.record.pass })
        .collect();
    let records: Vec<&ExperimentRecord> = points.iter().map(|p| &p.record).collect();
    let files = vec![
        ("records.jsonl".to_string(), to_jsonl(&records)?),
        ("summary.csv".to_string(), summary_csv(&rows)?),
        ("plot.csv".to_string(), plot_csv(&plot)?),
    ];
    let report = to_json("sweep", resolved, None, Some(pass), &CantorSummary { points, theta_spread, lb_ratio_vs_first })?;
    Ok(ctx.outcome(report, files, pass))
}

fn sweep_cascade(ctx: &mut Ctx<'_>, resolved: &Resolved, s: f64, t: f64) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let grid = grid_of(cfg)?;
    let base: u64 = cfg.get("seed")?;
    let count: u64 = cfg.get("seeds")?;
    let gamma: f64 = cfg.get("gamma")?;
    let mut generations = Vec::new();
    let mut rows = Vec::new();
    let mut plot = Vec::new();
    for generation in cfg.list::<u32>("generations")? {
        let mut g = CascadeGeneration { generation, seeds: Vec::new(), thetas: Vec::new(), l2_masses: Vec::new(), median_theta: 0.0, median_l2_mass: 0.0 };
        for seed in base..base + count {
            let params = cascade_params(cfg, generation, seed)?;
            let field = gen_cascade_field(grid, &params)?;
            let density = gen_cascade_density(grid, &params)?;
            let mass = density.values().iter().map(|v| v * v).sum::<f64>() / density.values().len() as f64;
            let (run, ell) = ctx.ellipticity(&field, s, t)?;
            rows.push(SummaryRow { field: field.descriptor().to_string(), param: f64::from(generation), theta: ell.theta, log_ratio: None, pass: true });
            plot.push(PlotPoint { x: f64::from(generation), y: ell.theta, series: "theta".into(), field_hash: run.field_hash.clone() });
            plot.push(PlotPoint { x: f64::from(generation), y: mass, series: "l2_mass".into(), field_hash: run.field_hash });
            g.seeds.push(seed);
            g.thetas.push(ell.theta);
            g.l2_masses.push(mass);
        }
        g.median_theta = median(&g.thetas);
        g.median_l2_mass = median(&g.l2_masses);
        generations.push(g);
    }
    if generations.is_empty() || count == 0 {
        bail!("cascade sweep needs at least one generation and one seed");
    }
    let median_theta_spread = spread(generations.iter().map(|g| g.median_theta));
    let min_mass_growth =
        generations.windows(2).map(|w| w[1].median_l2_mass / w[0].median_l2_mass).fold(f64::INFINITY, f64::min);
    let pass = median_theta_spread < CASCADE_THETA_SPREAD && (generations.len() < 2 || min_mass_growth > CASCADE_MASS_GROWTH);
    let files = vec![("summary.csv".to_string(), summary_csv(&rows)?), ("plot.csv".to_string(), plot_csv(&plot)?)];
    let report = to_json("sweep", resolved, None, Some(pass), &CascadeSummary { gamma, generations, median_theta_spread, min_mass_growth })?;
    Ok(ctx.outcome(report, files, pass))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_specs() {
        assert_eq!(parse_boundary("constant:2", 2).unwrap(), BoundaryData::Constant(2.0));
        assert_eq!(
            parse_boundary("affine:2,1,0", 2).unwrap(),
            BoundaryData::Affine { offset: 2.0, gradient: vec![1.0, 0.0] }
        );
        assert!(parse_boundary("affine:2,1", 2).is_err());
        assert!(parse_boundary("exp", 2).is_err());
        assert!(parse_boundary("wave:1", 2).is_err());
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn generators_from_config() {
        let base = RunConfig::default().with("level", "2").unwrap().with("k_max", "1").unwrap();
        for g in ["constant", "laminate", "layered", "cantor", "cascade", "random"] {
            let cfg = base.clone().with("generator", g).unwrap();
            let f = generate(&cfg).unwrap();
            assert_eq!(f.grid().level(), 2, "{g}");
        }
        assert!(generate(&base.with("generator", "nope").unwrap()).is_err());
    }
}

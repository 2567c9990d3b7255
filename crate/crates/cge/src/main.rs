use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use cge::commands::{run, Command};
use cge::config::RunConfig;
use clap::{Args, Parser, Subcommand};

/// Coarse-grained ellipticity experiments on triadic grids.
#[derive(Parser)]
#[command(name = "cge", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a coefficient field and write it as a CGE1 file
    Gen(Opts),
    /// Coarse-grained matrices of every cube
    Coarse(Opts),
    /// Multiscale ellipticity constants Λ_s, λ_t and Θ_{s,t}
    Ellipticity(Opts),
    /// Sufficient condition from Besov-type integrability
    Criterion(Opts),
    /// Harnack, local-boundedness and diagnostic experiments
    Harnack(Opts),
    /// Experiment families: sharpness, cantor, cascade
    Sweep(Opts),
    /// Ordering, subadditivity, monotonicity and scaling checks
    Audit(Opts),
    /// Print a config file listing every key with its default
    Template,
}

#[derive(Args, Clone, Default)]
struct Opts {
    /// Key-value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads (0 uses all cores)
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (gen) or directory (other commands)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    field: Option<PathBuf>,
    #[arg(long)]
    generator: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    level: Option<u32>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    kind: Option<String>,
    /// Comma-separated Λ values
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    boundary: Option<String>,
    #[arg(long)]
    generation: Option<u32>,
    /// Comma-separated generations
    #[arg(long)]
    generations: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Any config key, as KEY=VALUE (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Opts {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let path = |p: &PathBuf| p.to_string_lossy().into_owned();
        let flags: [(&str, Option<String>); 16] = [
            ("threads", self.threads.map(|v| v.to_string())),
            ("cache_dir", self.cache_dir.as_ref().map(path)),
            ("seed", self.seed.map(|v| v.to_string())),
            ("out", self.out.as_ref().map(path)),
            ("field", self.field.as_ref().map(path)),
            ("generator", self.generator.clone()),
            ("dim", self.dim.map(|v| v.to_string())),
            ("level", self.level.map(|v| v.to_string())),
            ("s", self.s.map(|v| v.to_string())),
            ("t", self.t.map(|v| v.to_string())),
            ("kind", self.kind.clone()),
            ("lambda", self.lambda.clone()),
            ("boundary", self.boundary.clone()),
            ("generation", self.generation.map(|v| v.to_string())),
            ("generations", self.generations.clone()),
            ("gamma", self.gamma.map(|v| v.to_string())),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').with_context(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }
}

fn execute(command: Command, opts: &Opts) -> Result<bool> {
    let cfg = opts.resolve()?;
    let threads: usize = cfg.get("threads")?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    let outcome = pool.install(|| run(command, &cfg))?;
    let out = cfg.is_set("out").then(|| PathBuf::from(cfg.raw("out")));
    outcome.write(out.as_deref())?;
    log::info!("{}: {} solves, {} cache hits, pass = {}", command.name(), outcome.solves, outcome.cache_hits, outcome.pass);
    Ok(outcome.pass)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (command, opts) = match cli.command {
        Cmd::Template => {
            print!("{}", RunConfig::template());
            return ExitCode::SUCCESS;
        }
        Cmd::Gen(o) => (Command::Gen, o),
        Cmd::Coarse(o) => (Command::Coarse, o),
        Cmd::Ellipticity(o) => (Command::Ellipticity, o),
        Cmd::Criterion(o) => (Command::Criterion, o),
        Cmd::Harnack(o) => (Command::Harnack, o),
        Cmd::Sweep(o) => (Command::Sweep, o),
        Cmd::Audit(o) => (Command::Audit, o),
    };
    match execute(command, &opts) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("cge {}: {e:#}", command.name());
            ExitCode::from(1)
        }
    }
}

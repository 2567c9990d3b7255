//! On-disk cache of coarse-grained pairs and the parallel sweep.
//!
//! Records live at `<root>/<field hash>/<config tag>/level_<k>/<z>`, one
//! binary record per cube, written atomically.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use cge_core::coarse::{coarse_grain_cube, CoarseGrainPair, SweepResult};
use cge_core::solver::{Discretization, Preconditioner, SolveConfig, SolveStats};
use cge_core::symmat::n_components;
use cge_core::{CoefficientField, SymMat, TriadicCube};
use rayon::prelude::*;

use crate::format::{content_hash, write_atomic};

const RECORD_MAGIC: [u8; 4] = *b"CGP1";

/// Directory name distinguishing solver configurations.
pub fn config_tag(config: &SolveConfig) -> String {
    let disc = match config.discretization {
        Discretization::Fd5 => "fd5",
        Discretization::Q1Fem => "q1",
    };
    let pre = match config.preconditioner {
        Preconditioner::Diagonal => "jacobi",
        Preconditioner::None => "plain",
    };
    let iter = config.cg_max_iter.map_or_else(|| "auto".to_string(), |n| n.to_string());
    format!("{disc}-tol{:e}-{pre}-{iter}", config.cg_rel_tol)
}

pub fn encode_pair(pair: &CoarseGrainPair) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&RECORD_MAGIC);
    out.push(pair.cube.dim() as u8);
    out.extend_from_slice(&[0; 3]);
    out.extend_from_slice(&pair.cube.level.to_le_bytes());
    for o in pair.cube.offset() {
        out.extend_from_slice(&o.to_le_bytes());
    }
    for m in [&pair.astar, &pair.astar_inv, &pair.amax, &pair.avg, &pair.inv_avg_inv] {
        for c in m.components() {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    out.extend_from_slice(&(pair.stats.len() as u32).to_le_bytes());
    for s in &pair.stats {
        out.extend_from_slice(&(s.iterations as u64).to_le_bytes());
        out.extend_from_slice(&s.rel_residual.to_le_bytes());
        out.extend_from_slice(&(s.unknowns as u64).to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let s = self.bytes.get(self.at..self.at + n)?;
        self.at += n;
        Some(s)
    }
    fn u32(&mut self) -> Option<u32> {
        Some(u32::from_le_bytes(self.take(4)?.try_into().ok()?))
    }
    fn u64(&mut self) -> Option<u64> {
        Some(u64::from_le_bytes(self.take(8)?.try_into().ok()?))
    }
    fn f64(&mut self) -> Option<f64> {
        Some(f64::from_le_bytes(self.take(8)?.try_into().ok()?))
    }
}

/// Parses a record; `None` on any malformation (treated as a cache miss).
pub fn decode_pair(bytes: &[u8]) -> Option<CoarseGrainPair> {
    let mut r = Reader { bytes, at: 0 };
    if r.take(4)? != RECORD_MAGIC {
        return None;
    }
    let d = r.take(4)?[0] as usize;
    let level = r.u32()? as i32;
    let offset = (0..d).map(|_| r.u32()).collect::<Option<Vec<_>>>()?;
    let cube = TriadicCube::new(level, &offset).ok()?;
    let mut mats = Vec::with_capacity(5);
    for _ in 0..5 {
        let comps = (0..n_components(d)).map(|_| r.f64()).collect::<Option<Vec<_>>>()?;
        mats.push(SymMat::from_upper(d, &comps).ok()?);
    }
    let n = r.u32()? as usize;
    let mut stats = Vec::with_capacity(n);
    for _ in 0..n {
        let iterations = r.u64()? as usize;
        let rel_residual = r.f64()?;
        let unknowns = r.u64()? as usize;
        stats.push(SolveStats { iterations, rel_residual, unknowns, ..SolveStats::default() });
    }
    if r.at != bytes.len() {
        return None;
    }
    Some(CoarseGrainPair { cube, astar: mats[0], astar_inv: mats[1], amax: mats[2], avg: mats[3], inv_avg_inv: mats[4], stats })
}

#[derive(Clone, Debug)]
pub struct SweepCache {
    root: PathBuf,
}

impl SweepCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        SweepCache { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn record_path(&self, field_hash: &str, config: &SolveConfig, cube: &TriadicCube) -> PathBuf {
        self.root
            .join(field_hash)
            .join(config_tag(config))
            .join(format!("level_{}", cube.level))
            .join(cube.index_in_level().to_string())
    }

    pub fn load(&self, field_hash: &str, config: &SolveConfig, cube: &TriadicCube) -> Option<CoarseGrainPair> {
        let bytes = fs::read(self.record_path(field_hash, config, cube)).ok()?;
        decode_pair(&bytes).filter(|p| p.cube == *cube)
    }

    pub fn store(&self, field_hash: &str, config: &SolveConfig, pair: &CoarseGrainPair) -> std::io::Result<()> {
        write_atomic(&self.record_path(field_hash, config, &pair.cube), &encode_pair(pair))
    }
}

/// A sweep together with how it was obtained.
#[derive(Clone, Debug)]
pub struct SweepRun {
    pub result: SweepResult,
    pub field_hash: String,
    /// Linear solves actually performed (zero on a warm cache).
    pub solves: usize,
    pub cache_hits: usize,
    pub wall_time_s: f64,
}

/// Computes every cube's pair in parallel on the current rayon pool,
/// reading and filling `cache` when given.
pub fn parallel_sweep(field: &CoefficientField, config: &SolveConfig, cache: Option<&SweepCache>) -> SweepRun {
    let start = Instant::now();
    let grid = *field.grid();
    let hash = content_hash(field);
    let cubes: Vec<TriadicCube> =
        (0..=grid.level() as i32).flat_map(|depth| grid.partition(-depth).expect("level within grid")).collect();
    let solves = AtomicUsize::new(0);
    let hits = AtomicUsize::new(0);
    let outcomes: Vec<_> = cubes
        .par_iter()
        .map(|cube| {
            if let Some(pair) = cache.and_then(|c| c.load(&hash, config, cube)) {
                hits.fetch_add(1, Ordering::Relaxed);
                return (*cube, Ok(pair));
            }
            let outcome = coarse_grain_cube(field, cube, config);
            if let Ok(pair) = &outcome {
                solves.fetch_add(pair.solves(), Ordering::Relaxed);
                if let Some(c) = cache {
                    if let Err(e) = c.store(&hash, config, pair) {
                        log::warn!("cache write failed for {cube:?}: {e}");
                    }
                }
            }
            (*cube, outcome)
        })
        .collect();
    SweepRun {
        result: SweepResult::from_outcomes(grid, *config, outcomes),
        field_hash: hash,
        solves: solves.into_inner(),
        cache_hits: hits.into_inner(),
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}

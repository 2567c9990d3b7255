use alloc::vec::Vec;

use super::*;
use crate::generators::{gen_constant, gen_laminate, gen_random_spd};
use crate::rng::KeyedRng;

fn close(a: &SymMat, b: &SymMat, rel: f64) -> bool {
    (*a - *b).norm() <= rel * b.norm()
}

#[test]
fn constant_field_by_solves() {
    let g = GridSpec::new(2, 2).unwrap();
    let a = SymMat::from_rows(&[&[3.0, -0.4], &[-0.4, 0.5]]).unwrap();
    let f = gen_constant(g, a).unwrap();
    for cube in [g.root(), g.partition(-1).unwrap()[7]] {
        let pair = coarse_grain_by_solves(&f, &cube, &SolveConfig::default()).unwrap();
        assert!(close(&pair.astar, &a, 1e-8) && close(&pair.amax, &a, 1e-8));
        assert_eq!(pair.solves(), 4);
        let short = coarse_grain_cube(&f, &cube, &SolveConfig::default()).unwrap();
        assert_eq!(short.astar, a);
        assert_eq!(short.solves(), 0);
    }
}

#[test]
fn single_cell_needs_no_solve() {
    let g = GridSpec::new(2, 2).unwrap();
    let f = gen_random_spd(g, 0.1, 10.0, false, 1).unwrap();
    let cube = g.partition(-2).unwrap()[5];
    let pair = coarse_grain_cube(&f, &cube, &SolveConfig::default()).unwrap();
    assert_eq!(pair.solves(), 0);
    assert_eq!(pair.astar, *f.cell(5));
    assert_eq!(pair.amax, *f.cell(5));
}

#[test]
fn laminate_closed_forms() {
    let g = GridSpec::new(2, 3).unwrap();
    let f = gen_laminate(g, 0, &[1.0, 9.0, 1.0]).unwrap();
    for cfg in [SolveConfig::default(), SolveConfig::fd5()] {
        let pair = coarse_grain_cube(&f, &g.root(), &cfg).unwrap();
        assert!((pair.astar.get(0, 0) - 27.0 / 19.0).abs() < 1e-8);
        // across the stripes the finite-cube value stays strictly below the arithmetic mean
        assert!(pair.astar.get(1, 1) < 11.0 / 3.0 && pair.astar.get(1, 1) > 27.0 / 19.0);
        assert!(pair.astar.get(0, 1).abs() < 1e-8);
        assert!((pair.amax.get(0, 0) - 11.0 / 3.0).abs() < 1e-8);
        assert!((pair.amax.get(1, 1) - 11.0 / 3.0).abs() < 1e-8);
    }
}

#[test]
fn ordering_chain_on_random_fields() {
    let g = GridSpec::new(2, 2).unwrap();
    for seed in 0..5 {
        let f = gen_random_spd(g, 1e-3, 1e3, false, seed).unwrap();
        let p = coarse_grain_cube(&f, &g.root(), &SolveConfig::default()).unwrap();
        let tol = 1e-8;
        assert!(p.inv_avg_inv.loewner_le(&p.astar, tol));
        assert!(p.astar.loewner_le(&p.amax, tol));
        assert!(p.amax.loewner_le(&p.avg, tol));
    }
}

#[test]
fn sweep_counts_pairs() {
    let g = GridSpec::new(2, 3).unwrap();
    let f = gen_laminate(g, 1, &[1.0, 2.0, 5.0]).unwrap();
    let sw = sweep(&f, &SolveConfig::default());
    assert_eq!(sw.pair_count(), 1 + 9 + 81 + 729);
    assert!(sw.is_complete());
}

#[test]
fn identity_and_anisotropic_constants() {
    let g = GridSpec::new(2, 2).unwrap();
    let sw = sweep(&gen_constant(g, SymMat::identity(2)).unwrap(), &SolveConfig::default());
    for (s, t) in [(0.1, 0.2), (0.5, 0.4), (0.9, 0.05)] {
        let r = ellipticity_constants(&sw, s, t).unwrap();
        assert!((r.lambda_upper - 1.0).abs() < 1e-12 && (r.lambda_lower - 1.0).abs() < 1e-12);
        assert!((r.theta - 1.0).abs() < 1e-12);
    }
    let sw = sweep(&gen_constant(g, SymMat::diag(&[1.0, 25.0])).unwrap(), &SolveConfig::default());
    let r = ellipticity_constants(&sw, 0.3, 0.3).unwrap();
    assert!((r.lambda_upper - 25.0).abs() < 1e-10);
    assert!((r.lambda_lower - 1.0).abs() < 1e-12);
    assert!((r.theta - 25.0).abs() < 1e-10);
    assert!(ellipticity_constants(&sw, 0.0, 0.3).is_err());
    assert!(ellipticity_constants(&sw, 0.3, 1.0).is_err());
}

#[test]
fn tail_is_exact_under_refinement() {
    let g = GridSpec::new(2, 2).unwrap();
    let f = gen_random_spd(g, 0.1, 10.0, false, 9).unwrap();
    let cfg = SolveConfig::default();
    let coarse = ellipticity_constants(&sweep(&f, &cfg), 0.4, 0.3).unwrap();
    let fine = ellipticity_constants(&sweep(&f.refined().unwrap(), &cfg), 0.4, 0.3).unwrap();
    // refining changes the discrete problems on the coarse cubes, not the tail
    let fine_terms: Vec<f64> = fine.terms.iter().map(|t| t.amax_sqrt).collect();
    let coarse_terms: Vec<f64> = coarse.terms.iter().map(|t| t.amax_sqrt).collect();
    assert!((fine_terms[3] - coarse_terms[2]).abs() < 1e-14);
    assert!((fine.lambda_upper - coarse.lambda_upper).abs() < 1e-10 * coarse.lambda_upper);
}

#[test]
fn rayleigh_quotients_bound_forms() {
    let g = GridSpec::new(2, 2).unwrap();
    let f = gen_random_spd(g, 1e-2, 1e2, false, 12).unwrap();
    let cube = g.root();
    let cfg = SolveConfig::default();
    let pair = coarse_grain_cube(&f, &cube, &cfg).unwrap();
    let mut rng = KeyedRng::new(3);
    let nodes = g.node_count();
    for trial in 0..20u64 {
        let v: Vec<f64> = (0..nodes).map(|i| rng.normal(trial, i as u64)).collect();
        let data = rayleigh_data(&f, &cube, &v, &cfg).unwrap();
        let q = [rng.normal(999, trial), rng.normal(998, trial)];
        assert!(data.gradient_quotient(&q) <= pair.astar_inv.quad(&q) * (1.0 + 1e-7));
        assert!(data.flux_quotient(&q) <= pair.amax.quad(&q) * (1.0 + 1e-7));
    }
}

#[test]
fn audit_constant_and_random() {
    let g = GridSpec::new(2, 2).unwrap();
    let cfg = SolveConfig::default();
    let r = audit(&sweep(&gen_constant(g, SymMat::diag(&[2.0, 3.0])).unwrap(), &cfg), &AuditConfig::default()).unwrap();
    assert!(r.passed(), "{:?}", r.violations);
    assert!(r.worst_excess <= 1e-12);
    for seed in 0..3 {
        let f = gen_random_spd(g, 1e-3, 1e3, false, 100 + seed).unwrap();
        let r = audit(&sweep(&f, &cfg), &AuditConfig::default()).unwrap();
        assert!(r.passed(), "{:?}", r.violations);
        assert!(r.checks > 0);
    }
}

#[test]
fn sub_cube_constants_scale() {
    let g = GridSpec::new(2, 3).unwrap();
    let f = gen_random_spd(g, 0.1, 10.0, true, 5).unwrap();
    let sw = sweep(&f, &SolveConfig::default());
    let root = ellipticity_constants(&sw, 0.5, 0.5).unwrap();
    for cube in g.partition(-1).unwrap() {
        let sub = ellipticity_constants_in(&sw, &cube, 0.5, 0.5).unwrap();
        assert!(sub.lambda_upper <= math::pow3(1.0) * root.lambda_upper * (1.0 + 1e-12));
        assert_eq!(sub.terms.len(), 3);
    }
}

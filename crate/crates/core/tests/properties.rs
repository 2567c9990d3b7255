use cge_core::coarse::{audit, ellipticity_constants, sweep, AuditConfig};
use cge_core::generators::{gen_cantor_density, gen_cascade_field, gen_random_spd, CantorParams, CascadeParams};
use cge_core::harness::{solve_with_boundary, BoundaryData};
use cge_core::interp::{sup_inf, BoxRegion};
use cge_core::solver::SolveConfig;
use cge_core::GridSpec;
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 24, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn ordering_chain_and_subadditivity(seed in 0u64..1_000_000, decades in 0.5f64..3.0, diagonal: bool) {
        let g = GridSpec::new(2, 2).unwrap();
        let spread = 10f64.powf(decades);
        let f = gen_random_spd(g, 1.0 / spread, spread, diagonal, seed).unwrap();
        let rep = audit(&sweep(&f, &SolveConfig::default()), &AuditConfig::default()).unwrap();
        prop_assert!(rep.passed(), "{:?}", rep.violations);
    }

    #[test]
    fn ellipticity_monotone_and_scale_invariant(seed in 0u64..1_000_000, s in 0.05f64..0.9, gap in 0.0f64..0.09, c in 0.1f64..10.0) {
        let g = GridSpec::new(2, 2).unwrap();
        let f = gen_random_spd(g, 1e-2, 1e2, false, seed).unwrap();
        let sw = sweep(&f, &SolveConfig::default());
        let t = s + gap;
        let at_s = ellipticity_constants(&sw, s, s).unwrap();
        let at_t = ellipticity_constants(&sw, t, t).unwrap();
        let tol = 1e-9;
        prop_assert!(at_s.lambda_lower <= at_t.lambda_lower * (1.0 + tol));
        prop_assert!(at_t.lambda_lower <= at_t.lambda_upper * (1.0 + tol));
        prop_assert!(at_t.lambda_upper <= at_s.lambda_upper * (1.0 + tol));
        prop_assert!(at_s.theta >= 1.0 - tol);
        let scaled = ellipticity_constants(&sweep(&f.scaled(c).unwrap(), &SolveConfig::default()), s, s).unwrap();
        prop_assert!((scaled.theta - at_s.theta).abs() <= 1e-8 * at_s.theta);
    }

    #[test]
    fn tail_exact_under_refinement(seed in 0u64..1_000_000, s in 0.1f64..0.9, t in 0.1f64..0.9) {
        let g = GridSpec::new(2, 1).unwrap();
        let f = gen_random_spd(g, 0.1, 10.0, true, seed).unwrap();
        let a = ellipticity_constants(&sweep(&f, &SolveConfig::default()), s, t).unwrap();
        let b = ellipticity_constants(&sweep(&f.refined().unwrap(), &SolveConfig::default()), s, t).unwrap();
        prop_assert!((a.lambda_upper - b.lambda_upper).abs() <= 1e-10 * a.lambda_upper);
        // a_* on non-uniform cubes is a discrete solve and moves with the mesh;
        // the sub-grid levels and their tail do not
        let (fa, fb) = (a.terms.last().unwrap(), b.terms.last().unwrap());
        prop_assert_eq!(fa.amax_sqrt, fb.amax_sqrt);
        prop_assert_eq!(fa.astar_inv_sqrt, fb.astar_inv_sqrt);
        prop_assert!((a.tail_lower - b.tail_lower * 3f64.powf(t)).abs() <= 1e-12 * a.tail_lower);
    }

    #[test]
    fn cascade_is_deterministic(seed: u64, gamma in 0.0f64..1.9, n in 0u32..=3) {
        let g = GridSpec::new(2, 3).unwrap();
        let p = CascadeParams { gamma, generation: n, seed };
        let a = gen_cascade_field(g, &p).unwrap();
        let b = gen_cascade_field(g, &p).unwrap();
        prop_assert!(a.cells().iter().zip(b.cells()).all(|(x, y)| x.components() == y.components()));
    }

    #[test]
    fn cantor_mass_is_one(n in 0u32..=4, middle: bool) {
        let g = GridSpec::new(2, 4).unwrap();
        let digits = if middle { vec![0, 2] } else { vec![1, 2] };
        let d = gen_cantor_density(g, &CantorParams { generation: n, digits }).unwrap();
        let mass = d.values().iter().sum::<f64>() / d.values().len() as f64;
        prop_assert!((mass - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn fd5_maximum_principle(seed in 0u64..1_000_000, amp in 0.0f64..0.9, freq in 0.5f64..8.0, k in 0.01f64..100.0) {
        let g = GridSpec::new(2, 3).unwrap();
        let f = gen_random_spd(g, 1e-3, 1e3, true, seed).unwrap();
        let b = BoundaryData::Oscillating { amplitude: amp, frequency: freq };
        let (u, _) = solve_with_boundary(&f, &b, &SolveConfig::default()).unwrap();
        let (lo, hi) = b.nodal(*f.grid()).unwrap().boundary_range();
        prop_assert!(u.min() >= lo - 1e-9 * hi.abs() && u.max() <= hi + 1e-9 * hi.abs());
        let region = BoxRegion::centered(2, 0.125);
        let (s0, i0) = sup_inf(&u, &region).unwrap();
        let mut scaled = u.clone();
        scaled.values_mut().iter_mut().for_each(|v| *v *= k);
        let (s1, i1) = sup_inf(&scaled, &region).unwrap();
        prop_assert!(((s1 / i1).ln() - (s0 / i0).ln()).abs() <= 1e-9);
    }
}

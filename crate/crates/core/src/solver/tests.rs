use alloc::vec::Vec;

use super::*;
use crate::generators::{gen_constant, gen_laminate, gen_random_spd};
use crate::grid::GridSpec;
use crate::rng::KeyedRng;
use crate::symmat::SymMat;

fn affine(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> ScalarGridFunction {
    ScalarGridFunction::from_nodes(grid, f).unwrap()
}

#[test]
fn q1_laplacian_stencil() {
    let g = GridSpec::new(2, 1).unwrap();
    let f = gen_constant(g, SymMat::identity(2)).unwrap();
    let mesh = CubeMesh::new(&f, &g.root()).unwrap();
    let op = assemble(&f, &mesh, Discretization::Q1Fem);
    // interior node (1,1) of the 4×4 node mesh
    let row = op.row(5);
    let expected = [-1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0, 8.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0];
    for (a, b) in row.iter().zip(expected) {
        assert!((a - b).abs() < 1e-14, "{row:?}");
    }
    // corner node belongs to a single element
    let corner = op.row(0);
    assert!((corner[4] - 2.0 / 3.0).abs() < 1e-14);
    assert!((corner[5] + 1.0 / 6.0).abs() < 1e-14 && (corner[7] + 1.0 / 6.0).abs() < 1e-14);
    assert!((corner[8] + 1.0 / 3.0).abs() < 1e-14);
}

#[test]
fn row_sums_vanish_and_scaling() {
    let g = GridSpec::new(2, 2).unwrap();
    let f = gen_random_spd(g, 0.1, 10.0, false, 3).unwrap();
    let mesh = CubeMesh::new(&f, &g.root()).unwrap();
    let op = assemble(&f, &mesh, Discretization::Q1Fem);
    for i in 0..op.len() {
        let s: f64 = op.row(i).iter().sum();
        assert!(s.abs() < 1e-12, "row {i} sums to {s}");
    }
    let scaled = assemble(&f.scaled(3.0).unwrap(), &mesh, Discretization::Q1Fem);
    for i in 0..op.len() {
        for (a, b) in op.row(i).iter().zip(scaled.row(i)) {
            assert!((3.0 * a - b).abs() < 1e-12 * b.abs().max(1.0));
        }
    }
}

#[test]
fn fd5_is_m_matrix_and_rejects_full_fields() {
    let g = GridSpec::new(2, 2).unwrap();
    let f = gen_random_spd(g, 0.01, 100.0, true, 8).unwrap();
    let mesh = CubeMesh::new(&f, &g.root()).unwrap();
    assert!(assemble(&f, &mesh, Discretization::Fd5).max_off_diagonal() <= 0.0);
    let full = gen_random_spd(g, 0.01, 100.0, false, 8).unwrap();
    let err = solve_linear_forcing(&full, &g.root(), &[1.0, 0.0], RhsKind::Gradient, &SolveConfig::fd5());
    assert!(matches!(err, Err(Error::Config(_))));
}

#[test]
fn q1_and_fd5_agree_in_one_dimension() {
    let g = GridSpec::new(1, 3).unwrap();
    let f = gen_random_spd(g, 0.5, 2.0, true, 1).unwrap();
    let mesh = CubeMesh::new(&f, &g.root()).unwrap();
    let a = assemble(&f, &mesh, Discretization::Q1Fem);
    let b = assemble(&f, &mesh, Discretization::Fd5);
    for i in 0..a.len() {
        assert_eq!(a.row(i), b.row(i));
    }
}

#[test]
fn symmetry_on_random_pairs() {
    let g = GridSpec::new(2, 2).unwrap();
    let f = gen_random_spd(g, 1e-2, 1e2, false, 11).unwrap();
    let mesh = CubeMesh::new(&f, &g.root()).unwrap();
    let op = assemble(&f, &mesh, Discretization::Q1Fem);
    let mut rng = KeyedRng::new(5);
    for trial in 0..10u64 {
        let u: Vec<f64> = (0..op.len()).map(|i| rng.normal(trial, i as u64)).collect();
        let v: Vec<f64> = (0..op.len()).map(|i| rng.normal(100 + trial, i as u64)).collect();
        let (a, b) = (bilinear(&op, &u, &v), bilinear(&op, &v, &u));
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
}

#[test]
fn dirichlet_affine_and_constant() {
    for disc in [SolveConfig::default(), SolveConfig::fd5()] {
        let g = GridSpec::new(2, 3).unwrap();
        let f = gen_constant(g, SymMat::identity(2)).unwrap();
        let (u, stats) = solve_dirichlet(&f, &g.root(), &affine(g, |x| x[0]), &disc).unwrap();
        assert!(stats.rel_residual <= disc.cg_rel_tol);
        for i in 0..g.node_count() {
            let x = g.node_coord(&g.node_coords(i));
            assert!((u.values()[i] - x[0]).abs() < 1e-9);
        }
        let (u, _) = solve_dirichlet(&f, &g.root(), &affine(g, |_| 5.0), &disc).unwrap();
        assert!(u.values().iter().all(|v| (v - 5.0).abs() < 1e-12));
    }
}

#[test]
fn dirichlet_keeps_boundary_data() {
    let g = GridSpec::new(2, 2).unwrap();
    let f = gen_random_spd(g, 0.1, 10.0, false, 2).unwrap();
    let data = affine(g, |x| math::sin(3.0 * x[0]) + x[1] * x[1]);
    let (u, _) = solve_dirichlet(&f, &g.root(), &data, &SolveConfig::default()).unwrap();
    for i in 0..g.node_count() {
        if g.is_boundary_node(&g.node_coords(i)) {
            assert_eq!(u.values()[i], data.values()[i]);
        }
    }
}

fn anisotropic_error(level: u32, lambda: f64, disc: SolveConfig) -> f64 {
    let g = GridSpec::new(2, level).unwrap();
    let f = gen_constant(g, SymMat::diag(&[1.0, lambda])).unwrap();
    let r = math::sqrt(lambda);
    // exact solution of -∂₁² u - Λ ∂₂² u = 0
    let exact = |x: &[f64]| math::exp(x[0]) * math::cos(x[1] / r);
    let (u, _) = solve_dirichlet(&f, &g.root(), &affine(g, exact), &disc).unwrap();
    (0..g.node_count())
        .map(|i| (u.values()[i] - exact(&g.node_coord(&g.node_coords(i)))).abs())
        .fold(0.0, f64::max)
}

#[test]
fn dirichlet_converges_at_second_order() {
    for disc in [SolveConfig::default(), SolveConfig::fd5()] {
        let e3 = anisotropic_error(3, 4.0, disc);
        let e4 = anisotropic_error(4, 4.0, disc);
        let order = math::ln(e3 / e4) / math::ln(3.0);
        assert!(order >= 1.9, "order {order} ({e3:e} -> {e4:e})");
    }
}

#[test]
fn fd5_maximum_principle() {
    let g = GridSpec::new(2, 3).unwrap();
    let f = gen_random_spd(g, 1e-3, 1e3, true, 21).unwrap();
    let data = affine(g, |x| math::cos(7.0 * x[0]) * math::exp(x[1]));
    let (lo, hi) = data.boundary_range();
    let (u, _) = solve_dirichlet(&f, &g.root(), &data, &SolveConfig::fd5()).unwrap();
    let slack = 1e-9 * (hi - lo);
    assert!(u.min() >= lo - slack && u.max() <= hi + slack);
}

#[test]
fn forcing_on_constant_field() {
    let g = GridSpec::new(2, 2).unwrap();
    let a = SymMat::from_rows(&[&[2.0, 0.5], &[0.5, 1.0]]).unwrap();
    let f = gen_constant(g, a).unwrap();
    let inv = a.inverse().unwrap();
    let cube = g.partition(-1).unwrap()[4];
    let sol = solve_linear_forcing(&f, &cube, &[1.0, 0.0], RhsKind::Gradient, &SolveConfig::default()).unwrap();
    assert!((sol.value - inv.get(0, 0)).abs() < 1e-9);
    let sol = solve_linear_forcing(&f, &cube, &[0.0, 1.0], RhsKind::Flux, &SolveConfig::default()).unwrap();
    assert!((sol.value - a.get(1, 1)).abs() < 1e-9);
    // the maximizer is affine with gradient a^{-1} e_1
    let sol = solve_linear_forcing(&f, &g.root(), &[1.0, 0.0], RhsKind::Gradient, &SolveConfig::default()).unwrap();
    for i in 0..sol.u.len() {
        let x = sol.mesh.node_position(i);
        let e = inv.get(0, 0) * x[0] + inv.get(1, 0) * x[1];
        assert!((sol.u[i] - e).abs() < 1e-8);
    }
}

#[test]
fn forcing_on_laminate() {
    let g = GridSpec::new(2, 3).unwrap();
    let f = gen_laminate(g, 0, &[1.0, 9.0, 1.0]).unwrap();
    for cfg in [SolveConfig::default(), SolveConfig::fd5()] {
        let sol = solve_linear_forcing(&f, &g.root(), &[1.0, 0.0], RhsKind::Gradient, &cfg).unwrap();
        assert!((sol.value - 19.0 / 27.0).abs() < 1e-8, "{}", sol.value);
        let sol = solve_linear_forcing(&f, &g.root(), &[0.0, 1.0], RhsKind::Flux, &cfg).unwrap();
        assert!((sol.value - 11.0 / 3.0).abs() < 1e-8);
        let sol = solve_linear_forcing(&f, &g.root(), &[1.0, 0.0], RhsKind::Flux, &cfg).unwrap();
        assert!((sol.value - 11.0 / 3.0).abs() < 1e-8);
    }
}

#[test]
fn forcing_rejects_zero_direction() {
    let g = GridSpec::new(2, 1).unwrap();
    let f = gen_constant(g, SymMat::identity(2)).unwrap();
    assert!(solve_linear_forcing(&f, &g.root(), &[0.0, 0.0], RhsKind::Gradient, &SolveConfig::default()).is_err());
}

#[test]
fn galerkin_optimality() {
    let g = GridSpec::new(2, 2).unwrap();
    let f = gen_random_spd(g, 1e-2, 1e2, false, 4).unwrap();
    let cube = g.root();
    let cfg = SolveConfig::default();
    let mesh = CubeMesh::new(&f, &cube).unwrap();
    let op = assemble(&f, &mesh, cfg.discretization);
    let q = [0.6, -0.8];
    let sol = solve_linear_forcing(&f, &cube, &q, RhsKind::Gradient, &cfg).unwrap();
    let mut rng = KeyedRng::new(77);
    for trial in 0..20u64 {
        let v: Vec<f64> = (0..mesh.node_count()).map(|i| sol.u[i] + 0.1 * rng.normal(trial, i as u64)).collect();
        let lv = load_functional(&f, &cube, &q, RhsKind::Gradient, &v).unwrap();
        let j = (2.0 * lv - bilinear(&op, &v, &v)) / mesh.volume();
        assert!(j <= sol.value + 1e-9);
    }
}

#[test]
fn energy_examples() {
    let g = GridSpec::new(2, 2).unwrap();
    let f = gen_constant(g, SymMat::diag(&[1.0, 7.0])).unwrap();
    let root = g.root();
    let on_cube = |h: &dyn Fn(&[f64]) -> f64| restrict_to_cube(&f, &root, &affine(g, h)).unwrap();
    let e = |u: &[f64]| energy(&f, &root, u, Discretization::Q1Fem).unwrap();
    assert_eq!(e(&on_cube(&|_| 3.0)), 0.0);
    assert!((e(&on_cube(&|x| x[0])) - 1.0).abs() < 1e-12);
    assert!((e(&on_cube(&|x| x[1])) - 7.0).abs() < 1e-12);
    let grad = discrete_gradient(&affine(g, |x| 2.0 * x[0] - x[1])).unwrap();
    assert!(grad.iter().all(|v| (v[0] - 2.0).abs() < 1e-12 && (v[1] + 1.0).abs() < 1e-12));
}

#[test]
fn sub_cube_energy_is_volume_normalised() {
    let g = GridSpec::new(2, 2).unwrap();
    let f = gen_constant(g, SymMat::identity(2)).unwrap();
    let cube = g.partition(-1).unwrap()[2];
    let u = restrict_to_cube(&f, &cube, &affine(g, |x| x[1])).unwrap();
    assert!((energy(&f, &cube, &u, Discretization::Fd5).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn three_dimensional_constant_field() {
    let g = GridSpec::new(3, 2).unwrap();
    let a = SymMat::from_rows(&[&[2.0, 0.3, 0.0], &[0.3, 1.0, 0.2], &[0.0, 0.2, 3.0]]).unwrap();
    let f = gen_constant(g, a).unwrap();
    let inv = a.inverse().unwrap();
    let sol = solve_linear_forcing(&f, &g.root(), &[0.0, 0.0, 1.0], RhsKind::Gradient, &SolveConfig::default()).unwrap();
    assert!((sol.value - inv.get(2, 2)).abs() < 1e-9);
}

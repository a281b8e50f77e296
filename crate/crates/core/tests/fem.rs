mod common;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rdsurf::fem::*;
use rdsurf::mesh::{generate_icosphere, generate_rectangle, generate_spherical_cap, SurfaceMesh};
use rdsurf::models::{linearize_primary, Brusselator, Murray, RdModel};

fn unit_right_triangle() -> FemSpace {
    let m = SurfaceMesh::new(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], vec![[0, 1, 2]]).unwrap();
    FemSpace::new(m, BoundaryCondition::NeumannZero).unwrap()
}

#[test]
fn single_element_matrices() {
    let s = unit_right_triangle();
    let m = assemble_mass(&s).to_dense();
    let l = assemble_stiffness(&s).to_dense();
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { 1.0 / 12.0 } else { 1.0 / 24.0 };
            assert!((m[i][j] - want).abs() < 1e-15);
        }
    }
    let want = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
    for i in 0..3 {
        for j in 0..3 {
            assert!((l[i][j] - want[i][j]).abs() < 1e-14, "L[{i}][{j}] = {}", l[i][j]);
        }
    }
}

#[test]
fn linear_field_energy_is_exact() {
    let mesh = generate_rectangle(1.0, 1.0, 7, 5).unwrap();
    let s = FemSpace::new(mesh, BoundaryCondition::NeumannZero).unwrap();
    let x: Vec<f64> = s.dof_positions().iter().map(|p| p[0]).collect();
    let e = assemble_stiffness(&s).bilinear(&x, &x);
    assert!((e - 1.0).abs() < 1e-10, "{e}");
}

#[test]
fn dirichlet_eliminates_boundary() {
    let mesh = generate_rectangle(1.0, 4.0, 6, 10).unwrap();
    let s = FemSpace::new(mesh, BoundaryCondition::DirichletZero).unwrap();
    assert_eq!(s.n_dof(), 5 * 9);
    assert_eq!(assemble_mass(&s).nrows(), 5 * 9);
}

#[test]
fn closed_surface_operators() {
    let s = FemSpace::new(generate_icosphere(2).unwrap(), BoundaryCondition::Closed).unwrap();
    let m = assemble_mass(&s);
    let total: f64 = m.values().iter().sum();
    assert!((total - s.mesh().total_area()).abs() < 1e-10);
    let ones = vec![1.0; s.n_dof()];
    assert!(assemble_stiffness(&s).mul_vec(&ones).iter().all(|v| v.abs() < 1e-10));
}

#[test]
fn homogeneous_states_have_zero_residual() {
    let rect = rectangle(8, 32);
    let m = murray();
    for alpha in [5.0, 13.736] {
        let x = homogeneous_vector(&rect, &m, alpha).unwrap();
        assert_eq!((x[0], x[rect.n_dof()]), (1.0, 0.5));
        let r = assemble_residual(&rect, &m, &x, alpha).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-12));
    }
    let cap = FemSpace::new(generate_spherical_cap(1.0, 0.5, 10).unwrap(), BoundaryCondition::DirichletZero).unwrap();
    let b = Brusselator::default();
    let x = homogeneous_vector(&cap, &b, 0.75).unwrap();
    let r = assemble_residual(&cap, &b, &x, 0.75).unwrap();
    assert!(r.iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn jacobian_at_homogeneous_is_linearisation() {
    let s = rectangle(6, 20);
    let m = murray();
    let alpha = 13.0;
    let x = homogeneous_vector(&s, &m, alpha).unwrap();
    let j = assemble_jacobian(&s, &m, &x, alpha).unwrap();
    let c = linearize_primary(&m, alpha).unwrap();
    let mass = assemble_mass(&s);
    let lap = assemble_stiffness(&s);
    let blk = |k: f64, d: f64| mass.add_scaled(k, &lap, -d);
    let (b11, b12, b21, b22) = (blk(c.u_ku, c.u_du), blk(c.u_kv, c.u_dv), blk(c.v_ku, c.v_du), blk(c.v_kv, c.v_dv));
    let want = block_operator(&s, [[&b11, &b12], [&b21, &b22]]);
    let d = j.add_scaled(1.0, &want, -1.0);
    assert!(d.max_abs() <= 1e-10 * want.max_abs(), "{}", d.max_abs());
}

#[test]
fn no_chemotaxis_no_cross_block() {
    let s = rectangle(4, 12);
    let m = Murray { alpha: 0.0, ..murray() };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x: Vec<f64> = (0..2 * s.n_dof()).map(|_| 0.5 + rng.random::<f64>()).collect();
    let j = assemble_jacobian(&s, &m, &x, 0.0).unwrap();
    let n = s.n_dof();
    // With α = 0 the ab block only holds the reaction derivative f_b = 0.
    for i in 0..n {
        for (col, v) in j.row(i) {
            if col >= n {
                assert_eq!(v, 0.0);
            }
        }
    }
}

/// Central-difference check of the Jacobian along one random direction.
fn fd_error(space: &FemSpace, model: &dyn RdModel, alpha: f64, seed: u64, amp: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h0 = homogeneous_vector(space, model, alpha).unwrap();
    let x: Vec<f64> = h0.iter().map(|v| v * (1.0 + amp * (rng.random::<f64>() - 0.5))).collect();
    let dir: Vec<f64> = (0..x.len()).map(|_| rng.random::<f64>() - 0.5).collect();
    let h = 1e-6 * norm(&x) / norm(&dir);
    let xp: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + h * d).collect();
    let xm: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a - h * d).collect();
    let rp = assemble_residual(space, model, &xp, alpha).unwrap();
    let rm = assemble_residual(space, model, &xm, alpha).unwrap();
    let fd: Vec<f64> = rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
    let jd = assemble_jacobian(space, model, &x, alpha).unwrap().mul_vec(&dir);
    norm(&sub(&jd, &fd)) / norm(&jd)
}

#[test]
fn parameter_derivative_matches_difference() {
    let s = rectangle(6, 20);
    let m = murray();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x: Vec<f64> = (0..2 * s.n_dof()).map(|_| 0.5 + rng.random::<f64>()).collect();
    let d = assemble_parameter_derivative(&s, &m, &x, 12.0).unwrap();
    let h = 1e-3;
    let rp = assemble_residual(&s, &m, &x, 12.0 + h).unwrap();
    let rm = assemble_residual(&s, &m, &x, 12.0 - h).unwrap();
    let fd: Vec<f64> = rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
    assert!(norm(&sub(&d, &fd)) <= 1e-8 * norm(&fd));
}

#[test]
fn residual_rms_is_mesh_independent() {
    // The same smooth pointwise residual on two resolutions.
    let m = murray();
    let mut vals = Vec::new();
    for (nx, ny) in [(8, 32), (16, 64)] {
        let s = rectangle(nx, ny);
        let mut x = homogeneous_vector(&s, &m, 10.0).unwrap();
        for (i, p) in s.dof_positions().iter().enumerate() {
            x[i] += 0.01 * (PI * p[1] / 4.0).cos();
        }
        vals.push(residual_rms(&s, &assemble_residual(&s, &m, &x, 10.0).unwrap()));
    }
    assert!((vals[0] / vals[1] - 1.0).abs() < 0.1, "{vals:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn mass_sums_to_area(w in 0.2f64..5.0, h in 0.2f64..5.0, nx in 1usize..12, ny in 1usize..12) {
        let s = FemSpace::new(generate_rectangle(w, h, nx, ny).unwrap(), BoundaryCondition::NeumannZero).unwrap();
        let total: f64 = assemble_mass(&s).values().iter().sum();
        prop_assert!((total - w * h).abs() < 1e-10 * (1.0 + w * h));
        prop_assert!(assemble_mass(&s).asymmetry() == 0.0);
        let ones = vec![1.0; s.n_dof()];
        prop_assert!(assemble_stiffness(&s).mul_vec(&ones).iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn jacobian_matches_central_difference(seed in 0u64..1000, alpha in 1.0f64..20.0) {
        let s = rectangle(5, 16);
        prop_assert!(fd_error(&s, &murray(), alpha, seed, 0.5) <= 1e-6);
        let cap = FemSpace::new(generate_spherical_cap(1.0, 0.5, 6).unwrap(), BoundaryCondition::DirichletZero).unwrap();
        let a = 0.5 + alpha / 40.0;
        prop_assert!(fd_error(&cap, &Brusselator::default(), a, seed, 0.5) <= 1e-6);
    }
}

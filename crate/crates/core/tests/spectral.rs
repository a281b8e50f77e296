mod common;

use common::*;
use rdsurf::fem::{assemble_mass, assemble_stiffness, BoundaryCondition, FemSpace};
use rdsurf::mesh::{generate_icosphere, generate_spherical_cap};
use rdsurf::spectral::*;

#[test]
fn rectangle_modes_match_analytic() {
    let (space, basis) = paper_rectangle(8);
    assert_eq!(space.n_dof(), 33 * 133);
    let exact = rectangle_eigenvalues(1.0, 4.0, 8);
    assert!(basis.pairs[0].lambda.abs() < 1e-8);
    assert_eq!(basis.zero_modes, vec![0]);
    for k in 1..8 {
        let rel = basis.pairs[k].lambda / exact[k] - 1.0;
        assert!(rel.abs() < 0.01, "mode {k}: {} vs {}", basis.pairs[k].lambda, exact[k]);
    }
    // The constant mode, normalised in the mass inner product.
    let v = &basis.pairs[0].vector;
    let c = 1.0 / 2.0; // 1 / sqrt(area)
    assert!(v.iter().all(|x| (x.abs() - c).abs() < 1e-6));

    // (1,0) and (0,4) coincide at π².
    let i = nearest_mode(&basis, PI * PI);
    let g = basis.group_of(i).unwrap();
    assert_eq!(g.len(), 2, "{:?}", basis.groups);

    // Computed modes against cos(qπy/4), in RMS after projection.
    let mass = assemble_mass(&space);
    for q in 1..=3 {
        let k = nearest_mode(&basis, (q as f64 * PI / 4.0).powi(2));
        let f: Vec<f64> = space.dof_positions().iter().map(|p| (q as f64 * PI * p[1] / 4.0).cos()).collect();
        let nf = mass.bilinear(&f, &f).sqrt();
        let f: Vec<f64> = f.iter().map(|x| x / nf).collect();
        let b = &basis.pairs[k].vector;
        let s = mass.bilinear(&f, b).signum();
        let err = (f.iter().zip(b).map(|(x, y)| (x - s * y).powi(2)).sum::<f64>() / f.len() as f64).sqrt();
        assert!(err <= 1e-3, "q = {q}: {err}");
    }
}

#[test]
fn projection_recovers_coefficients() {
    let space = rectangle(10, 40);
    let basis = solve_space(&space, 6, &EigenOptions::default()).unwrap();
    let mass = assemble_mass(&space);
    let b3 = basis.pairs[3].vector.clone();
    let c = project_field(&basis, &mass, &b3).unwrap();
    for (k, v) in c.iter().enumerate() {
        assert!((v - f64::from(k == 3)).abs() < 1e-6);
    }
    let f: Vec<f64> = basis.pairs[1]
        .vector
        .iter()
        .zip(&basis.pairs[2].vector)
        .map(|(a, b)| 2.0 * a + 3.0 * b)
        .collect();
    let c = project_field(&basis, &mass, &f).unwrap();
    assert!((c[1] - 2.0).abs() < 1e-6 && (c[2] - 3.0).abs() < 1e-6);
    assert!(project_field(&basis, &mass, &f[1..]).is_err());
}

#[test]
fn sphere_multiplicities() {
    let space = FemSpace::new(generate_icosphere(5).unwrap(), BoundaryCondition::Closed).unwrap();
    assert!(space.n_dof() >= 10_000);
    let basis = solve_space(&space, 16, &EigenOptions::default()).unwrap();
    let sizes: Vec<usize> = basis.groups.iter().map(|g| g.len()).collect();
    assert_eq!(sizes, vec![1, 3, 5, 7]);
    for (l, g) in basis.groups.iter().enumerate() {
        let exact = (l * (l + 1)) as f64;
        for &k in g {
            let lam = basis.pairs[k].lambda;
            assert!((lam - exact).abs() <= 0.02 * exact.max(1e-9) + 1e-8, "l = {l}: {lam}");
        }
    }
}

#[test]
fn cap_eigenvalues_scale_with_inverse_square_radius() {
    let opts = EigenOptions::default();
    let small = FemSpace::new(generate_spherical_cap(1.0, 0.5, 12).unwrap(), BoundaryCondition::DirichletZero).unwrap();
    let large = FemSpace::new(generate_spherical_cap(2.0, 0.5, 12).unwrap(), BoundaryCondition::DirichletZero).unwrap();
    let a = solve_space(&small, 6, &opts).unwrap();
    let b = solve_space(&large, 6, &opts).unwrap();
    assert!(a.zero_modes.is_empty());
    for k in 0..6 {
        let r = b.pairs[k].lambda / a.pairs[k].lambda;
        assert!((r - 0.25).abs() < 1e-9, "{r}");
    }
}

#[test]
fn residuals_orthonormality_and_determinism() {
    let space = rectangle(8, 30);
    let opts = EigenOptions { seed: 7, ..EigenOptions::default() };
    let a = solve_space(&space, 6, &opts).unwrap();
    let b = solve_space(&space, 6, &opts).unwrap();
    assert_eq!(a, b);
    let l = assemble_stiffness(&space);
    let m = assemble_mass(&space);
    for (i, p) in a.pairs.iter().enumerate() {
        assert!(pair_residual(&l, &m, p) <= 1e-8);
        for (j, q) in a.pairs.iter().enumerate() {
            let g = m.bilinear(&p.vector, &q.vector);
            assert!((g - f64::from(i == j)).abs() < 1e-8);
        }
    }
    assert!(solve_space(&space, space.n_dof(), &opts).is_err());
}

#[test]
fn save_and_load() {
    let space = rectangle(4, 12);
    let basis = solve_space(&space, 5, &EigenOptions::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_basis(&basis, dir.path()).unwrap();
    let back = load_basis(dir.path(), 1e-3).unwrap();
    assert_eq!(back.eigenvalues(), basis.eigenvalues());
    assert_eq!(back.pairs, basis.pairs);
    assert_eq!(back.groups, basis.groups);
}

#[test]
fn grouping_of_distinct_values() {
    let g = group_multiplicities(&[1.0, 2.0, 4.0, 8.0], 1e-3);
    assert!(g.iter().all(|g| g.len() == 1));
}

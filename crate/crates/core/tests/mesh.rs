use proptest::prelude::*;
use rdsurf::mesh::*;

fn rect() -> impl Strategy<Value = SurfaceMesh> {
    (0.2f64..5.0, 0.2f64..5.0, 1usize..8, 1usize..8)
        .prop_map(|(w, h, nx, ny)| generate_rectangle(w, h, nx, ny).unwrap())
}

#[test]
fn generated_topology() {
    let r = generate_rectangle(1.0, 4.0, 8, 32).unwrap();
    assert_eq!(r.euler_characteristic(), 1);
    assert_eq!(r.boundary_loop_count(), 1);
    assert!((r.total_area() - 4.0).abs() < 1e-12);

    let s = generate_icosphere(3).unwrap();
    assert!(s.is_closed());
    assert_eq!(s.euler_characteristic(), 2);
    assert_eq!(s.n_triangles(), 20 * 4usize.pow(3));
    assert!(s.vertices().iter().all(|p| ((p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() - 1.0).abs() < 1e-12));

    let c = generate_spherical_cap(1.0, 0.5, 10).unwrap();
    assert_eq!(c.euler_characteristic(), 1);
    assert_eq!(c.boundary_loop_count(), 1);
    // The rim is the unit circle in z = 0.
    assert!(c.boundary_vertices().iter().all(|&v| {
        let p = c.vertices()[v];
        p[2] == 0.0 && ((p[0] * p[0] + p[1] * p[1]).sqrt() - 1.0).abs() < 1e-12
    }));
}

#[test]
fn obj_and_off_agree() {
    let obj = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3\nf 1 3 4\n";
    let a = parse_obj(obj).unwrap();
    let b = parse_off(&write_off(&a)).unwrap();
    assert_eq!(a.vertices(), b.vertices());
    assert_eq!(a.triangles(), b.triangles());
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("square.off");
    save_off(&a, &p).unwrap();
    assert_eq!(MeshFormat::from_path(&p), Some(MeshFormat::Off));
    assert_eq!(load_mesh(&p, MeshFormat::Off).unwrap().triangles(), a.triangles());
    assert!(load_mesh(dir.path().join("none.off"), MeshFormat::Off).is_err());
}

#[test]
fn decimation_keeps_a_manifold_of_the_same_topology() {
    let s = generate_icosphere(4).unwrap();
    let d = decimate(&s, 1280).unwrap();
    assert!(d.n_triangles().abs_diff(1280) <= 2);
    assert!(d.is_closed());
    assert_eq!(d.euler_characteristic(), 2);
    let r = generate_rectangle(1.0, 4.0, 16, 64).unwrap();
    let d = decimate(&r, 512).unwrap();
    assert_eq!(d.boundary_loop_count(), 1);
    assert!((d.total_area() - 4.0).abs() < 1e-2);
}

#[test]
fn projection_onto_a_decimated_surface() {
    let fine = generate_icosphere(3).unwrap();
    let coarse = decimate(&fine, 320).unwrap();
    let map = build_interpolation(&coarse, &fine, ProjectionOptions::default()).unwrap();
    assert_eq!(map.n_target(), fine.n_vertices());
    assert!(map.partition_of_unity_error().unwrap() < 1e-12);
    let ones = apply_interpolation(&map, &vec![1.0; coarse.n_vertices()]).unwrap();
    assert!(ones.iter().all(|v| (v - 1.0).abs() < 1e-12));
    let tight = ProjectionOptions { max_distance: Some(1e-9) };
    assert!(build_interpolation(&coarse, &fine, tight).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn off_round_trip(m in rect()) {
        let back = parse_off(&write_off(&m)).unwrap();
        prop_assert_eq!(back.vertices(), m.vertices());
        prop_assert_eq!(back.triangles(), m.triangles());
    }

    #[test]
    fn subdivision_invariants(m in rect(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let (fine, map) = subdivide_with_map(&m).unwrap();
        prop_assert_eq!(fine.n_triangles(), 4 * m.n_triangles());
        prop_assert_eq!(fine.n_vertices(), m.n_vertices() + m.edges().len());
        prop_assert!((fine.total_area() - m.total_area()).abs() <= 1e-12 * m.total_area());
        prop_assert_eq!(fine.euler_characteristic(), m.euler_characteristic());
        // Linear fields are reproduced exactly.
        let f = |p: &[f64; 3]| a * p[0] + b * p[1] + 0.5;
        let coarse: Vec<f64> = m.vertices().iter().map(f).collect();
        let got = apply_interpolation(&map, &coarse).unwrap();
        for (g, p) in got.iter().zip(fine.vertices()) {
            prop_assert!((g - f(p)).abs() <= 1e-12);
        }
    }

    #[test]
    fn self_projection_is_identity(m in rect()) {
        let map = build_interpolation(&m, &m, ProjectionOptions::default()).unwrap();
        let f: Vec<f64> = (0..m.n_vertices()).map(|i| i as f64).collect();
        let got = apply_interpolation(&map, &f).unwrap();
        for (g, w) in got.iter().zip(&f) {
            prop_assert!((g - w).abs() <= 1e-9 * w.max(1.0));
        }
    }
}

use std::ffi::{c_char, CString};
use std::ptr;

use rdsurf_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { rd_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

#[test]
fn rectangle_spectrum_and_bifurcation() {
    unsafe {
        let mut mesh = ptr::null_mut();
        assert_eq!(rd_mesh_rectangle(1.0, 4.0, 16, 64, &mut mesh), RD_OK);
        assert_eq!(rd_mesh_vertex_count(mesh), 17 * 65);
        assert_eq!(rd_mesh_triangle_count(mesh), 2 * 16 * 64);

        let mut basis = ptr::null_mut();
        assert_eq!(rd_eigen_solve(mesh, RD_BC_NEUMANN, 6, 0, &mut basis), RD_OK);
        assert_eq!(rd_basis_len(basis), 6);
        let mut l1 = 0.0;
        assert_eq!(rd_basis_eigenvalue(basis, 1, &mut l1), RD_OK);
        let exact = (std::f64::consts::PI / 4.0).powi(2);
        assert!((l1 / exact - 1.0).abs() < 0.01, "{l1}");

        let name = CString::new("murray").unwrap();
        let mut model = ptr::null_mut();
        assert_eq!(rd_model_new(name.as_ptr(), &mut model), RD_OK);
        let c = CString::new("C").unwrap();
        assert_eq!(rd_model_set_parameter(model, c.as_ptr(), 1.522), RD_OK);
        let mut v = 0.0;
        assert_eq!(rd_model_get_parameter(model, c.as_ptr(), &mut v), RD_OK);
        assert_eq!(v, 1.522);

        let mut alpha = 0.0;
        assert_eq!(rd_compose_simple(basis, 1, model, &mut alpha), RD_OK);
        let mut direct = 0.0;
        assert_eq!(rd_bifurcation_parameter(model, l1, &mut direct), RD_OK);
        assert!((alpha - direct).abs() <= 1e-12 * direct);

        assert_eq!(rd_compose_simple(basis, 0, model, &mut alpha), RD_ERR_ZERO_MODE);
        assert_eq!(rd_compose_simple(basis, 60, model, &mut alpha), RD_ERR_OUT_OF_RANGE);
        assert!(last_error().contains("out of range"));

        rd_basis_free(basis);
        rd_model_free(model);
        rd_mesh_free(mesh);
    }
}

#[test]
fn errors_are_reported_not_raised() {
    unsafe {
        let mut mesh = ptr::null_mut();
        assert_eq!(rd_mesh_rectangle(-1.0, 1.0, 2, 2, &mut mesh), RD_ERR_INVALID_ARGUMENT);
        assert!(mesh.is_null());
        assert_eq!(rd_mesh_rectangle(1.0, 1.0, 2, 2, ptr::null_mut()), RD_ERR_NULL_POINTER);
        let missing = CString::new("/nonexistent/mesh.off").unwrap();
        assert_eq!(rd_mesh_load(missing.as_ptr(), &mut mesh), RD_ERR_IO);
        assert!(!last_error().is_empty());

        let bogus = CString::new("gray-scott").unwrap();
        let mut model = ptr::null_mut();
        assert_eq!(rd_model_new(bogus.as_ptr(), &mut model), RD_ERR_CONFIG);
        let name = CString::new("murray").unwrap();
        assert_eq!(rd_model_new(name.as_ptr(), &mut model), RD_OK);
        let p = CString::new("Bstar").unwrap();
        assert_eq!(rd_model_set_parameter(model, p.as_ptr(), 1.0), RD_ERR_CONFIG);
        rd_model_free(model);

        // Freeing null is a no-op.
        rd_mesh_free(ptr::null_mut());
        rd_basis_free(ptr::null_mut());
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/rdsurf.h");
    assert!(header.exists());
    let text = std::fs::read_to_string(&header).unwrap();
    for f in ["rd_mesh_load", "rd_eigen_solve", "rd_compose_simple", "typedef struct RdMesh RdMesh"] {
        assert!(text.contains(f), "header lacks {f}");
    }
    let Ok(cc) = which_cc() else { return };
    let src = tempfile::Builder::new().suffix(".c").tempfile().unwrap();
    std::fs::write(
        src.path(),
        "#include \"rdsurf.h\"\nint main(void) { RdMesh *m = 0; return rd_mesh_rectangle(1, 1, 2, 2, &m) == RD_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let status = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(src.path())
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok())
        .ok_or(())
}

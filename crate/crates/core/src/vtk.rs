//! Legacy ASCII VTK output of per-vertex fields on a surface mesh.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::SurfaceMesh;

/// `POLYDATA` document with one `SCALARS` block per named field. Every
/// field must have one value per mesh vertex.
pub fn vtk_polydata(mesh: &SurfaceMesh, title: &str, fields: &[(&str, &[f64])]) -> Result<String> {
    let nv = mesh.n_vertices();
    for (name, f) in fields {
        if f.len() != nv {
            return Err(Error::LengthMismatch {
                expected: nv,
                got: f.len(),
            });
        }
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(Error::InvalidArgument(format!("bad field name `{name}`")));
        }
    }
    let nt = mesh.n_triangles();
    let mut s = String::with_capacity(64 * (nv + nt) + 24 * nv * fields.len());
    s.push_str("# vtk DataFile Version 3.0\n");
    // The title line may not contain newlines.
    s.push_str(&title.replace(['\n', '\r'], " "));
    s.push_str("\nASCII\nDATASET POLYDATA\n");
    let _ = writeln!(s, "POINTS {nv} double");
    for p in mesh.vertices() {
        let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", p[0], p[1], p[2]);
    }
    let _ = writeln!(s, "POLYGONS {nt} {}", 4 * nt);
    for t in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    if !fields.is_empty() {
        let _ = writeln!(s, "POINT_DATA {nv}");
        for (name, f) in fields {
            let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for v in *f {
                let _ = writeln!(s, "{v:.16e}");
            }
        }
    }
    Ok(s)
}

pub fn save_vtk(mesh: &SurfaceMesh, path: &Path, title: &str, fields: &[(&str, &[f64])]) -> Result<()> {
    let text = vtk_polydata(mesh, title, fields)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

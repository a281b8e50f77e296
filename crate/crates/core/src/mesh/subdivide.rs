use std::collections::HashMap;

use super::{edge_key, InterpolationMap, SurfaceMesh};
use crate::error::Result;

/// Split every triangle into four at its edge midpoints. Original vertices
/// keep their indices; midpoint vertices follow in order of first appearance.
pub fn subdivide(mesh: &SurfaceMesh) -> Result<SurfaceMesh> {
    subdivide_with_map(mesh).map(|(m, _)| m)
}

/// Like [`subdivide`], also returning the exact prolongation map from the
/// input mesh to the refined one.
pub fn subdivide_with_map(mesh: &SurfaceMesh) -> Result<(SurfaceMesh, InterpolationMap)> {
    let nv = mesh.n_vertices();
    let mut vertices = mesh.vertices().to_vec();
    let mut rows: Vec<Vec<(usize, f64)>> = (0..nv).map(|v| vec![(v, 1.0)]).collect();
    let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
    let mut triangles = Vec::with_capacity(4 * mesh.n_triangles());
    for &[a, b, c] in mesh.triangles() {
        let mut midpoint = |p: usize, q: usize| -> usize {
            *mid.entry(edge_key(p, q)).or_insert_with(|| {
                let (x, y) = (mesh.vertices()[p], mesh.vertices()[q]);
                vertices.push([
                    0.5 * (x[0] + y[0]),
                    0.5 * (x[1] + y[1]),
                    0.5 * (x[2] + y[2]),
                ]);
                let (lo, hi) = edge_key(p, q);
                rows.push(vec![(lo, 0.5), (hi, 0.5)]);
                vertices.len() - 1
            })
        };
        let ab = midpoint(a, b);
        let bc = midpoint(b, c);
        let ca = midpoint(c, a);
        triangles.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
    }
    let fine = SurfaceMesh::new(vertices, triangles)?;
    Ok((fine, InterpolationMap::from_rows(rows, nv)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_icosphere, generate_rectangle, generate_spherical_cap};

    #[test]
    fn single_triangle() {
        let m = SurfaceMesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let s = subdivide(&m).unwrap();
        assert_eq!((s.n_vertices(), s.n_triangles()), (6, 4));
        assert_eq!(s.boundary_vertices().len(), 6);
    }

    #[test]
    fn counts_follow_v_plus_e() {
        let ico = generate_icosphere(0).unwrap();
        let s = subdivide(&ico).unwrap();
        assert_eq!((s.n_vertices(), s.n_triangles()), (42, 80));

        let r = generate_rectangle(1.0, 4.0, 32, 128).unwrap();
        let expected = r.n_vertices() + r.edges().len();
        let s = subdivide(&r).unwrap();
        assert_eq!(s.n_vertices(), expected);
        // Subdividing the grid is the same as doubling its resolution.
        assert_eq!(expected, 65 * 257);
    }

    #[test]
    fn area_and_boundary_preserved() {
        let cap = generate_spherical_cap(1.0, 0.5, 6).unwrap();
        let (s, map) = subdivide_with_map(&cap).unwrap();
        assert!((s.total_area() - cap.total_area()).abs() < 1e-12);
        assert_eq!(s.boundary_vertices().len(), 2 * cap.boundary_vertices().len());
        assert_eq!(s.boundary_loop_count(), 1);
        assert_eq!(map.n_target(), s.n_vertices());
    }
}

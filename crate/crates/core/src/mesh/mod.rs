//! Triangulated surface domains and the primitives used to build mesh
//! hierarchies: subdivision, decimation and cross-mesh interpolation.

mod decimate;
mod generate;
mod interp;
mod io;
mod subdivide;

pub use decimate::decimate;
pub use generate::{generate_icosphere, generate_rectangle, generate_spherical_cap};
pub use interp::{apply_interpolation, build_interpolation, InterpolationMap, ProjectionOptions};
pub use io::{load_mesh, parse_obj, parse_off, save_off, write_off, MeshFormat};
pub use subdivide::{subdivide, subdivide_with_map};

use std::collections::HashMap;

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

#[inline]
pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub(crate) fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub(crate) fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Undirected edge key with the smaller index first.
#[inline]
pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// A manifold-with-boundary triangle mesh.
///
/// Construction validates the invariants (distinct in-range indices, at most
/// two triangles per edge, no zero-area triangles) and derives the boundary
/// vertex set, so every `SurfaceMesh` value is valid.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    boundary_vertices: Vec<usize>,
}

impl SurfaceMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("mesh has no triangles".into()));
        }
        let nv = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} references a vertex out of range"
                )));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} repeats a vertex"
                )));
            }
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("vertex coordinates"));
        }

        let mut edge_count: HashMap<(usize, usize), u32> = HashMap::with_capacity(3 * triangles.len());
        for tri in &triangles {
            for k in 0..3 {
                *edge_count.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        let mut boundary = vec![false; nv];
        for (&(a, b), &c) in &edge_count {
            if c > 2 {
                return Err(Error::NonManifold(a, b));
            }
            if c == 1 {
                boundary[a] = true;
                boundary[b] = true;
            }
        }

        let areas: Vec<f64> = triangles
            .iter()
            .map(|t| triangle_area(&vertices, t))
            .collect();
        let mean = areas.iter().sum::<f64>() / areas.len() as f64;
        if let Some(t) = areas.iter().position(|&a| !(a > 1e-12 * mean)) {
            return Err(Error::DegenerateTriangle(t));
        }

        let boundary_vertices = (0..nv).filter(|&v| boundary[v]).collect();
        Ok(SurfaceMesh {
            vertices,
            triangles,
            boundary,
            boundary_vertices,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Sorted indices of vertices on open boundary loops.
    pub fn boundary_vertices(&self) -> &[usize] {
        &self.boundary_vertices
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_closed(&self) -> bool {
        self.boundary_vertices.is_empty()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        triangle_area(&self.vertices, &self.triangles[t])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Unique undirected edges, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| edge_key(t[k], t[(k + 1) % 3])))
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    pub fn euler_characteristic(&self) -> i64 {
        let used = self.used_vertex_count();
        used as i64 - self.edges().len() as i64 + self.triangles.len() as i64
    }

    fn used_vertex_count(&self) -> usize {
        let mut used = vec![false; self.vertices.len()];
        for t in &self.triangles {
            for &v in t {
                used[v] = true;
            }
        }
        used.iter().filter(|&&u| u).count()
    }

    /// Number of closed loops formed by boundary edges.
    pub fn boundary_loop_count(&self) -> usize {
        let mut count: HashMap<(usize, usize), u32> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                *count.entry(edge_key(t[k], t[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        let bedges: Vec<(usize, usize)> = count
            .into_iter()
            .filter(|&(_, c)| c == 1)
            .map(|(e, _)| e)
            .collect();
        // Loops are the connected components of the boundary-edge graph.
        let mut parent: HashMap<usize, usize> = HashMap::new();
        fn find(p: &mut HashMap<usize, usize>, x: usize) -> usize {
            let mut r = x;
            while let Some(&q) = p.get(&r) {
                if q == r {
                    break;
                }
                r = q;
            }
            p.insert(x, r);
            r
        }
        for &(a, b) in &bedges {
            parent.entry(a).or_insert(a);
            parent.entry(b).or_insert(b);
            let ra = find(&mut parent, a);
            let rb = find(&mut parent, b);
            if ra != rb {
                parent.insert(ra, rb);
            }
        }
        let keys: Vec<usize> = parent.keys().copied().collect();
        let mut roots: Vec<usize> = keys.into_iter().map(|k| find(&mut parent, k)).collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }

    /// Axis-aligned bounding-box diagonal length.
    pub fn bbox_diagonal(&self) -> f64 {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        norm(sub(hi, lo))
    }

    pub fn mean_edge_length(&self) -> f64 {
        let e = self.edges();
        e.iter()
            .map(|&(a, b)| norm(sub(self.vertices[a], self.vertices[b])))
            .sum::<f64>()
            / e.len() as f64
    }

    /// Copy of the mesh with all coordinates multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<SurfaceMesh> {
        SurfaceMesh::new(
            self.vertices.iter().map(|&p| scale(p, s)).collect(),
            self.triangles.clone(),
        )
    }

    /// Copy of the mesh with vertex positions replaced by `f(position)`.
    pub fn map_vertices(&self, f: impl Fn(Vec3) -> Vec3) -> Result<SurfaceMesh> {
        SurfaceMesh::new(
            self.vertices.iter().map(|&p| f(p)).collect(),
            self.triangles.clone(),
        )
    }
}

pub(crate) fn triangle_area(vertices: &[Vec3], t: &[usize; 3]) -> f64 {
    let e1 = sub(vertices[t[1]], vertices[t[0]]);
    let e2 = sub(vertices[t[2]], vertices[t[0]]);
    0.5 * norm(cross(e1, e2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_triangle_is_all_boundary() {
        let m = SurfaceMesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert_eq!(m.boundary_vertices(), &[0, 1, 2]);
        assert_eq!(m.boundary_loop_count(), 1);
        assert_eq!(m.euler_characteristic(), 1);
    }

    #[test]
    fn rejects_repeated_and_out_of_range_indices() {
        let v = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        assert!(matches!(
            SurfaceMesh::new(v.clone(), vec![[0, 1, 1]]),
            Err(Error::InvalidMesh(_))
        ));
        assert!(matches!(
            SurfaceMesh::new(v, vec![[0, 1, 3]]),
            Err(Error::InvalidMesh(_))
        ));
    }

    #[test]
    fn rejects_non_manifold_edge() {
        let v = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
        ];
        let r = SurfaceMesh::new(v, vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]]);
        assert!(matches!(r, Err(Error::NonManifold(0, 1))));
    }

    #[test]
    fn rejects_zero_area_triangle() {
        let v = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [2.0, 0.0, 0.0],
        ];
        let r = SurfaceMesh::new(v, vec![[0, 1, 2], [0, 1, 3]]);
        assert!(matches!(r, Err(Error::DegenerateTriangle(1))));
    }
}

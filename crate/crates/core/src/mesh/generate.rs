use std::collections::HashMap;
use std::f64::consts::PI;

use super::{edge_key, norm, scale, SurfaceMesh, Vec3};
use crate::error::{Error, Result};

/// Planar `W x H` grid with `(nx+1)(ny+1)` vertices; every cell is split
/// along the diagonal from its lower-left to its upper-right corner.
pub fn generate_rectangle(w: f64, h: f64, nx: usize, ny: usize) -> Result<SurfaceMesh> {
    if !(w > 0.0 && h > 0.0) || nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument(
            "rectangle needs W, H > 0 and nx, ny >= 1".into(),
        ));
    }
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([w * i as f64 / nx as f64, h * j as f64 / ny as f64, 0.0]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    SurfaceMesh::new(vertices, triangles)
}

/// Spherical cap with rim radius `r` and curvature factor `zeta`.
///
/// The cap is the part of a sphere of radius `r / zeta` with polar angle
/// `theta <= asin(zeta)`, translated so that the rim lies in the plane z = 0.
/// It is meshed with `n` concentric rings of equal polar-angle spacing; ring
/// `i` holds `6 i` vertices, which keeps triangles close to equilateral.
pub fn generate_spherical_cap(r: f64, zeta: f64, n: usize) -> Result<SurfaceMesh> {
    if !(r > 0.0) || !(zeta > 0.0 && zeta <= 1.0) || n < 2 {
        return Err(Error::InvalidArgument(
            "cap needs R > 0, 0 < zeta <= 1 and n >= 2".into(),
        ));
    }
    let rho = r / zeta;
    let theta_max = zeta.asin();
    let z0 = rho * theta_max.cos();

    let mut vertices: Vec<Vec3> = vec![[0.0, 0.0, rho - z0]];
    let mut ring_start = vec![0usize];
    for i in 1..=n {
        ring_start.push(vertices.len());
        let theta = theta_max * i as f64 / n as f64;
        let m = 6 * i;
        for j in 0..m {
            let phi = 2.0 * PI * j as f64 / m as f64;
            let s = if i == n { r } else { rho * theta.sin() };
            let z = if i == n { 0.0 } else { rho * theta.cos() - z0 };
            vertices.push([s * phi.cos(), s * phi.sin(), z]);
        }
    }

    let mut triangles = Vec::with_capacity(6 * n * n);
    for b in 0..6 {
        triangles.push([0, ring_start[1] + b, ring_start[1] + (b + 1) % 6]);
    }
    for i in 1..n {
        let (na, nb) = (6 * i, 6 * (i + 1));
        let inner = |a: usize| ring_start[i] + a % na;
        let outer = |b: usize| ring_start[i + 1] + b % nb;
        let (mut a, mut b) = (0usize, 0usize);
        // Walk both rings by angle, always advancing the one whose next
        // vertex comes first.
        while a < na || b < nb {
            let advance_outer = b < nb && (a == na || (b + 1) * na <= (a + 1) * nb);
            if advance_outer {
                triangles.push([outer(b), outer(b + 1), inner(a)]);
                b += 1;
            } else {
                triangles.push([inner(a), outer(b), inner(a + 1)]);
                a += 1;
            }
        }
    }
    SurfaceMesh::new(vertices, triangles)
}

/// Unit icosphere: the icosahedron refined `level` times by edge midpoints
/// projected onto the sphere. Level `l` has `20 * 4^l` triangles.
pub fn generate_icosphere(level: usize) -> Result<SurfaceMesh> {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v: Vec<Vec3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|&p| scale(p, 1.0 / norm(p)))
    .collect();
    let mut f: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut nf = Vec::with_capacity(4 * f.len());
        let mut midpoint = |a: usize, b: usize, v: &mut Vec<Vec3>| -> usize {
            *mid.entry(edge_key(a, b)).or_insert_with(|| {
                let p = [
                    0.5 * (v[a][0] + v[b][0]),
                    0.5 * (v[a][1] + v[b][1]),
                    0.5 * (v[a][2] + v[b][2]),
                ];
                v.push(scale(p, 1.0 / norm(p)));
                v.len() - 1
            })
        };
        for &[a, b, c] in &f {
            let ab = midpoint(a, b, &mut v);
            let bc = midpoint(b, c, &mut v);
            let ca = midpoint(c, a, &mut v);
            nf.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        f = nf;
    }
    SurfaceMesh::new(v, f)
}

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use rayon::prelude::*;

use super::{add, dot, norm, scale, sub, SurfaceMesh, Vec3};
use crate::error::{Error, Result};

/// Sparse linear map from per-vertex fields on a source mesh to per-vertex
/// fields on a target mesh. Each row holds at most three weighted sources.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationMap {
    rows: Vec<Vec<(usize, f64)>>,
    n_source: usize,
}

impl InterpolationMap {
    pub(crate) fn from_rows(rows: Vec<Vec<(usize, f64)>>, n_source: usize) -> Self {
        InterpolationMap { rows, n_source }
    }

    pub fn identity(n: usize) -> Self {
        InterpolationMap {
            rows: (0..n).map(|i| vec![(i, 1.0)]).collect(),
            n_source: n,
        }
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn n_source(&self) -> usize {
        self.n_source
    }

    pub fn n_target(&self) -> usize {
        self.rows.len()
    }

    /// True when every row is a single unit weight on its own index.
    pub fn is_identity(&self) -> bool {
        self.n_source == self.rows.len()
            && self
                .rows
                .iter()
                .enumerate()
                .all(|(i, r)| r.len() == 1 && r[0].0 == i && r[0].1 == 1.0)
    }

    /// Largest deviation of a row's weight sum from one; `None` if a weight
    /// is negative.
    pub fn partition_of_unity_error(&self) -> Option<f64> {
        let mut worst = 0.0f64;
        for r in &self.rows {
            if r.iter().any(|&(_, w)| w < 0.0) {
                return None;
            }
            worst = worst.max((r.iter().map(|&(_, w)| w).sum::<f64>() - 1.0).abs());
        }
        Some(worst)
    }

    /// CSV with columns `target_index,src0,w0,src1,w1,src2,w2`; unused slots
    /// are written as `-1,0`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("target_index,src0,w0,src1,w1,src2,w2\n");
        for (i, r) in self.rows.iter().enumerate() {
            let _ = write!(s, "{i}");
            for k in 0..3 {
                match r.get(k) {
                    Some(&(j, w)) => {
                        let _ = write!(s, ",{j},{w:.16e}");
                    }
                    None => s.push_str(",-1,0"),
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str, n_source: usize) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            let err = || Error::Parse {
                line: i + 1,
                message: "malformed interpolation row".into(),
            };
            if f.len() != 7 {
                return Err(err());
            }
            let mut row = Vec::new();
            for k in 0..3 {
                let j: i64 = f[1 + 2 * k].trim().parse().map_err(|_| err())?;
                let w: f64 = f[2 + 2 * k].trim().parse().map_err(|_| err())?;
                if j >= 0 {
                    if j as usize >= n_source {
                        return Err(err());
                    }
                    row.push((j as usize, w));
                }
            }
            rows.push(row);
        }
        Ok(InterpolationMap { rows, n_source })
    }
}

pub fn apply_interpolation(map: &InterpolationMap, field: &[f64]) -> Result<Vec<f64>> {
    if field.len() != map.n_source {
        return Err(Error::LengthMismatch {
            expected: map.n_source,
            got: field.len(),
        });
    }
    Ok(map
        .rows
        .iter()
        .map(|r| r.iter().map(|&(j, w)| w * field[j]).sum())
        .collect())
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ProjectionOptions {
    /// Largest allowed distance from a target vertex to the source surface.
    /// Defaults to 10% of the source bounding-box diagonal.
    pub max_distance: Option<f64>,
}

/// Project every target vertex onto the nearest source face and record its
/// barycentric coordinates there.
pub fn build_interpolation(
    source: &SurfaceMesh,
    target: &SurfaceMesh,
    opts: ProjectionOptions,
) -> Result<InterpolationMap> {
    let diag = source.bbox_diagonal();
    let limit = opts.max_distance.unwrap_or(0.1 * diag);
    let tie = 1e-12 * diag.max(f64::MIN_POSITIVE);
    let bvh = Bvh::new(source);
    let rows: Vec<Result<Vec<(usize, f64)>>> = target
        .vertices()
        .par_iter()
        .enumerate()
        .map(|(i, &p)| {
            let (face, bary, dist) = bvh.nearest(source, p, tie);
            if dist > limit {
                return Err(Error::ProjectionTooFar {
                    vertex: i,
                    distance: dist,
                    limit,
                });
            }
            let tri = source.triangles()[face];
            let mut row: Vec<(usize, f64)> = (0..3)
                .filter(|&k| bary[k] > 1e-14)
                .map(|k| (tri[k], bary[k]))
                .collect();
            let s: f64 = row.iter().map(|&(_, w)| w).sum();
            for e in &mut row {
                e.1 /= s;
            }
            Ok(row)
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(InterpolationMap {
        rows,
        n_source: source.n_vertices(),
    })
}

/// Closest point on triangle `abc` to `p`, as barycentric weights.
fn closest_barycentric(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> [f64; 3] {
    let ab = sub(b, a);
    let ac = sub(c, a);
    let ap = sub(p, a);
    let d1 = dot(ab, ap);
    let d2 = dot(ac, ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return [1.0, 0.0, 0.0];
    }
    let bp = sub(p, b);
    let d3 = dot(ab, bp);
    let d4 = dot(ac, bp);
    if d3 >= 0.0 && d4 <= d3 {
        return [0.0, 1.0, 0.0];
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return [1.0 - v, v, 0.0];
    }
    let cp = sub(p, c);
    let d5 = dot(ab, cp);
    let d6 = dot(ac, cp);
    if d6 >= 0.0 && d5 <= d6 {
        return [0.0, 0.0, 1.0];
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return [1.0 - w, 0.0, w];
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return [0.0, 1.0 - w, w];
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    [1.0 - v - w, v, w]
}

#[derive(Debug)]
struct Node {
    lo: Vec3,
    hi: Vec3,
    // Leaf: faces[start..end]; inner: children.
    start: usize,
    end: usize,
    children: Option<(usize, usize)>,
}

/// Bounding-volume hierarchy over the faces of one mesh.
#[derive(Debug)]
struct Bvh {
    nodes: Vec<Node>,
    faces: Vec<usize>,
}

#[derive(PartialEq)]
struct Pending(f64, usize);

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // Min-heap on distance.
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl Bvh {
    fn new(mesh: &SurfaceMesh) -> Self {
        let v = mesh.vertices();
        let boxes: Vec<(Vec3, Vec3, Vec3)> = mesh
            .triangles()
            .iter()
            .map(|t| {
                let mut lo = v[t[0]];
                let mut hi = v[t[0]];
                for &i in &t[1..] {
                    for k in 0..3 {
                        lo[k] = lo[k].min(v[i][k]);
                        hi[k] = hi[k].max(v[i][k]);
                    }
                }
                let c = scale(add(add(v[t[0]], v[t[1]]), v[t[2]]), 1.0 / 3.0);
                (lo, hi, c)
            })
            .collect();
        let mut bvh = Bvh {
            nodes: Vec::new(),
            faces: (0..mesh.n_triangles()).collect(),
        };
        bvh.build(&boxes, 0, mesh.n_triangles());
        bvh
    }

    fn build(&mut self, boxes: &[(Vec3, Vec3, Vec3)], start: usize, end: usize) -> usize {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        let mut clo = [f64::INFINITY; 3];
        let mut chi = [f64::NEG_INFINITY; 3];
        for &f in &self.faces[start..end] {
            let (l, h, c) = boxes[f];
            for k in 0..3 {
                lo[k] = lo[k].min(l[k]);
                hi[k] = hi[k].max(h[k]);
                clo[k] = clo[k].min(c[k]);
                chi[k] = chi[k].max(c[k]);
            }
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            lo,
            hi,
            start,
            end,
            children: None,
        });
        if end - start > 4 {
            let axis = (0..3)
                .max_by(|&a, &b| (chi[a] - clo[a]).total_cmp(&(chi[b] - clo[b])))
                .unwrap();
            let mid = (start + end) / 2;
            self.faces[start..end].select_nth_unstable_by(mid - start, |&x, &y| {
                boxes[x].2[axis].total_cmp(&boxes[y].2[axis]).then(x.cmp(&y))
            });
            let l = self.build(boxes, start, mid);
            let r = self.build(boxes, mid, end);
            self.nodes[id].children = Some((l, r));
        }
        id
    }

    fn box_distance(node: &Node, p: Vec3) -> f64 {
        let mut d2 = 0.0;
        for k in 0..3 {
            let e = (node.lo[k] - p[k]).max(0.0).max(p[k] - node.hi[k]);
            d2 += e * e;
        }
        d2.sqrt()
    }

    /// Nearest face, its barycentric coordinates and the distance. Faces
    /// within `tie` of the best distance resolve to the lowest face index.
    fn nearest(&self, mesh: &SurfaceMesh, p: Vec3, tie: f64) -> (usize, [f64; 3], f64) {
        let v = mesh.vertices();
        let mut best = (usize::MAX, [0.0; 3], f64::INFINITY);
        let mut heap = BinaryHeap::new();
        heap.push(Pending(Self::box_distance(&self.nodes[0], p), 0));
        while let Some(Pending(d, id)) = heap.pop() {
            if d > best.2 + tie {
                break;
            }
            let node = &self.nodes[id];
            match node.children {
                Some((l, r)) => {
                    heap.push(Pending(Self::box_distance(&self.nodes[l], p), l));
                    heap.push(Pending(Self::box_distance(&self.nodes[r], p), r));
                }
                None => {
                    for &f in &self.faces[node.start..node.end] {
                        let t = mesh.triangles()[f];
                        let bary = closest_barycentric(p, v[t[0]], v[t[1]], v[t[2]]);
                        let q = add(
                            add(scale(v[t[0]], bary[0]), scale(v[t[1]], bary[1])),
                            scale(v[t[2]], bary[2]),
                        );
                        let dist = norm(sub(p, q));
                        let better = dist < best.2 - tie
                            || (dist <= best.2 + tie && f < best.0)
                            || best.0 == usize::MAX;
                        if better {
                            best = (f, bary, dist);
                        }
                    }
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{
        generate_icosphere, generate_rectangle, generate_spherical_cap, subdivide,
        subdivide_with_map,
    };

    fn brute_nearest(mesh: &SurfaceMesh, p: Vec3) -> f64 {
        let v = mesh.vertices();
        mesh.triangles()
            .iter()
            .map(|t| {
                let b = closest_barycentric(p, v[t[0]], v[t[1]], v[t[2]]);
                let q = add(add(scale(v[t[0]], b[0]), scale(v[t[1]], b[1])), scale(v[t[2]], b[2]));
                norm(sub(p, q))
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn identity_when_meshes_coincide() {
        let m = generate_spherical_cap(1.0, 0.5, 5).unwrap();
        let map = build_interpolation(&m, &m, ProjectionOptions::default()).unwrap();
        assert!(map.is_identity());
    }

    #[test]
    fn midpoints_get_half_weights() {
        let r = generate_rectangle(1.0, 2.0, 4, 8).unwrap();
        let s = subdivide(&r).unwrap();
        let map = build_interpolation(&r, &s, ProjectionOptions::default()).unwrap();
        for i in r.n_vertices()..s.n_vertices() {
            let row = &map.rows()[i];
            assert_eq!(row.len(), 2, "row {i}: {row:?}");
            for &(_, w) in row {
                assert!((w - 0.5).abs() < 1e-12);
            }
        }
        let x: Vec<f64> = r.vertices().iter().map(|p| p[0]).collect();
        let y = apply_interpolation(&map, &x).unwrap();
        for (p, v) in s.vertices().iter().zip(&y) {
            assert!((p[0] - v).abs() < 1e-10);
        }
    }

    #[test]
    fn nearest_matches_brute_force() {
        let src = generate_icosphere(2).unwrap();
        let tgt = generate_icosphere(3).unwrap().scaled(1.02).unwrap();
        let bvh = Bvh::new(&src);
        for &p in tgt.vertices().iter().step_by(7) {
            let (_, _, d) = bvh.nearest(&src, p, 0.0);
            assert!((d - brute_nearest(&src, p)).abs() < 1e-14);
        }
    }

    #[test]
    fn projection_limit() {
        let src = generate_rectangle(1.0, 1.0, 4, 4).unwrap();
        let far = src.map_vertices(|p| [p[0], p[1], 1.0]).unwrap();
        let r = build_interpolation(&src, &far, ProjectionOptions::default());
        assert!(matches!(r, Err(Error::ProjectionTooFar { .. })));
        let ok = build_interpolation(&src, &far, ProjectionOptions { max_distance: Some(2.0) });
        assert!(ok.is_ok());
    }

    #[test]
    fn apply_checks_length_and_constants() {
        let (_, map) = subdivide_with_map(&generate_icosphere(1).unwrap()).unwrap();
        assert!(matches!(
            apply_interpolation(&map, &[1.0]),
            Err(Error::LengthMismatch { .. })
        ));
        let c = vec![2.5; map.n_source()];
        assert!(apply_interpolation(&map, &c).unwrap().iter().all(|&v| (v - 2.5).abs() < 1e-15));
    }

    #[test]
    fn csv_round_trip() {
        let r = generate_rectangle(1.0, 1.0, 3, 3).unwrap();
        let s = subdivide(&r).unwrap();
        let map = build_interpolation(&r, &s, ProjectionOptions::default()).unwrap();
        let back = InterpolationMap::from_csv(&map.to_csv(), r.n_vertices()).unwrap();
        assert_eq!(map, back);
    }
}

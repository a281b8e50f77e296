use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use super::{add, cross, dot, edge_key, norm, scale, sub, SurfaceMesh, Vec3};
use crate::error::{Error, Result};

/// Symmetric 4x4 error quadric, upper triangle row-major.
#[derive(Debug, Clone, Copy, Default)]
struct Quadric([f64; 10]);

impl Quadric {
    fn plane(n: Vec3, d: f64, w: f64) -> Self {
        let (a, b, c) = (n[0], n[1], n[2]);
        Quadric([
            w * a * a,
            w * a * b,
            w * a * c,
            w * a * d,
            w * b * b,
            w * b * c,
            w * b * d,
            w * c * c,
            w * c * d,
            w * d * d,
        ])
    }

    /// `w |v - p|^2`, which keeps placement well posed on flat regions.
    fn point(p: Vec3, w: f64) -> Self {
        Quadric([
            w,
            0.0,
            0.0,
            -w * p[0],
            w,
            0.0,
            -w * p[1],
            w,
            -w * p[2],
            w * dot(p, p),
        ])
    }

    fn add(&mut self, o: &Quadric) {
        for k in 0..10 {
            self.0[k] += o.0[k];
        }
    }

    fn sum(a: &Quadric, b: &Quadric) -> Quadric {
        let mut q = *a;
        q.add(b);
        q
    }

    fn eval(&self, v: Vec3) -> f64 {
        let q = &self.0;
        let (x, y, z) = (v[0], v[1], v[2]);
        q[0] * x * x
            + 2.0 * q[1] * x * y
            + 2.0 * q[2] * x * z
            + 2.0 * q[3] * x
            + q[4] * y * y
            + 2.0 * q[5] * y * z
            + 2.0 * q[6] * y
            + q[7] * z * z
            + 2.0 * q[8] * z
            + q[9]
    }

    fn minimiser(&self) -> Option<Vec3> {
        let q = &self.0;
        let m = nalgebra::Matrix3::new(q[0], q[1], q[2], q[1], q[4], q[5], q[2], q[5], q[7]);
        let scale = m.abs().max();
        if !(scale > 0.0) || m.determinant().abs() <= 1e-12 * scale.powi(3) {
            return None;
        }
        let v = m.try_inverse()? * nalgebra::Vector3::new(-q[3], -q[6], -q[8]);
        Some([v[0], v[1], v[2]])
    }
}

#[derive(PartialEq)]
struct Candidate {
    cost: f64,
    a: usize,
    b: usize,
    stamp: (u32, u32),
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // Min-heap on cost, ties broken by edge for determinism.
    fn cmp(&self, o: &Self) -> Ordering {
        o.cost
            .total_cmp(&self.cost)
            .then(o.a.cmp(&self.a))
            .then(o.b.cmp(&self.b))
    }
}

struct Decimator {
    pos: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    face_alive: Vec<bool>,
    vert_faces: Vec<Vec<usize>>,
    quadric: Vec<Quadric>,
    boundary: Vec<bool>,
    stamp: Vec<u32>,
    alive_faces: usize,
    min_area: f64,
}

impl Decimator {
    fn new(mesh: &SurfaceMesh) -> Self {
        let pos = mesh.vertices().to_vec();
        let faces = mesh.triangles().to_vec();
        let nv = pos.len();
        let mut vert_faces = vec![Vec::new(); nv];
        for (f, t) in faces.iter().enumerate() {
            for &v in t {
                vert_faces[v].push(f);
            }
        }
        let mean_area = mesh.total_area() / faces.len() as f64;
        let mut quadric = vec![Quadric::default(); nv];
        let mut edge_faces: std::collections::HashMap<(usize, usize), Vec<usize>> =
            std::collections::HashMap::new();
        for (f, t) in faces.iter().enumerate() {
            let n = cross(sub(pos[t[1]], pos[t[0]]), sub(pos[t[2]], pos[t[0]]));
            let area = 0.5 * norm(n);
            let n = scale(n, 1.0 / norm(n));
            let q = Quadric::plane(n, -dot(n, pos[t[0]]), area);
            for &v in t {
                quadric[v].add(&q);
            }
            for k in 0..3 {
                edge_faces
                    .entry(edge_key(t[k], t[(k + 1) % 3]))
                    .or_default()
                    .push(f);
            }
        }
        // Planes through boundary edges, perpendicular to their face, pin
        // the boundary shape.
        for (&(a, b), fs) in &edge_faces {
            if fs.len() != 1 {
                continue;
            }
            let t = faces[fs[0]];
            let fnormal = cross(sub(pos[t[1]], pos[t[0]]), sub(pos[t[2]], pos[t[0]]));
            let e = sub(pos[b], pos[a]);
            let n = cross(e, fnormal);
            let n = scale(n, 1.0 / norm(n));
            let q = Quadric::plane(n, -dot(n, pos[a]), 1000.0 * mean_area);
            quadric[a].add(&q);
            quadric[b].add(&q);
        }
        for (v, q) in quadric.iter_mut().enumerate() {
            q.add(&Quadric::point(pos[v], 1e-3 * mean_area));
        }
        let mut boundary = vec![false; nv];
        for &v in mesh.boundary_vertices() {
            boundary[v] = true;
        }
        Decimator {
            pos,
            alive_faces: faces.len(),
            face_alive: vec![true; faces.len()],
            faces,
            vert_faces,
            quadric,
            boundary,
            stamp: vec![0; nv],
            min_area: 1e-10 * mean_area,
        }
    }

    fn neighbours(&self, v: usize) -> HashSet<usize> {
        let mut n = HashSet::new();
        for &f in &self.vert_faces[v] {
            for &u in &self.faces[f] {
                if u != v {
                    n.insert(u);
                }
            }
        }
        n
    }

    fn shared_faces(&self, a: usize, b: usize) -> Vec<usize> {
        self.vert_faces[a]
            .iter()
            .copied()
            .filter(|&f| self.faces[f].contains(&b))
            .collect()
    }

    /// Target position for collapsing edge (a, b), or `None` if the
    /// collapse would change topology.
    fn placement(&self, a: usize, b: usize) -> Option<Vec3> {
        let shared = self.shared_faces(a, b);
        let is_boundary_edge = shared.len() == 1;
        let (ba, bb) = (self.boundary[a], self.boundary[b]);
        if ba && bb && !is_boundary_edge {
            return None;
        }
        let na = self.neighbours(a);
        let nb = self.neighbours(b);
        let common = na.intersection(&nb).count();
        if common != shared.len() {
            return None;
        }
        if is_boundary_edge {
            // A boundary loop of three edges cannot lose another vertex.
            let bn = |v: usize| {
                self.neighbours(v)
                    .into_iter()
                    .filter(|&u| self.boundary[u] && self.shared_faces(v, u).len() == 1)
                    .collect::<HashSet<_>>()
            };
            if bn(a).intersection(&bn(b)).count() > 0 {
                return None;
            }
        }
        if !ba && !bb && na.len() + nb.len() <= 6 {
            // Would leave a vertex of valence below three.
            return None;
        }
        let q = Quadric::sum(&self.quadric[a], &self.quadric[b]);
        // Boundary vertices only ever move onto other boundary vertices, so
        // the rim stays a subset of the original rim.
        let p = if ba && !bb {
            self.pos[a]
        } else if bb && !ba {
            self.pos[b]
        } else if ba && bb {
            if q.eval(self.pos[a]) <= q.eval(self.pos[b]) {
                self.pos[a]
            } else {
                self.pos[b]
            }
        } else {
            let mid = scale(add(self.pos[a], self.pos[b]), 0.5);
            q.minimiser().unwrap_or_else(|| {
                [self.pos[a], self.pos[b], mid]
                    .into_iter()
                    .min_by(|x, y| q.eval(*x).total_cmp(&q.eval(*y)))
                    .unwrap()
            })
        };
        if !self.keeps_orientation(a, b, p) {
            return None;
        }
        Some(p)
    }

    fn keeps_orientation(&self, a: usize, b: usize, p: Vec3) -> bool {
        for &v in &[a, b] {
            for &f in &self.vert_faces[v] {
                let t = self.faces[f];
                if t.contains(&a) && t.contains(&b) {
                    continue;
                }
                let before = self.normal(t);
                let moved = t.map(|u| if u == a || u == b { p } else { self.pos[u] });
                let after = cross(sub(moved[1], moved[0]), sub(moved[2], moved[0]));
                if 0.5 * norm(after) <= self.min_area {
                    return false;
                }
                if dot(before, after) <= 0.2 * norm(before) * norm(after) {
                    return false;
                }
            }
        }
        true
    }

    fn normal(&self, t: [usize; 3]) -> Vec3 {
        let p = &self.pos;
        cross(sub(p[t[1]], p[t[0]]), sub(p[t[2]], p[t[0]]))
    }

    fn candidate(&self, a: usize, b: usize) -> Option<Candidate> {
        let p = self.placement(a, b)?;
        let q = Quadric::sum(&self.quadric[a], &self.quadric[b]);
        let (a, b) = edge_key(a, b);
        Some(Candidate {
            cost: q.eval(p),
            a,
            b,
            stamp: (self.stamp[a], self.stamp[b]),
        })
    }

    /// Collapse b into a at position p.
    fn collapse(&mut self, a: usize, b: usize, p: Vec3) {
        for f in self.shared_faces(a, b) {
            self.face_alive[f] = false;
            self.alive_faces -= 1;
            for &v in &self.faces[f] {
                self.vert_faces[v].retain(|&g| g != f);
            }
        }
        let moved = std::mem::take(&mut self.vert_faces[b]);
        for f in moved {
            for v in self.faces[f].iter_mut() {
                if *v == b {
                    *v = a;
                }
            }
            self.vert_faces[a].push(f);
        }
        self.pos[a] = p;
        let qb = self.quadric[b];
        self.quadric[a].add(&qb);
        self.boundary[a] |= self.boundary[b];
        self.stamp[a] += 1;
        self.stamp[b] += 1;
    }

    fn push_edges_of(&self, v: usize, heap: &mut BinaryHeap<Candidate>) {
        let mut n: Vec<usize> = self.neighbours(v).into_iter().collect();
        n.sort_unstable();
        for u in n {
            if let Some(c) = self.candidate(v, u) {
                heap.push(c);
            }
        }
    }

    fn push_all(&self, heap: &mut BinaryHeap<Candidate>) {
        let mut edges: Vec<(usize, usize)> = self
            .faces
            .iter()
            .zip(&self.face_alive)
            .filter(|(_, &alive)| alive)
            .flat_map(|(t, _)| (0..3).map(move |k| edge_key(t[k], t[(k + 1) % 3])))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        for (a, b) in edges {
            if let Some(c) = self.candidate(a, b) {
                heap.push(c);
            }
        }
    }

    fn run(&mut self, target: usize) -> bool {
        let mut heap = BinaryHeap::new();
        loop {
            self.push_all(&mut heap);
            let start = self.alive_faces;
            while self.alive_faces > target {
                let Some(c) = heap.pop() else { break };
                if self.stamp[c.a] != c.stamp.0 || self.stamp[c.b] != c.stamp.1 {
                    continue;
                }
                // Validity may have changed through neighbouring collapses.
                let Some(p) = self.placement(c.a, c.b) else {
                    continue;
                };
                self.collapse(c.a, c.b, p);
                self.push_edges_of(c.a, &mut heap);
            }
            if self.alive_faces <= target {
                return true;
            }
            if self.alive_faces == start {
                return false;
            }
            heap.clear();
        }
    }

    fn into_mesh(self) -> Result<SurfaceMesh> {
        let mut remap = vec![usize::MAX; self.pos.len()];
        let mut vertices = Vec::new();
        let mut triangles = Vec::with_capacity(self.alive_faces);
        for (t, _) in self.faces.iter().zip(&self.face_alive).filter(|(_, &a)| a) {
            let mut nt = [0; 3];
            for k in 0..3 {
                if remap[t[k]] == usize::MAX {
                    remap[t[k]] = vertices.len();
                    vertices.push(self.pos[t[k]]);
                }
                nt[k] = remap[t[k]];
            }
            triangles.push(nt);
        }
        SurfaceMesh::new(vertices, triangles)
    }
}

/// Quadric-error edge-collapse decimation down to at most `target_triangles`
/// triangles, preserving topology and boundary loops.
pub fn decimate(mesh: &SurfaceMesh, target_triangles: usize) -> Result<SurfaceMesh> {
    if target_triangles >= mesh.n_triangles() {
        return Err(Error::InvalidArgument(format!(
            "target {target_triangles} must be below the current {} triangles",
            mesh.n_triangles()
        )));
    }
    let mut d = Decimator::new(mesh);
    if !d.run(target_triangles) {
        return Err(Error::CannotReachTarget {
            reached: d.alive_faces,
            target: target_triangles,
        });
    }
    d.into_mesh()
}

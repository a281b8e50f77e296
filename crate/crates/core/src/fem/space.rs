use std::sync::{Arc, OnceLock};

use super::SparseOperator;
use crate::error::{Error, Result};
use crate::linalg::{LuPattern, SparseLu};
use crate::mesh::{cross, dot, norm, scale, sub, SurfaceMesh, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryCondition {
    /// Boundary vertices are eliminated from the unknowns.
    DirichletZero,
    /// Natural (zero-flux) boundary.
    NeumannZero,
    /// Closed surface without boundary.
    Closed,
}

impl BoundaryCondition {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryCondition::DirichletZero => "dirichlet",
            BoundaryCondition::NeumannZero => "neumann",
            BoundaryCondition::Closed => "closed",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dirichlet" | "dirichletzero" => Ok(BoundaryCondition::DirichletZero),
            "neumann" | "neumannzero" => Ok(BoundaryCondition::NeumannZero),
            "closed" => Ok(BoundaryCondition::Closed),
            _ => Err(Error::Config(format!("unknown boundary condition `{s}`"))),
        }
    }
}

/// Per-triangle data of the P1 element.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Element {
    pub vertices: [usize; 3],
    pub area: f64,
    /// Surface gradients of the three barycentric basis functions.
    pub grads: [Vec3; 3],
}

/// P1 finite-element space on a surface mesh with a boundary condition.
#[derive(Debug, Clone)]
pub struct FemSpace {
    mesh: Arc<SurfaceMesh>,
    bc: BoundaryCondition,
    dof_of_vertex: Vec<Option<usize>>,
    vertex_of_dof: Vec<usize>,
    pub(crate) elements: Vec<Element>,
    /// Scalar sparsity pattern (values unused).
    pub(crate) pattern: Arc<SparseOperator>,
    /// For each element, the CSR position of local entry (i, j), or
    /// `usize::MAX` when either vertex is eliminated.
    pub(crate) local_pos: Vec<[[usize; 3]; 3]>,
    /// Symbolic LU analysis of the block Jacobian pattern, computed on first use.
    jacobian_pattern: OnceLock<LuPattern>,
    lumped_mass: OnceLock<Vec<f64>>,
}

impl FemSpace {
    pub fn new(mesh: impl Into<Arc<SurfaceMesh>>, bc: BoundaryCondition) -> Result<Self> {
        let mesh: Arc<SurfaceMesh> = mesh.into();
        match bc {
            BoundaryCondition::Closed if !mesh.is_closed() => {
                return Err(Error::BoundaryCondition(
                    "closed condition requires a mesh without boundary".into(),
                ))
            }
            BoundaryCondition::DirichletZero | BoundaryCondition::NeumannZero if mesh.is_closed() => {
                return Err(Error::BoundaryCondition(format!(
                    "{} condition requires a mesh with boundary",
                    bc.name()
                )))
            }
            _ => {}
        }
        let nv = mesh.n_vertices();
        let mut dof_of_vertex = vec![None; nv];
        let mut vertex_of_dof = Vec::with_capacity(nv);
        for (v, slot) in dof_of_vertex.iter_mut().enumerate() {
            if bc == BoundaryCondition::DirichletZero && mesh.is_boundary(v) {
                continue;
            }
            *slot = Some(vertex_of_dof.len());
            vertex_of_dof.push(v);
        }

        let p = mesh.vertices();
        let mut elements = Vec::with_capacity(mesh.n_triangles());
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let x = [p[tri[0]], p[tri[1]], p[tri[2]]];
            let n = cross(sub(x[1], x[0]), sub(x[2], x[0]));
            let twice_area = norm(n);
            if !(twice_area > 0.0) {
                return Err(Error::DegenerateTriangle(t));
            }
            let unit = scale(n, 1.0 / twice_area);
            let mut grads = [[0.0; 3]; 3];
            for (i, g) in grads.iter_mut().enumerate() {
                // Opposite edge rotated a quarter turn in the tangent plane.
                let e = sub(x[(i + 2) % 3], x[(i + 1) % 3]);
                *g = scale(cross(unit, e), 1.0 / twice_area);
            }
            debug_assert!(dot(grads[0], sub(x[0], x[1])) > 0.0);
            elements.push(Element {
                vertices: *tri,
                area: 0.5 * twice_area,
                grads,
            });
        }

        let n = vertex_of_dof.len();
        let mut triplets = Vec::with_capacity(9 * elements.len());
        for e in &elements {
            for &vi in &e.vertices {
                for &vj in &e.vertices {
                    if let (Some(i), Some(j)) = (dof_of_vertex[vi], dof_of_vertex[vj]) {
                        triplets.push((i, j, 0.0));
                    }
                }
            }
        }
        let pattern = SparseOperator::from_triplets(n, n, &triplets)?;
        let local_pos = elements
            .iter()
            .map(|e| {
                let mut pos = [[usize::MAX; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        if let (Some(di), Some(dj)) =
                            (dof_of_vertex[e.vertices[i]], dof_of_vertex[e.vertices[j]])
                        {
                            let r = pattern.row_ptr()[di]..pattern.row_ptr()[di + 1];
                            let k = pattern.col_idx()[r.clone()].binary_search(&dj).unwrap();
                            pos[i][j] = r.start + k;
                        }
                    }
                }
                pos
            })
            .collect();

        Ok(FemSpace {
            mesh,
            bc,
            dof_of_vertex,
            vertex_of_dof,
            elements,
            pattern: Arc::new(pattern),
            local_pos,
            jacobian_pattern: OnceLock::new(),
            lumped_mass: OnceLock::new(),
        })
    }

    /// Row sums of the mass matrix, computed on first use.
    pub fn lumped_mass(&self) -> &[f64] {
        self.lumped_mass.get_or_init(|| super::assemble_lumped_mass(self))
    }

    /// LU factorisation of a matrix with the block Jacobian pattern of this
    /// space, reusing the symbolic analysis across calls.
    pub fn jacobian_lu(&self, jac: &SparseOperator) -> Result<SparseLu> {
        if jac.nrows() != 2 * self.n_dof() || jac.nnz() != 4 * self.pattern.nnz() {
            return SparseLu::new(jac);
        }
        let pattern = match self.jacobian_pattern.get() {
            Some(p) => p,
            None => {
                let p = LuPattern::analyse(jac)?;
                self.jacobian_pattern.get_or_init(|| p)
            }
        };
        SparseLu::with_pattern(pattern, jac)
    }

    pub fn mesh(&self) -> &SurfaceMesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> Arc<SurfaceMesh> {
        self.mesh.clone()
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    /// Unknowns per component.
    pub fn n_dof(&self) -> usize {
        self.vertex_of_dof.len()
    }

    pub fn dof_of_vertex(&self, v: usize) -> Option<usize> {
        self.dof_of_vertex[v]
    }

    pub fn vertex_of_dof(&self, d: usize) -> usize {
        self.vertex_of_dof[d]
    }

    /// Restrict a per-vertex field to the dofs.
    pub fn restrict(&self, field: &[f64]) -> Vec<f64> {
        self.vertex_of_dof.iter().map(|&v| field[v]).collect()
    }

    /// Expand a per-dof field to all vertices, filling eliminated vertices
    /// with `boundary_value`.
    pub fn extend(&self, dofs: &[f64], boundary_value: f64) -> Vec<f64> {
        self.dof_of_vertex
            .iter()
            .map(|d| d.map_or(boundary_value, |d| dofs[d]))
            .collect()
    }

    /// Positions of the dofs.
    pub fn dof_positions(&self) -> Vec<Vec3> {
        self.vertex_of_dof
            .iter()
            .map(|&v| self.mesh.vertices()[v])
            .collect()
    }
}

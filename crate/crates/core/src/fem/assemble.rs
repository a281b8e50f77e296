use super::{BoundaryCondition, FemSpace, SparseOperator};
use crate::error::{Error, Result};
use crate::mesh::dot;
use crate::models::{primary_state, BoundaryKind, RdModel};

/// Degree-5 seven-point rule on the reference triangle, in barycentric
/// coordinates with weights summing to one.
pub(crate) fn quadrature() -> [([f64; 3], f64); 7] {
    let s = 15f64.sqrt();
    let a1 = (6.0 - s) / 21.0;
    let b1 = (9.0 + 2.0 * s) / 21.0;
    let w1 = (155.0 - s) / 1200.0;
    let a2 = (6.0 + s) / 21.0;
    let b2 = (9.0 - 2.0 * s) / 21.0;
    let w2 = (155.0 + s) / 1200.0;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 9.0 / 40.0),
        ([a1, a1, b1], w1),
        ([a1, b1, a1], w1),
        ([b1, a1, a1], w1),
        ([a2, a2, b2], w2),
        ([a2, b2, a2], w2),
        ([b2, a2, a2], w2),
    ]
}

fn assemble_scalar(space: &FemSpace, local: impl Fn(&super::space::Element, usize, usize) -> f64) -> SparseOperator {
    let mut op = space.pattern.zeroed();
    let vals = op.values_mut();
    for (e, pos) in space.elements.iter().zip(&space.local_pos) {
        for i in 0..3 {
            for j in 0..3 {
                if pos[i][j] != usize::MAX {
                    vals[pos[i][j]] += local(e, i, j);
                }
            }
        }
    }
    op
}

/// Consistent P1 mass matrix `M_ij = ∫ ψ_i ψ_j`.
pub fn assemble_mass(space: &FemSpace) -> SparseOperator {
    assemble_scalar(space, |e, i, j| {
        if i == j {
            e.area / 6.0
        } else {
            e.area / 12.0
        }
    })
}

/// Row-sum lumped mass, as a diagonal.
pub fn assemble_lumped_mass(space: &FemSpace) -> Vec<f64> {
    let m = assemble_mass(space);
    (0..m.nrows()).map(|i| m.row(i).map(|(_, v)| v).sum()).collect()
}

/// Positive-semidefinite stiffness matrix `L_ij = ∫ ∇ψ_i·∇ψ_j`.
pub fn assemble_stiffness(space: &FemSpace) -> SparseOperator {
    assemble_scalar(space, |e, i, j| e.area * dot(e.grads[i], e.grads[j]))
}

/// Block matrix `[[A, B], [C, D]]` of four operators sharing the scalar
/// pattern of `space`.
pub fn block_operator(space: &FemSpace, blocks: [[&SparseOperator; 2]; 2]) -> SparseOperator {
    let mut op = block_pattern(space);
    let p = &space.pattern;
    let n = space.n_dof();
    let nnz = p.nnz();
    let vals = op.values_mut();
    for r in 0..2 {
        for c in 0..2 {
            let b = blocks[r][c];
            for i in 0..n {
                for (k, (j, v)) in b.row(i).enumerate() {
                    debug_assert_eq!(j, p.col_idx()[p.row_ptr()[i] + k]);
                    vals[block_pos(p, r, c, i, p.row_ptr()[i] + k, nnz)] = v;
                }
            }
        }
    }
    let _ = n;
    op
}

#[inline]
fn block_pos(p: &SparseOperator, r: usize, c: usize, i: usize, scalar_pos: usize, nnz: usize) -> usize {
    let start = p.row_ptr()[i];
    let len = p.row_ptr()[i + 1] - start;
    r * 2 * nnz + 2 * start + c * len + (scalar_pos - start)
}

fn block_pattern(space: &FemSpace) -> SparseOperator {
    let p = &space.pattern;
    let n = space.n_dof();
    let mut row_ptr = Vec::with_capacity(2 * n + 1);
    let mut col_idx = Vec::with_capacity(4 * p.nnz());
    row_ptr.push(0);
    for _r in 0..2 {
        for i in 0..n {
            let cols = &p.col_idx()[p.row_ptr()[i]..p.row_ptr()[i + 1]];
            col_idx.extend_from_slice(cols);
            col_idx.extend(cols.iter().map(|&j| j + n));
            row_ptr.push(col_idx.len());
        }
    }
    let nnz = col_idx.len();
    SparseOperator::from_csr(2 * n, 2 * n, row_ptr, col_idx, vec![0.0; nnz])
        .expect("block pattern is well formed")
}

/// Stacked state `(a; b)` equal to the primary homogeneous state.
pub fn homogeneous_vector(space: &FemSpace, model: &dyn RdModel, alpha: f64) -> Result<Vec<f64>> {
    let s = primary_state(model, alpha)?;
    let n = space.n_dof();
    let mut x = vec![s.a; 2 * n];
    x[n..].iter_mut().for_each(|v| *v = s.b);
    Ok(x)
}

/// Root-mean-square of a vector.
pub fn rms(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

/// RMS of a stacked Galerkin residual divided by the lumped mass, i.e. of
/// the pointwise equation residual. Unlike the raw Galerkin vector this
/// does not shrink with element size.
pub fn residual_rms(space: &FemSpace, r: &[f64]) -> f64 {
    let m = space.lumped_mass();
    let n = m.len();
    debug_assert_eq!(r.len(), 2 * n);
    if n == 0 {
        return 0.0;
    }
    let s: f64 = r.iter().enumerate().map(|(i, v)| (v / m[i % n]).powi(2)).sum();
    (s / r.len() as f64).sqrt()
}

fn check_model_bc(space: &FemSpace, model: &dyn RdModel) -> Result<()> {
    let ok = match model.boundary() {
        BoundaryKind::Dirichlet => space.bc() == BoundaryCondition::DirichletZero,
        BoundaryKind::Flux => space.bc() != BoundaryCondition::DirichletZero,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::BoundaryCondition(format!(
            "model {} is not formulated for {} boundaries",
            model.name(),
            space.bc().name()
        )))
    }
}

struct Local {
    a: [f64; 3],
    b: [f64; 3],
}

fn gather(space: &FemSpace, x: &[f64], bnd: (f64, f64), e: &super::space::Element) -> Local {
    let n = space.n_dof();
    let mut l = Local {
        a: [bnd.0; 3],
        b: [bnd.1; 3],
    };
    for k in 0..3 {
        if let Some(d) = space.dof_of_vertex(e.vertices[k]) {
            l.a[k] = x[d];
            l.b[k] = x[n + d];
        }
    }
    l
}

fn prepare(space: &FemSpace, model: &dyn RdModel, x: &[f64], alpha: f64) -> Result<(f64, f64)> {
    check_model_bc(space, model)?;
    if x.len() != 2 * space.n_dof() {
        return Err(Error::LengthMismatch {
            expected: 2 * space.n_dof(),
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) || !alpha.is_finite() {
        return Err(Error::NonFinite("state"));
    }
    if space.bc() == BoundaryCondition::DirichletZero {
        let s = primary_state(model, alpha)?;
        Ok((s.a, s.b))
    } else {
        Ok((0.0, 0.0))
    }
}

/// Galerkin weak form of the model's right-hand side, `(∂a/∂t; ∂b/∂t)`
/// tested against every dof's basis function.
pub fn assemble_residual(space: &FemSpace, model: &dyn RdModel, x: &[f64], alpha: f64) -> Result<Vec<f64>> {
    let bnd = prepare(space, model, x, alpha)?;
    let n = space.n_dof();
    let dif = model.diffusion(alpha);
    let quad = quadrature();
    let mut r = vec![0.0; 2 * n];
    for e in &space.elements {
        let l = gather(space, x, bnd, e);
        let gb = [0, 1, 2].iter().fold([0.0; 3], |acc, &j| {
            [
                acc[0] + l.b[j] * e.grads[j][0],
                acc[1] + l.b[j] * e.grads[j][1],
                acc[2] + l.b[j] * e.grads[j][2],
            ]
        });
        let abar = (l.a[0] + l.a[1] + l.a[2]) / 3.0;
        let mut ra = [0.0; 3];
        let mut rb = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                let k = e.area * dot(e.grads[i], e.grads[j]);
                ra[i] -= k * (dif.d_a * l.a[j] + dif.d_ab * l.b[j]);
                rb[i] -= k * (dif.d_ba * l.a[j] + dif.d_b * l.b[j]);
            }
            if dif.chemotaxis != 0.0 {
                ra[i] += dif.chemotaxis * e.area * abar * dot(gb, e.grads[i]);
            }
        }
        for (p, w) in &quad {
            let aq = p[0] * l.a[0] + p[1] * l.a[1] + p[2] * l.a[2];
            let bq = p[0] * l.b[0] + p[1] * l.b[1] + p[2] * l.b[2];
            let (f, g) = model.reaction(aq, bq, alpha);
            for i in 0..3 {
                ra[i] += w * e.area * f * p[i];
                rb[i] += w * e.area * g * p[i];
            }
        }
        for i in 0..3 {
            if let Some(d) = space.dof_of_vertex(e.vertices[i]) {
                r[d] += ra[i];
                r[n + d] += rb[i];
            }
        }
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("residual"));
    }
    Ok(r)
}

/// Exact Jacobian of [`assemble_residual`] with respect to the state.
pub fn assemble_jacobian(space: &FemSpace, model: &dyn RdModel, x: &[f64], alpha: f64) -> Result<SparseOperator> {
    let bnd = prepare(space, model, x, alpha)?;
    let dif = model.diffusion(alpha);
    let quad = quadrature();
    let p = space.pattern.clone();
    let nnz = p.nnz();
    let mut jac = block_pattern(space);
    let vals = jac.values_mut();
    for (e, pos) in space.elements.iter().zip(&space.local_pos) {
        let l = gather(space, x, bnd, e);
        let gb = [0, 1, 2].iter().fold([0.0; 3], |acc, &j| {
            [
                acc[0] + l.b[j] * e.grads[j][0],
                acc[1] + l.b[j] * e.grads[j][1],
                acc[2] + l.b[j] * e.grads[j][2],
            ]
        });
        let abar = (l.a[0] + l.a[1] + l.a[2]) / 3.0;
        // Local 3x3 blocks: aa, ab, ba, bb.
        let mut blk = [[[0.0; 3]; 3]; 4];
        for i in 0..3 {
            for j in 0..3 {
                let k = e.area * dot(e.grads[i], e.grads[j]);
                blk[0][i][j] -= dif.d_a * k;
                blk[1][i][j] -= dif.d_ab * k;
                blk[2][i][j] -= dif.d_ba * k;
                blk[3][i][j] -= dif.d_b * k;
                if dif.chemotaxis != 0.0 {
                    blk[0][i][j] += dif.chemotaxis * e.area * dot(gb, e.grads[i]) / 3.0;
                    blk[1][i][j] += dif.chemotaxis * abar * k;
                }
            }
        }
        for (q, w) in &quad {
            let aq = q[0] * l.a[0] + q[1] * l.a[1] + q[2] * l.a[2];
            let bq = q[0] * l.b[0] + q[1] * l.b[1] + q[2] * l.b[2];
            let d = model.reaction_jacobian(aq, bq, alpha);
            for i in 0..3 {
                for j in 0..3 {
                    let phi = w * e.area * q[i] * q[j];
                    for (b, dv) in d.iter().enumerate() {
                        blk[b][i][j] += dv * phi;
                    }
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                let s = pos[i][j];
                if s == usize::MAX {
                    continue;
                }
                let row = space.dof_of_vertex(e.vertices[i]).unwrap();
                for (b, m) in blk.iter().enumerate() {
                    vals[block_pos(&p, b / 2, b % 2, row, s, nnz)] += m[i][j];
                }
            }
        }
    }
    if jac.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("jacobian"));
    }
    Ok(jac)
}

/// Derivative of the residual with respect to the continuation parameter.
///
/// Both model families are polynomial of low degree in their parameter,
/// including through the Dirichlet boundary values, so a central
/// difference is accurate to rounding.
pub fn assemble_parameter_derivative(
    space: &FemSpace,
    model: &dyn RdModel,
    x: &[f64],
    alpha: f64,
) -> Result<Vec<f64>> {
    let h = 1e-4 * alpha.abs().max(1e-2);
    let rp = assemble_residual(space, model, x, alpha + h)?;
    let rm = assemble_residual(space, model, x, alpha - h)?;
    Ok(rp.iter().zip(&rm).map(|(p, m)| (p - m) / (2.0 * h)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_rectangle, SurfaceMesh};

    #[test]
    fn quadrature_is_degree_five() {
        let q = quadrature();
        // ∫ λ1^a λ2^b λ3^c = 2 a! b! c! / (a+b+c+2)! over a unit-area triangle
        // scaled by 2 (reference area 1/2).
        let fact = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
        for a in 0..=5u32 {
            for b in 0..=(5 - a) {
                for c in 0..=(5 - a - b) {
                    let exact = 2.0 * fact(a) * fact(b) * fact(c) / fact(a + b + c + 2);
                    let approx: f64 = q
                        .iter()
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32))
                        .sum();
                    assert!((exact - approx).abs() < 1e-14, "{a} {b} {c}");
                }
            }
        }
    }

    #[test]
    fn unit_right_triangle() {
        let m = SurfaceMesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let s = FemSpace::new(m, BoundaryCondition::NeumannZero).unwrap();
        let mass = assemble_mass(&s).to_dense();
        let stiff = assemble_stiffness(&s).to_dense();
        for i in 0..3 {
            for j in 0..3 {
                let em = if i == j { 1.0 / 12.0 } else { 1.0 / 24.0 };
                assert!((mass[i][j] - em).abs() < 1e-15);
            }
        }
        let ek = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((stiff[i][j] - ek[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn block_operator_layout() {
        let s = FemSpace::new(generate_rectangle(1.0, 1.0, 2, 2).unwrap(), BoundaryCondition::NeumannZero)
            .unwrap();
        let m = assemble_mass(&s);
        let l = assemble_stiffness(&s);
        let b = block_operator(&s, [[&m, &l], [&l.scaled(2.0), &m.scaled(3.0)]]);
        let n = s.n_dof();
        let x: Vec<f64> = (0..2 * n).map(|i| (i as f64).sin()).collect();
        let y = b.mul_vec(&x);
        let (xa, xb) = x.split_at(n);
        let top: Vec<f64> = m.mul_vec(xa).iter().zip(l.mul_vec(xb)).map(|(p, q)| p + q).collect();
        let bot: Vec<f64> = l.mul_vec(xa).iter().zip(m.mul_vec(xb)).map(|(p, q)| 2.0 * p + 3.0 * q).collect();
        for i in 0..n {
            assert!((y[i] - top[i]).abs() < 1e-14);
            assert!((y[n + i] - bot[i]).abs() < 1e-14);
        }
    }
}

//! Lowest eigenpairs of the generalised problem `L b = λ M b` by a locally
//! optimal block preconditioned conjugate gradient iteration.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{FemSpace, SparseOperator};
use crate::linalg::{dot, norm2, SparseCholesky};

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub lambda: f64,
    /// Per-dof values, normalised so that `bᵀ M b = 1`.
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    pub pairs: Vec<EigenPair>,
    /// Partition of pair indices into multiplicity groups.
    pub groups: Vec<Vec<usize>>,
    /// Indices of pairs whose eigenvalue is numerically zero (constant modes
    /// of flux-boundary problems).
    pub zero_modes: Vec<usize>,
    /// Relative residual achieved by each pair.
    pub residuals: Vec<f64>,
    pub warnings: Vec<String>,
}

impl EigenBasis {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.lambda).collect()
    }

    pub fn group_of(&self, index: usize) -> Option<&[usize]> {
        self.groups.iter().find(|g| g.contains(&index)).map(|g| g.as_slice())
    }

    pub fn is_zero_mode(&self, index: usize) -> bool {
        self.zero_modes.contains(&index)
    }

    /// Re-partition the pairs with a new grouping tolerance.
    pub fn regroup(&mut self, rel_tol: f64) {
        self.groups = group_multiplicities(&self.eigenvalues(), rel_tol);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    /// Relative residual `|L b − λ M b| / (max(λ, floor) |M b|)` per pair.
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub group_tol: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-9,
            max_iters: 500,
            seed: 0,
            group_tol: 1e-3,
        }
    }
}

/// Consecutive eigenvalues within `rel_tol · max(λ, floor)` share a group.
pub fn group_multiplicities(eigenvalues: &[f64], rel_tol: f64) -> Vec<Vec<usize>> {
    let lmax = eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
    let floor = 1e-6 * lmax.max(f64::MIN_POSITIVE);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &l) in eigenvalues.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if {
                let prev = eigenvalues[*g.last().unwrap()];
                (l - prev).abs() <= rel_tol * prev.abs().max(floor)
            } =>
            {
                g.push(i)
            }
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Spectral coefficients `f_k = b_kᵀ M f`.
pub fn project_field(basis: &EigenBasis, mass: &SparseOperator, field: &[f64]) -> Result<Vec<f64>> {
    if field.len() != mass.ncols() {
        return Err(Error::LengthMismatch {
            expected: mass.ncols(),
            got: field.len(),
        });
    }
    let mf = mass.mul_vec(field);
    basis
        .pairs
        .iter()
        .map(|p| {
            if p.vector.len() != mf.len() {
                Err(Error::LengthMismatch {
                    expected: mf.len(),
                    got: p.vector.len(),
                })
            } else {
                Ok(dot(&p.vector, &mf))
            }
        })
        .collect()
}

type Block = Vec<Vec<f64>>;

fn apply_block(op: &SparseOperator, x: &Block) -> Block {
    x.par_iter().map(|c| op.mul_vec(c)).collect()
}

/// Gram matrix `Aᵀ B`.
fn gram(a: &Block, b: &Block) -> DMatrix<f64> {
    let entries: Vec<f64> = (0..a.len() * b.len())
        .into_par_iter()
        .map(|k| dot(&a[k % a.len()], &b[k / a.len()]))
        .collect();
    DMatrix::from_vec(a.len(), b.len(), entries)
}

/// Columns of `S C`.
fn combine(s: &Block, c: &DMatrix<f64>) -> Block {
    let n = s[0].len();
    (0..c.ncols())
        .into_par_iter()
        .map(|j| {
            let mut out = vec![0.0; n];
            for (i, col) in s.iter().enumerate() {
                let w = c[(i, j)];
                if w != 0.0 {
                    for (o, v) in out.iter_mut().zip(col) {
                        *o += w * v;
                    }
                }
            }
            out
        })
        .collect()
}

/// M-orthonormalise the columns of `s` (dropping numerically dependent
/// directions); returns the combination matrix.
fn svqb(s: &Block, ms: &Block) -> DMatrix<f64> {
    let g = gram(s, ms);
    let p = g.nrows();
    let d: Vec<f64> = (0..p).map(|i| 1.0 / g[(i, i)].max(f64::MIN_POSITIVE).sqrt()).collect();
    let mut gs = g.clone();
    for i in 0..p {
        for j in 0..p {
            gs[(i, j)] *= d[i] * d[j];
        }
    }
    let eig = SymmetricEigen::new(gs);
    let emax = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v));
    let keep: Vec<usize> = (0..p).filter(|&k| eig.eigenvalues[k] > 1e-12 * emax).collect();
    let mut c = DMatrix::zeros(p, keep.len());
    for (col, &k) in keep.iter().enumerate() {
        let s = 1.0 / eig.eigenvalues[k].sqrt();
        for i in 0..p {
            c[(i, col)] = d[i] * eig.eigenvectors[(i, k)] * s;
        }
    }
    c
}

/// The `k` algebraically smallest eigenpairs of `L b = λ M b`.
pub fn solve_eigenbasis(
    stiffness: &SparseOperator,
    mass: &SparseOperator,
    k: usize,
    opts: &EigenOptions,
) -> Result<EigenBasis> {
    let n = stiffness.nrows();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "requested {k} eigenpairs of a problem with {n} unknowns"
        )));
    }
    let m = (k + (k / 4).max(4)).min(n);
    let ldiag = stiffness.diagonal();
    let mdiag = mass.diagonal();
    let ratio = ldiag.iter().sum::<f64>() / mdiag.iter().sum::<f64>();
    let sigma = 1e-4 * ratio.max(f64::MIN_POSITIVE);
    let precond = SparseCholesky::new(&stiffness.add_scaled(1.0, mass, sigma))?;
    let prec = |r: &Block| -> Result<Block> {
        r.par_iter().map(|c| precond.solve(c)).collect()
    };
    let lambda_floor = 1e-6 * ratio;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let x0: Block = (0..m)
        .map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect())
        .collect();
    let mut x = prec(&x0)?;
    let mx = apply_block(mass, &x);
    let c = svqb(&x, &mx);
    x = combine(&x, &c);
    let mut p_dir: Block = Vec::new();
    let mut theta = vec![0.0; m];
    let mut res = vec![f64::INFINITY; m];

    for _iter in 0..opts.max_iters {
        let lx = apply_block(stiffness, &x);
        let mx = apply_block(mass, &x);
        // Rayleigh-Ritz within span(X) keeps X M-orthonormal and ordered.
        let a = gram(&x, &lx);
        let a = (&a + a.transpose()) * 0.5;
        let eig = SymmetricEigen::new(a);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let mut q = DMatrix::zeros(x.len(), x.len());
        for (col, &o) in order.iter().enumerate() {
            q.set_column(col, &eig.eigenvectors.column(o));
            theta[col] = eig.eigenvalues[o];
        }
        x = combine(&x, &q);
        let lx = combine(&lx, &q);
        let mx = combine(&mx, &q);

        let r: Block = (0..x.len())
            .map(|j| lx[j].iter().zip(&mx[j]).map(|(l, mm)| l - theta[j] * mm).collect())
            .collect();
        for j in 0..x.len() {
            let denom = theta[j].abs().max(lambda_floor) * norm2(&mx[j]);
            res[j] = norm2(&r[j]) / denom;
        }
        if res[..k].iter().all(|&e| e <= opts.tol) {
            return finish(x, theta, res, k, opts, stiffness, mass, lambda_floor);
        }

        let active: Vec<usize> = (0..x.len()).filter(|&j| res[j] > opts.tol).collect();
        let w = prec(&active.iter().map(|&j| r[j].clone()).collect())?;
        let mut s: Block = x.clone();
        s.extend(w);
        s.extend(p_dir.iter().cloned());
        let ms = apply_block(mass, &s);
        let c = svqb(&s, &ms);
        let s = combine(&s, &c);
        let ls = apply_block(stiffness, &s);
        let a = gram(&s, &ls);
        let a = (&a + a.transpose()) * 0.5;
        let eig = SymmetricEigen::new(a);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let mut cx = DMatrix::zeros(s.len(), m);
        for (col, &o) in order.iter().take(m).enumerate() {
            cx.set_column(col, &eig.eigenvectors.column(o));
        }
        let x_new = combine(&s, &cx);
        // New search directions: the part of the update outside span(X).
        let mx_new = apply_block(mass, &x_new);
        let overlap = gram(&x, &mx_new);
        let xo = combine(&x, &overlap);
        p_dir = active
            .iter()
            .map(|&j| x_new[j].iter().zip(&xo[j]).map(|(a, b)| a - b).collect())
            .collect();
        x = x_new;
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iters,
        residual: res[..k].iter().fold(0.0, |a: f64, &b| a.max(b)),
    })
}

#[allow(clippy::too_many_arguments)]
fn finish(
    x: Block,
    theta: Vec<f64>,
    res: Vec<f64>,
    k: usize,
    opts: &EigenOptions,
    stiffness: &SparseOperator,
    mass: &SparseOperator,
    lambda_floor: f64,
) -> Result<EigenBasis> {
    let mut pairs = Vec::with_capacity(k);
    for (j, v) in x.into_iter().take(k).enumerate() {
        let mut v = v;
        let nm = mass.bilinear(&v, &v).sqrt();
        // Fix the sign so that the largest-magnitude entry is positive.
        let big = v.iter().fold(0.0f64, |b, &e| if e.abs() > b.abs() { e } else { b });
        let s = if big < 0.0 { -1.0 / nm } else { 1.0 / nm };
        v.iter_mut().for_each(|e| *e *= s);
        pairs.push(EigenPair {
            lambda: theta[j],
            vector: v,
        });
    }
    let zero_modes = (0..k)
        .filter(|&j| pairs[j].lambda.abs() <= 1e-2 * lambda_floor)
        .collect();
    let groups = group_multiplicities(&pairs.iter().map(|p| p.lambda).collect::<Vec<_>>(), opts.group_tol);
    let _ = stiffness;
    Ok(EigenBasis {
        pairs,
        groups,
        zero_modes,
        residuals: res[..k].to_vec(),
        warnings: Vec::new(),
    })
}

/// Assemble the operators of `space` and solve for `k` eigenpairs, adding
/// a warning when eigenvalues exceed the mesh resolution estimate
/// `(π / 2h)²` for mean edge length `h`.
pub fn solve_space(space: &FemSpace, k: usize, opts: &EigenOptions) -> Result<EigenBasis> {
    let l = crate::fem::assemble_stiffness(space);
    let m = crate::fem::assemble_mass(space);
    let mut basis = solve_eigenbasis(&l, &m, k, opts)?;
    let h = space.mesh().mean_edge_length();
    let nyquist = (std::f64::consts::PI / (2.0 * h)).powi(2);
    if let Some(j) = basis.pairs.iter().position(|p| p.lambda > nyquist) {
        basis.warnings.push(format!(
            "eigenvalues from index {j} exceed the mesh resolution estimate {nyquist:.6e}"
        ));
    }
    Ok(basis)
}

/// Relative residual `|L b − λ M b| / (max(λ, floor) |M b|)` of one pair.
pub fn pair_residual(stiffness: &SparseOperator, mass: &SparseOperator, pair: &EigenPair) -> f64 {
    let lb = stiffness.mul_vec(&pair.vector);
    let mb = mass.mul_vec(&pair.vector);
    let r: Vec<f64> = lb.iter().zip(&mb).map(|(l, m)| l - pair.lambda * m).collect();
    let ratio = stiffness.diagonal().iter().sum::<f64>() / mass.diagonal().iter().sum::<f64>();
    norm2(&r) / (pair.lambda.abs().max(1e-6 * ratio) * norm2(&mb))
}

/// Write `spectrum.csv` (index, lambda, group) and one `mode_XXXX.csv` per
/// eigenvector into `dir`.
pub fn save_basis(basis: &EigenBasis, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut s = String::from("index,lambda,group\n");
    for (i, p) in basis.pairs.iter().enumerate() {
        let g = basis.groups.iter().position(|g| g.contains(&i)).unwrap_or(i);
        let _ = writeln!(s, "{i},{:.16e},{g}", p.lambda);
    }
    let path = dir.join("spectrum.csv");
    std::fs::write(&path, s).map_err(|e| Error::io(&path, e))?;
    for (i, p) in basis.pairs.iter().enumerate() {
        let mut s = String::with_capacity(24 * p.vector.len());
        for v in &p.vector {
            let _ = writeln!(s, "{v:.16e}");
        }
        let path = dir.join(format!("mode_{i:04}.csv"));
        std::fs::write(&path, s).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Load a basis written by [`save_basis`].
pub fn load_basis(dir: &Path, group_tol: f64) -> Result<EigenBasis> {
    let path = dir.join("spectrum.csv");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut pairs = Vec::new();
    let mut group_ids = Vec::new();
    for (ln, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let perr = || Error::Parse {
            line: ln + 1,
            message: "malformed spectrum row".into(),
        };
        if f.len() != 3 {
            return Err(perr());
        }
        let i: usize = f[0].parse().map_err(|_| perr())?;
        let lambda: f64 = f[1].parse().map_err(|_| perr())?;
        group_ids.push(f[2].parse::<usize>().map_err(|_| perr())?);
        let mpath = dir.join(format!("mode_{i:04}.csv"));
        let mtext = std::fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
        let vector = mtext
            .lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(k, l)| {
                l.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line: k + 1,
                    message: format!("bad value in {}", mpath.display()),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        pairs.push(EigenPair { lambda, vector });
    }
    let eigenvalues: Vec<f64> = pairs.iter().map(|p| p.lambda).collect();
    let lmax = eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
    let zero_modes = (0..pairs.len())
        .filter(|&j| eigenvalues[j].abs() <= 1e-8 * lmax)
        .collect();
    let _ = group_ids;
    Ok(EigenBasis {
        groups: group_multiplicities(&eigenvalues, group_tol),
        residuals: vec![f64::NAN; pairs.len()],
        pairs,
        zero_modes,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grouping() {
        let g = group_multiplicities(&[0.0, 2.0, 2.0005, 2.001, 6.0, 6.1], 1e-3);
        assert_eq!(g, vec![vec![0], vec![1, 2, 3], vec![4], vec![5]]);
        let g = group_multiplicities(&[1.0, 2.0, 3.0], 1e-3);
        assert_eq!(g.len(), 3);
    }
}

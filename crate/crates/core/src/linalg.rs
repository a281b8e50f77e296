//! Sparse direct solvers (backed by faer) and the bordered solve used by
//! branch switching and arclength continuation.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLlt, SymbolicLu};
use faer::{MatMut, Side};

use crate::error::{Error, Result};
use crate::fem::SparseOperator;

fn check_finite(v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::LinearSolve("solution is not finite (singular matrix?)".into()))
    }
}

/// LU factorisation with partial pivoting of a general square matrix.
pub struct SparseLu {
    lu: Lu<usize, f64>,
    n: usize,
}

impl std::fmt::Debug for SparseLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseLu").field("n", &self.n).finish()
    }
}

/// Symbolic LU analysis, reusable for matrices with the same pattern.
#[derive(Clone)]
pub struct LuPattern(SymbolicLu<usize>);

impl std::fmt::Debug for LuPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("LuPattern")
    }
}

impl LuPattern {
    pub fn analyse(a: &SparseOperator) -> Result<Self> {
        let m = a.to_faer();
        SymbolicLu::try_new(m.symbolic())
            .map(LuPattern)
            .map_err(|e| Error::LinearSolve(format!("{e:?}")))
    }
}

impl SparseLu {
    pub fn new(a: &SparseOperator) -> Result<Self> {
        Self::with_pattern(&LuPattern::analyse(a)?, a)
    }

    pub fn with_pattern(pattern: &LuPattern, a: &SparseOperator) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::LinearSolve("matrix is not square".into()));
        }
        let m = a.to_faer();
        let lu = Lu::try_new_with_symbolic(pattern.0.clone(), m.as_ref())
            .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        Ok(SparseLu { lu, n: a.nrows() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<()> {
        assert_eq!(b.len(), self.n);
        self.lu
            .solve_in_place(MatMut::from_column_major_slice_mut(b, self.n, 1));
        check_finite(b)
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    /// Solve `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = b.to_vec();
        self.lu
            .solve_transpose_in_place(MatMut::from_column_major_slice_mut(&mut x, self.n, 1));
        check_finite(&x)?;
        Ok(x)
    }
}

/// Cholesky factorisation of a symmetric positive-definite matrix.
pub struct SparseCholesky {
    llt: Llt<usize, f64>,
    n: usize,
}

impl std::fmt::Debug for SparseCholesky {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseCholesky").field("n", &self.n).finish()
    }
}

impl SparseCholesky {
    pub fn new(a: &SparseOperator) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::LinearSolve("matrix is not square".into()));
        }
        let m = a.to_faer();
        let sym = SymbolicLlt::try_new(m.symbolic(), Side::Lower)
            .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        let llt = Llt::try_new_with_symbolic(sym, m.as_ref(), Side::Lower)
            .map_err(|e| Error::LinearSolve(format!("matrix is not positive definite: {e:?}")))?;
        Ok(SparseCholesky { llt, n: a.nrows() })
    }

    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<()> {
        assert_eq!(b.len(), self.n);
        self.llt
            .solve_in_place(MatMut::from_column_major_slice_mut(b, self.n, 1));
        check_finite(b)
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solve the bordered system `[[J, c], [dᵀ, e]] [x; s] = [f; g]` given a
/// factorisation of `J`, by block elimination with one step of iterative
/// refinement.
pub fn bordered_solve(
    jac: &SparseOperator,
    lu: &SparseLu,
    c: &[f64],
    d: &[f64],
    e: f64,
    f: &[f64],
    g: f64,
) -> Result<(Vec<f64>, f64)> {
    let y = lu.solve(c)?;
    let apply = |x: &[f64], s: f64| -> (Vec<f64>, f64) {
        let mut top = jac.mul_vec(x);
        for (t, ci) in top.iter_mut().zip(c) {
            *t += ci * s;
        }
        (top, dot(d, x) + e * s)
    };
    let solve_once = |f: &[f64], g: f64| -> Result<(Vec<f64>, f64)> {
        let z = lu.solve(f)?;
        let denom = e - dot(d, &y);
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::LinearSolve("bordered system is singular".into()));
        }
        let s = (g - dot(d, &z)) / denom;
        let x: Vec<f64> = z.iter().zip(&y).map(|(zi, yi)| zi - s * yi).collect();
        Ok((x, s))
    };
    let (mut x, mut s) = solve_once(f, g)?;
    let (ax, as_) = apply(&x, s);
    let rf: Vec<f64> = f.iter().zip(&ax).map(|(a, b)| a - b).collect();
    let (dx, ds) = solve_once(&rf, g - as_)?;
    for (xi, di) in x.iter_mut().zip(&dx) {
        *xi += di;
    }
    s += ds;
    Ok((x, s))
}

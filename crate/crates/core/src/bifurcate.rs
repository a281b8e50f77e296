//! Bifurcation points of the homogeneous state and the patterns that emerge
//! there, composed from the Laplace–Beltrami eigenbasis. Also a reference
//! detector that locates zeros of a test function of the full Jacobian.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{assemble_jacobian, homogeneous_vector, FemSpace, SparseOperator};
use crate::models::{linearize_primary, require_stable, LinearCoefficients, RdModel};
use crate::spectral::EigenBasis;

/// Which condition fixes the continuation parameter for an eigenvalue Λ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeRule {
    /// Λ is a root of the eigenvalue quadratic.
    NonExclusive,
    /// Λ is the double root, `2 Λ c2 = c1`.
    Exclusive,
    /// Solve for the growth factor γ instead: `γ = 2 Λ c2 / c1(G)` with `G`
    /// the reaction coefficients at γ = 1. Requires a `gamma` parameter.
    GrowthFactor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BifurcationKind {
    Simple,
    Multiple,
    Mixed,
}

impl BifurcationKind {
    pub fn name(self) -> &'static str {
        match self {
            BifurcationKind::Simple => "simple",
            BifurcationKind::Multiple => "multiple",
            BifurcationKind::Mixed => "mixed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationPoint {
    pub alpha: f64,
    /// One eigenvalue for simple and multiple points, `(Λm, Λn)` for mixed.
    pub lambdas: Vec<f64>,
    pub kind: BifurcationKind,
    pub mode_indices: Vec<usize>,
    /// Largest relative distance between the quadratic's roots and the
    /// requested eigenvalues; zero unless mixed.
    pub root_mismatch: f64,
}

/// Emerging pattern, as per-dof fields of both components.
#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationPattern {
    pub u_field: Vec<f64>,
    pub v_field: Vec<f64>,
    /// `(mode index, u coefficient, v coefficient)` after normalisation.
    pub coefficients: Vec<(usize, f64, f64)>,
    /// `s = v / u` per participating eigenvalue (infinite when `u = 0`).
    pub ratios: Vec<f64>,
}

impl BifurcationPattern {
    /// Stacked `(u; v)`.
    pub fn stacked(&self) -> Vec<f64> {
        let mut x = self.u_field.clone();
        x.extend_from_slice(&self.v_field);
        x
    }

    /// Scale so that `max |u| = 1`, or `max |v| = 1` when `u` vanishes.
    fn normalise(&mut self) {
        let mu = self.u_field.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mv = self.v_field.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let s = if mu > 1e-12 * mv { mu } else { mv };
        if s > 0.0 {
            self.u_field.iter_mut().chain(self.v_field.iter_mut()).for_each(|x| *x /= s);
            for c in &mut self.coefficients {
                c.1 /= s;
                c.2 /= s;
            }
        }
    }
}

/// Real roots of `c2 λ² − c1 λ + c0 = 0` in increasing order.
pub fn lambda_roots(c: &LinearCoefficients) -> Vec<f64> {
    let (c2, c1, c0) = c.quadratic();
    quadratic_roots(c2, -c1, c0).unwrap_or_default()
}

/// Real roots of `a x² + b x + c`, or `None` when they are complex. A
/// vanishing leading coefficient degrades to the linear case.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Option<Vec<f64>> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return Some(Vec::new());
    }
    if a.abs() <= 1e-13 * scale {
        return Some(if b != 0.0 { vec![-c / b] } else { Vec::new() });
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut r = if q == 0.0 { vec![0.0, 0.0] } else { vec![q / a, c / q] };
    r.sort_by(f64::total_cmp);
    Some(r)
}

enum Roots {
    Real(Vec<f64>),
    /// No real root; carries the discriminant (or the extreme value found
    /// while scanning).
    Complex(f64),
}

/// Roots of a scalar function of the continuation parameter. A quadratic is
/// fitted around `alpha0` and accepted when it predicts a fourth sample;
/// otherwise (or when an interval is supplied) the interval is scanned for
/// sign changes, which are refined by bisection.
fn scalar_roots(phi: &(dyn Fn(f64) -> Result<f64> + Sync), alpha0: f64, interval: Option<(f64, f64)>) -> Result<Roots> {
    if interval.is_none() {
        if let Some(r) = fit_quadratic(phi, alpha0) {
            return Ok(r);
        }
    }
    let (lo, hi) = interval.unwrap_or(if alpha0 > 0.0 {
        (alpha0 / 64.0, alpha0 * 64.0)
    } else {
        let w = 100.0 * alpha0.abs().max(1.0);
        (alpha0 - w, alpha0 + w)
    });
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!("search interval [{lo}, {hi}] is empty")));
    }
    let geometric = lo > 0.0;
    let n = 2000;
    let at = |i: usize| {
        let t = i as f64 / n as f64;
        if geometric {
            lo * (hi / lo).powf(t)
        } else {
            lo + (hi - lo) * t
        }
    };
    let samples: Vec<(f64, Option<f64>)> = (0..=n)
        .into_par_iter()
        .map(|i| {
            let a = at(i);
            (a, phi(a).ok().filter(|v| v.is_finite()))
        })
        .collect();
    let mut roots = Vec::new();
    let mut extreme = f64::NEG_INFINITY;
    for w in samples.windows(2) {
        let ((a0, f0), (a1, f1)) = (w[0], w[1]);
        if let Some(f0) = f0 {
            extreme = extreme.max(f0);
        }
        let (Some(f0), Some(f1)) = (f0, f1) else { continue };
        if f0 == 0.0 {
            roots.push(a0);
        } else if f0 * f1 < 0.0 {
            let (mut l, mut u, mut fl) = (a0, a1, f0);
            for _ in 0..200 {
                let m = 0.5 * (l + u);
                if m <= l || m >= u {
                    break;
                }
                let fm = phi(m)?;
                if fm == 0.0 {
                    l = m;
                    u = m;
                    break;
                }
                if fm * fl < 0.0 {
                    u = m;
                } else {
                    l = m;
                    fl = fm;
                }
            }
            roots.push(0.5 * (l + u));
        }
    }
    Ok(if roots.is_empty() {
        Roots::Complex(extreme)
    } else {
        Roots::Real(roots)
    })
}

fn fit_quadratic(phi: &(dyn Fn(f64) -> Result<f64> + Sync), alpha0: f64) -> Option<Roots> {
    let delta = 0.25 * alpha0.abs().max(1.0);
    let f = |t: f64| phi(alpha0 + delta * t).ok().filter(|v| v.is_finite());
    let (fm, f0, fp, fc) = (f(-1.0)?, f(0.0)?, f(1.0)?, f(2.5)?);
    let p0 = f0;
    let p1 = 0.5 * (fp - fm);
    let p2 = 0.5 * (fp + fm) - f0;
    let pred = p0 + 2.5 * p1 + 6.25 * p2;
    let scale = fm.abs().max(f0.abs()).max(fp.abs()).max(fc.abs());
    if (pred - fc).abs() > 1e-8 * scale {
        return None;
    }
    // Quadratic terms below rounding of the samples are noise.
    let p2 = if p2.abs() <= 1e-12 * scale { 0.0 } else { p2 };
    Some(match quadratic_roots(p2, p1, p0) {
        Some(ts) => Roots::Real(ts.into_iter().map(|t| alpha0 + delta * t).collect()),
        None => Roots::Complex((p1 * p1 - 4.0 * p2 * p0) / (delta * delta)),
    })
}

/// Among candidate parameter values, the one closest to `alpha0` at which
/// the homogeneous state satisfies the stability preconditions.
fn pick_stable(model: &dyn RdModel, alpha0: f64, roots: Vec<f64>) -> Result<f64> {
    let mut best: Option<f64> = None;
    let mut last_err = None;
    for r in roots {
        match linearize_primary(model, r).and_then(|c| require_stable(&c)) {
            Ok(()) => {
                if best.is_none_or(|b| (r - alpha0).abs() < (b - alpha0).abs()) {
                    best = Some(r);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| {
        last_err.unwrap_or_else(|| Error::NoRealSolution("no real parameter value".into()))
    })
}

/// Continuation parameter value at which the eigenvalue `lambda` satisfies
/// `rule` (for [`ModeRule::GrowthFactor`], the growth factor γ).
pub fn solve_continuation_param(model: &dyn RdModel, lambda: f64, rule: ModeRule) -> Result<f64> {
    solve_continuation_param_in(model, lambda, rule, None)
}

/// As [`solve_continuation_param`], but search `interval` for models
/// without a closed form whose parameter dependence is not quadratic.
pub fn solve_continuation_param_in(
    model: &dyn RdModel,
    lambda: f64,
    rule: ModeRule,
    interval: Option<(f64, f64)>,
) -> Result<f64> {
    if !lambda.is_finite() {
        return Err(Error::NonFinite("eigenvalue"));
    }
    let alpha0 = model.alpha();
    match rule {
        ModeRule::NonExclusive => {
            if interval.is_none() {
                if let Some(r) = model.closed_form_parameter(lambda) {
                    let a = r?;
                    require_stable(&linearize_primary(model, a)?)?;
                    return Ok(a);
                }
            }
            let phi = |a: f64| linearize_primary(model, a).map(|c| c.quadratic_at(lambda));
            match scalar_roots(&phi, alpha0, interval)? {
                Roots::Real(r) => pick_stable(model, alpha0, r),
                Roots::Complex(_) => Err(Error::NoRealSolution(format!(
                    "eigenvalue {lambda} is not a root for any real parameter"
                ))),
            }
        }
        ModeRule::Exclusive => {
            let phi = |a: f64| {
                linearize_primary(model, a).map(|c| {
                    let (c2, c1, _) = c.quadratic();
                    2.0 * lambda * c2 - c1
                })
            };
            match scalar_roots(&phi, alpha0, interval)? {
                Roots::Real(r) => pick_stable(model, alpha0, r),
                Roots::Complex(_) => Err(Error::NoRealSolution(format!(
                    "eigenvalue {lambda} is not a double root for any real parameter"
                ))),
            }
        }
        ModeRule::GrowthFactor => {
            if !model.parameter_names().contains(&"gamma") {
                return Err(Error::InvalidArgument(format!(
                    "model {} has no growth factor",
                    model.name()
                )));
            }
            let mut unit = model.clone_box();
            unit.set_parameter("gamma", 1.0)?;
            let g = linearize_primary(unit.as_ref(), alpha0)?;
            let (c2, c1, _) = g.quadratic();
            let gamma = 2.0 * lambda * c2 / c1;
            if !(gamma > 0.0) || !gamma.is_finite() {
                return Err(Error::NoRealSolution(format!(
                    "growth factor would be {gamma:.6e}"
                )));
            }
            unit.set_parameter("gamma", gamma)?;
            require_stable(&linearize_primary(unit.as_ref(), alpha0)?)?;
            Ok(gamma)
        }
    }
}

/// Spectral coefficients `(u, v)` of the pattern for eigenvalue `lambda`,
/// from the first constraint row (the second when the first is degenerate),
/// normalised to `u = 1`, or `(0, 1)` when the row forces `u = 0`.
pub fn coefficient_ratio(c: &LinearCoefficients, lambda: f64) -> Result<(f64, f64)> {
    let m = c.mode_matrix(lambda);
    let scale = m.iter().flatten().fold(0.0f64, |s, x| s.max(x.abs()));
    let tiny = 1e-12 * scale;
    let row = if m[0][0].abs().max(m[0][1].abs()) > tiny {
        m[0]
    } else if m[1][0].abs().max(m[1][1].abs()) > tiny {
        m[1]
    } else {
        return Err(Error::DegenerateConstraint(lambda));
    };
    // row·(u, v) = 0.
    if row[1].abs() <= 1e-14 * row[0].abs() {
        return Ok((0.0, 1.0));
    }
    Ok((1.0, -row[0] / row[1]))
}

fn check_modes(basis: &EigenBasis, modes: &[usize]) -> Result<()> {
    if modes.is_empty() {
        return Err(Error::InvalidArgument("no modes given".into()));
    }
    for &k in modes {
        if k >= basis.len() {
            return Err(Error::InvalidArgument(format!(
                "mode {k} is outside the basis of {} pairs",
                basis.len()
            )));
        }
        if basis.is_zero_mode(k) {
            return Err(Error::ZeroMode(k));
        }
    }
    Ok(())
}

fn group_lambda(basis: &EigenBasis, group: &[usize], spread_tol: f64) -> Result<f64> {
    let ls: Vec<f64> = group.iter().map(|&k| basis.pairs[k].lambda).collect();
    let lo = ls.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ls.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = ls.iter().sum::<f64>() / ls.len() as f64;
    let spread = (hi - lo) / mean.abs();
    if spread > spread_tol {
        return Err(Error::GroupSpread { spread, tol: spread_tol });
    }
    Ok(mean)
}

fn ratio_of((u, v): (f64, f64)) -> f64 {
    if u == 0.0 {
        f64::INFINITY
    } else {
        v / u
    }
}

fn check_weights(w: &[f64]) -> Result<()> {
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("weights"));
    }
    if w.iter().all(|&x| x == 0.0) {
        return Err(Error::InvalidArgument("weights are all zero".into()));
    }
    Ok(())
}

fn accumulate(basis: &EigenBasis, terms: &[(usize, f64, f64, f64)], ratios: Vec<f64>) -> BifurcationPattern {
    let n = basis.pairs[terms[0].0].vector.len();
    let mut u_field = vec![0.0; n];
    let mut v_field = vec![0.0; n];
    let mut coefficients = Vec::with_capacity(terms.len());
    for &(k, w, u, v) in terms {
        let b = &basis.pairs[k].vector;
        for i in 0..n {
            u_field[i] += w * u * b[i];
            v_field[i] += w * v * b[i];
        }
        coefficients.push((k, w * u, w * v));
    }
    let mut p = BifurcationPattern {
        u_field,
        v_field,
        coefficients,
        ratios,
    };
    p.normalise();
    p
}

/// Bifurcation from a single eigenmode.
pub fn compose_simple(
    basis: &EigenBasis,
    index: usize,
    model: &dyn RdModel,
) -> Result<(BifurcationPoint, BifurcationPattern)> {
    check_modes(basis, &[index])?;
    let lambda = basis.pairs[index].lambda;
    let alpha = solve_continuation_param(model, lambda, ModeRule::NonExclusive)?;
    let (u, v) = coefficient_ratio(&linearize_primary(model, alpha)?, lambda)?;
    Ok((
        BifurcationPoint {
            alpha,
            lambdas: vec![lambda],
            kind: BifurcationKind::Simple,
            mode_indices: vec![index],
            root_mismatch: 0.0,
        },
        accumulate(basis, &[(index, 1.0, u, v)], vec![ratio_of((u, v))]),
    ))
}

/// Bifurcation from a group of (numerically) equal eigenvalues, combined
/// with `weights`. The group's eigenvalues may differ by at most
/// `spread_tol` relative to their mean.
pub fn compose_multiple(
    basis: &EigenBasis,
    group: &[usize],
    weights: &[f64],
    model: &dyn RdModel,
    spread_tol: f64,
) -> Result<(BifurcationPoint, BifurcationPattern)> {
    check_modes(basis, group)?;
    if weights.len() != group.len() {
        return Err(Error::LengthMismatch {
            expected: group.len(),
            got: weights.len(),
        });
    }
    check_weights(weights)?;
    let lambda = group_lambda(basis, group, spread_tol)?;
    let alpha = solve_continuation_param(model, lambda, ModeRule::NonExclusive)?;
    let (u, v) = coefficient_ratio(&linearize_primary(model, alpha)?, lambda)?;
    let terms: Vec<_> = group.iter().zip(weights).map(|(&k, &w)| (k, w, u, v)).collect();
    Ok((
        BifurcationPoint {
            alpha,
            lambdas: vec![lambda],
            kind: if group.len() == 1 {
                BifurcationKind::Simple
            } else {
                BifurcationKind::Multiple
            },
            mode_indices: group.to_vec(),
            root_mismatch: 0.0,
        },
        accumulate(basis, &terms, vec![ratio_of((u, v))]),
    ))
}

#[derive(Debug, Clone, Copy)]
pub struct MixedOptions {
    /// Largest eigenvalue spread within each group.
    pub spread_tol: f64,
    /// Largest relative distance of the quadratic's roots from `(Λm, Λn)`.
    pub root_tol: f64,
    pub interval: Option<(f64, f64)>,
}

impl Default for MixedOptions {
    fn default() -> Self {
        MixedOptions {
            spread_tol: 1e-3,
            root_tol: 1e-2,
            interval: None,
        }
    }
}

/// Bifurcation where two distinct eigenvalues `Λm < Λn` are simultaneously
/// the roots of the eigenvalue quadratic.
///
/// The parameter is fixed by requiring the roots to be `Λn − Λm` apart; it
/// then depends on the remaining parameters whether the roots land on the
/// eigenvalues themselves, which is checked against `root_tol`.
pub fn compose_mixed(
    basis: &EigenBasis,
    (group_m, weights_m): (&[usize], &[f64]),
    (group_n, weights_n): (&[usize], &[f64]),
    model: &dyn RdModel,
    opts: &MixedOptions,
) -> Result<(BifurcationPoint, BifurcationPattern)> {
    check_modes(basis, group_m)?;
    check_modes(basis, group_n)?;
    for (g, w) in [(group_m, weights_m), (group_n, weights_n)] {
        if g.len() != w.len() {
            return Err(Error::LengthMismatch {
                expected: g.len(),
                got: w.len(),
            });
        }
        check_weights(w)?;
    }
    let mut lm = group_lambda(basis, group_m, opts.spread_tol)?;
    let mut ln = group_lambda(basis, group_n, opts.spread_tol)?;
    let (mut gm, mut gn) = ((group_m, weights_m), (group_n, weights_n));
    if lm > ln {
        std::mem::swap(&mut lm, &mut ln);
        std::mem::swap(&mut gm, &mut gn);
    }
    if (ln - lm).abs() <= opts.spread_tol * ln.abs() {
        return Err(Error::InvalidArgument(
            "mixed modes need two distinct eigenvalues".into(),
        ));
    }

    let alpha0 = model.alpha();
    let c0 = linearize_primary(model, alpha0)?;
    let (c2, _, _) = c0.quadratic();
    if !(c2 > 0.0) {
        return Err(Error::DiffusionConstraint(c2));
    }
    let delta = ln - lm;
    let phi = |a: f64| {
        linearize_primary(model, a).map(|c| {
            let (c2, c1, c0) = c.quadratic();
            c2 * c2 * delta * delta + 4.0 * c2 * c0 - c1 * c1
        })
    };
    let alpha = match scalar_roots(&phi, alpha0, opts.interval)? {
        Roots::Real(r) => pick_stable(model, alpha0, r)?,
        Roots::Complex(d) => return Err(Error::ComplexParameter(d)),
    };

    let c = linearize_primary(model, alpha)?;
    let roots = lambda_roots(&c);
    let mismatch = match roots.as_slice() {
        [r1, r2] => ((r1 - lm) / lm).abs().max(((r2 - ln) / ln).abs()),
        _ => f64::INFINITY,
    };
    if !(mismatch <= opts.root_tol) {
        return Err(Error::MixedRootMismatch(mismatch));
    }
    let (um, vm) = coefficient_ratio(&c, lm)?;
    let (un, vn) = coefficient_ratio(&c, ln)?;
    let mut terms: Vec<_> = gm.0.iter().zip(gm.1).map(|(&k, &w)| (k, w, um, vm)).collect();
    terms.extend(gn.0.iter().zip(gn.1).map(|(&k, &w)| (k, w, un, vn)));
    let mut indices = gm.0.to_vec();
    indices.extend_from_slice(gn.0);
    Ok((
        BifurcationPoint {
            alpha,
            lambdas: vec![lm, ln],
            kind: BifurcationKind::Mixed,
            mode_indices: indices,
            root_mismatch: mismatch,
        },
        accumulate(basis, &terms, vec![ratio_of((um, vm)), ratio_of((un, vn))]),
    ))
}

/// Relative residual of the linearised steady equations for a pattern,
/// `|(M K − L D)(u; v)| / (sum of the magnitudes of the individual terms)`.
pub fn constraint_residual(
    mass: &SparseOperator,
    stiffness: &SparseOperator,
    c: &LinearCoefficients,
    pattern: &BifurcationPattern,
) -> f64 {
    let mu = mass.mul_vec(&pattern.u_field);
    let mv = mass.mul_vec(&pattern.v_field);
    let lu = stiffness.mul_vec(&pattern.u_field);
    let lv = stiffness.mul_vec(&pattern.v_field);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..mu.len() {
        let t1 = [c.u_ku * mu[i], -c.u_du * lu[i], c.u_kv * mv[i], -c.u_dv * lv[i]];
        let t2 = [c.v_ku * mu[i], -c.v_du * lu[i], c.v_kv * mv[i], -c.v_dv * lv[i]];
        let r1: f64 = t1.iter().sum();
        let r2: f64 = t2.iter().sum();
        num += r1 * r1 + r2 * r2;
        den += t1.iter().chain(&t2).map(|t| t * t).sum::<f64>();
    }
    if den == 0.0 {
        0.0
    } else {
        (num / den).sqrt()
    }
}

/// One entry of a bifurcation inventory.
#[derive(Debug)]
pub struct InventoryEntry {
    pub group: Vec<usize>,
    pub lambda: f64,
    pub result: Result<BifurcationPoint>,
}

/// Simple and multiple bifurcation points for every nonzero multiplicity
/// group of `basis` (multiple points use unit weights).
pub fn inventory(basis: &EigenBasis, model: &dyn RdModel, spread_tol: f64) -> Vec<InventoryEntry> {
    basis
        .groups
        .iter()
        .filter(|g| !g.iter().any(|&k| basis.is_zero_mode(k)))
        .map(|g| {
            let lambda = g.iter().map(|&k| basis.pairs[k].lambda).sum::<f64>() / g.len() as f64;
            let result = compose_multiple(basis, g, &vec![1.0; g.len()], model, spread_tol).map(|(p, _)| p);
            InventoryEntry {
                group: g.clone(),
                lambda,
                result,
            }
        })
        .collect()
}

/// Inventory CSV, `kind,alpha,lambda_m,lambda_n,mode_indices`, with one
/// row per successfully located point. `lambda_n` is empty unless mixed and
/// mode indices are separated by `;`.
pub fn inventory_csv<'a>(points: impl IntoIterator<Item = &'a BifurcationPoint>) -> String {
    let mut s = String::from("kind,alpha,lambda_m,lambda_n,mode_indices\n");
    for p in points {
        let modes = p.mode_indices.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(";");
        let ln = p.lambdas.get(1).map(|l| format!("{l:.16e}")).unwrap_or_default();
        writeln!(s, "{},{:.16e},{:.16e},{ln},{modes}", p.kind.name(), p.alpha, p.lambdas[0])
            .expect("writing to a string");
    }
    s
}

/// Parse an inventory written by [`inventory_csv`].
pub fn parse_inventory(text: &str) -> Result<Vec<BifurcationPoint>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |m: &str| Error::Parse {
            line: i + 1,
            message: m.to_string(),
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(bad("expected 5 fields"));
        }
        let kind = match f[0] {
            "simple" => BifurcationKind::Simple,
            "multiple" => BifurcationKind::Multiple,
            "mixed" => BifurcationKind::Mixed,
            _ => return Err(bad("unknown kind")),
        };
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("bad number"));
        let mut lambdas = vec![num(f[2])?];
        if !f[3].is_empty() {
            lambdas.push(num(f[3])?);
        }
        let mode_indices = f[4]
            .split(';')
            .map(|k| k.trim().parse::<usize>().map_err(|_| bad("bad mode index")))
            .collect::<Result<_>>()?;
        out.push(BifurcationPoint {
            alpha: num(f[1])?,
            lambdas,
            kind,
            mode_indices,
            root_mismatch: 0.0,
        });
    }
    Ok(out)
}

pub fn save_inventory(entries: &[InventoryEntry], path: &Path) -> Result<()> {
    let points = entries.iter().filter_map(|e| e.result.as_ref().ok());
    std::fs::write(path, inventory_csv(points)).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy)]
pub struct ReferenceOptions {
    /// Dof of the bordering row; defaults to the largest Jacobian diagonal
    /// at the start of the range.
    pub pivot: Option<usize>,
    /// Bisection stops when the bracket is this small relative to alpha.
    pub rel_tol: f64,
    pub max_bisections: usize,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        ReferenceOptions {
            pivot: None,
            rel_tol: 1e-6,
            max_bisections: 60,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReferencePoint {
    pub alpha: f64,
    /// Null vector estimate at `alpha`, as a pattern without coefficients.
    pub pattern: BifurcationPattern,
}

struct TestValue {
    tau: f64,
    v: Vec<f64>,
}

/// Test function `τ(α) = (J v)_k` where `v` solves `J_k v = e_k`, with
/// `J_k` the Jacobian at the homogeneous state with row `k` replaced by
/// `e_kᵀ`. `τ = det J / det J_k`, so zeros of `τ` are singular points of `J`.
fn test_function(space: &FemSpace, model: &dyn RdModel, alpha: f64, k: usize) -> Result<TestValue> {
    let x = homogeneous_vector(space, model, alpha)?;
    let jac = assemble_jacobian(space, model, &x, alpha)?;
    let mut jk = jac.clone();
    let (start, end) = (jk.row_ptr()[k], jk.row_ptr()[k + 1]);
    let cols: Vec<usize> = jk.col_idx()[start..end].to_vec();
    for (off, &c) in cols.iter().enumerate() {
        jk.values_mut()[start + off] = if c == k { 1.0 } else { 0.0 };
    }
    let lu = space.jacobian_lu(&jk)?;
    let mut e = vec![0.0; jac.nrows()];
    e[k] = 1.0;
    let v = lu.solve(&e)?;
    let tau = jac.row(k).map(|(j, a)| a * v[j]).sum();
    Ok(TestValue { tau, v })
}

/// Locate bifurcations of the homogeneous state in `range` by sampling the
/// test function every `step` and bisecting each sign change. Sign changes
/// caused by poles of the test function are discarded.
pub fn reference_detect(
    space: &FemSpace,
    model: &dyn RdModel,
    range: (f64, f64),
    step: f64,
    opts: &ReferenceOptions,
) -> Result<Vec<ReferencePoint>> {
    let (lo, hi) = range;
    if !(lo < hi) || !(step > 0.0) {
        return Err(Error::InvalidArgument("empty range or non-positive step".into()));
    }
    let k = match opts.pivot {
        Some(k) if k < 2 * space.n_dof() => k,
        Some(k) => return Err(Error::InvalidArgument(format!("pivot {k} is out of range"))),
        None => {
            let x = homogeneous_vector(space, model, lo)?;
            let d = assemble_jacobian(space, model, &x, lo)?.diagonal();
            (0..d.len()).max_by(|&i, &j| d[i].total_cmp(&d[j])).unwrap_or(0)
        }
    };
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    let grid: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let taus: Vec<f64> = grid
        .par_iter()
        .map(|&a| test_function(space, model, a, k).map(|t| t.tau))
        .collect::<Result<_>>()?;

    let brackets: Vec<usize> = (0..n).filter(|&i| taus[i] * taus[i + 1] < 0.0 || taus[i] == 0.0).collect();
    let found: Vec<Option<ReferencePoint>> = brackets
        .par_iter()
        .map(|&i| -> Result<Option<ReferencePoint>> {
            let (mut l, mut u) = (grid[i], grid[i + 1]);
            let (mut tl, mut tu) = (taus[i], taus[i + 1]);
            let mut iters = 0;
            while tl != 0.0 && (u - l) > opts.rel_tol * u.abs().max(l.abs()) && iters < opts.max_bisections {
                let m = 0.5 * (l + u);
                let tm = test_function(space, model, m, k)?.tau;
                if tm * tl <= 0.0 {
                    u = m;
                    tu = tm;
                } else {
                    l = m;
                    tl = tm;
                }
                iters += 1;
            }
            // Near a zero the bracket values shrink; near a pole they grow.
            if tl.abs().min(tu.abs()) > taus[i].abs().min(taus[i + 1].abs()) {
                return Ok(None);
            }
            let alpha = 0.5 * (l + u);
            let t = test_function(space, model, alpha, k)?;
            let nd = space.n_dof();
            let mut pattern = BifurcationPattern {
                u_field: t.v[..nd].to_vec(),
                v_field: t.v[nd..].to_vec(),
                coefficients: Vec::new(),
                ratios: Vec::new(),
            };
            pattern.normalise();
            Ok(Some(ReferencePoint { alpha, pattern }))
        })
        .collect::<Result<_>>()?;
    Ok(found.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Brusselator, Murray};

    #[test]
    fn stable_quadratic_roots() {
        let r = quadratic_roots(1.0, -1e8, 1.0).unwrap();
        assert!((r[0] - 1e-8).abs() < 1e-22);
        assert!((r[1] - 1e8).abs() < 1e-6);
        assert!(quadratic_roots(1.0, 0.0, 1.0).is_none());
        assert_eq!(quadratic_roots(0.0, 2.0, -4.0).unwrap(), vec![2.0]);
    }

    #[test]
    fn generic_solve_matches_closed_form() {
        // Fitting route versus the analytic formulas, for both models.
        let m = Murray::default();
        for &l in &[0.6, 2.5, 9.87] {
            let closed = m.closed_form_parameter(l).unwrap().unwrap();
            let phi = |a: f64| linearize_primary(&m, a).map(|c| c.quadratic_at(l));
            let Roots::Real(r) = scalar_roots(&phi, 10.0, None).unwrap() else { panic!() };
            assert!(r.iter().any(|a| (a - closed).abs() < 1e-9 * closed), "{r:?} {closed}");
        }
        let b = Brusselator::default();
        let l = 5.0;
        let closed = b.closed_form_parameter(l).unwrap().unwrap();
        let generic = solve_continuation_param_in(&b, l, ModeRule::NonExclusive, Some((0.05, 5.0))).unwrap();
        assert!((generic - closed).abs() < 1e-10, "{generic} {closed}");
    }

    #[test]
    fn ratio_matches_murray_formula() {
        let m = Murray::default();
        for &l in &[0.617, 5.55] {
            let a = solve_continuation_param(&m, l, ModeRule::NonExclusive).unwrap();
            let (u, v) = coefficient_ratio(&linearize_primary(&m, a).unwrap(), l).unwrap();
            assert_eq!(u, 1.0);
            assert!((v - m.ratio(l, a)).abs() < 1e-12);
        }
    }

    #[test]
    fn exclusive_rule_gives_double_root() {
        let m = Murray::default();
        let l = 3.0;
        let a = solve_continuation_param(&m, l, ModeRule::Exclusive).unwrap();
        let c = linearize_primary(&m, a).unwrap();
        let (c2, c1, _) = c.quadratic();
        assert!((2.0 * l * c2 - c1).abs() < 1e-10);
    }

    #[test]
    fn growth_factor_rule() {
        let b = Brusselator::default();
        let l = 20.0;
        let g = solve_continuation_param(&b, l, ModeRule::GrowthFactor).unwrap();
        let mut bb = b.clone();
        bb.gamma = g;
        let (c2, c1, _) = linearize_primary(&bb, bb.a).unwrap().quadratic();
        assert!((2.0 * l * c2 - c1).abs() < 1e-10 * c1.abs());
        assert!(solve_continuation_param(&Murray::default(), l, ModeRule::GrowthFactor).is_err());
    }
}

//! Newton correction at fixed parameter, switching from a bifurcation
//! pattern onto the nonlinear branch, and pseudo-arclength tracing.

use std::fmt::Write as _;
use std::path::Path;

use crate::bifurcate::{BifurcationPattern, BifurcationPoint};
use crate::error::{Error, Result};
use crate::fem::{
    assemble_jacobian, assemble_parameter_derivative, assemble_residual, homogeneous_vector, residual_rms, rms,
    FemSpace,
};
use crate::linalg::{bordered_solve, dot, norm2};
use crate::models::RdModel;

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    /// Tolerance on the residual RMS.
    pub tol: f64,
    pub max_iters: usize,
    pub max_backtracks: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-9,
            max_iters: 50,
            max_backtracks: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residual_rms: f64,
}

/// Newton's method with backtracking for `R(x, alpha) = 0` at fixed alpha.
pub fn newton_correct(
    space: &FemSpace,
    model: &dyn RdModel,
    x0: &[f64],
    alpha: f64,
    opts: &NewtonOptions,
) -> Result<(Vec<f64>, NewtonReport)> {
    let mut x = x0.to_vec();
    let mut r = assemble_residual(space, model, &x, alpha)?;
    let mut res = residual_rms(space, &r);
    let mut it = 0;
    while res > opts.tol {
        if it == opts.max_iters {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: res,
            });
        }
        let jac = assemble_jacobian(space, model, &x, alpha)?;
        let mut dx = r;
        dx.iter_mut().for_each(|v| *v = -*v);
        space.jacobian_lu(&jac)?.solve_in_place(&mut dx)?;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + t * d).collect();
            if let Ok(rt) = assemble_residual(space, model, &trial, alpha) {
                let rt_rms = residual_rms(space, &rt);
                if rt_rms < res {
                    accepted = Some((trial, rt, rt_rms));
                    break;
                }
            }
            t *= 0.5;
        }
        // When no shortened step reduces the residual, take the shortest one.
        let (xn, rn, resn) = match accepted {
            Some(a) => a,
            None => {
                let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + t * d).collect();
                let rt = assemble_residual(space, model, &trial, alpha)?;
                let rr = residual_rms(space, &rt);
                (trial, rt, rr)
            }
        };
        x = xn;
        r = rn;
        res = resn;
        it += 1;
    }
    Ok((
        x,
        NewtonReport {
            iterations: it,
            residual_rms: res,
        },
    ))
}

/// A converged point on a branch, with its unit tangent.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchState {
    pub x: Vec<f64>,
    pub alpha: f64,
    pub arclength: f64,
    /// Step size to attempt next.
    pub step: f64,
    pub tangent_x: Vec<f64>,
    pub tangent_alpha: f64,
    pub residual_rms: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SwitchOptions {
    pub eps0: f64,
    /// Minimum distance from the homogeneous state, relative to its norm.
    pub divergence_floor: f64,
    pub newton: NewtonOptions,
    /// Weight of the arclength parameter direction, used for the tangent.
    pub tangent_scale: f64,
}

impl Default for SwitchOptions {
    fn default() -> Self {
        SwitchOptions {
            eps0: 0.01,
            divergence_floor: 1e-3,
            newton: NewtonOptions::default(),
            tangent_scale: 1.0,
        }
    }
}

/// Inner product used for arclength: `xᵀy / N + θ a b`.
fn scaled_dot(tx: &[f64], ta: f64, ux: &[f64], ua: f64, theta: f64) -> f64 {
    dot(tx, ux) / tx.len() as f64 + theta * ta * ua
}

fn normalise_tangent(tx: &mut [f64], ta: &mut f64, theta: f64) {
    let n = scaled_dot(tx, *ta, tx, *ta, theta).sqrt();
    tx.iter_mut().for_each(|v| *v /= n);
    *ta /= n;
}

/// Guidance weight for Newton iteration `k` of a branch switch.
fn guidance_weight(k: usize) -> f64 {
    (0.75 - 0.25 * k as f64).max(0.0)
}

/// Bordered Newton solve with the pivot dof pinned, starting from
/// `x_h + sign·eps·φ`.
fn pinned_solve(
    space: &FemSpace,
    model: &dyn RdModel,
    x_h: &[f64],
    phi: &[f64],
    pivot: usize,
    alpha0: f64,
    jump: f64,
    opts: &NewtonOptions,
) -> Result<(Vec<f64>, f64, f64)> {
    let target = x_h[pivot] + jump * phi[pivot];
    let mut x: Vec<f64> = x_h.iter().zip(phi).map(|(h, p)| h + jump * p).collect();
    let mut alpha = alpha0;
    let mut e = vec![0.0; x.len()];
    e[pivot] = 1.0;
    for k in 0..opts.max_iters {
        let r = assemble_residual(space, model, &x, alpha)?;
        let res = residual_rms(space, &r);
        let pin = x[pivot] - target;
        if res <= opts.tol && pin.abs() <= 1e-12 * target.abs().max(1.0) {
            return Ok((x, alpha, res));
        }
        let jac = assemble_jacobian(space, model, &x, alpha)?;
        let ra = assemble_parameter_derivative(space, model, &x, alpha)?;
        let lu = space.jacobian_lu(&jac)?;
        let f: Vec<f64> = r.iter().map(|v| -v).collect();
        let (dx, da) = bordered_solve(&jac, &lu, &ra, &e, 0.0, &f, -pin)?;
        let mut xn: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
        alpha += da;
        let w = guidance_weight(k);
        if w > 0.0 {
            // Pull the deviation toward the pattern direction while keeping
            // the pinned value.
            let amp = (xn[pivot] - x_h[pivot]) / phi[pivot];
            for i in 0..xn.len() {
                let dev = xn[i] - x_h[i];
                xn[i] = x_h[i] + (1.0 - w) * dev + w * amp * phi[i];
            }
        }
        if !alpha.is_finite() || xn.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("branch switch"));
        }
        x = xn;
    }
    let r = assemble_residual(space, model, &x, alpha)?;
    Err(Error::NoConvergence {
        iterations: opts.max_iters,
        residual: residual_rms(space, &r),
    })
}

/// Unit tangent at a converged state, oriented to have positive inner
/// product with `(dir_x, dir_a)`.
fn tangent_at(
    space: &FemSpace,
    model: &dyn RdModel,
    x: &[f64],
    alpha: f64,
    dir_x: &[f64],
    dir_a: f64,
    theta: f64,
) -> Result<(Vec<f64>, f64)> {
    let jac = assemble_jacobian(space, model, x, alpha)?;
    let ra = assemble_parameter_derivative(space, model, x, alpha)?;
    let lu = space.jacobian_lu(&jac)?;
    let n = x.len() as f64;
    let d: Vec<f64> = dir_x.iter().map(|v| v / n).collect();
    let (mut tx, mut ta) = bordered_solve(&jac, &lu, &ra, &d, theta * dir_a, &vec![0.0; x.len()], 1.0)?;
    normalise_tangent(&mut tx, &mut ta, theta);
    if scaled_dot(&tx, ta, dir_x, dir_a, theta) < 0.0 {
        tx.iter_mut().for_each(|v| *v = -*v);
        ta = -ta;
    }
    Ok((tx, ta))
}

/// Jump from the bifurcation point onto the emerging branch along the
/// pattern. The pattern's largest `u` entry is pinned while the state and
/// parameter are solved for; on failure the antithetic jump and then
/// smaller and larger jump distances are tried.
pub fn branch_switch(
    space: &FemSpace,
    model: &dyn RdModel,
    point: &BifurcationPoint,
    pattern: &BifurcationPattern,
    opts: &SwitchOptions,
) -> Result<BranchState> {
    if !(opts.eps0 > 0.0) || !opts.eps0.is_finite() {
        return Err(Error::InvalidArgument("jump distance must be positive".into()));
    }
    let n = space.n_dof();
    if pattern.u_field.len() != n || pattern.v_field.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: pattern.u_field.len(),
        });
    }
    let phi = pattern.stacked();
    let pivot = (0..n)
        .max_by(|&i, &j| pattern.u_field[i].abs().total_cmp(&pattern.u_field[j].abs()))
        .unwrap_or(0);
    // Patterns without a `u` component pin the largest `v` entry instead.
    let pivot = if phi[pivot] == 0.0 {
        (0..2 * n).max_by(|&i, &j| phi[i].abs().total_cmp(&phi[j].abs())).unwrap_or(0)
    } else {
        pivot
    };
    if phi[pivot] == 0.0 {
        return Err(Error::InvalidArgument("pattern is zero".into()));
    }
    let x_h = homogeneous_vector(space, model, point.alpha)?;
    let floor = opts.divergence_floor * norm2(&x_h).max(f64::MIN_POSITIVE);
    let e = opts.eps0;
    let ladder = [e, -e, 0.5 * e, 2.0 * e, -0.5 * e];
    for &jump in &ladder {
        let Ok((x, alpha, res)) = pinned_solve(space, model, &x_h, &phi, pivot, point.alpha, jump, &opts.newton)
        else {
            continue;
        };
        let x_h_here = homogeneous_vector(space, model, alpha)?;
        let dev: Vec<f64> = x.iter().zip(&x_h_here).map(|(a, b)| a - b).collect();
        if norm2(&dev) <= floor {
            continue;
        }
        // Orient the tangent away from the homogeneous state.
        let (tx, ta) = tangent_at(space, model, &x, alpha, &dev, 0.0, opts.tangent_scale)?;
        return Ok(BranchState {
            x,
            alpha,
            arclength: 0.0,
            step: e,
            tangent_x: tx,
            tangent_alpha: ta,
            residual_rms: res,
        });
    }
    Err(Error::SwitchFailed {
        attempts: ladder.len(),
    })
}

#[derive(Debug, Clone, Copy)]
pub struct ArclengthOptions {
    /// θ, the weight of the parameter direction.
    pub tangent_scale: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub tol: f64,
    pub max_corrector_iters: usize,
    /// Corrector iteration count at or below which the step grows.
    pub easy_iters: usize,
}

impl Default for ArclengthOptions {
    fn default() -> Self {
        ArclengthOptions {
            tangent_scale: 1.0,
            ds_min: 1e-6,
            ds_max: 0.5,
            tol: 1e-9,
            max_corrector_iters: 12,
            easy_iters: 3,
        }
    }
}

fn corrector(
    space: &FemSpace,
    model: &dyn RdModel,
    state: &BranchState,
    ds: f64,
    opts: &ArclengthOptions,
) -> Result<(BranchState, usize)> {
    let theta = opts.tangent_scale;
    let tx = &state.tangent_x;
    let ta = state.tangent_alpha;
    let xp: Vec<f64> = state.x.iter().zip(tx).map(|(x, t)| x + ds * t).collect();
    let ap = state.alpha + ds * ta;
    let mut x = xp.clone();
    let mut alpha = ap;
    let nn = x.len() as f64;
    let d: Vec<f64> = tx.iter().map(|v| v / nn).collect();
    let mut last = f64::INFINITY;
    for it in 0..=opts.max_corrector_iters {
        let r = assemble_residual(space, model, &x, alpha)?;
        let res = residual_rms(space, &r);
        let dev: Vec<f64> = x.iter().zip(&xp).map(|(a, b)| a - b).collect();
        let g = scaled_dot(tx, ta, &dev, alpha - ap, theta);
        if res <= opts.tol && g.abs() <= 1e-10 * ds.abs().max(1e-12) {
            let (ntx, nta) = tangent_at(space, model, &x, alpha, tx, ta, theta)?;
            return Ok((
                BranchState {
                    x,
                    alpha,
                    arclength: state.arclength + ds,
                    step: ds,
                    tangent_x: ntx,
                    tangent_alpha: nta,
                    residual_rms: res,
                },
                it,
            ));
        }
        if it == opts.max_corrector_iters || !(res < 10.0 * last.max(opts.tol)) {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: res,
            });
        }
        last = res;
        let jac = assemble_jacobian(space, model, &x, alpha)?;
        let ra = assemble_parameter_derivative(space, model, &x, alpha)?;
        let lu = space.jacobian_lu(&jac)?;
        let f: Vec<f64> = r.iter().map(|v| -v).collect();
        let (dx, da) = bordered_solve(&jac, &lu, &ra, &d, theta * ta, &f, -g)?;
        x.iter_mut().zip(&dx).for_each(|(a, b)| *a += b);
        alpha += da;
    }
    unreachable!("loop returns on its last iteration")
}

/// One pseudo-arclength step with adaptive step size. The returned state's
/// `step` is the size to try next.
pub fn arclength_step(
    space: &FemSpace,
    model: &dyn RdModel,
    state: &BranchState,
    opts: &ArclengthOptions,
) -> Result<BranchState> {
    let mut ds = state.step.clamp(opts.ds_min, opts.ds_max);
    loop {
        match corrector(space, model, state, ds, opts) {
            Ok((mut next, iters)) => {
                next.step = if iters <= opts.easy_iters {
                    (1.3 * ds).min(opts.ds_max)
                } else {
                    ds
                };
                return Ok(next);
            }
            Err(e @ (Error::NoConvergence { .. } | Error::LinearSolve(_) | Error::NonFinite(_))) => {
                if 0.5 * ds < opts.ds_min {
                    let _ = e;
                    return Err(Error::StepFailed(ds));
                }
                ds *= 0.5;
            }
            Err(e) => return Err(e),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub states: Vec<BranchState>,
    pub origin: BifurcationPoint,
    /// RMS deviation from the homogeneous state at each state's alpha.
    pub norm_series: Vec<f64>,
    /// Why tracing stopped early, if it did.
    pub note: Option<String>,
}

impl Branch {
    pub fn alphas(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.alpha).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TraceOptions {
    pub switch: SwitchOptions,
    pub arclength: ArclengthOptions,
    pub window: (f64, f64),
    pub max_steps: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            switch: SwitchOptions::default(),
            arclength: ArclengthOptions::default(),
            window: (f64::NEG_INFINITY, f64::INFINITY),
            max_steps: 50,
        }
    }
}

/// RMS deviation of `x` from the homogeneous state at `alpha`.
pub fn branch_norm(space: &FemSpace, model: &dyn RdModel, x: &[f64], alpha: f64) -> Result<f64> {
    let h = homogeneous_vector(space, model, alpha)?;
    let d: Vec<f64> = x.iter().zip(&h).map(|(a, b)| a - b).collect();
    Ok(rms(&d))
}

/// Switch onto the branch emerging at `point` and follow it until alpha
/// leaves the window, `max_steps` steps have been taken, or a step fails.
/// The switched state counts as step 0.
pub fn trace_branch(
    space: &FemSpace,
    model: &dyn RdModel,
    point: &BifurcationPoint,
    pattern: &BifurcationPattern,
    opts: &TraceOptions,
) -> Result<Branch> {
    let (lo, hi) = opts.window;
    let mut branch = Branch {
        states: Vec::new(),
        origin: point.clone(),
        norm_series: Vec::new(),
        note: None,
    };
    if !(point.alpha >= lo && point.alpha <= hi) {
        branch.note = Some(format!("origin alpha {} lies outside the window [{lo}, {hi}]", point.alpha));
        return Ok(branch);
    }
    let mut sw = opts.switch;
    sw.tangent_scale = opts.arclength.tangent_scale;
    let first = branch_switch(space, model, point, pattern, &sw)?;
    let mut ar = opts.arclength;
    ar.ds_max = ar.ds_max.max(first.step);
    push(space, model, &mut branch, first)?;
    while branch.states.len() <= opts.max_steps {
        let last = branch.states.last().expect("nonempty");
        match arclength_step(space, model, last, &ar) {
            Ok(s) => {
                let inside = s.alpha >= lo && s.alpha <= hi;
                if !inside {
                    branch.note = Some(format!("left the window at alpha {}", s.alpha));
                    break;
                }
                push(space, model, &mut branch, s)?;
            }
            Err(e) => {
                branch.note = Some(format!("stopped: {e}"));
                break;
            }
        }
    }
    Ok(branch)
}

fn push(space: &FemSpace, model: &dyn RdModel, branch: &mut Branch, s: BranchState) -> Result<()> {
    branch.norm_series.push(branch_norm(space, model, &s.x, s.alpha)?);
    branch.states.push(s);
    Ok(())
}

/// `step,alpha,arclength,norm,residual_rms`.
pub fn branch_csv(branch: &Branch) -> String {
    let mut s = String::from("step,alpha,arclength,norm,residual_rms\n");
    for (i, (st, nm)) in branch.states.iter().zip(&branch.norm_series).enumerate() {
        writeln!(
            s,
            "{i},{:.16e},{:.16e},{:.16e},{:.16e}",
            st.alpha, st.arclength, nm, st.residual_rms
        )
        .expect("writing to a string");
    }
    s
}

pub fn save_branch_csv(branch: &Branch, path: &Path) -> Result<()> {
    std::fs::write(path, branch_csv(branch)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn guidance_decays_to_zero() {
        let w: Vec<f64> = (0..6).map(guidance_weight).collect();
        assert_eq!(w, vec![0.75, 0.5, 0.25, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn scaled_norm_normalises() {
        let mut tx = vec![3.0, 4.0];
        let mut ta = 2.0;
        normalise_tangent(&mut tx, &mut ta, 0.5);
        assert!((scaled_dot(&tx, ta, &tx, ta, 0.5) - 1.0).abs() < 1e-15);
    }
}

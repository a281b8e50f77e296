//! Mesh hierarchies and level-by-level upsampling of converged states.
//!
//! A hop from level `l − 1` to `l` first subdivides the coarse mesh and
//! re-solves there, then projects onto the finer geometry and re-solves
//! again. When the subdivided mesh already is the next level (a nested
//! hierarchy) the projection is the identity and is skipped.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::continuation::{newton_correct, NewtonOptions, NewtonReport};
use crate::error::{Error, Result};
use crate::fem::{
    assemble_jacobian, assemble_residual, homogeneous_vector, residual_rms, rms, BoundaryCondition, FemSpace,
};
use crate::linalg::{dot, norm2};
use crate::mesh::{
    apply_interpolation, build_interpolation, decimate, save_off, subdivide_with_map, InterpolationMap,
    ProjectionOptions, SurfaceMesh,
};
use crate::models::{primary_state, RdModel};

/// Transfer maps between consecutive levels.
#[derive(Debug, Clone)]
pub struct Hop {
    /// The subdivided coarse level.
    pub refined: FemSpace,
    pub subdivision: InterpolationMap,
    /// Refined mesh to the next level; `None` when they coincide.
    pub projection: Option<InterpolationMap>,
}

#[derive(Debug, Clone)]
pub struct MeshHierarchy {
    levels: Vec<FemSpace>,
    hops: Vec<Hop>,
}

/// Smallest coarse level [`MeshHierarchy::build`] will produce.
pub const MIN_TRIANGLES: usize = 200;

impl MeshHierarchy {
    /// Decimate `fine` `n_levels` times, each time by `ratio` in triangle
    /// count. Level 0 is the coarsest; the last level is `fine`.
    pub fn build(fine: SurfaceMesh, n_levels: usize, ratio: f64, bc: BoundaryCondition) -> Result<Self> {
        if !(ratio > 1.0) {
            return Err(Error::InvalidArgument("coarsening ratio must exceed 1".into()));
        }
        let need = ratio.powi(n_levels as i32) * MIN_TRIANGLES as f64;
        if (fine.n_triangles() as f64) < need {
            return Err(Error::InvalidArgument(format!(
                "{} triangles cannot be coarsened {n_levels} times by {ratio} (need {need:.0})",
                fine.n_triangles()
            )));
        }
        let mut meshes = vec![fine];
        for _ in 0..n_levels {
            let last = meshes.last().expect("nonempty");
            let target = (last.n_triangles() as f64 / ratio).round() as usize;
            meshes.push(decimate(last, target)?);
        }
        meshes.reverse();
        Self::from_meshes(meshes, bc)
    }

    /// Nested hierarchy: `coarse` and `n_levels` successive subdivisions.
    pub fn nested(coarse: SurfaceMesh, n_levels: usize, bc: BoundaryCondition) -> Result<Self> {
        let coarse = Arc::new(coarse);
        let mut levels = vec![FemSpace::new(coarse, bc)?];
        let mut hops = Vec::with_capacity(n_levels);
        for _ in 0..n_levels {
            let (fine, map) = subdivide_with_map(levels.last().expect("nonempty").mesh())?;
            let space = FemSpace::new(fine, bc)?;
            hops.push(Hop {
                refined: space.clone(),
                subdivision: map,
                projection: None,
            });
            levels.push(space);
        }
        Ok(MeshHierarchy { levels, hops })
    }

    /// Hierarchy over given meshes, coarsest first, with transfer maps
    /// computed once here.
    pub fn from_meshes(meshes: Vec<SurfaceMesh>, bc: BoundaryCondition) -> Result<Self> {
        if meshes.is_empty() {
            return Err(Error::InvalidArgument("no meshes".into()));
        }
        for w in meshes.windows(2) {
            if w[1].n_triangles() <= w[0].n_triangles() {
                return Err(Error::InvalidArgument(
                    "triangle counts must increase with level".into(),
                ));
            }
        }
        let levels: Vec<FemSpace> = meshes.into_iter().map(|m| FemSpace::new(m, bc)).collect::<Result<_>>()?;
        let hops = levels
            .windows(2)
            .map(|w| -> Result<Hop> {
                let (refined, subdivision) = subdivide_with_map(w[0].mesh())?;
                let same = refined.vertices() == w[1].mesh().vertices()
                    && refined.triangles() == w[1].mesh().triangles();
                let projection = if same {
                    None
                } else {
                    let map = build_interpolation(&refined, w[1].mesh(), ProjectionOptions::default())?;
                    check_map(&map)?;
                    Some(map)
                };
                Ok(Hop {
                    refined: FemSpace::new(refined, bc)?,
                    subdivision,
                    projection,
                })
            })
            .collect::<Result<_>>()?;
        Ok(MeshHierarchy { levels, hops })
    }

    /// Number of levels, including the coarsest.
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn level(&self, l: usize) -> &FemSpace {
        &self.levels[l]
    }

    /// Maps from level `l` to level `l + 1`.
    pub fn hop(&self, l: usize) -> &Hop {
        &self.hops[l]
    }

    /// Write each level's mesh and transfer maps to `dir`, plus a
    /// `hierarchy.txt` manifest listing `level mesh dofs subdivision_map
    /// projection_map` (a `-` for an identity projection).
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut manifest = String::from("# level mesh dofs subdivision_map projection_map\n");
        for (l, space) in self.levels.iter().enumerate() {
            let mesh_name = format!("level_{l}.off");
            save_off(space.mesh(), dir.join(&mesh_name))?;
            let (sub, proj) = if l + 1 < self.levels.len() {
                let hop = &self.hops[l];
                let sub = format!("subdivide_{l}.csv");
                write(dir, &sub, &hop.subdivision.to_csv())?;
                let proj = match &hop.projection {
                    Some(m) => {
                        let name = format!("project_{l}.csv");
                        write(dir, &name, &m.to_csv())?;
                        name
                    }
                    None => "-".into(),
                };
                (sub, proj)
            } else {
                ("-".into(), "-".into())
            };
            writeln!(manifest, "{l} {mesh_name} {} {sub} {proj}", space.n_dof()).expect("writing to a string");
        }
        write(dir, "hierarchy.txt", &manifest)
    }

    /// Load a hierarchy written by [`MeshHierarchy::save`]. Subdivision maps
    /// are rebuilt (they are exact); projection maps are read back.
    pub fn load(dir: &Path, bc: BoundaryCondition) -> Result<Self> {
        let read = |name: &str| {
            let p = dir.join(name);
            std::fs::read_to_string(&p).map_err(|e| Error::io(p, e))
        };
        let manifest = read("hierarchy.txt")?;
        let mut rows = Vec::new();
        for (i, line) in manifest.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 5 || f[0].parse::<usize>() != Ok(rows.len()) {
                return Err(Error::Parse {
                    line: i + 1,
                    message: "malformed hierarchy manifest row".into(),
                });
            }
            rows.push((f[1].to_string(), f[4].to_string()));
        }
        if rows.is_empty() {
            return Err(Error::InvalidArgument("empty hierarchy manifest".into()));
        }
        let levels: Vec<FemSpace> = rows
            .iter()
            .map(|(mesh, _)| FemSpace::new(crate::mesh::parse_off(&read(mesh)?)?, bc))
            .collect::<Result<_>>()?;
        let mut hops = Vec::with_capacity(levels.len() - 1);
        for (l, (_, proj)) in rows.iter().enumerate().take(levels.len() - 1) {
            let (refined, subdivision) = subdivide_with_map(levels[l].mesh())?;
            let projection = if proj == "-" {
                None
            } else {
                let map = InterpolationMap::from_csv(&read(proj)?, refined.n_vertices())?;
                if map.n_target() != levels[l + 1].mesh().n_vertices() {
                    return Err(Error::LengthMismatch {
                        expected: levels[l + 1].mesh().n_vertices(),
                        got: map.n_target(),
                    });
                }
                check_map(&map)?;
                Some(map)
            };
            hops.push(Hop {
                refined: FemSpace::new(refined, bc)?,
                subdivision,
                projection,
            });
        }
        Ok(MeshHierarchy { levels, hops })
    }
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let p = dir.join(name);
    std::fs::write(&p, text).map_err(|e| Error::io(p, e))
}

fn check_map(map: &InterpolationMap) -> Result<()> {
    match map.partition_of_unity_error() {
        Some(e) if e <= 1e-10 => Ok(()),
        Some(e) => Err(Error::InvalidMesh(format!("transfer weights sum to 1 only within {e:.3e}"))),
        None => Ok(()),
    }
}

/// Move a stacked per-dof state between spaces through a per-vertex map.
fn transfer(
    from: &FemSpace,
    to: &FemSpace,
    map: &InterpolationMap,
    x: &[f64],
    model: &dyn RdModel,
    alpha: f64,
) -> Result<Vec<f64>> {
    let n = from.n_dof();
    let bnd = if from.bc() == BoundaryCondition::DirichletZero {
        let s = primary_state(model, alpha)?;
        (s.a, s.b)
    } else {
        (0.0, 0.0)
    };
    let a = apply_interpolation(map, &from.extend(&x[..n], bnd.0))?;
    let b = apply_interpolation(map, &from.extend(&x[n..], bnd.1))?;
    let mut y = to.restrict(&a);
    y.extend(to.restrict(&b));
    Ok(y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HopKind {
    Subdivide,
    Project,
}

impl HopKind {
    pub fn name(self) -> &'static str {
        match self {
            HopKind::Subdivide => "subdivide",
            HopKind::Project => "project",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HopReport {
    /// Level being produced.
    pub level: usize,
    pub hop: HopKind,
    pub iterations: usize,
    pub seconds: f64,
    pub residual: f64,
    /// Correlation between the interpolated and the re-converged deviation
    /// from the homogeneous state (1 when both vanish).
    pub correlation: f64,
    /// Whether the trust-region fallback was needed.
    pub trust_region: bool,
    pub dofs: usize,
}

#[derive(Debug)]
pub struct HopFailure {
    pub level: usize,
    pub hop: HopKind,
    pub error: Error,
}

impl std::fmt::Display for HopFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} hop to level {} failed: {}", self.hop.name(), self.level, self.error)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct UpsampleOptions {
    pub newton: NewtonOptions,
    pub trust_region: TrustRegionOptions,
}

impl Default for UpsampleOptions {
    fn default() -> Self {
        UpsampleOptions {
            newton: NewtonOptions::default(),
            trust_region: TrustRegionOptions::default(),
        }
    }
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm2(a), norm2(b));
    if na == 0.0 && nb == 0.0 {
        1.0
    } else if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot(a, b) / (na * nb)
    }
}

fn solve_hop(
    space: &FemSpace,
    model: &dyn RdModel,
    x0: Vec<f64>,
    alpha: f64,
    level: usize,
    hop: HopKind,
    opts: &UpsampleOptions,
) -> std::result::Result<(Vec<f64>, HopReport), HopFailure> {
    let fail = |error| HopFailure { level, hop, error };
    let start = Instant::now();
    let (x, rep, tr) = match newton_correct(space, model, &x0, alpha, &opts.newton) {
        Ok((x, r)) => (x, r, false),
        Err(_) => {
            let (x, r) = trust_region_correct(space, model, &x0, alpha, &opts.trust_region).map_err(fail)?;
            (x, r, true)
        }
    };
    let seconds = start.elapsed().as_secs_f64();
    let h = homogeneous_vector(space, model, alpha).map_err(fail)?;
    let d0: Vec<f64> = x0.iter().zip(&h).map(|(a, b)| a - b).collect();
    let d1: Vec<f64> = x.iter().zip(&h).map(|(a, b)| a - b).collect();
    Ok((
        x,
        HopReport {
            level,
            hop,
            iterations: rep.iterations,
            seconds,
            residual: rep.residual_rms,
            correlation: correlation(&d0, &d1),
            trust_region: tr,
            dofs: space.n_dof(),
        },
    ))
}

/// Upsample a converged state from level `l − 1` to level `l` at fixed
/// alpha.
pub fn upsample_solution(
    h: &MeshHierarchy,
    l: usize,
    x: &[f64],
    alpha: f64,
    model: &dyn RdModel,
    opts: &UpsampleOptions,
) -> std::result::Result<(Vec<f64>, Vec<HopReport>), HopFailure> {
    if l == 0 || l >= h.len() {
        return Err(HopFailure {
            level: l,
            hop: HopKind::Subdivide,
            error: Error::InvalidArgument(format!("level {l} has no coarser level")),
        });
    }
    let coarse = h.level(l - 1);
    let hop = h.hop(l - 1);
    let fail = |hop, error| HopFailure { level: l, hop, error };
    let y = transfer(coarse, &hop.refined, &hop.subdivision, x, model, alpha)
        .map_err(|e| fail(HopKind::Subdivide, e))?;
    let (y, r1) = solve_hop(&hop.refined, model, y, alpha, l, HopKind::Subdivide, opts)?;
    let mut reports = vec![r1];
    let y = match &hop.projection {
        None => y,
        Some(map) => {
            let z = transfer(&hop.refined, h.level(l), map, &y, model, alpha)
                .map_err(|e| fail(HopKind::Project, e))?;
            let (z, r2) = solve_hop(h.level(l), model, z, alpha, l, HopKind::Project, opts)?;
            reports.push(r2);
            z
        }
    };
    Ok((y, reports))
}

/// Outcome of upsampling one branch state through every level.
#[derive(Debug)]
pub struct StateUpsample {
    pub state: usize,
    pub alpha: f64,
    /// Converged state per level, starting with the input at level 0.
    pub levels: Vec<Vec<f64>>,
    pub reports: Vec<HopReport>,
    pub failure: Option<HopFailure>,
}

/// Upsample the selected branch states `(x, alpha)` independently, at most
/// `parallel_width` at a time. Failures are recorded per state.
pub fn upsample_branch(
    h: &MeshHierarchy,
    states: &[(Vec<f64>, f64)],
    subset: &[usize],
    model: &dyn RdModel,
    parallel_width: usize,
    opts: &UpsampleOptions,
) -> Result<Vec<StateUpsample>> {
    if let Some(&bad) = subset.iter().find(|&&i| i >= states.len()) {
        return Err(Error::InvalidArgument(format!("state {bad} is out of range")));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel_width.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    Ok(pool.install(|| {
        subset
            .par_iter()
            .map(|&i| {
                let (x0, alpha) = &states[i];
                let mut out = StateUpsample {
                    state: i,
                    alpha: *alpha,
                    levels: vec![x0.clone()],
                    reports: Vec::new(),
                    failure: None,
                };
                for l in 1..h.len() {
                    let prev = out.levels.last().expect("nonempty");
                    match upsample_solution(h, l, prev, *alpha, model, opts) {
                        Ok((x, r)) => {
                            out.levels.push(x);
                            out.reports.extend(r);
                        }
                        Err(f) => {
                            out.failure = Some(f);
                            break;
                        }
                    }
                }
                out
            })
            .collect()
    }))
}

/// `state,level,hop,iters,seconds,residual,correlation`.
pub fn reports_csv(results: &[StateUpsample]) -> String {
    let mut s = String::from("state,level,hop,iters,seconds,residual,correlation\n");
    for r in results {
        for h in &r.reports {
            writeln!(
                s,
                "{},{},{},{},{:.16e},{:.16e},{:.16e}",
                r.state,
                h.level,
                h.hop.name(),
                h.iterations,
                h.seconds,
                h.residual,
                h.correlation
            )
            .expect("writing to a string");
        }
    }
    s
}

/// Branch at level `l`: `state,alpha,norm` for every state that reached it.
pub fn level_branch_csv(h: &MeshHierarchy, results: &[StateUpsample], l: usize, model: &dyn RdModel) -> Result<String> {
    let mut s = String::from("state,alpha,norm\n");
    for r in results {
        if let Some(x) = r.levels.get(l) {
            let hv = homogeneous_vector(h.level(l), model, r.alpha)?;
            let d: Vec<f64> = x.iter().zip(&hv).map(|(a, b)| a - b).collect();
            writeln!(s, "{},{:.16e},{:.16e}", r.state, r.alpha, rms(&d)).expect("writing to a string");
        }
    }
    Ok(s)
}

/// Least-squares slope of `log t` against `log n`.
pub fn scaling_exponent(samples: &[(f64, f64)]) -> Option<f64> {
    if samples.len() < 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(n, t)| (n.ln(), t.ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, Copy)]
pub struct TrustRegionOptions {
    pub tol: f64,
    pub max_iters: usize,
    /// Initial radius relative to `|x|`.
    pub initial_radius: f64,
}

impl Default for TrustRegionOptions {
    fn default() -> Self {
        TrustRegionOptions {
            tol: 1e-9,
            max_iters: 200,
            initial_radius: 0.1,
        }
    }
}

/// Dogleg trust-region iteration on `½|R|²`, for starts where plain Newton
/// with backtracking fails.
pub fn trust_region_correct(
    space: &FemSpace,
    model: &dyn RdModel,
    x0: &[f64],
    alpha: f64,
    opts: &TrustRegionOptions,
) -> Result<(Vec<f64>, NewtonReport)> {
    let mut x = x0.to_vec();
    let mut r = assemble_residual(space, model, &x, alpha)?;
    let mut radius = opts.initial_radius * norm2(&x).max(1e-8);
    let mut it = 0;
    while residual_rms(space, &r) > opts.tol {
        if it == opts.max_iters || radius < 1e-14 * norm2(&x).max(1.0) {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: residual_rms(space, &r),
            });
        }
        it += 1;
        let jac = assemble_jacobian(space, model, &x, alpha)?;
        let newton = space.jacobian_lu(&jac)
            .and_then(|lu| lu.solve(&r.iter().map(|v| -v).collect::<Vec<_>>()))
            .ok();
        // Steepest descent direction of ½|R|² and its Cauchy step.
        let g = jac.transpose().mul_vec(&r);
        let jg = jac.mul_vec(&g);
        let tau = dot(&g, &g) / dot(&jg, &jg).max(f64::MIN_POSITIVE);
        let cauchy: Vec<f64> = g.iter().map(|v| -tau * v).collect();
        let step = dogleg(newton.as_deref(), &cauchy, radius);
        let trial: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
        let rt = match assemble_residual(space, model, &trial, alpha) {
            Ok(rt) => rt,
            Err(_) => {
                radius *= 0.25;
                continue;
            }
        };
        let js = jac.mul_vec(&step);
        let model_r: Vec<f64> = r.iter().zip(&js).map(|(a, b)| a + b).collect();
        let predicted = dot(&r, &r) - dot(&model_r, &model_r);
        let actual = dot(&r, &r) - dot(&rt, &rt);
        let rho = if predicted > 0.0 { actual / predicted } else { -1.0 };
        let len = norm2(&step);
        if rho < 0.25 {
            radius = 0.25 * len;
        } else if rho > 0.75 && len >= 0.99 * radius {
            radius *= 2.0;
        }
        if rho > 1e-4 {
            x = trial;
            r = rt;
        }
    }
    Ok((
        x,
        NewtonReport {
            iterations: it,
            residual_rms: residual_rms(space, &r),
        },
    ))
}

fn dogleg(newton: Option<&[f64]>, cauchy: &[f64], radius: f64) -> Vec<f64> {
    let nc = norm2(cauchy);
    if let Some(pn) = newton {
        if norm2(pn) <= radius {
            return pn.to_vec();
        }
        if nc < radius {
            // Walk from the Cauchy point toward the Newton point up to the
            // boundary: |c + s (n − c)| = radius.
            let d: Vec<f64> = pn.iter().zip(cauchy).map(|(a, b)| a - b).collect();
            let (a, b, c) = (dot(&d, &d), 2.0 * dot(cauchy, &d), nc * nc - radius * radius);
            let s = (-b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a);
            return cauchy.iter().zip(&d).map(|(p, q)| p + s * q).collect();
        }
    }
    let s = if nc > 0.0 { (radius / nc).min(1.0) } else { 0.0 };
    cauchy.iter().map(|v| s * v).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_of_power_law() {
        let s: Vec<(f64, f64)> = [1e3, 4e3, 1.6e4].iter().map(|&n: &f64| (n, 2.0 * n.powf(1.25))).collect();
        assert!((scaling_exponent(&s).unwrap() - 1.25).abs() < 1e-12);
    }

    #[test]
    fn dogleg_respects_radius() {
        let n = [3.0, 4.0];
        let c = [0.3, 0.1];
        assert_eq!(dogleg(Some(&n), &c, 10.0), n.to_vec());
        let s = dogleg(Some(&n), &c, 1.0);
        assert!((norm2(&s) - 1.0).abs() < 1e-12);
        let s = dogleg(None, &c, 0.1);
        assert!((norm2(&s) - 0.1).abs() < 1e-12);
    }
}

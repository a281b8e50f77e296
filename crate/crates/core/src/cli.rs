//! Pipeline commands behind the `rdsurf` binary. Each command reads the
//! artifacts of earlier stages from the output directory and writes its own:
//!
//! | command        | reads                         | writes                                   |
//! |----------------|-------------------------------|------------------------------------------|
//! | `eigen`        | config                        | `mesh.off`, `hierarchy/`, `eigen/`       |
//! | `bifurcations` | `eigen/`                      | `inventory.csv`, `patterns/`             |
//! | `trace`        | `inventory.csv`, `patterns/`  | `branches/`                              |
//! | `upsample`     | `branches/`, `hierarchy/`     | `upsample/`                              |
//! | `verify`       | `branches/`                   | `verify.csv`, `verify/`                  |
//! | `marginal`     | `eigen/` when `mode` is given | `marginal.csv`                           |
//! | `dispersion`   | `eigen/` if present           | `dispersion.csv`, `dispersion_modes.csv` |

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::bifurcate::{compose_mixed, compose_multiple, compose_simple, inventory_csv, parse_inventory};
use crate::bifurcate::{BifurcationPattern, BifurcationPoint};
use crate::config::RunConfig;
use crate::continuation::{save_branch_csv, trace_branch, Branch};
use crate::error::{Error, Result};
use crate::fem::FemSpace;
use crate::linalg::norm2;
use crate::mesh::{parse_off, save_off, SurfaceMesh};
use crate::models::{growth_rate, linearize_primary, marginal_curve, primary_state, RdModel, ScaleKind};
use crate::multires::{level_branch_csv, reports_csv, upsample_branch, MeshHierarchy};
use crate::simulate::{imex_step, integrate_to_steady, Outcome};
use crate::spectral::{load_basis, save_basis, solve_space, EigenBasis};
use crate::vtk::save_vtk;

/// Everything a command needs besides the artifacts on disk.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    /// Directory relative mesh paths are resolved against.
    pub base: PathBuf,
    /// Overrides the configured eigen seed.
    pub seed: Option<u64>,
    /// Concurrent jobs for commands that run independent jobs.
    pub workers: usize,
}

impl Context {
    pub fn new(config: RunConfig, out: impl Into<PathBuf>) -> Self {
        Context {
            config,
            out: out.into(),
            base: PathBuf::from("."),
            seed: None,
            workers: rayon::current_num_threads(),
        }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }

    fn dir(&self, rel: &str) -> Result<PathBuf> {
        let p = self.path(rel);
        std::fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
        Ok(p)
    }

    /// Read an artifact written by an earlier command.
    fn prerequisite(&self, rel: &str, producer: &str) -> Result<String> {
        let p = self.path(rel);
        if !p.exists() {
            return Err(Error::MissingPrerequisite(format!(
                "{} not found; run `{producer}` first",
                p.display()
            )));
        }
        std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))
    }

    fn analysis_space(&self) -> Result<FemSpace> {
        let text = self.prerequisite("mesh.off", "eigen")?;
        FemSpace::new(parse_off(&text)?, self.config.boundary()?)
    }

    fn basis(&self) -> Result<EigenBasis> {
        self.prerequisite("eigen/spectrum.csv", "eigen")?;
        load_basis(&self.path("eigen"), self.config.eigen.group_tol)
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers.max(1))
            .build()
            .map_err(|e| Error::Config(e.to_string()))
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Two-column `a,b` per-dof CSV of a stacked state.
fn state_csv(header: &str, x: &[f64]) -> String {
    let n = x.len() / 2;
    let mut s = String::with_capacity(50 * n);
    s.push_str(header);
    s.push('\n');
    for i in 0..n {
        let _ = writeln!(s, "{:.16e},{:.16e}", x[i], x[n + i]);
    }
    s
}

fn parse_state_csv(text: &str, path: &Path) -> Result<Vec<f64>> {
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Parse {
            line: i + 1,
            message: format!("malformed row in {}", path.display()),
        };
        let (x, y) = line.split_once(',').ok_or_else(bad)?;
        a.push(x.trim().parse::<f64>().map_err(|_| bad())?);
        b.push(y.trim().parse::<f64>().map_err(|_| bad())?);
    }
    a.extend(b);
    Ok(a)
}

/// Write a stacked state as VTK point data, filling eliminated boundary
/// vertices with `boundary`.
fn save_state_vtk(
    space: &FemSpace,
    path: &Path,
    names: [&str; 2],
    x: &[f64],
    boundary: (f64, f64),
) -> Result<()> {
    let n = space.n_dof();
    let a = space.extend(&x[..n], boundary.0);
    let b = space.extend(&x[n..], boundary.1);
    save_vtk(space.mesh(), path, names[0], &[(names[0], &a), (names[1], &b)])
}

fn homogeneous_boundary(model: &dyn RdModel, alpha: f64) -> Result<(f64, f64)> {
    let s = primary_state(model, alpha)?;
    Ok((s.a, s.b))
}

fn build_hierarchy(ctx: &Context, mesh: SurfaceMesh) -> Result<Option<MeshHierarchy>> {
    let h = &ctx.config.hierarchy;
    if h.levels == 0 {
        return Ok(None);
    }
    let bc = ctx.config.boundary()?;
    let hier = match h.method.as_str() {
        "decimate" => MeshHierarchy::build(mesh, h.levels, h.ratio, bc)?,
        _ => MeshHierarchy::nested(mesh, h.levels, bc)?,
    };
    Ok(Some(hier))
}

/// Build the mesh (and hierarchy, when configured), then solve for the
/// eigenbasis of the coarsest level.
pub fn cmd_eigen(ctx: &Context) -> Result<()> {
    let c = &ctx.config;
    let mesh = c.build_mesh(&ctx.base)?;
    let bc = c.boundary()?;
    let space = match build_hierarchy(ctx, mesh.clone())? {
        Some(h) => {
            h.save(&ctx.dir("hierarchy")?)?;
            h.level(0).clone()
        }
        None => FemSpace::new(mesh, bc)?,
    };
    if c.eigen.k >= space.n_dof() {
        return Err(Error::Config(format!(
            "eigen.k = {} but the mesh has only {} unknowns",
            c.eigen.k,
            space.n_dof()
        )));
    }
    std::fs::create_dir_all(&ctx.out).map_err(|e| Error::io(&ctx.out, e))?;
    save_off(space.mesh(), ctx.path("mesh.off"))?;
    let basis = solve_space(&space, c.eigen.k, &c.eigen_options(ctx.seed))?;
    save_basis(&basis, &ctx.dir("eigen")?)?;
    if !basis.warnings.is_empty() {
        write(&ctx.path("eigen/warnings.txt"), &(basis.warnings.join("\n") + "\n"))?;
    }
    Ok(())
}

/// One inventory row with its pattern.
type Composed = (BifurcationPoint, BifurcationPattern);

fn compose_all(ctx: &Context, basis: &EigenBasis, model: &dyn RdModel) -> Result<(Vec<Composed>, String)> {
    let c = &ctx.config.compose;
    let mut failures = String::from("modes,lambda,error\n");
    let mut rows: Vec<Composed> = Vec::new();
    if c.auto {
        let groups: Vec<&Vec<usize>> = basis
            .groups
            .iter()
            .filter(|g| !g.iter().any(|&k| basis.is_zero_mode(k)))
            .collect();
        let results: Vec<Result<Composed>> = ctx.pool()?.install(|| {
            groups
                .par_iter()
                .map(|g| compose_multiple(basis, g, &vec![1.0; g.len()], model, c.spread_tol))
                .collect()
        });
        for (g, r) in groups.iter().zip(results) {
            match r {
                Ok(row) => rows.push(row),
                Err(e) => {
                    let modes = g.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(";");
                    let _ = writeln!(failures, "{modes},{:.16e},{}", basis.pairs[g[0]].lambda, e.code());
                }
            }
        }
        rows.sort_by(|a, b| a.0.alpha.total_cmp(&b.0.alpha));
    }
    let mut push = |row: Composed| {
        let dup = rows
            .iter()
            .any(|(p, _)| p.kind == row.0.kind && p.mode_indices == row.0.mode_indices);
        if !dup {
            rows.push(row);
        }
    };
    // Explicit requests fail the command: the user asked for these points.
    for &k in &c.simple {
        push(compose_simple(basis, k, model)?);
    }
    for g in &c.multiple {
        push(compose_multiple(basis, &g.modes, &g.weights, model, c.spread_tol)?);
    }
    let mopts = ctx.config.mixed_options();
    for m in &c.mixed {
        push(compose_mixed(
            basis,
            (&m.m.modes, &m.m.weights),
            (&m.n.modes, &m.n.weights),
            model,
            &mopts,
        )?);
    }
    Ok((rows, failures))
}

/// Compose bifurcation points and patterns; write the inventory and one
/// CSV (`u_b,v_b` per dof) and VTK file per row.
pub fn cmd_bifurcations(ctx: &Context) -> Result<()> {
    let basis = ctx.basis()?;
    let space = ctx.analysis_space()?;
    if basis.pairs.first().map(|p| p.vector.len()) != Some(space.n_dof()) {
        return Err(Error::MissingPrerequisite(
            "eigenbasis does not match mesh.off; rerun `eigen`".into(),
        ));
    }
    let model = ctx.config.model()?;
    let (rows, failures) = compose_all(ctx, &basis, model.as_ref())?;
    write(&ctx.path("inventory.csv"), &inventory_csv(rows.iter().map(|r| &r.0)))?;
    write(&ctx.path("inventory_failures.csv"), &failures)?;
    let dir = ctx.dir("patterns")?;
    for (i, (_, p)) in rows.iter().enumerate() {
        let x = p.stacked();
        write(&dir.join(format!("pattern_{i:04}.csv")), &state_csv("u_b,v_b", &x))?;
        save_state_vtk(&space, &dir.join(format!("pattern_{i:04}.vtk")), ["u_b", "v_b"], &x, (0.0, 0.0))?;
    }
    Ok(())
}

fn load_inventory(ctx: &Context) -> Result<Vec<BifurcationPoint>> {
    parse_inventory(&ctx.prerequisite("inventory.csv", "bifurcations")?)
}

fn load_pattern(ctx: &Context, row: usize, n: usize) -> Result<BifurcationPattern> {
    let rel = format!("patterns/pattern_{row:04}.csv");
    let x = parse_state_csv(&ctx.prerequisite(&rel, "bifurcations")?, &ctx.path(&rel))?;
    if x.len() != 2 * n {
        return Err(Error::LengthMismatch {
            expected: 2 * n,
            got: x.len(),
        });
    }
    Ok(BifurcationPattern {
        u_field: x[..n].to_vec(),
        v_field: x[n..].to_vec(),
        coefficients: Vec::new(),
        ratios: Vec::new(),
    })
}

/// Trace the branch from every configured inventory row. Rows trace
/// concurrently; a failed row is reported in `branches/status.csv` and only
/// fails the command when no branch could be traced at all.
pub fn cmd_trace(ctx: &Context) -> Result<()> {
    let points = load_inventory(ctx)?;
    let space = ctx.analysis_space()?;
    let model = ctx.config.model()?;
    let origins = &ctx.config.continuation.origins;
    if let Some(&bad) = origins.iter().find(|&&o| o >= points.len()) {
        return Err(Error::Config(format!(
            "continuation origin {bad} is not an inventory row (inventory has {})",
            points.len()
        )));
    }
    let patterns: Vec<BifurcationPattern> = origins
        .iter()
        .map(|&o| load_pattern(ctx, o, space.n_dof()))
        .collect::<Result<_>>()?;
    let opts = ctx.config.trace_options();
    let branches: Vec<Result<Branch>> = ctx.pool()?.install(|| {
        origins
            .par_iter()
            .zip(&patterns)
            .map(|(&o, pat)| trace_branch(&space, model.as_ref(), &points[o], pat, &opts))
            .collect()
    });
    let dir = ctx.dir("branches")?;
    let mut status = String::from("origin,status,steps,note\n");
    let mut first_error = None;
    let mut traced = 0;
    for (&o, b) in origins.iter().zip(branches) {
        match b {
            Ok(b) => {
                save_branch(ctx, &space, model.as_ref(), &dir, o, &b)?;
                let note = b.note.as_deref().unwrap_or("").replace(',', ";");
                let _ = writeln!(status, "{o},ok,{},{note}", b.states.len());
                traced += usize::from(!b.states.is_empty());
            }
            Err(e) => {
                let _ = writeln!(status, "{o},{},0,{}", e.code(), e.to_string().replace(',', ";"));
                first_error.get_or_insert(e);
            }
        }
    }
    write(&dir.join("status.csv"), &status)?;
    match (traced, first_error) {
        (0, Some(e)) => Err(e),
        _ => Ok(()),
    }
}

fn save_branch(
    ctx: &Context,
    space: &FemSpace,
    model: &dyn RdModel,
    dir: &Path,
    origin: usize,
    b: &Branch,
) -> Result<()> {
    save_branch_csv(b, &dir.join(format!("branch_{origin:04}.csv")))?;
    let sdir = dir.join(format!("branch_{origin:04}"));
    std::fs::create_dir_all(&sdir).map_err(|e| Error::io(&sdir, e))?;
    let every = ctx.config.continuation.snapshot_every;
    for (i, s) in b.states.iter().enumerate() {
        write(&sdir.join(format!("state_{i:04}.csv")), &state_csv("a,b", &s.x))?;
        if every > 0 && i % every == 0 {
            let bnd = homogeneous_boundary(model, s.alpha)?;
            save_state_vtk(space, &sdir.join(format!("state_{i:04}.vtk")), ["a", "b"], &s.x, bnd)?;
        }
    }
    Ok(())
}

/// Branch states `(x, alpha)` of a traced origin, in step order.
fn load_branch_states(ctx: &Context, origin: usize, n: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    let rel = format!("branches/branch_{origin:04}.csv");
    let text = ctx.prerequisite(&rel, "trace")?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let alpha = line
            .split(',')
            .nth(1)
            .and_then(|s| s.trim().parse::<f64>().ok())
            .ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("malformed row in {rel}"),
            })?;
        let srel = format!("branches/branch_{origin:04}/state_{:04}.csv", out.len());
        let x = parse_state_csv(&ctx.prerequisite(&srel, "trace")?, &ctx.path(&srel))?;
        if x.len() != 2 * n {
            return Err(Error::LengthMismatch {
                expected: 2 * n,
                got: x.len(),
            });
        }
        out.push((x, alpha));
    }
    Ok(out)
}

/// Origins that have a branch file.
fn traced_origins(ctx: &Context) -> Result<Vec<usize>> {
    let found: Vec<usize> = ctx
        .config
        .continuation
        .origins
        .iter()
        .copied()
        .filter(|o| ctx.path(&format!("branches/branch_{o:04}.csv")).exists())
        .collect();
    if found.is_empty() {
        return Err(Error::MissingPrerequisite("no traced branches; run `trace` first".into()));
    }
    Ok(found)
}

/// Upsample every `hierarchy.every`-th state of each traced branch through
/// the hierarchy.
pub fn cmd_upsample(ctx: &Context) -> Result<()> {
    if ctx.config.hierarchy.levels == 0 {
        return Err(Error::Config("upsample needs hierarchy.levels > 0".into()));
    }
    ctx.prerequisite("hierarchy/hierarchy.txt", "eigen")?;
    let model = ctx.config.model()?;
    let h = MeshHierarchy::load(&ctx.path("hierarchy"), ctx.config.boundary()?)?;
    let opts = ctx.config.upsample_options();
    let dir = ctx.dir("upsample")?;
    let mut failures = String::from("branch,state,level,hop,error\n");
    let mut reports = String::new();
    for o in traced_origins(ctx)? {
        let states = load_branch_states(ctx, o, h.level(0).n_dof())?;
        let subset: Vec<usize> = (0..states.len()).step_by(ctx.config.hierarchy.every).collect();
        let results = upsample_branch(&h, &states, &subset, model.as_ref(), ctx.workers, &opts)?;
        let csv = reports_csv(&results);
        let mut lines = csv.lines();
        let header = lines.next().expect("header");
        if reports.is_empty() {
            reports = format!("branch,{header}\n");
        }
        for l in lines {
            let _ = writeln!(reports, "{o},{l}");
        }
        for l in 1..h.len() {
            let text = level_branch_csv(&h, &results, l, model.as_ref())?;
            write(&dir.join(format!("level_{l}_branch_{o:04}.csv")), &text)?;
        }
        let top = h.len() - 1;
        for r in &results {
            if let Some(f) = &r.failure {
                let _ = writeln!(failures, "{o},{},{},{},{}", r.state, f.level, f.hop.name(), f.error.code());
            }
            if let Some(x) = r.levels.get(top) {
                let bnd = homogeneous_boundary(model.as_ref(), r.alpha)?;
                let name = format!("branch_{o:04}_state_{:04}.vtk", r.state);
                save_state_vtk(h.level(top), &dir.join(name), ["a", "b"], x, bnd)?;
            }
        }
    }
    write(&dir.join("report.csv"), &reports)?;
    write(&dir.join("failures.csv"), &failures)
}

/// Evenly spaced indices into `0..len`, at most `count` of them.
fn sample_indices(len: usize, count: usize) -> Vec<usize> {
    match (len, count) {
        (0, _) | (_, 0) => Vec::new(),
        (_, 1) => vec![0],
        _ if count >= len => (0..len).collect(),
        _ => {
            let mut v: Vec<usize> = (0..count)
                .map(|i| ((i * (len - 1)) as f64 / (count - 1) as f64).round() as usize)
                .collect();
            v.dedup();
            v
        }
    }
}

/// Check sampled branch states against the time integrator: the relative
/// change over one step, and the outcome of integrating to steady state.
pub fn cmd_verify(ctx: &Context) -> Result<()> {
    let space = ctx.analysis_space()?;
    let model = ctx.config.model()?;
    let ic = ctx.config.integrator_config()?;
    let dir = ctx.dir("verify")?;
    let mut csv = String::from("branch,state,alpha,step_change,outcome,steps\n");
    for o in traced_origins(ctx)? {
        let states = load_branch_states(ctx, o, space.n_dof())?;
        let picks = sample_indices(states.len(), ctx.config.verify.states);
        let results: Vec<Result<(f64, Outcome)>> = ctx.pool()?.install(|| {
            picks
                .par_iter()
                .map(|&i| {
                    let (x, alpha) = &states[i];
                    let y = imex_step(&space, model.as_ref(), x, *alpha, ic.dt, ic.mass)?;
                    let d: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
                    let change = norm2(&d) / norm2(x).max(f64::MIN_POSITIVE);
                    Ok((change, integrate_to_steady(&space, model.as_ref(), x, *alpha, &ic)?))
                })
                .collect()
        });
        for (&i, r) in picks.iter().zip(results) {
            let (change, outcome) = r?;
            let alpha = states[i].1;
            let _ = writeln!(
                csv,
                "{o},{i},{alpha:.16e},{change:.16e},{},{}",
                outcome.code(),
                outcome.steps()
            );
            if let Outcome::Steady { x, .. } | Outcome::Timeout { x, .. } = &outcome {
                let bnd = homogeneous_boundary(model.as_ref(), alpha)?;
                let name = format!("branch_{o:04}_state_{i:04}.vtk");
                save_state_vtk(&space, &dir.join(name), ["a", "b"], x, bnd)?;
            }
        }
    }
    write(&ctx.path("verify.csv"), &csv)
}

/// Marginal stability curve of one mode over a range of domain scales:
/// `scale,gamma,alpha,status`.
pub fn cmd_marginal(ctx: &Context) -> Result<()> {
    let m = &ctx.config.marginal;
    let lambda = match (m.lambda, m.mode) {
        (Some(l), _) => l,
        (None, Some(k)) => {
            let basis = ctx.basis()?;
            basis
                .pairs
                .get(k)
                .map(|p| p.lambda)
                .ok_or_else(|| Error::Config(format!("marginal.mode {k} is not in the basis")))?
        }
        (None, None) => return Err(Error::Config("marginal needs `mode` or `lambda`".into())),
    };
    let kind = ctx.config.scale_kind()?;
    let scales: Vec<f64> = (0..m.count)
        .map(|i| match m.count {
            1 => m.from,
            c => m.from + (m.to - m.from) * i as f64 / (c - 1) as f64,
        })
        .collect();
    let model = ctx.config.model()?;
    let curve = marginal_curve(model.as_ref(), lambda, &scales, kind)?;
    let mut csv = String::from("scale,gamma,alpha,status\n");
    for (s, r) in curve {
        let gamma = match kind {
            ScaleKind::Radius => s * s,
            ScaleKind::Perimeter => s * s / (4.0 * std::f64::consts::PI * std::f64::consts::PI),
        };
        match r {
            Ok(a) => writeln!(csv, "{s:.16e},{gamma:.16e},{a:.16e},ok"),
            Err(e) => writeln!(csv, "{s:.16e},{gamma:.16e},,{}", e.code()),
        }
        .expect("writing to a string");
    }
    std::fs::create_dir_all(&ctx.out).map_err(|e| Error::io(&ctx.out, e))?;
    write(&ctx.path("marginal.csv"), &csv)
}

/// Growth rate against eigenvalue, sampled (`dispersion.csv`) and at each
/// computed eigenvalue when a basis exists (`dispersion_modes.csv`).
pub fn cmd_dispersion(ctx: &Context) -> Result<()> {
    let d = &ctx.config.dispersion;
    let model = ctx.config.model()?;
    let alpha = d.alpha.unwrap_or_else(|| model.alpha());
    let c = linearize_primary(model.as_ref(), alpha)?;
    let eigenvalues = if ctx.path("eigen/spectrum.csv").exists() {
        ctx.basis()?.eigenvalues()
    } else {
        Vec::new()
    };
    let lmax = d
        .lambda_max
        .unwrap_or_else(|| eigenvalues.iter().copied().fold(f64::NAN, f64::max))
        .max(0.0);
    let lmax = if lmax > 0.0 { lmax } else { 50.0 };
    let mut csv = String::from("lambda,xi\n");
    for i in 0..d.samples {
        let l = lmax * i as f64 / (d.samples - 1) as f64;
        let _ = writeln!(csv, "{l:.16e},{:.16e}", growth_rate(&c, l));
    }
    std::fs::create_dir_all(&ctx.out).map_err(|e| Error::io(&ctx.out, e))?;
    write(&ctx.path("dispersion.csv"), &csv)?;
    if !eigenvalues.is_empty() {
        let mut csv = String::from("index,lambda,xi,unstable\n");
        for (i, &l) in eigenvalues.iter().enumerate() {
            let xi = growth_rate(&c, l);
            let _ = writeln!(csv, "{i},{l:.16e},{xi:.16e},{}", u8::from(xi >= -d.unstable_tol));
        }
        write(&ctx.path("dispersion_modes.csv"), &csv)?;
    }
    Ok(())
}

/// Names accepted by [`run`].
pub const COMMANDS: [&str; 7] = ["eigen", "bifurcations", "trace", "upsample", "verify", "marginal", "dispersion"];

pub fn run(command: &str, ctx: &Context) -> Result<()> {
    match command {
        "eigen" => cmd_eigen(ctx),
        "bifurcations" => cmd_bifurcations(ctx),
        "trace" => cmd_trace(ctx),
        "upsample" => cmd_upsample(ctx),
        "verify" => cmd_verify(ctx),
        "marginal" => cmd_marginal(ctx),
        "dispersion" => cmd_dispersion(ctx),
        other => Err(Error::InvalidArgument(format!("unknown command `{other}`"))),
    }
}

/// Machine-readable form of an error, as printed by the binary.
pub fn error_json(e: &Error) -> String {
    serde_json::json!({ "error": { "code": e.code(), "message": e.to_string() } }).to_string()
}

//! C interface to `rdsurf`.
//!
//! Objects are opaque handles created by `rd_*_new`/`rd_*_load` functions and
//! released with the matching `rd_*_free`. Every fallible function returns an
//! `RdStatus` code; `RD_OK` is zero. The message of the most recent failure
//! on the calling thread is available from `rd_last_error_message`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use rdsurf::bifurcate::{compose_simple, solve_continuation_param, ModeRule};
use rdsurf::fem::{BoundaryCondition, FemSpace};
use rdsurf::mesh::{generate_rectangle, load_mesh, MeshFormat, SurfaceMesh};
use rdsurf::models::{model_from_name, RdModel as CoreModel};
use rdsurf::spectral::{solve_space, EigenBasis, EigenOptions};
use rdsurf::Error;

pub const RD_OK: i32 = 0;
pub const RD_ERR_NULL_POINTER: i32 = 1;
pub const RD_ERR_INVALID_UTF8: i32 = 2;
pub const RD_ERR_PANIC: i32 = 3;
pub const RD_ERR_OUT_OF_RANGE: i32 = 4;
pub const RD_ERR_IO: i32 = 10;
pub const RD_ERR_PARSE: i32 = 11;
pub const RD_ERR_INVALID_MESH: i32 = 12;
pub const RD_ERR_INVALID_ARGUMENT: i32 = 13;
pub const RD_ERR_CONFIG: i32 = 14;
pub const RD_ERR_NO_CONVERGENCE: i32 = 15;
pub const RD_ERR_LINEAR_SOLVE: i32 = 16;
pub const RD_ERR_NO_REAL_SOLUTION: i32 = 17;
pub const RD_ERR_PRECONDITIONS: i32 = 18;
pub const RD_ERR_DIFFUSION_CONSTRAINT: i32 = 19;
pub const RD_ERR_COMPLEX_PARAMETER: i32 = 20;
pub const RD_ERR_ZERO_MODE: i32 = 21;
pub const RD_ERR_OTHER: i32 = 99;

/// Boundary condition selector for `rd_eigen_solve`.
pub const RD_BC_DIRICHLET: i32 = 0;
pub const RD_BC_NEUMANN: i32 = 1;
pub const RD_BC_CLOSED: i32 = 2;

/// A validated triangle mesh.
pub struct RdMesh {
    mesh: SurfaceMesh,
}

/// A reaction-diffusion model with its parameters.
pub struct RdModel {
    model: Box<dyn CoreModel>,
}

/// Eigenpairs of the Laplace-Beltrami operator on a mesh.
pub struct RdBasis {
    basis: EigenBasis,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> i32 {
    match e {
        Error::Io { .. } | Error::MissingPrerequisite(_) => RD_ERR_IO,
        Error::Parse { .. } => RD_ERR_PARSE,
        Error::NonManifold(..) | Error::InvalidMesh(_) | Error::DegenerateTriangle(_) => RD_ERR_INVALID_MESH,
        Error::InvalidArgument(_) | Error::LengthMismatch { .. } => RD_ERR_INVALID_ARGUMENT,
        Error::Config(_) => RD_ERR_CONFIG,
        Error::NoConvergence { .. } => RD_ERR_NO_CONVERGENCE,
        Error::LinearSolve(_) => RD_ERR_LINEAR_SOLVE,
        Error::NoRealSolution(_) => RD_ERR_NO_REAL_SOLUTION,
        Error::PreconditionsViolated(_) => RD_ERR_PRECONDITIONS,
        Error::DiffusionConstraint(_) => RD_ERR_DIFFUSION_CONSTRAINT,
        Error::ComplexParameter(_) => RD_ERR_COMPLEX_PARAMETER,
        Error::ZeroMode(_) => RD_ERR_ZERO_MODE,
        _ => RD_ERR_OTHER,
    }
}

/// Run `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (i32, String)>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RD_OK,
        Ok(Err((code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic".into());
            RD_ERR_PANIC
        }
    }
}

fn core(e: Error) -> (i32, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (i32, String) {
    (RD_ERR_NULL_POINTER, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (i32, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (RD_ERR_INVALID_UTF8, format!("{what} is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (i32, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, (i32, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn rd_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Load an OFF or OBJ mesh.
///
/// # Safety
/// `path` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rd_mesh_load(path: *const c_char, out: *mut *mut RdMesh) -> i32 {
    guard(|| {
        let path = std::path::Path::new(str_arg(path, "path")?);
        let out = out_arg(out, "out")?;
        let fmt = MeshFormat::from_path(path)
            .ok_or((RD_ERR_INVALID_ARGUMENT, "unknown mesh file extension".to_string()))?;
        let mesh = load_mesh(path, fmt).map_err(core)?;
        *out = Box::into_raw(Box::new(RdMesh { mesh }));
        Ok(())
    })
}

/// Planar `w x h` rectangle on an `nx x ny` grid.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rd_mesh_rectangle(w: f64, h: f64, nx: usize, ny: usize, out: *mut *mut RdMesh) -> i32 {
    guard(|| {
        let out = out_arg(out, "out")?;
        let mesh = generate_rectangle(w, h, nx, ny).map_err(core)?;
        *out = Box::into_raw(Box::new(RdMesh { mesh }));
        Ok(())
    })
}

/// # Safety
/// `mesh` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rd_mesh_free(mesh: *mut RdMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// # Safety
/// `mesh` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rd_mesh_vertex_count(mesh: *const RdMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.mesh.n_vertices())
}

/// # Safety
/// `mesh` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rd_mesh_triangle_count(mesh: *const RdMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.mesh.n_triangles())
}

/// Model by name (`murray` or `brusselator`) with default parameters.
///
/// # Safety
/// `name` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rd_model_new(name: *const c_char, out: *mut *mut RdModel) -> i32 {
    guard(|| {
        let name = str_arg(name, "name")?;
        let out = out_arg(out, "out")?;
        let model = model_from_name(name, &[]).map_err(core)?;
        *out = Box::into_raw(Box::new(RdModel { model }));
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle and `name` a valid C string.
#[no_mangle]
pub unsafe extern "C" fn rd_model_set_parameter(model: *mut RdModel, name: *const c_char, value: f64) -> i32 {
    guard(|| {
        let name = str_arg(name, "name")?;
        let m = out_arg(model, "model")?;
        m.model.set_parameter(name, value).map_err(core)
    })
}

/// # Safety
/// `model` must be a live handle, `name` a valid C string and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn rd_model_get_parameter(model: *const RdModel, name: *const c_char, out: *mut f64) -> i32 {
    guard(|| {
        let name = str_arg(name, "name")?;
        let m = ref_arg(model, "model")?;
        let out = out_arg(out, "out")?;
        *out = m
            .model
            .parameter(name)
            .ok_or((RD_ERR_CONFIG, format!("no parameter `{name}`")))?;
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rd_model_free(model: *mut RdModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Continuation parameter value at which the eigenvalue `lambda` becomes
/// marginally stable.
///
/// # Safety
/// `model` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn rd_bifurcation_parameter(model: *const RdModel, lambda: f64, out: *mut f64) -> i32 {
    guard(|| {
        let m = ref_arg(model, "model")?;
        let out = out_arg(out, "out")?;
        *out = solve_continuation_param(m.model.as_ref(), lambda, ModeRule::NonExclusive).map_err(core)?;
        Ok(())
    })
}

/// The `k` lowest eigenpairs on `mesh` with boundary condition `bc`
/// (`RD_BC_*`).
///
/// # Safety
/// `mesh` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn rd_eigen_solve(
    mesh: *const RdMesh,
    bc: i32,
    k: usize,
    seed: u64,
    out: *mut *mut RdBasis,
) -> i32 {
    guard(|| {
        let m = ref_arg(mesh, "mesh")?;
        let out = out_arg(out, "out")?;
        let bc = match bc {
            RD_BC_DIRICHLET => BoundaryCondition::DirichletZero,
            RD_BC_NEUMANN => BoundaryCondition::NeumannZero,
            RD_BC_CLOSED => BoundaryCondition::Closed,
            _ => return Err((RD_ERR_INVALID_ARGUMENT, format!("unknown boundary condition {bc}"))),
        };
        let space = FemSpace::new(m.mesh.clone(), bc).map_err(core)?;
        let opts = EigenOptions {
            seed,
            ..EigenOptions::default()
        };
        let basis = solve_space(&space, k, &opts).map_err(core)?;
        *out = Box::into_raw(Box::new(RdBasis { basis }));
        Ok(())
    })
}

/// # Safety
/// `basis` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rd_basis_len(basis: *const RdBasis) -> usize {
    basis.as_ref().map_or(0, |b| b.basis.len())
}

/// # Safety
/// `basis` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn rd_basis_eigenvalue(basis: *const RdBasis, index: usize, out: *mut f64) -> i32 {
    guard(|| {
        let b = ref_arg(basis, "basis")?;
        let out = out_arg(out, "out")?;
        *out = b
            .basis
            .pairs
            .get(index)
            .ok_or((RD_ERR_OUT_OF_RANGE, format!("index {index} out of range")))?
            .lambda;
        Ok(())
    })
}

/// Bifurcation point of the single mode `index`.
///
/// # Safety
/// `basis` and `model` must be live handles and `out_alpha` valid.
#[no_mangle]
pub unsafe extern "C" fn rd_compose_simple(
    basis: *const RdBasis,
    index: usize,
    model: *const RdModel,
    out_alpha: *mut f64,
) -> i32 {
    guard(|| {
        let b = ref_arg(basis, "basis")?;
        let m = ref_arg(model, "model")?;
        let out = out_arg(out_alpha, "out_alpha")?;
        if index >= b.basis.len() {
            return Err((RD_ERR_OUT_OF_RANGE, format!("index {index} out of range")));
        }
        *out = compose_simple(&b.basis, index, m.model.as_ref()).map_err(core)?.0.alpha;
        Ok(())
    })
}

/// # Safety
/// `basis` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rd_basis_free(basis: *mut RdBasis) {
    if !basis.is_null() {
        drop(Box::from_raw(basis));
    }
}

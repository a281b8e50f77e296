use std::path::PathBuf;

/// Every failure the library can report.
///
/// Each variant maps to a stable machine-readable code (see [`Error::code`]),
/// which the CLI and the C ABI surface unchanged.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("non-manifold edge ({0}, {1}) is shared by more than two triangles")]
    NonManifold(usize, usize),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("degenerate triangle {0}")]
    DegenerateTriangle(usize),
    #[error("decimation stopped at {reached} triangles, target was {target}")]
    CannotReachTarget { reached: usize, target: usize },
    #[error("target vertex {vertex} lies {distance:.3e} from the source surface (limit {limit:.3e})")]
    ProjectionTooFar {
        vertex: usize,
        distance: f64,
        limit: f64,
    },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("boundary condition mismatch: {0}")]
    BoundaryCondition(String),
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("linear solve failed: {0}")]
    LinearSolve(String),
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("state is not homogeneous (reaction residual {0:.3e})")]
    NotHomogeneous(f64),
    #[error("no real solution: {0}")]
    NoRealSolution(String),
    #[error("linear stability preconditions violated: {0}")]
    PreconditionsViolated(String),
    #[error("mixed-mode diffusion constraint uDu*vDv > uDv*vDu violated ({0:.6e} <= 0)")]
    DiffusionConstraint(f64),
    #[error("mixed-mode continuation parameter is complex (discriminant {0:.6e})")]
    ComplexParameter(f64),
    #[error("mixed-mode roots miss the requested eigenvalues by {0:.3e} (relative)")]
    MixedRootMismatch(f64),
    #[error("mode {0} is the constant (zero-eigenvalue) mode")]
    ZeroMode(usize),
    #[error("eigenvalue spread {spread:.3e} in group exceeds tolerance {tol:.3e}")]
    GroupSpread { spread: f64, tol: f64 },
    #[error("both spectral constraint rows are degenerate at lambda = {0}")]
    DegenerateConstraint(f64),
    #[error("branch switching failed after {attempts} attempts")]
    SwitchFailed { attempts: usize },
    #[error("continuation step failed at minimum step size {0:.3e}")]
    StepFailed(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("missing prerequisite: {0}")]
    MissingPrerequisite(String),
}

impl Error {
    /// Stable, machine-readable identifier for the error kind.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::NonManifold(..) => "non_manifold",
            Error::InvalidMesh(_) => "invalid_mesh",
            Error::DegenerateTriangle(_) => "degenerate_triangle",
            Error::CannotReachTarget { .. } => "cannot_reach_target",
            Error::ProjectionTooFar { .. } => "projection_too_far",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::BoundaryCondition(_) => "boundary_condition",
            Error::NoConvergence { .. } => "no_convergence",
            Error::LinearSolve(_) => "linear_solve",
            Error::NonFinite(_) => "non_finite",
            Error::NotHomogeneous(_) => "not_homogeneous",
            Error::NoRealSolution(_) => "no_real_solution",
            Error::PreconditionsViolated(_) => "preconditions_violated",
            Error::DiffusionConstraint(_) => "diffusion_constraint",
            Error::ComplexParameter(_) => "complex_parameter",
            Error::MixedRootMismatch(_) => "mixed_root_mismatch",
            Error::ZeroMode(_) => "zero_mode",
            Error::GroupSpread { .. } => "group_spread",
            Error::DegenerateConstraint(_) => "degenerate_constraint",
            Error::SwitchFailed { .. } => "switch_failed",
            Error::StepFailed(_) => "step_failed",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Config(_) => "config",
            Error::MissingPrerequisite(_) => "missing_prerequisite",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

//! First-order finite elements on surface meshes: the function space,
//! sparse operators, and assembly of mass, stiffness, and the nonlinear
//! steady-state residual and Jacobian of a reaction-diffusion model.

mod assemble;
mod space;
mod sparse;

pub use assemble::{
    assemble_jacobian, assemble_lumped_mass, assemble_mass, assemble_parameter_derivative,
    assemble_residual, assemble_stiffness, block_operator, homogeneous_vector, residual_rms, rms,
};

pub use space::{BoundaryCondition, FemSpace};
pub use sparse::SparseOperator;

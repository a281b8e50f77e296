pub mod bifurcate;
pub mod cli;
pub mod config;
pub mod continuation;
pub mod error;
pub mod fem;
pub mod linalg;
pub mod mesh;
pub mod models;
pub mod multires;
pub mod simulate;
pub mod spectral;
pub mod vtk;

pub use error::{Error, Result};

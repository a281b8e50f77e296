//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use rdsurf::fem::{BoundaryCondition, FemSpace};
use rdsurf::mesh::generate_rectangle;
use rdsurf::models::{BoundaryKind, Diffusion, HomogeneousState, Murray, RdModel};
use rdsurf::spectral::{solve_space, EigenBasis, EigenOptions};
use rdsurf::Result;

pub const PI: f64 = std::f64::consts::PI;

pub fn rectangle(nx: usize, ny: usize) -> FemSpace {
    FemSpace::new(generate_rectangle(1.0, 4.0, nx, ny).unwrap(), BoundaryCondition::NeumannZero).unwrap()
}

/// The 1 x 4 rectangle at about 4400 dofs with its lowest `k` eigenpairs.
pub fn paper_rectangle(k: usize) -> (FemSpace, EigenBasis) {
    let space = rectangle(32, 132);
    let basis = solve_space(&space, k, &EigenOptions::default()).unwrap();
    (space, basis)
}

pub fn murray() -> Murray {
    Murray::default()
}

/// Index of the basis eigenvalue closest to `lambda`.
pub fn nearest_mode(basis: &EigenBasis, lambda: f64) -> usize {
    (0..basis.len())
        .min_by(|&i, &j| {
            (basis.pairs[i].lambda - lambda)
                .abs()
                .total_cmp(&(basis.pairs[j].lambda - lambda).abs())
        })
        .unwrap()
}

pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let aa: f64 = a.iter().map(|x| x * x).sum();
    let bb: f64 = b.iter().map(|x| x * x).sum();
    ab / (aa * bb).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Analytic Neumann eigenvalues of the `w x h` rectangle, ascending,
/// including the zero mode.
pub fn rectangle_eigenvalues(w: f64, h: f64, count: usize) -> Vec<f64> {
    let mut v = Vec::new();
    for p in 0..40 {
        for q in 0..40 {
            v.push((p as f64 * PI / w).powi(2) + (q as f64 * PI / h).powi(2));
        }
    }
    v.sort_by(f64::total_cmp);
    v.truncate(count);
    v
}

/// Two-component model with linear reactions `K (x − x0)`, constant
/// diffusion and chemotaxis strength `alpha`. The homogeneous state is
/// `x0` for every alpha.
#[derive(Debug, Clone)]
pub struct LinearModel {
    pub k: [f64; 4],
    pub d: [f64; 4],
    pub x0: (f64, f64),
    pub alpha: f64,
}

impl LinearModel {
    pub fn pure_diffusion(d_a: f64, d_b: f64) -> Self {
        LinearModel {
            k: [0.0; 4],
            d: [d_a, 0.0, 0.0, d_b],
            x0: (1.0, 0.5),
            alpha: 0.0,
        }
    }
}

impl RdModel for LinearModel {
    fn name(&self) -> &'static str {
        "linear"
    }

    fn parameter_names(&self) -> &'static [&'static str] {
        &["alpha"]
    }

    fn parameter(&self, name: &str) -> Option<f64> {
        (name == "alpha").then_some(self.alpha)
    }

    fn set_parameter(&mut self, name: &str, value: f64) -> Result<()> {
        if name != "alpha" {
            return Err(rdsurf::Error::Config(format!("no parameter {name}")));
        }
        self.alpha = value;
        Ok(())
    }

    fn continuation_parameter(&self) -> &'static str {
        "alpha"
    }

    fn boundary(&self) -> BoundaryKind {
        BoundaryKind::Flux
    }

    fn reaction(&self, a: f64, b: f64, _alpha: f64) -> (f64, f64) {
        let (da, db) = (a - self.x0.0, b - self.x0.1);
        (self.k[0] * da + self.k[1] * db, self.k[2] * da + self.k[3] * db)
    }

    fn reaction_jacobian(&self, _a: f64, _b: f64, _alpha: f64) -> [f64; 4] {
        self.k
    }

    fn diffusion(&self, alpha: f64) -> Diffusion {
        Diffusion {
            d_a: self.d[0],
            d_ab: self.d[1],
            d_ba: self.d[2],
            d_b: self.d[3],
            chemotaxis: alpha,
        }
    }

    fn homogeneous_states(&self, _alpha: f64) -> Vec<HomogeneousState> {
        vec![HomogeneousState {
            a: self.x0.0,
            b: self.x0.1,
            primary: true,
        }]
    }

    fn clone_box(&self) -> Box<dyn RdModel> {
        Box::new(self.clone())
    }
}

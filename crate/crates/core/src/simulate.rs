//! Time integration of the full nonlinear system, used to check that
//! composed patterns grow past onset and that branch states are steady.
//!
//! Each step solves the second component first and then the first, both
//! with implicit self-diffusion. Everything else (reactions, cross-diffusion,
//! chemotaxis with the previous first component) is explicit, evaluated on
//! the most recent fields. Solving in this order keeps the anti-diffusive
//! chemotaxis coupling stable for large steps.

use crate::error::{Error, Result};
use crate::fem::{
    assemble_lumped_mass, assemble_mass, assemble_residual, assemble_stiffness, homogeneous_vector, rms, FemSpace,
    SparseOperator,
};
use crate::linalg::{norm2, SparseCholesky};
use crate::models::RdModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MassTreatment {
    Consistent,
    Lumped,
}

#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_max: f64,
    /// Steady when `rms(x' − x) / dt` drops to this value.
    pub steady_tol: f64,
    pub mass: MassTreatment,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt: 0.05,
            t_max: 1000.0,
            steady_tol: 1e-8,
            mass: MassTreatment::Consistent,
        }
    }
}

impl IntegratorConfig {
    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.t_max > 0.0 && self.steady_tol > 0.0) {
            return Err(Error::InvalidArgument(
                "dt, t_max and steady_tol must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Factorised operators for a fixed space, model, parameter and step.
pub struct Integrator<'a> {
    space: &'a FemSpace,
    model: &'a dyn RdModel,
    alpha: f64,
    dt: f64,
    mass: Mass,
    stiffness: SparseOperator,
    d_a: f64,
    d_b: f64,
    solve_a: SparseCholesky,
    solve_b: SparseCholesky,
}

enum Mass {
    Consistent(SparseOperator),
    Lumped(Vec<f64>),
}

impl Mass {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Mass::Consistent(m) => m.mul_vec(x),
            Mass::Lumped(d) => x.iter().zip(d).map(|(a, b)| a * b).collect(),
        }
    }

    fn plus_scaled(&self, l: &SparseOperator, s: f64) -> SparseOperator {
        match self {
            Mass::Consistent(m) => m.add_scaled(1.0, l, s),
            Mass::Lumped(d) => {
                let n = d.len();
                let diag = SparseOperator::from_triplets(
                    n,
                    n,
                    &d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect::<Vec<_>>(),
                )
                .expect("diagonal is well formed");
                l.add_scaled(s, &diag, 1.0)
            }
        }
    }
}

impl<'a> Integrator<'a> {
    pub fn new(
        space: &'a FemSpace,
        model: &'a dyn RdModel,
        alpha: f64,
        dt: f64,
        mass: MassTreatment,
    ) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument("dt must be positive".into()));
        }
        let stiffness = assemble_stiffness(space);
        let mass = match mass {
            MassTreatment::Consistent => Mass::Consistent(assemble_mass(space)),
            MassTreatment::Lumped => Mass::Lumped(assemble_lumped_mass(space)),
        };
        let dif = model.diffusion(alpha);
        let (d_a, d_b) = (dif.d_a.max(0.0), dif.d_b.max(0.0));
        let solve_a = SparseCholesky::new(&mass.plus_scaled(&stiffness, dt * d_a))?;
        let solve_b = SparseCholesky::new(&mass.plus_scaled(&stiffness, dt * d_b))?;
        Ok(Integrator {
            space,
            model,
            alpha,
            dt,
            mass,
            stiffness,
            d_a,
            d_b,
            solve_a,
            solve_b,
        })
    }

    /// One step from `x`.
    pub fn step(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.space.n_dof();
        let mut y = x.to_vec();
        // `r + d L c` removes the implicit part from the full residual.
        let r = assemble_residual(self.space, self.model, &y, self.alpha)?;
        let (_, b) = y.split_at(n);
        let mb = self.mass.apply(b);
        let lb = self.stiffness.mul_vec(b);
        let mut rhs: Vec<f64> = (0..n)
            .map(|i| mb[i] + self.dt * (r[n + i] + self.d_b * lb[i]))
            .collect();
        self.solve_b.solve_in_place(&mut rhs)?;
        y[n..].copy_from_slice(&rhs);

        let r = assemble_residual(self.space, self.model, &y, self.alpha)?;
        let a = &y[..n];
        let ma = self.mass.apply(a);
        let la = self.stiffness.mul_vec(a);
        let mut rhs: Vec<f64> = (0..n)
            .map(|i| ma[i] + self.dt * (r[i] + self.d_a * la[i]))
            .collect();
        self.solve_a.solve_in_place(&mut rhs)?;
        y[..n].copy_from_slice(&rhs);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("time step"));
        }
        Ok(y)
    }
}

/// A single step of the integrator, factorising from scratch.
pub fn imex_step(
    space: &FemSpace,
    model: &dyn RdModel,
    x: &[f64],
    alpha: f64,
    dt: f64,
    mass: MassTreatment,
) -> Result<Vec<f64>> {
    Integrator::new(space, model, alpha, dt, mass)?.step(x)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Steady { x: Vec<f64>, t: f64, steps: usize },
    /// The state norm exceeded `10⁶` times the homogeneous norm.
    Diverged { t: f64, steps: usize },
    Timeout { x: Vec<f64>, t: f64, steps: usize },
}

impl Outcome {
    pub fn code(&self) -> &'static str {
        match self {
            Outcome::Steady { .. } => "steady",
            Outcome::Diverged { .. } => "diverged",
            Outcome::Timeout { .. } => "timeout",
        }
    }

    pub fn steps(&self) -> usize {
        match self {
            Outcome::Steady { steps, .. } | Outcome::Diverged { steps, .. } | Outcome::Timeout { steps, .. } => {
                *steps
            }
        }
    }
}

/// Step until the state stops changing, diverges, or `t_max` is reached.
pub fn integrate_to_steady(
    space: &FemSpace,
    model: &dyn RdModel,
    x0: &[f64],
    alpha: f64,
    config: &IntegratorConfig,
) -> Result<Outcome> {
    config.validate()?;
    if x0.len() != 2 * space.n_dof() {
        return Err(Error::LengthMismatch {
            expected: 2 * space.n_dof(),
            got: x0.len(),
        });
    }
    let integ = Integrator::new(space, model, alpha, config.dt, config.mass)?;
    let limit = 1e6 * norm2(&homogeneous_vector(space, model, alpha)?).max(1.0);
    let mut x = x0.to_vec();
    let mut t = 0.0;
    let mut steps = 0;
    while t < config.t_max {
        let y = match integ.step(&x) {
            Ok(y) => y,
            Err(Error::NonFinite(_)) => return Ok(Outcome::Diverged { t, steps }),
            Err(e) => return Err(e),
        };
        steps += 1;
        t += config.dt;
        if norm2(&y) > limit {
            return Ok(Outcome::Diverged { t, steps });
        }
        let d: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
        x = y;
        if rms(&d) / config.dt <= config.steady_tol {
            return Ok(Outcome::Steady { x, t, steps });
        }
    }
    Ok(Outcome::Timeout { x, t, steps })
}

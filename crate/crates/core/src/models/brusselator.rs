use super::{unknown_parameter, BoundaryKind, Diffusion, HomogeneousState, RdModel};
use crate::error::{Error, Result};

/// Brusselator with a domain growth factor γ:
/// `a_t = D1 ∇²a + γ (A − (D + B) a + C a² b)`, `b_t = D2 ∇²b + γ (B a − C a² b)`,
/// with boundary values fixed at the homogeneous state `(A/D, BD/(AC))`.
/// The continuation parameter is `Astar`.
#[derive(Debug, Clone, PartialEq)]
pub struct Brusselator {
    pub d1: f64,
    pub d2: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub a: f64,
    pub gamma: f64,
}

impl Default for Brusselator {
    fn default() -> Self {
        Brusselator {
            d1: 0.005,
            d2: 0.1,
            b: 1.5,
            c: 1.8,
            d: 0.375,
            a: 0.75,
            gamma: 1.0,
        }
    }
}

const NAMES: &[&str] = &["D1", "D2", "Bstar", "Cstar", "Dstar", "Astar", "gamma"];

impl RdModel for Brusselator {
    fn name(&self) -> &'static str {
        "brusselator"
    }

    fn parameter_names(&self) -> &'static [&'static str] {
        NAMES
    }

    fn parameter(&self, name: &str) -> Option<f64> {
        match name {
            "D1" => Some(self.d1),
            "D2" => Some(self.d2),
            "Bstar" => Some(self.b),
            "Cstar" => Some(self.c),
            "Dstar" => Some(self.d),
            "Astar" => Some(self.a),
            "gamma" => Some(self.gamma),
            _ => None,
        }
    }

    fn set_parameter(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::Config(format!(
                "parameter {name} must be positive and finite"
            )));
        }
        let slot = match name {
            "D1" => &mut self.d1,
            "D2" => &mut self.d2,
            "Bstar" => &mut self.b,
            "Cstar" => &mut self.c,
            "Dstar" => &mut self.d,
            "Astar" => &mut self.a,
            "gamma" => &mut self.gamma,
            _ => return Err(unknown_parameter("brusselator", name)),
        };
        *slot = value;
        Ok(())
    }

    fn continuation_parameter(&self) -> &'static str {
        "Astar"
    }

    fn boundary(&self) -> BoundaryKind {
        BoundaryKind::Dirichlet
    }

    fn reaction(&self, a: f64, b: f64, astar: f64) -> (f64, f64) {
        let g = self.gamma;
        let a2b = self.c * a * a * b;
        (
            g * (astar - (self.d + self.b) * a + a2b),
            g * (self.b * a - a2b),
        )
    }

    fn reaction_jacobian(&self, a: f64, b: f64, _astar: f64) -> [f64; 4] {
        let g = self.gamma;
        let cab = 2.0 * self.c * a * b;
        let ca2 = self.c * a * a;
        [
            g * (cab - self.d - self.b),
            g * ca2,
            g * (self.b - cab),
            -g * ca2,
        ]
    }

    fn diffusion(&self, _astar: f64) -> Diffusion {
        Diffusion {
            d_a: self.d1,
            d_b: self.d2,
            chemotaxis: 0.0,
            ..Diffusion::default()
        }
    }

    fn homogeneous_states(&self, astar: f64) -> Vec<HomogeneousState> {
        if astar == 0.0 {
            return Vec::new();
        }
        vec![HomogeneousState {
            a: astar / self.d,
            b: self.b * self.d / (astar * self.c),
            primary: true,
        }]
    }

    fn closed_form_parameter(&self, lambda: f64) -> Option<Result<f64>> {
        let l = lambda / self.gamma;
        let num = self.d2 * (self.b - self.d) * l - self.d1 * self.d2 * l * l;
        let den = self.c * (self.d1 * l + self.d);
        let r = num / den;
        Some(if r > 0.0 {
            Ok(self.d * r.sqrt())
        } else {
            Err(Error::NoRealSolution(format!(
                "A* squared would be {:.6e} for eigenvalue {lambda}",
                self.d * self.d * r
            )))
        })
    }

    fn clone_box(&self) -> Box<dyn RdModel> {
        Box::new(self.clone())
    }
}

use super::{unknown_parameter, BoundaryKind, Diffusion, HomogeneousState, RdModel};
use crate::error::{Error, Result};

/// Chemotaxis model with logistic growth of the first component:
/// `a_t = D ∇²a − α ∇·(a ∇b) + S C a (N − a)`, `b_t = ∇²b + S (a / (1 + a) − b)`,
/// with zero-flux boundaries. The continuation parameter is `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct Murray {
    pub d: f64,
    pub c: f64,
    pub n: f64,
    pub s: f64,
    pub alpha: f64,
}

impl Default for Murray {
    fn default() -> Self {
        Murray {
            d: 0.25,
            c: 1.522,
            n: 1.0,
            s: 1.0,
            alpha: 10.0,
        }
    }
}

const NAMES: &[&str] = &["D", "C", "N", "S", "alpha"];

impl RdModel for Murray {
    fn name(&self) -> &'static str {
        "murray"
    }

    fn parameter_names(&self) -> &'static [&'static str] {
        NAMES
    }

    fn parameter(&self, name: &str) -> Option<f64> {
        match name {
            "D" => Some(self.d),
            "C" => Some(self.c),
            "N" => Some(self.n),
            "S" => Some(self.s),
            "alpha" => Some(self.alpha),
            _ => None,
        }
    }

    fn set_parameter(&mut self, name: &str, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::Config(format!("parameter {name} must be finite")));
        }
        let slot = match name {
            "D" => &mut self.d,
            "C" => &mut self.c,
            "N" => &mut self.n,
            "S" => &mut self.s,
            "alpha" => &mut self.alpha,
            _ => return Err(unknown_parameter("murray", name)),
        };
        if name != "alpha" && !(value > 0.0) {
            return Err(Error::Config(format!("parameter {name} must be positive")));
        }
        *slot = value;
        Ok(())
    }

    fn continuation_parameter(&self) -> &'static str {
        "alpha"
    }

    fn boundary(&self) -> BoundaryKind {
        BoundaryKind::Flux
    }

    fn reaction(&self, a: f64, b: f64, _alpha: f64) -> (f64, f64) {
        (
            self.s * self.c * a * (self.n - a),
            self.s * (a / (1.0 + a) - b),
        )
    }

    fn reaction_jacobian(&self, a: f64, _b: f64, _alpha: f64) -> [f64; 4] {
        [
            self.s * self.c * (self.n - 2.0 * a),
            0.0,
            self.s / ((1.0 + a) * (1.0 + a)),
            -self.s,
        ]
    }

    fn diffusion(&self, alpha: f64) -> Diffusion {
        Diffusion {
            d_a: self.d,
            d_b: 1.0,
            chemotaxis: alpha,
            ..Diffusion::default()
        }
    }

    fn homogeneous_states(&self, _alpha: f64) -> Vec<HomogeneousState> {
        vec![
            HomogeneousState {
                a: self.n,
                b: self.n / (1.0 + self.n),
                primary: true,
            },
            HomogeneousState {
                a: 0.0,
                b: 0.0,
                primary: false,
            },
        ]
    }

    fn closed_form_parameter(&self, lambda: f64) -> Option<Result<f64>> {
        if !(lambda > 0.0) {
            return Some(Err(Error::NoRealSolution(format!(
                "eigenvalue {lambda} must be positive"
            ))));
        }
        let (d, c, n, s) = (self.d, self.c, self.n, self.s);
        Some(Ok((1.0 + n).powi(2) * (c * (1.0 + s / lambda) + (d / n) * (1.0 + lambda / s))))
    }

    fn clone_box(&self) -> Box<dyn RdModel> {
        Box::new(self.clone())
    }
}

impl Murray {
    /// Spectral coefficient ratio v/u of the emergent pattern for eigenvalue
    /// `lambda` at parameter `alpha`.
    pub fn ratio(&self, lambda: f64, alpha: f64) -> f64 {
        (self.d * lambda + self.c * self.n * self.s) / (alpha * self.n * lambda)
    }
}

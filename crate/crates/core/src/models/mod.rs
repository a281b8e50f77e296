//! Two-component reaction-diffusion models, their linearisation at a
//! homogeneous steady state, and the linear dispersion relation.

mod brusselator;
mod murray;

pub use brusselator::Brusselator;
pub use murray::Murray;

use crate::error::{Error, Result};

/// Diffusion description of a model: constant self- and cross-diffusion
/// rates, plus an optional chemotaxis strength `chi`, which adds
/// `+chi ∫ a ∇b·∇ψ` to the weak form of the first component.
///
/// The fluxes are `a: d_a ∇a + d_ab ∇b − chi a ∇b` and `b: d_ba ∇a + d_b ∇b`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diffusion {
    pub d_a: f64,
    pub d_b: f64,
    pub d_ab: f64,
    pub d_ba: f64,
    pub chemotaxis: f64,
}

/// Boundary treatment a model is formulated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// Boundary values fixed at the primary homogeneous state.
    Dirichlet,
    /// Zero flux, or no boundary at all.
    Flux,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousState {
    pub a: f64,
    pub b: f64,
    /// The state bifurcation analysis is performed around. Other states
    /// (such as an all-zero state) are reported but not analysed.
    pub primary: bool,
}

/// A two-component reaction-diffusion model with one continuation parameter.
///
/// Evaluators take the continuation parameter value explicitly; the value
/// stored among the parameters is only the starting value.
pub trait RdModel: Send + Sync + std::fmt::Debug {
    fn name(&self) -> &'static str;
    fn parameter_names(&self) -> &'static [&'static str];
    fn parameter(&self, name: &str) -> Option<f64>;
    fn set_parameter(&mut self, name: &str, value: f64) -> Result<()>;
    fn continuation_parameter(&self) -> &'static str;
    fn boundary(&self) -> BoundaryKind;

    /// Reaction terms (f, g).
    fn reaction(&self, a: f64, b: f64, alpha: f64) -> (f64, f64);
    /// Analytic partial derivatives `[f_a, f_b, g_a, g_b]`.
    fn reaction_jacobian(&self, a: f64, b: f64, alpha: f64) -> [f64; 4];
    fn diffusion(&self, alpha: f64) -> Diffusion;
    fn homogeneous_states(&self, alpha: f64) -> Vec<HomogeneousState>;

    /// Closed-form continuation parameter at which `lambda` is a root of the
    /// eigenvalue quadratic, when the model has one.
    fn closed_form_parameter(&self, _lambda: f64) -> Option<Result<f64>> {
        None
    }

    fn clone_box(&self) -> Box<dyn RdModel>;

    fn alpha(&self) -> f64 {
        self.parameter(self.continuation_parameter())
            .expect("continuation parameter is declared")
    }
}

impl Clone for Box<dyn RdModel> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

/// Build a model from its name and a list of parameter assignments;
/// unassigned parameters keep their defaults.
pub fn model_from_name(name: &str, params: &[(String, f64)]) -> Result<Box<dyn RdModel>> {
    let mut m: Box<dyn RdModel> = match name.to_ascii_lowercase().as_str() {
        "murray" => Box::new(Murray::default()),
        "brusselator" => Box::new(Brusselator::default()),
        _ => return Err(Error::Config(format!("unknown model `{name}`"))),
    };
    for (k, v) in params {
        m.set_parameter(k, *v)?;
    }
    Ok(m)
}

pub(crate) fn unknown_parameter(model: &str, name: &str) -> Error {
    Error::Config(format!("model `{model}` has no parameter `{name}`"))
}

/// The primary homogeneous state at `alpha`.
pub fn primary_state(model: &dyn RdModel, alpha: f64) -> Result<HomogeneousState> {
    model
        .homogeneous_states(alpha)
        .into_iter()
        .find(|s| s.primary)
        .ok_or_else(|| Error::NoRealSolution(format!("{} has no primary homogeneous state", model.name())))
}

/// The eight constants of the linearised system
/// `u_t = uDu ∇²u + uDv ∇²v + uKu u + uKv v`, `v_t = vDu ∇²u + vDv ∇²v + vKu u + vKv v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearCoefficients {
    pub u_du: f64,
    pub u_dv: f64,
    pub v_du: f64,
    pub v_dv: f64,
    pub u_ku: f64,
    pub u_kv: f64,
    pub v_ku: f64,
    pub v_kv: f64,
}

impl LinearCoefficients {
    /// Coefficients `(c2, c1, c0)` of `c2 λ² − c1 λ + c0 = 0`.
    pub fn quadratic(&self) -> (f64, f64, f64) {
        (
            self.u_du * self.v_dv - self.u_dv * self.v_du,
            self.u_du * self.v_kv + self.v_dv * self.u_ku - self.u_dv * self.v_ku - self.v_du * self.u_kv,
            self.u_ku * self.v_kv - self.u_kv * self.v_ku,
        )
    }

    /// Value of the eigenvalue quadratic at `lambda`; this is the
    /// determinant of the 2x2 linear operator for that eigenvalue.
    pub fn quadratic_at(&self, lambda: f64) -> f64 {
        let (c2, c1, c0) = self.quadratic();
        c2 * lambda * lambda - c1 * lambda + c0
    }

    /// The 2x2 matrix `K − λ D` acting on the spectral coefficients `(u, v)`.
    pub fn mode_matrix(&self, lambda: f64) -> [[f64; 2]; 2] {
        [
            [self.u_ku - self.u_du * lambda, self.u_kv - self.u_dv * lambda],
            [self.v_ku - self.v_du * lambda, self.v_kv - self.v_dv * lambda],
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Satisfied,
    /// `uKu + vKv >= 0`.
    ViolatedTrace,
    /// `uKu·vKv − uKv·vKu <= 0`.
    ViolatedDeterminant,
}

/// Linear stability of the homogeneous state in the absence of diffusion.
pub fn stability_preconditions(c: &LinearCoefficients) -> Stability {
    if !(c.u_ku + c.v_kv < 0.0) {
        Stability::ViolatedTrace
    } else if !(c.u_ku * c.v_kv - c.u_kv * c.v_ku > 0.0) {
        Stability::ViolatedDeterminant
    } else {
        Stability::Satisfied
    }
}

pub(crate) fn require_stable(c: &LinearCoefficients) -> Result<()> {
    match stability_preconditions(c) {
        Stability::Satisfied => Ok(()),
        Stability::ViolatedTrace => Err(Error::PreconditionsViolated(format!(
            "uKu + vKv = {:.6e} is not negative",
            c.u_ku + c.v_kv
        ))),
        Stability::ViolatedDeterminant => Err(Error::PreconditionsViolated(format!(
            "uKu vKv - uKv vKu = {:.6e} is not positive",
            c.u_ku * c.v_kv - c.u_kv * c.v_ku
        ))),
    }
}

/// Linearise `model` at the homogeneous state `(a0, b0)` using its analytic
/// reaction derivatives.
pub fn linearize(model: &dyn RdModel, state: (f64, f64), alpha: f64) -> Result<LinearCoefficients> {
    check_homogeneous(model, state, alpha)?;
    let [fa, fb, ga, gb] = model.reaction_jacobian(state.0, state.1, alpha);
    Ok(from_parts(model.diffusion(alpha), state.0, [fa, fb, ga, gb]))
}

/// Linearise using central finite differences of the reaction terms instead
/// of the analytic derivatives.
pub fn linearize_finite_difference(
    model: &dyn RdModel,
    state: (f64, f64),
    alpha: f64,
) -> Result<LinearCoefficients> {
    check_homogeneous(model, state, alpha)?;
    let (a, b) = state;
    let ha = 1e-6 * a.abs().max(1.0);
    let hb = 1e-6 * b.abs().max(1.0);
    let (fp, gp) = model.reaction(a + ha, b, alpha);
    let (fm, gm) = model.reaction(a - ha, b, alpha);
    let (fq, gq) = model.reaction(a, b + hb, alpha);
    let (fr, gr) = model.reaction(a, b - hb, alpha);
    let k = [
        (fp - fm) / (2.0 * ha),
        (fq - fr) / (2.0 * hb),
        (gp - gm) / (2.0 * ha),
        (gq - gr) / (2.0 * hb),
    ];
    Ok(from_parts(model.diffusion(alpha), a, k))
}

fn from_parts(d: Diffusion, a0: f64, k: [f64; 4]) -> LinearCoefficients {
    LinearCoefficients {
        u_du: d.d_a,
        // The flux −chi a ∇b linearises to −chi a0 ∇b.
        u_dv: d.d_ab - d.chemotaxis * a0,
        v_du: d.d_ba,
        v_dv: d.d_b,
        u_ku: k[0],
        u_kv: k[1],
        v_ku: k[2],
        v_kv: k[3],
    }
}

fn check_homogeneous(model: &dyn RdModel, state: (f64, f64), alpha: f64) -> Result<()> {
    let (f, g) = model.reaction(state.0, state.1, alpha);
    let r = f.abs().max(g.abs());
    if !(r <= 1e-8) {
        return Err(Error::NotHomogeneous(r));
    }
    Ok(())
}

/// Linear coefficients of `model` at its primary state for parameter `alpha`.
pub fn linearize_primary(model: &dyn RdModel, alpha: f64) -> Result<LinearCoefficients> {
    let s = primary_state(model, alpha)?;
    linearize(model, (s.a, s.b), alpha)
}

/// Largest real part of the eigenvalues of `K − λ D`.
pub fn growth_rate(c: &LinearCoefficients, lambda: f64) -> f64 {
    let m = c.mode_matrix(lambda);
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = 0.25 * tr * tr - det;
    if disc >= 0.0 {
        0.5 * tr + disc.sqrt()
    } else {
        0.5 * tr
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionCurve {
    pub samples: Vec<(f64, f64)>,
    /// `(index, λ, ξ)` for each supplied eigenvalue with `ξ >= −tol`.
    pub unstable: Vec<(usize, f64, f64)>,
    pub coefficients: LinearCoefficients,
}

/// Sample `ξ(λ)` on `n_samples` evenly spaced points of `range`, and report
/// which of the supplied eigenvalues are unstable (`ξ >= −unstable_tol`).
pub fn dispersion_curve(
    c: &LinearCoefficients,
    range: (f64, f64),
    n_samples: usize,
    eigenvalues: &[f64],
    unstable_tol: f64,
) -> DispersionCurve {
    let n = n_samples.max(2);
    let samples = (0..n)
        .map(|i| {
            let l = range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64;
            (l, growth_rate(c, l))
        })
        .collect();
    let unstable = eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &l)| (i, l, growth_rate(c, l)))
        .filter(|&(_, _, xi)| xi >= -unstable_tol)
        .collect();
    DispersionCurve {
        samples,
        unstable,
        coefficients: *c,
    }
}

/// How a scale value maps to the growth factor γ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleKind {
    /// γ = R².
    Radius,
    /// γ = P² / 4π² for perimeter P.
    Perimeter,
}

/// Continuation parameter at which the mode with unit-scale eigenvalue
/// `lambda_unit` is marginally stable, for each domain scale.
///
/// Models with a `gamma` parameter are evaluated with γ set and the
/// unit-scale eigenvalue; other models with the rescaled eigenvalue Λ/γ.
pub fn marginal_curve(
    model: &dyn RdModel,
    lambda_unit: f64,
    scales: &[f64],
    kind: ScaleKind,
) -> Result<Vec<(f64, Result<f64>)>> {
    if !(lambda_unit > 0.0) {
        return Err(Error::InvalidArgument("unit-scale eigenvalue must be positive".into()));
    }
    let has_gamma = model.parameter_names().contains(&"gamma");
    Ok(scales
        .iter()
        .map(|&s| {
            let gamma = match kind {
                ScaleKind::Radius => s * s,
                ScaleKind::Perimeter => s * s / (4.0 * std::f64::consts::PI * std::f64::consts::PI),
            };
            let value = if has_gamma {
                let mut m = model.clone_box();
                m.set_parameter("gamma", gamma).and_then(|_| {
                    crate::bifurcate::solve_continuation_param(
                        m.as_ref(),
                        lambda_unit,
                        crate::bifurcate::ModeRule::NonExclusive,
                    )
                })
            } else {
                crate::bifurcate::solve_continuation_param(
                    model,
                    lambda_unit / gamma,
                    crate::bifurcate::ModeRule::NonExclusive,
                )
            };
            (s, value)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coeffs(u_ku: f64, u_kv: f64, v_ku: f64, v_kv: f64) -> LinearCoefficients {
        LinearCoefficients {
            u_du: 1.0,
            u_dv: 0.0,
            v_du: 0.0,
            v_dv: 1.0,
            u_ku,
            u_kv,
            v_ku,
            v_kv,
        }
    }

    #[test]
    fn preconditions() {
        assert_eq!(
            stability_preconditions(&coeffs(-1.522, 0.0, 0.25, -1.0)),
            Stability::Satisfied
        );
        assert_eq!(
            stability_preconditions(&coeffs(1.0, 0.0, 0.0, 1.0)),
            Stability::ViolatedTrace
        );
        assert_eq!(
            stability_preconditions(&coeffs(-1.0, 2.0, 1.0, -1.0)),
            Stability::ViolatedDeterminant
        );
    }

    #[test]
    fn growth_rate_limits() {
        let c = coeffs(-1.522, 0.0, 0.25, -1.0);
        assert!(growth_rate(&c, 0.0) < 0.0);
        let big = 1e6;
        let xi = growth_rate(&c, big);
        assert!((xi / big + 1.0).abs() < 1e-5);
    }

    #[test]
    fn unknown_model_and_parameter() {
        assert!(matches!(model_from_name("gray-scott", &[]), Err(Error::Config(_))));
        assert!(matches!(
            model_from_name("murray", &[("Astar".into(), 1.0)]),
            Err(Error::Config(_))
        ));
    }
}

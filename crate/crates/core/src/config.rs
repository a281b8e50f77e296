//! Run configuration: one TOML file with a section per pipeline stage.
//!
//! ```toml
//! [mesh]
//! kind = "rectangle"
//! width = 1.0
//! height = 4.0
//! nx = 32
//! ny = 132
//! boundary = "neumann"
//!
//! [model]
//! name = "murray"
//! [model.parameters]
//! D = 0.25
//! ```
//!
//! Every other section is optional and falls back to defaults.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bifurcate::MixedOptions;
use crate::continuation::{ArclengthOptions, NewtonOptions, SwitchOptions, TraceOptions};
use crate::error::{Error, Result};
use crate::fem::BoundaryCondition;
use crate::mesh::{generate_icosphere, generate_rectangle, generate_spherical_cap, load_mesh, MeshFormat, SurfaceMesh};
use crate::models::{model_from_name, RdModel, ScaleKind};
use crate::multires::UpsampleOptions;
use crate::simulate::{IntegratorConfig, MassTreatment};
use crate::spectral::EigenOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: MeshConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub eigen: EigenConfig,
    #[serde(default)]
    pub compose: ComposeConfig,
    #[serde(default)]
    pub continuation: ContinuationConfig,
    #[serde(default)]
    pub hierarchy: HierarchyConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub marginal: MarginalConfig,
    #[serde(default)]
    pub dispersion: DispersionConfig,
}

/// Mesh source. `kind` is one of `file`, `rectangle`, `cap`, `icosphere`;
/// only the fields that kind uses may be set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nx: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rings: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    /// `neumann`, `dirichlet` or `closed`.
    pub boundary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenConfig {
    pub k: usize,
    pub tol: f64,
    pub group_tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for EigenConfig {
    fn default() -> Self {
        let d = EigenOptions::default();
        EigenConfig {
            k: 24,
            tol: d.tol,
            group_tol: d.group_tol,
            max_iters: d.max_iters,
            seed: d.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupRequest {
    pub modes: Vec<usize>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixedRequest {
    pub m: GroupRequest,
    pub n: GroupRequest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComposeConfig {
    /// Compose every multiplicity group of the basis.
    pub auto: bool,
    pub simple: Vec<usize>,
    pub multiple: Vec<GroupRequest>,
    pub mixed: Vec<MixedRequest>,
    pub spread_tol: f64,
    pub root_tol: f64,
}

impl Default for ComposeConfig {
    fn default() -> Self {
        let d = MixedOptions::default();
        ComposeConfig {
            auto: true,
            simple: Vec::new(),
            multiple: Vec::new(),
            mixed: Vec::new(),
            spread_tol: d.spread_tol,
            root_tol: d.root_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationConfig {
    /// Inventory rows to trace.
    pub origins: Vec<usize>,
    pub eps0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    pub max_steps: usize,
    pub tangent_scale: f64,
    pub ds_max: f64,
    pub tol: f64,
    /// Write a VTK snapshot every this many steps; 0 disables.
    pub snapshot_every: usize,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        let t = TraceOptions::default();
        ContinuationConfig {
            origins: vec![0],
            eps0: t.switch.eps0,
            window: None,
            max_steps: t.max_steps,
            tangent_scale: t.arclength.tangent_scale,
            ds_max: t.arclength.ds_max,
            tol: t.arclength.tol,
            snapshot_every: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HierarchyConfig {
    /// Levels above the coarsest; 0 means no hierarchy.
    pub levels: usize,
    /// `decimate` (the input mesh is the finest level) or `subdivide` (the
    /// input mesh is the coarsest).
    pub method: String,
    pub ratio: f64,
    /// Upsample every this many branch states.
    pub every: usize,
    pub tol: f64,
}

impl Default for HierarchyConfig {
    fn default() -> Self {
        HierarchyConfig {
            levels: 0,
            method: "decimate".into(),
            ratio: 4.0,
            every: 1,
            tol: NewtonOptions::default().tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub dt: f64,
    pub t_max: f64,
    pub steady_tol: f64,
    /// `consistent` or `lumped`.
    pub mass: String,
    /// Branch states checked per branch.
    pub states: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        let d = IntegratorConfig::default();
        VerifyConfig {
            dt: d.dt,
            t_max: d.t_max,
            steady_tol: d.steady_tol,
            mass: "consistent".into(),
            states: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarginalConfig {
    /// Basis index whose eigenvalue is the unit-scale eigenvalue.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<usize>,
    /// Unit-scale eigenvalue given directly.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// `perimeter` or `radius`.
    pub scale: String,
    pub from: f64,
    pub to: f64,
    pub count: usize,
}

impl Default for MarginalConfig {
    fn default() -> Self {
        let p = 2.0 * std::f64::consts::PI;
        MarginalConfig {
            mode: None,
            lambda: None,
            scale: "perimeter".into(),
            from: 0.9 * p,
            to: 1.2 * p,
            count: 31,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispersionConfig {
    /// Defaults to the model's own continuation parameter value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Defaults to the largest computed eigenvalue, or 50.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_max: Option<f64>,
    pub samples: usize,
    pub unstable_tol: f64,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        DispersionConfig {
            alpha: None,
            lambda_max: None,
            samples: 201,
            unstable_tol: 1e-12,
        }
    }
}

fn cfg(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    /// Parse and validate.
    pub fn parse(text: &str) -> Result<Self> {
        let c: RunConfig = toml::from_str(text).map_err(|e| cfg(e.to_string().trim().to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("every field is representable")
    }

    pub fn validate(&self) -> Result<()> {
        self.model()?;
        self.boundary()?;
        self.check_mesh_fields()?;

        let e = &self.eigen;
        if e.k < 2 {
            return Err(cfg("eigen.k must be at least 2"));
        }
        if !(e.tol > 0.0 && e.group_tol >= 0.0) || e.max_iters == 0 {
            return Err(cfg("eigen tolerances must be positive"));
        }

        let c = &self.compose;
        let check_mode = |k: usize, what: &str| {
            if k >= e.k {
                Err(cfg(format!("{what} references mode {k}, but only {} are computed", e.k)))
            } else {
                Ok(())
            }
        };
        let check_group = |g: &GroupRequest, what: &str| -> Result<()> {
            if g.modes.is_empty() || g.modes.len() != g.weights.len() {
                return Err(cfg(format!("{what} needs one weight per mode")));
            }
            g.modes.iter().try_for_each(|&k| check_mode(k, what))
        };
        c.simple.iter().try_for_each(|&k| check_mode(k, "compose.simple"))?;
        c.multiple.iter().try_for_each(|g| check_group(g, "compose.multiple"))?;
        for m in &c.mixed {
            check_group(&m.m, "compose.mixed")?;
            check_group(&m.n, "compose.mixed")?;
        }
        if !(c.spread_tol >= 0.0 && c.root_tol > 0.0) {
            return Err(cfg("compose tolerances must be positive"));
        }
        if !c.auto && c.simple.is_empty() && c.multiple.is_empty() && c.mixed.is_empty() {
            return Err(cfg("compose requests nothing: set auto or list requests"));
        }

        let t = &self.continuation;
        if !(t.eps0 > 0.0 && t.tangent_scale > 0.0 && t.ds_max > 0.0 && t.tol > 0.0) {
            return Err(cfg("continuation eps0, tangent_scale, ds_max and tol must be positive"));
        }
        if let Some([lo, hi]) = t.window {
            if !(lo < hi) {
                return Err(cfg("continuation.window must be ordered"));
            }
        }

        let h = &self.hierarchy;
        if !matches!(h.method.as_str(), "decimate" | "subdivide") {
            return Err(cfg(format!("unknown hierarchy method `{}`", h.method)));
        }
        if !(h.ratio > 1.0) || h.every == 0 || !(h.tol > 0.0) {
            return Err(cfg("hierarchy ratio must exceed 1, every must be positive"));
        }

        self.integrator_config()?;
        self.scale_kind()?;
        let m = &self.marginal;
        if let Some(k) = m.mode {
            check_mode(k, "marginal.mode")?;
        }
        if !(m.from > 0.0 && m.to >= m.from) || m.count == 0 {
            return Err(cfg("marginal scales must be positive and ordered"));
        }
        if self.dispersion.samples < 2 {
            return Err(cfg("dispersion.samples must be at least 2"));
        }
        Ok(())
    }

    fn check_mesh_fields(&self) -> Result<()> {
        let m = &self.mesh;
        let allowed: &[&str] = match m.kind.as_str() {
            "file" => &["path"],
            "rectangle" => &["width", "height", "nx", "ny"],
            "cap" => &["radius", "zeta", "rings"],
            "icosphere" => &["radius", "level"],
            other => return Err(cfg(format!("unknown mesh kind `{other}`"))),
        };
        let set = [
            ("path", m.path.is_some()),
            ("width", m.width.is_some()),
            ("height", m.height.is_some()),
            ("nx", m.nx.is_some()),
            ("ny", m.ny.is_some()),
            ("radius", m.radius.is_some()),
            ("zeta", m.zeta.is_some()),
            ("rings", m.rings.is_some()),
            ("level", m.level.is_some()),
        ];
        for (name, present) in set {
            if present && !allowed.contains(&name) {
                return Err(cfg(format!("mesh kind `{}` does not take `{name}`", m.kind)));
            }
            // Icosphere radius is optional; everything else is required.
            if !present && allowed.contains(&name) && !(m.kind == "icosphere" && name == "radius") {
                return Err(cfg(format!("mesh kind `{}` needs `{name}`", m.kind)));
            }
        }
        Ok(())
    }

    pub fn model(&self) -> Result<Box<dyn RdModel>> {
        let params: Vec<(String, f64)> = self.model.parameters.iter().map(|(k, v)| (k.clone(), *v)).collect();
        model_from_name(&self.model.name, &params)
    }

    pub fn boundary(&self) -> Result<BoundaryCondition> {
        BoundaryCondition::parse(&self.mesh.boundary)
    }

    /// The input mesh, resolving relative file paths against `base`.
    pub fn build_mesh(&self, base: &Path) -> Result<SurfaceMesh> {
        let m = &self.mesh;
        let need = |o: Option<f64>| o.expect("validated");
        let needu = |o: Option<usize>| o.expect("validated");
        match m.kind.as_str() {
            "file" => {
                let p = base.join(m.path.as_deref().expect("validated"));
                let fmt = MeshFormat::from_path(&p)
                    .ok_or_else(|| cfg(format!("cannot tell the format of {}", p.display())))?;
                load_mesh(&p, fmt)
            }
            "rectangle" => generate_rectangle(need(m.width), need(m.height), needu(m.nx), needu(m.ny)),
            "cap" => generate_spherical_cap(need(m.radius), need(m.zeta), needu(m.rings)),
            "icosphere" => {
                let s = generate_icosphere(needu(m.level))?;
                match m.radius {
                    Some(r) => s.scaled(r),
                    None => Ok(s),
                }
            }
            _ => unreachable!("validated"),
        }
    }

    pub fn eigen_options(&self, seed: Option<u64>) -> EigenOptions {
        EigenOptions {
            tol: self.eigen.tol,
            max_iters: self.eigen.max_iters,
            seed: seed.unwrap_or(self.eigen.seed),
            group_tol: self.eigen.group_tol,
        }
    }

    pub fn mixed_options(&self) -> MixedOptions {
        MixedOptions {
            spread_tol: self.compose.spread_tol,
            root_tol: self.compose.root_tol,
            ..MixedOptions::default()
        }
    }

    pub fn trace_options(&self) -> TraceOptions {
        let t = &self.continuation;
        let d = TraceOptions::default();
        TraceOptions {
            switch: SwitchOptions {
                eps0: t.eps0,
                tangent_scale: t.tangent_scale,
                newton: NewtonOptions {
                    tol: t.tol,
                    ..d.switch.newton
                },
                ..d.switch
            },
            arclength: ArclengthOptions {
                tangent_scale: t.tangent_scale,
                ds_max: t.ds_max,
                tol: t.tol,
                ..d.arclength
            },
            window: t.window.map(|[a, b]| (a, b)).unwrap_or(d.window),
            max_steps: t.max_steps,
        }
    }

    pub fn upsample_options(&self) -> UpsampleOptions {
        let d = UpsampleOptions::default();
        UpsampleOptions {
            newton: NewtonOptions {
                tol: self.hierarchy.tol,
                ..d.newton
            },
            trust_region: crate::multires::TrustRegionOptions {
                tol: self.hierarchy.tol,
                ..d.trust_region
            },
        }
    }

    pub fn integrator_config(&self) -> Result<IntegratorConfig> {
        let v = &self.verify;
        let mass = match v.mass.as_str() {
            "consistent" => MassTreatment::Consistent,
            "lumped" => MassTreatment::Lumped,
            other => return Err(cfg(format!("unknown mass treatment `{other}`"))),
        };
        if !(v.dt > 0.0 && v.t_max > 0.0 && v.steady_tol > 0.0) {
            return Err(cfg("verify dt, t_max and steady_tol must be positive"));
        }
        Ok(IntegratorConfig {
            dt: v.dt,
            t_max: v.t_max,
            steady_tol: v.steady_tol,
            mass,
        })
    }

    pub fn scale_kind(&self) -> Result<ScaleKind> {
        match self.marginal.scale.as_str() {
            "perimeter" => Ok(ScaleKind::Perimeter),
            "radius" => Ok(ScaleKind::Radius),
            other => Err(cfg(format!("unknown scale kind `{other}`"))),
        }
    }
}

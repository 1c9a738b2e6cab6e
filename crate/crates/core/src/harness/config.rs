//! Scenario configuration (TOML). Unknown keys are rejected everywhere.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::barriers::BoundaryData;
use crate::conditions::PrescribedH;
use crate::domain::{DomainSpec, Orientation, TrigSeries};
use crate::error::{Error, Result};
use crate::geometry::{ManifoldModel, ModelKind};
use crate::solver::SolverConfig;
use crate::TrigCurve;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub manifold: ManifoldSection,
    pub domain: DomainSection,
    pub curvature: CurvatureSection,
    #[serde(default)]
    pub boundary: BoundarySection,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub checks: ChecksSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ManifoldSection {
    pub model: ModelKind,
    pub dim: usize,
}

impl Default for ManifoldSection {
    fn default() -> Self {
        Self { model: ModelKind::Euclidean, dim: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainSection {
    Disk {
        #[serde(default)]
        center: [f64; 2],
        radius: f64,
    },
    /// Geodesic disk of radius `r` about the origin (hyperbolic model only).
    HyperbolicGeodesicDisk { r: f64 },
    Ellipse { a: f64, b: f64 },
    Curve {
        x: TrigSeries,
        y: TrigSeries,
        #[serde(default)]
        orientation: Orientation,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureSection {
    /// Expression in `x1`, `x2`, `z`.
    pub h: String,
    /// Height range over which bounds of `H` are taken.
    #[serde(default = "default_window")]
    pub z_window: [f64; 2],
}

fn default_window() -> [f64; 2] {
    [-1.0, 1.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundarySection {
    /// Boundary data expression in `x1`, `x2`.
    pub phi: String,
}

impl Default for BoundarySection {
    fn default() -> Self {
        Self { phi: "0".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksSection {
    /// Boundary samples for the curvature conditions and the parallel flow.
    pub boundary_samples: usize,
    /// Boundary samples × depth samples for barrier residuals.
    pub collar_samples: [usize; 2],
    /// Spacing of the distance-field validation grid, in units of the domain scale.
    pub distance_resolution: f64,
    /// Integration step of the parallel-curvature flow.
    pub parallel_step: f64,
    /// Parallel-curvature trajectories written to the report.
    pub parallel_trajectories: usize,
}

impl Default for ChecksSection {
    fn default() -> Self {
        Self {
            boundary_samples: 256,
            collar_samples: [128, 16],
            distance_resolution: 1.0 / 64.0,
            parallel_step: 1e-3,
            parallel_trajectories: 4,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

/// Objects built from a validated configuration.
pub struct Problem {
    pub domain: DomainSpec,
    pub h: PrescribedH,
    pub phi: BoundaryData,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::Config("name must not be empty".into()));
        }
        if self.manifold.dim != 2 {
            return Err(Error::Config(format!(
                "manifold.dim = {}: domains and the solver require dimension 2",
                self.manifold.dim
            )));
        }
        let [z0, z1] = self.curvature.z_window;
        if !(z0.is_finite() && z1.is_finite() && z0 <= z1) {
            return Err(Error::Config(format!("curvature.z_window [{z0}, {z1}] is not an interval")));
        }
        let c = &self.checks;
        if c.boundary_samples < 16 || c.collar_samples[0] < 4 || c.collar_samples[1] < 2 {
            return Err(Error::Config("checks sample counts too small".into()));
        }
        if !(c.distance_resolution > 0.0 && c.parallel_step > 0.0) {
            return Err(Error::Config("checks resolutions must be positive".into()));
        }
        self.solver.validate()
    }

    pub fn model(&self) -> ManifoldModel {
        match self.manifold.model {
            ModelKind::Euclidean => ManifoldModel::euclidean(self.manifold.dim),
            ModelKind::Hyperbolic => ManifoldModel::hyperbolic(self.manifold.dim),
        }
    }

    pub fn build_domain(&self) -> Result<DomainSpec> {
        let model = self.model();
        match &self.domain {
            DomainSection::Disk { center, radius } => DomainSpec::disk(model, *center, *radius),
            DomainSection::HyperbolicGeodesicDisk { r } => {
                if !model.is_hyperbolic() {
                    return Err(Error::Config("hyperbolic-geodesic-disk needs manifold.model = \"hyperbolic\"".into()));
                }
                DomainSpec::hyperbolic_geodesic_disk(*r)
            }
            DomainSection::Ellipse { a, b } => DomainSpec::ellipse(model, *a, *b),
            DomainSection::Curve { x, y, orientation } => DomainSpec::new(
                model,
                TrigCurve { x: x.clone(), y: y.clone() },
                *orientation,
            ),
        }
    }

    /// Domain, `H` and `φ`. Errors: parse errors, invalid domain, and
    /// `NonMonotone` when `∂_z H < 0` somewhere on the sampled set.
    pub fn build(&self) -> Result<Problem> {
        let domain = self.build_domain()?;
        let h = PrescribedH::parse(&self.curvature.h, self.curvature.z_window, &domain)?;
        let phi = BoundaryData::parse(&self.boundary.phi, &domain)?;
        Ok(Problem { domain, h, phi })
    }
}

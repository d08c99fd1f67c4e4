//! Scenario configuration: a single TOML file selecting the model, field,
//! run kind, and numeric parameters. Semantics are fixed here; the schema
//! is documented in the repository README and mirrored by the files under
//! `scenarios/`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use conic::geometry::{catalog, SpacetimeModel};
use conic::vlasov::{
    geodesic_field, indicator_coordinate, indicator_hyperboloid, indicator_labtime, lorentz_field,
    KinematicIndicator, VlasovField,
};

#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error at `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub model: ModelConfig,
    #[serde(default)]
    pub field: FieldConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub numeric: NumericConfig,
    #[serde(default)]
    pub density: DensityConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ModelConfig {
    /// minkowski2 | minkowski4 | schwarzschild | minkowski-uniform-e |
    /// minkowski-nonmetric | minkowski2-nonlinear-labtime
    pub catalog: String,
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default = "tenth")]
    pub e0: f64,
    #[serde(default = "one")]
    pub charge_to_mass: f64,
    #[serde(default = "eps_default")]
    pub epsilon: f64,
    #[serde(default = "fifth")]
    pub amplitude: f64,
    /// Optional lab time registered on the model: "coordinate" | "tilted".
    #[serde(default)]
    pub labtime: Option<String>,
    #[serde(default = "tenth")]
    pub labtime_slope: f64,
}

fn one() -> f64 {
    1.0
}
fn tenth() -> f64 {
    0.1
}
fn fifth() -> f64 {
    0.2
}
fn eps_default() -> f64 {
    0.05
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FieldConfig {
    /// geodesic | lorentz
    pub kind: String,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            kind: "geodesic".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    /// trajectories | leaf | transform-check | drift | null-labtime |
    /// density-advect | moments | dependence-report | invariant-suite
    pub kind: String,
    /// invariant-suite selector: homogeneity | bivector | spray | hygiene
    #[serde(default)]
    pub suite: Option<String>,
    /// indicator for drift runs: hyperboloid | labtime | coordinate
    #[serde(default)]
    pub indicator: Option<String>,
    /// indicators for transform-check and dependence-report runs
    #[serde(default)]
    pub indicators: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct NumericConfig {
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_span")]
    pub span: [f64; 2],
    #[serde(default = "default_nodes")]
    pub quadrature_nodes: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Multiplies every check threshold (CLI --tol).
    #[serde(default = "one")]
    pub tol_scale: f64,
    #[serde(default = "default_traj")]
    pub trajectory_count: usize,
    #[serde(default = "default_samples")]
    pub sample_count: usize,
}

fn default_steps() -> usize {
    1000
}
fn default_span() -> [f64; 2] {
    [0.0, 1.0]
}
fn default_nodes() -> usize {
    32
}
fn default_seed() -> u64 {
    42
}
fn default_traj() -> usize {
    4
}
fn default_samples() -> usize {
    100
}

impl Default for NumericConfig {
    fn default() -> Self {
        NumericConfig {
            steps: default_steps(),
            span: default_span(),
            quadrature_nodes: default_nodes(),
            seed: default_seed(),
            tol_scale: 1.0,
            trajectory_count: default_traj(),
            sample_count: default_samples(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct DensityConfig {
    #[serde(default = "default_center")]
    pub center: Vec<f64>,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_count")]
    pub count: usize,
}

fn default_center() -> Vec<f64> {
    vec![0.0, 0.0, 0.0]
}
fn default_sigma() -> f64 {
    0.05
}
fn default_count() -> usize {
    2000
}

impl Default for DensityConfig {
    fn default() -> Self {
        DensityConfig {
            center: default_center(),
            sigma: default_sigma(),
            count: default_count(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct OutputConfig {
    /// Output directory; falls back to `$CONIC_OUT/<scenario-name>` then
    /// `./conic-out/<scenario-name>`.
    #[serde(default)]
    pub dir: Option<String>,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| err("<toml>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        const CATALOG: &[&str] = &[
            "minkowski2",
            "minkowski4",
            "schwarzschild",
            "minkowski-uniform-e",
            "minkowski-nonmetric",
            "minkowski2-nonlinear-labtime",
        ];
        if !CATALOG.contains(&self.model.catalog.as_str()) {
            return Err(err(
                "model.catalog",
                format!("unknown model '{}'; known: {CATALOG:?}", self.model.catalog),
            ));
        }
        if !["geodesic", "lorentz"].contains(&self.field.kind.as_str()) {
            return Err(err(
                "field.kind",
                format!("unknown field '{}'", self.field.kind),
            ));
        }
        const RUNS: &[&str] = &[
            "trajectories",
            "leaf",
            "transform-check",
            "drift",
            "null-labtime",
            "density-advect",
            "moments",
            "dependence-report",
            "invariant-suite",
        ];
        if !RUNS.contains(&self.run.kind.as_str()) {
            return Err(err(
                "run.kind",
                format!("unknown run kind '{}'; known: {RUNS:?}", self.run.kind),
            ));
        }
        if self.run.kind == "invariant-suite" {
            let suite = self.run.suite.as_deref().unwrap_or("");
            if !["homogeneity", "bivector", "spray", "hygiene"].contains(&suite) {
                return Err(err("run.suite", format!("unknown suite '{suite}'")));
            }
        }
        for ind in self.run.indicators.iter().chain(self.run.indicator.iter()) {
            if !["hyperboloid", "labtime", "coordinate"].contains(&ind.as_str()) {
                return Err(err("run.indicator", format!("unknown indicator '{ind}'")));
            }
        }
        let has_labtime =
            self.model.labtime.is_some() || self.model.catalog == "minkowski2-nonlinear-labtime";
        if self
            .run
            .indicators
            .iter()
            .chain(self.run.indicator.iter())
            .any(|i| i == "labtime")
            && !has_labtime
        {
            return Err(err(
                "model.labtime",
                "the labtime indicator needs a lab time registered on the model",
            ));
        }
        let two_dimensional = self.model.catalog.starts_with("minkowski2");
        if self.run.kind == "null-labtime" && !(two_dimensional && has_labtime) {
            return Err(err(
                "run.kind",
                "null-labtime runs on a 2D model with a lab time",
            ));
        }
        if ["density-advect", "moments", "dependence-report"].contains(&self.run.kind.as_str())
            && two_dimensional
        {
            return Err(err(
                "run.kind",
                format!("{} needs a 4-dimensional model", self.run.kind),
            ));
        }
        if self.run.kind == "dependence-report" && !has_labtime {
            return Err(err(
                "model.labtime",
                "dependence-report compares the lab-time domain; register a lab time",
            ));
        }
        if self.numeric.span[1] <= self.numeric.span[0] {
            return Err(err("numeric.span", "span must be increasing"));
        }
        if self.numeric.steps == 0 {
            return Err(err("numeric.steps", "steps must be positive"));
        }
        if self.numeric.tol_scale <= 0.0 {
            return Err(err("numeric.tol-scale", "tolerance scale must be positive"));
        }
        if self.density.sigma <= 0.0 {
            return Err(err("density.sigma", "sigma must be positive"));
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<Arc<SpacetimeModel>, ConfigError> {
        let mc = &self.model;
        let mut model = match mc.catalog.as_str() {
            "minkowski2" => catalog::minkowski(2),
            "minkowski4" => catalog::minkowski(4),
            "schwarzschild" => catalog::schwarzschild(mc.mass),
            "minkowski-uniform-e" => catalog::minkowski_uniform_field(mc.e0, mc.charge_to_mass),
            "minkowski-nonmetric" => catalog::minkowski_perturbed_connection(mc.epsilon),
            "minkowski2-nonlinear-labtime" => catalog::minkowski2_nonlinear_labtime(mc.amplitude),
            other => return Err(err("model.catalog", format!("unknown model '{other}'"))),
        };
        if let Some(kind) = &mc.labtime {
            let labtime = match kind.as_str() {
                "coordinate" => catalog::coordinate_labtime(model.dim),
                "tilted" => catalog::tilted_labtime(model.dim, mc.labtime_slope),
                other => return Err(err("model.labtime", format!("unknown lab time '{other}'"))),
            };
            model = model.with_labtime(labtime);
        }
        Ok(Arc::new(model))
    }

    pub fn build_field(&self, model: &Arc<SpacetimeModel>) -> Result<VlasovField, ConfigError> {
        match self.field.kind.as_str() {
            "geodesic" => Ok(geodesic_field(model)),
            "lorentz" => Ok(lorentz_field(model)),
            other => Err(err("field.kind", format!("unknown field '{other}'"))),
        }
    }

    pub fn build_indicator(
        &self,
        model: &Arc<SpacetimeModel>,
        name: &str,
    ) -> Result<KinematicIndicator, ConfigError> {
        match name {
            "hyperboloid" => Ok(indicator_hyperboloid(model)),
            "labtime" => indicator_labtime(model)
                .map_err(|e| err("run.indicator", format!("labtime indicator: {e}"))),
            "coordinate" => Ok(indicator_coordinate(model)),
            other => Err(err("run.indicator", format!("unknown indicator '{other}'"))),
        }
    }
}

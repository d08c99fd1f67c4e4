//! Bundled named scenarios. Each acceptance-level check is runnable here by
//! name via `conic check <name>`; `conic list-scenarios` prints the catalog.

use crate::config::{
    DensityConfig, FieldConfig, ModelConfig, NumericConfig, OutputConfig, RunConfig, ScenarioConfig,
};

fn base_model(catalog: &str) -> ModelConfig {
    ModelConfig {
        catalog: catalog.into(),
        mass: 1.0,
        e0: 0.1,
        charge_to_mass: 1.0,
        epsilon: 0.05,
        amplitude: 0.2,
        labtime: None,
        labtime_slope: 0.1,
    }
}

fn scenario(
    name: &str,
    description: &str,
    model: ModelConfig,
    field: &str,
    run: RunConfig,
) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        description: description.into(),
        model,
        field: FieldConfig { kind: field.into() },
        run,
        numeric: NumericConfig::default(),
        density: DensityConfig::default(),
        output: OutputConfig::default(),
    }
}

fn run_kind(kind: &str) -> RunConfig {
    RunConfig {
        kind: kind.into(),
        suite: None,
        indicator: None,
        indicators: Vec::new(),
    }
}

pub fn catalog() -> Vec<ScenarioConfig> {
    let mut out = Vec::new();

    out.push(scenario(
        "minkowski-lorentz-massshell",
        "Charged particle in a uniform field: the mass shell is conserved along the flow",
        base_model("minkowski-uniform-e"),
        "lorentz",
        RunConfig {
            indicator: Some("hyperboloid".into()),
            ..run_kind("drift")
        },
    ));

    out.push(scenario(
        "nonmetric-slip",
        "Non-metric connection: mass-shell drift rate matches the nonmetricity contraction",
        base_model("minkowski-nonmetric"),
        "geodesic",
        RunConfig {
            indicator: Some("hyperboloid".into()),
            ..run_kind("drift")
        },
    ));

    let mut transform_model = base_model("minkowski-uniform-e");
    transform_model.labtime = Some("coordinate".into());
    out.push(scenario(
        "domain-transform",
        "Transformed fields are compatible with their targets and keep the base trajectories",
        transform_model.clone(),
        "lorentz",
        RunConfig {
            indicators: vec!["hyperboloid".into(), "labtime".into(), "coordinate".into()],
            ..run_kind("transform-check")
        },
    ));

    out.push(scenario(
        "null-labtime",
        "Null lines against coordinate versus nonlinear lab-time parameterisation",
        base_model("minkowski2-nonlinear-labtime"),
        "geodesic",
        {
            let mut r = run_kind("null-labtime");
            r.indicator = None;
            r
        },
    ));

    out.push(scenario(
        "homogeneity-suite",
        "Radial quadraticity and bracket defects across the model catalog",
        base_model("minkowski4"),
        "geodesic",
        RunConfig {
            suite: Some("homogeneity".into()),
            ..run_kind("invariant-suite")
        },
    ));

    out.push(scenario(
        "bivector-equivalence",
        "Bivector equality under radial shifts and the extraction round trip",
        base_model("minkowski-uniform-e"),
        "lorentz",
        RunConfig {
            suite: Some("bivector".into()),
            ..run_kind("invariant-suite")
        },
    ));

    out.push(scenario(
        "spray-roundtrip",
        "Quadratic extension of a lab-time semi-spray restricts back to its coefficients",
        base_model("minkowski4"),
        "geodesic",
        RunConfig {
            suite: Some("spray".into()),
            ..run_kind("invariant-suite")
        },
    ));

    out.push(scenario(
        "numeric-hygiene",
        "Integrator and finite-difference convergence orders",
        base_model("minkowski4"),
        "geodesic",
        RunConfig {
            suite: Some("hygiene".into()),
            ..run_kind("invariant-suite")
        },
    ));

    let mut dust = scenario(
        "cold-beam-dust",
        "Cold rest beam: the stress-energy tensor approaches the dust form",
        base_model("minkowski4"),
        "geodesic",
        run_kind("moments"),
    );
    dust.density = DensityConfig {
        center: vec![0.0, 0.0, 0.0],
        sigma: 0.01,
        count: 2000,
    };
    out.push(dust);

    out.push(scenario(
        "current-moments",
        "Current from the domain and from the bundle, support-form independence, continuity",
        base_model("minkowski4"),
        "geodesic",
        run_kind("moments"),
    ));

    let mut dep_model = base_model("minkowski4");
    dep_model.labtime = Some("coordinate".into());
    let mut dep = scenario(
        "stress-energy-dependence",
        "Stress-energy varies across domain and support choices while the current does not",
        dep_model,
        "geodesic",
        run_kind("dependence-report"),
    );
    dep.density = DensityConfig {
        center: vec![0.3, 0.0, 0.0],
        sigma: 0.15,
        count: 2000,
    };
    out.push(dep);

    let mut transport = scenario(
        "transport-density",
        "Advected on-shell ensembles stay on shell with exact weight conservation",
        base_model("minkowski-uniform-e"),
        "lorentz",
        run_kind("density-advect"),
    );
    transport.numeric.steps = 250;
    transport.density.count = 1500;
    out.push(transport);

    out.push(scenario(
        "free-trajectories",
        "Prolongations of free particles in flat spacetime (artifact demo)",
        base_model("minkowski4"),
        "geodesic",
        run_kind("trajectories"),
    ));

    let mut leaf = scenario(
        "leaf-sweep",
        "A leaf of the bivector foliation swept over fiber scalings",
        base_model("minkowski-uniform-e"),
        "lorentz",
        run_kind("leaf"),
    );
    leaf.numeric.steps = 400;
    out.push(leaf);

    out
}

pub fn by_name(name: &str) -> Option<ScenarioConfig> {
    catalog().into_iter().find(|s| s.name == name)
}

//! Scenario execution: dispatches a validated config to the library, writes
//! per-run CSV artifacts plus a JSON summary, and reports pass/fail checks.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::Context;
use nalgebra::DVector;

use conic::bivector::{bivector_from_field, bivectors_equal, field_from_bivector};
use conic::density::{
    advect, project_to_domain, seed_from_analytic, AnalyticDensity, ParticleEnsemble, SpacetimeBox,
};
use conic::geometry::{catalog, FdStep, SpacetimeModel};
use conic::observables::{
    continuity_residual, current_from_e, current_from_u, current_grid_from_ensemble,
    stress_energy_at, stress_energy_dependence_report, GridSpec, MomentGrid, QuadratureSpec,
    SupportForm,
};
use conic::phase_space::{sample_bundle, PhaseBox, PhasePoint};
use conic::spray::{quadratic_extension, restrict_to_slice, SemiSpray};
use conic::trajectories::{
    base_pointset_distance, endpoint_error, indicator_drift, integrate, integrate_leaf,
    leaf_tangency_defect, null_labtime_defect, Prolongation,
};
use conic::vlasov::{
    bracket_defect, compatibility_defect, geodesic_field, indicator_hyperboloid,
    indicator_hyperboloid_sqrt, lorentz_field, radial_quadraticity_defect, transform_to_domain,
};

use crate::artifacts::{
    csv_table, csv_table_tagged, write_atomic, write_summary, CheckResult, RunSummary,
};
use crate::config::ScenarioConfig;

pub struct RunOutcome {
    pub checks: Vec<CheckResult>,
    pub artifacts: Vec<PathBuf>,
    pub summary_path: PathBuf,
}

impl RunOutcome {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

struct RunCtx {
    cfg: ScenarioConfig,
    model: Arc<SpacetimeModel>,
    dir: PathBuf,
    checks: Vec<CheckResult>,
    artifacts: Vec<PathBuf>,
}

impl RunCtx {
    fn tol(&self, base: f64) -> f64 {
        base * self.cfg.numeric.tol_scale
    }

    fn write_csv(&mut self, name: &str, contents: String) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, &contents)?;
        self.artifacts.push(path);
        Ok(())
    }

    fn trajectory_csv(&self, prol: &Prolongation) -> String {
        let n = self.model.dim;
        let mut header: Vec<String> = vec!["t".into()];
        header.extend((0..n).map(|i| format!("x{i}")));
        header.extend((0..n).map(|i| format!("v{i}")));
        header.push("F_H".into());
        let has_labtime = self.model.labtime.is_some();
        if has_labtime {
            header.push("F_labtime".into());
        }
        let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
        let mut rows = Vec::with_capacity(prol.len());
        for (t, u) in prol.params.iter().zip(&prol.points) {
            let mut row = vec![*t];
            row.extend(u.x.iter().copied());
            row.extend(u.v.iter().copied());
            let gvv = self.model.metric_square(&u.x, &u.v).unwrap_or(f64::NAN);
            row.push(-gvv);
            if has_labtime {
                let lt = self.model.labtime.as_ref().unwrap();
                row.push((lt.gradient)(&u.x).dot(&u.v));
            }
            rows.push(row);
        }
        csv_table(&header_refs, &rows)
    }

    fn ensemble_csv(&self, ens: &ParticleEnsemble) -> String {
        let n = self.model.dim;
        let mut header: Vec<String> = vec!["weight".into()];
        header.extend((0..n).map(|i| format!("x{i}")));
        header.extend((0..n).map(|i| format!("v{i}")));
        header.push("tag".into());
        let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
        let tag = ens.domain_tag.label();
        let rows: Vec<(Vec<String>, Vec<f64>)> = ens
            .samples
            .iter()
            .zip(&ens.weights)
            .map(|(u, w)| {
                let mut vals = vec![*w];
                vals.extend(u.x.iter().copied());
                vals.extend(u.v.iter().copied());
                (Vec::new(), vals)
            })
            .collect();
        // tag as a trailing string column
        let mut out = String::new();
        out.push_str(&header_refs.join(","));
        out.push('\n');
        for (_, vals) in &rows {
            let cells: Vec<String> = vals.iter().map(|v| format!("{v}")).collect();
            out.push_str(&cells.join(","));
            out.push(',');
            out.push_str(&tag);
            out.push('\n');
        }
        out
    }
}

/// Execute a validated scenario config, writing artifacts under the output
/// directory.
pub fn run(cfg: ScenarioConfig, out_root: &Path) -> anyhow::Result<RunOutcome> {
    let model = cfg.build_model().map_err(anyhow::Error::new)?;
    let dir = out_root.join(&cfg.name);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut ctx = RunCtx {
        cfg,
        model,
        dir,
        checks: Vec::new(),
        artifacts: Vec::new(),
    };

    match ctx.cfg.run.kind.clone().as_str() {
        "trajectories" => run_trajectories(&mut ctx)?,
        "leaf" => run_leaf(&mut ctx)?,
        "transform-check" => run_transform_check(&mut ctx)?,
        "drift" => run_drift(&mut ctx)?,
        "null-labtime" => run_null_labtime(&mut ctx)?,
        "density-advect" => run_density_advect(&mut ctx)?,
        "moments" => run_moments(&mut ctx)?,
        "dependence-report" => run_dependence(&mut ctx)?,
        "invariant-suite" => run_invariant_suite(&mut ctx)?,
        other => anyhow::bail!("unhandled run kind {other}"),
    }

    let summary = RunSummary {
        scenario: ctx.cfg.name.clone(),
        description: ctx.cfg.description.clone(),
        timestamp_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        model: ctx.model.name.clone(),
        seed: ctx.cfg.numeric.seed,
        tol_scale: ctx.cfg.numeric.tol_scale,
        checks: ctx.checks.clone(),
        artifacts: ctx
            .artifacts
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect(),
        all_passed: ctx.checks.iter().all(|c| c.pass),
    };
    let summary_path = write_summary(&ctx.dir, &summary)?;
    Ok(RunOutcome {
        checks: ctx.checks,
        artifacts: ctx.artifacts,
        summary_path,
    })
}

fn seeded_initial_conditions(ctx: &RunCtx, count: usize) -> Vec<PhasePoint> {
    sample_bundle(
        &ctx.model,
        &PhaseBox::default_for(&ctx.model),
        count,
        ctx.cfg.numeric.seed,
        true,
    )
}

fn run_trajectories(ctx: &mut RunCtx) -> anyhow::Result<()> {
    let field = ctx
        .cfg
        .build_field(&ctx.model)
        .map_err(anyhow::Error::new)?;
    let ics = seeded_initial_conditions(ctx, ctx.cfg.numeric.trajectory_count);
    let span = (ctx.cfg.numeric.span[0], ctx.cfg.numeric.span[1]);
    let mut worst_consistency: f64 = 0.0;
    let mut any_truncated = false;
    for (i, u0) in ics.iter().enumerate() {
        let prol = integrate(&field, u0, span, ctx.cfg.numeric.steps)?;
        worst_consistency = worst_consistency.max(prol.consistency_defect());
        any_truncated |= prol.truncated;
        let csv = ctx.trajectory_csv(&prol);
        ctx.write_csv(&format!("trajectory_{i:03}.csv"), csv)?;
    }
    let dt = (span.1 - span.0) / ctx.cfg.numeric.steps as f64;
    ctx.checks.push(CheckResult::below(
        "prolongation consistency",
        worst_consistency,
        ctx.tol(10.0 * dt * dt),
    ));
    ctx.checks
        .push(CheckResult::flag("no chart truncation", !any_truncated));
    Ok(())
}

fn run_leaf(ctx: &mut RunCtx) -> anyhow::Result<()> {
    let field = ctx
        .cfg
        .build_field(&ctx.model)
        .map_err(anyhow::Error::new)?;
    let psi = bivector_from_field(&field);
    let u0 = seeded_initial_conditions(ctx, 1).remove(0);
    let span = (ctx.cfg.numeric.span[0], ctx.cfg.numeric.span[1]);
    let lambdas: Vec<f64> = (0..11).map(|j| 0.5 + 0.1 * j as f64).collect();
    let leaf = integrate_leaf(&psi, &u0, span, ctx.cfg.numeric.steps, &lambdas)?;
    let tangency = leaf_tangency_defect(&psi, &leaf)?;

    let n = ctx.model.dim;
    let mut header: Vec<String> = vec!["t".into(), "lambda".into()];
    header.extend((0..n).map(|i| format!("x{i}")));
    header.extend((0..n).map(|i| format!("v{i}")));
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut rows = Vec::new();
    for (i, t) in leaf.t_values.iter().enumerate() {
        for (j, lam) in leaf.lambda_values.iter().enumerate() {
            let u = &leaf.points[i][j];
            let mut row = vec![*t, *lam];
            row.extend(u.x.iter().copied());
            row.extend(u.v.iter().copied());
            rows.push(row);
        }
    }
    ctx.write_csv("leaf.csv", csv_table(&header_refs, &rows))?;
    ctx.checks.push(CheckResult::below(
        "leaf tangency (sv ratio)",
        tangency,
        ctx.tol(1e-5),
    ));
    Ok(())
}

fn run_transform_check(ctx: &mut RunCtx) -> anyhow::Result<()> {
    let field = ctx
        .cfg
        .build_field(&ctx.model)
        .map_err(anyhow::Error::new)?;
    let names: Vec<String> = if ctx.cfg.run.indicators.is_empty() {
        vec!["hyperboloid".into(), "labtime".into(), "coordinate".into()]
    } else {
        ctx.cfg.run.indicators.clone()
    };
    let samples = seeded_initial_conditions(ctx, ctx.cfg.numeric.sample_count);
    let ics = seeded_initial_conditions(ctx, ctx.cfg.numeric.trajectory_count);
    let span = (ctx.cfg.numeric.span[0], ctx.cfg.numeric.span[1]);

    let mut rows: Vec<(Vec<String>, Vec<f64>)> = Vec::new();
    for name in &names {
        let f = ctx
            .cfg
            .build_indicator(&ctx.model, name)
            .map_err(anyhow::Error::new)?;
        let what = transform_to_domain(&field, &f);
        let defect = compatibility_defect(&what, &f, &samples)?.max_defect;
        let mut worst_distance: f64 = 0.0;
        for u0 in &ics {
            let a = integrate(&field, u0, span, ctx.cfg.numeric.steps)?;
            let b = integrate(&what, u0, span, ctx.cfg.numeric.steps)?;
            worst_distance = worst_distance.max(base_pointset_distance(&a, &b, 400));
        }
        ctx.checks.push(CheckResult::below(
            format!("compatibility defect [{name}]"),
            defect,
            ctx.tol(1e-9),
        ));
        ctx.checks.push(CheckResult::below(
            format!("trajectory point-set distance [{name}]"),
            worst_distance,
            ctx.tol(1e-6),
        ));
        rows.push((vec![name.clone()], vec![defect, worst_distance]));

        if name == "labtime" {
            // explicit coefficient cross-check against the adapted formula
            let mut worst: f64 = 0.0;
            for u in &samples {
                let phi = field.phi(u)?;
                let expected = &phi - &u.v * (phi[0] / u.v[0]);
                worst = worst.max((what.phi(u)? - expected).amax());
            }
            ctx.checks.push(CheckResult::below(
                "lab-time coefficient formula",
                worst,
                ctx.tol(1e-10),
            ));
        }
    }
    ctx.write_csv(
        "transform_check.csv",
        csv_table_tagged(
            &["indicator", "compatibility_defect", "pointset_distance"],
            &rows,
        ),
    )?;
    Ok(())
}

fn run_drift(ctx: &mut RunCtx) -> anyhow::Result<()> {
    let field = ctx
        .cfg
        .build_field(&ctx.model)
        .map_err(anyhow::Error::new)?;
    let name = ctx
        .cfg
        .run
        .indicator
        .clone()
        .unwrap_or_else(|| "hyperboloid".into());
    let f = ctx
        .cfg
        .build_indicator(&ctx.model, &name)
        .map_err(anyhow::Error::new)?;
    // start on the unit level set of the indicator
    let raw = seeded_initial_conditions(ctx, 1).remove(0);
    let ens = ParticleEnsemble::new(vec![raw], vec![1.0]);
    let u0 = project_to_domain(&ens, &f, 1.0)
        .map(|e| e.samples[0].clone())
        .unwrap_or_else(|_| ens.samples[0].clone());
    let span = (ctx.cfg.numeric.span[0], ctx.cfg.numeric.span[1]);
    let prol = integrate(&field, &u0, span, ctx.cfg.numeric.steps)?;
    let drift = indicator_drift(&prol, &f)?;

    let nonmetric = matches!(
        ctx.model.connection,
        conic::geometry::Connection::Explicit(_)
    );
    let mut rows = Vec::with_capacity(prol.len());
    let mut worst_oracle: f64 = 0.0;
    for i in 0..prol.len() {
        let u = &prol.points[i];
        let oracle = if nonmetric {
            -ctx.model.nonmetricity_cubed(&u.x, &u.v)?
        } else {
            0.0
        };
        if nonmetric && i > 0 && i + 1 < prol.len() {
            worst_oracle = worst_oracle.max((drift.rate[i] - oracle).abs());
        }
        rows.push(vec![
            drift.params[i],
            drift.values[i],
            drift.rate[i],
            oracle,
        ]);
    }
    ctx.write_csv(
        "drift.csv",
        csv_table(&["t", "F", "rate", "rate_oracle"], &rows),
    )?;

    if nonmetric {
        ctx.checks.push(CheckResult::below(
            "drift rate vs nonmetricity contraction",
            worst_oracle,
            ctx.tol(1e-5),
        ));
        ctx.checks.push(CheckResult::above(
            "nonmetric drift is nonzero",
            drift.max_deviation_from(drift.values[0]),
            1e-3,
        ));
    } else {
        ctx.checks.push(CheckResult::below(
            "indicator conservation |F - F0|",
            drift.max_deviation_from(drift.values[0]),
            ctx.tol(1e-8),
        ));
    }
    Ok(())
}

fn run_null_labtime(ctx: &mut RunCtx) -> anyhow::Result<()> {
    if ctx.model.dim != 2 {
        anyhow::bail!("null-labtime runs on the 2D catalog models");
    }
    let u0 = PhasePoint::new(vec![0.0, 0.0], vec![1.0, 1.0]);
    let span = (ctx.cfg.numeric.span[0], ctx.cfg.numeric.span[1]);
    let report = null_labtime_defect(&ctx.model, &u0, span, ctx.cfg.numeric.steps)?;

    let amp = ctx.cfg.model.amplitude;
    let nonlinear = ctx.cfg.model.catalog == "minkowski2-nonlinear-labtime";
    let mut rows = Vec::new();
    let mut worst_oracle: f64 = 0.0;
    for (i, u) in report.prolongation.points.iter().enumerate() {
        let t = u.x[0];
        let oracle = if nonlinear {
            (2.0f64).sqrt() * (amp * t.sin()).abs() / (1.0 + amp * t.cos()).powi(3)
        } else {
            0.0
        };
        worst_oracle = worst_oracle.max((report.residual[i] - oracle).abs());
        rows.push(vec![
            report.params[i],
            t,
            u.x[1],
            report.residual[i],
            oracle,
            report.coordinate_residual[i],
        ]);
    }
    ctx.write_csv(
        "null_labtime.csv",
        csv_table(
            &[
                "s",
                "t",
                "x",
                "residual",
                "residual_oracle",
                "coordinate_residual",
            ],
            &rows,
        ),
    )?;

    ctx.checks.push(CheckResult::below(
        "coordinate-time geodesic residual",
        report.max_coordinate_residual,
        ctx.tol(1e-10),
    ));
    if nonlinear {
        ctx.checks.push(CheckResult::above(
            "nonlinear lab-time residual",
            report.max_residual,
            1e-3,
        ));
        ctx.checks.push(CheckResult::below(
            "residual vs closed-form oracle",
            worst_oracle,
            ctx.tol(1e-5),
        ));
    } else {
        ctx.checks.push(CheckResult::below(
            "lab-time geodesic residual",
            report.max_residual,
            ctx.tol(1e-10),
        ));
    }
    Ok(())
}

fn run_density_advect(ctx: &mut RunCtx) -> anyhow::Result<()> {
    let field = ctx
        .cfg
        .build_field(&ctx.model)
        .map_err(anyhow::Error::new)?;
    let f_h = indicator_hyperboloid(&ctx.model);
    let d = &ctx.cfg.density;
    let density = AnalyticDensity::gaussian(d.center.clone(), d.sigma, 8.0 * d.sigma);
    let x_box = SpacetimeBox {
        lo: vec![0.0; ctx.model.dim],
        hi: {
            let mut hi = vec![1.0; ctx.model.dim];
            hi[0] = 0.0;
            hi
        },
    };
    let ens = seed_from_analytic(&ctx.model, &density, &x_box, d.count, ctx.cfg.numeric.seed)?;
    let before = ens.total_weight();

    let meta = serde_json::json!({
        "model": ctx.model.name,
        "field": field.label,
        "indicator": f_h.label,
        "seed": ctx.cfg.numeric.seed,
        "count": d.count,
        "sigma": d.sigma,
        "center": d.center,
    });
    write_atomic(
        &ctx.dir.join("ensemble_meta.json"),
        &serde_json::to_string_pretty(&meta)?,
    )?;
    ctx.artifacts.push(ctx.dir.join("ensemble_meta.json"));

    let initial_csv = ctx.ensemble_csv(&ens);
    ctx.write_csv("ensemble_initial.csv", initial_csv)?;

    let span = ctx.cfg.numeric.span[1] - ctx.cfg.numeric.span[0];
    let out = advect(&ens, &field, span, ctx.cfg.numeric.steps)?;
    let final_csv = ctx.ensemble_csv(&out.ensemble);
    ctx.write_csv("ensemble_final.csv", final_csv)?;

    let dropped_weight: f64 = out.dropped.iter().map(|d| d.weight).sum();
    ctx.checks.push(CheckResult::flag(
        "total weight conserved exactly (retained + dropped)",
        out.ensemble.total_weight() + dropped_weight == before,
    ));
    if let Some(drift) = out.level_drift {
        ctx.checks.push(CheckResult::below(
            "on-shell deviation",
            drift,
            ctx.tol(1e-7),
        ));
    }
    // projection round trip on the advected set
    let projected = project_to_domain(&out.ensemble, &f_h, 1.0)?;
    let mut round_trip: f64 = 0.0;
    for (a, b) in out.ensemble.samples.iter().zip(&projected.samples) {
        round_trip = round_trip.max((&a.v - &b.v).amax());
    }
    ctx.checks.push(CheckResult::below(
        "projection round trip",
        round_trip,
        ctx.tol(1e-12),
    ));
    Ok(())
}

fn normalized_gaussian(
    model: &Arc<SpacetimeModel>,
    center: Vec<f64>,
    sigma: f64,
    spec: QuadratureSpec,
) -> anyhow::Result<AnalyticDensity> {
    Ok(conic::observables::unit_gaussian(
        model,
        &DVector::zeros(model.dim),
        center,
        sigma,
        spec,
    )?)
}

fn run_moments(ctx: &mut RunCtx) -> anyhow::Result<()> {
    let n = ctx.model.dim;
    if n != 4 {
        anyhow::bail!("moments run expects a 4-dimensional model");
    }
    let spec = QuadratureSpec {
        nodes: ctx.cfg.numeric.quadrature_nodes,
        outer_nodes: 48,
    };
    let d = ctx.cfg.density.clone();
    let density = normalized_gaussian(&ctx.model, d.center.clone(), d.sigma, spec)?;
    let x = DVector::zeros(n);

    let j_e = current_from_e(&ctx.model, &density, &x, spec)?;
    let chis = [
        SupportForm::bump(),
        SupportForm::box_profile(),
        SupportForm::triangle(),
    ];
    let mut rows: Vec<(Vec<String>, Vec<f64>)> =
        vec![(vec!["from_E".into()], j_e.value.iter().copied().collect())];
    let mut j_us = Vec::new();
    for chi in &chis {
        let j_u = current_from_u(&ctx.model, &density, chi, &x, spec)?;
        rows.push((
            vec![format!("from_U[{}]", chi.label)],
            j_u.value.iter().copied().collect(),
        ));
        j_us.push(j_u.value);
    }
    ctx.write_csv(
        "currents.csv",
        csv_table_tagged(&["source", "J0", "J1", "J2", "J3"], &rows),
    )?;

    let mut worst_e_vs_u: f64 = 0.0;
    for j_u in &j_us {
        worst_e_vs_u = worst_e_vs_u.max((j_u - &j_e.value).norm() / j_e.value.norm());
    }
    let mut worst_chi: f64 = 0.0;
    for i in 0..j_us.len() {
        for j in i + 1..j_us.len() {
            worst_chi = worst_chi.max((&j_us[i] - &j_us[j]).norm() / j_us[i].norm());
        }
    }
    ctx.checks.push(CheckResult::below(
        "J from E vs J from U",
        worst_e_vs_u,
        ctx.tol(1e-3),
    ));
    ctx.checks.push(CheckResult::below(
        "support-form independence",
        worst_chi,
        ctx.tol(1e-6),
    ));
    ctx.checks.push(CheckResult::flag(
        "quadrature not truncated",
        !j_e.truncated,
    ));

    let t = stress_energy_at(&ctx.model, &density, &x, spec)?;
    let sym = (&t.value - t.value.transpose()).amax();
    ctx.checks.push(CheckResult::flag(
        "stress-energy symmetric exactly",
        sym == 0.0,
    ));
    let t_rows: Vec<Vec<f64>> = (0..n)
        .map(|mu| t.value.row(mu).iter().copied().collect())
        .collect();
    ctx.write_csv(
        "stress_energy.csv",
        csv_table(&["T0", "T1", "T2", "T3"], &t_rows),
    )?;

    // at rest and cold the beam is dust: T -> diag(1, 0, 0, 0)
    if d.center.iter().all(|c| *c == 0.0) && d.sigma <= 0.015 {
        let mut dust = nalgebra::DMatrix::zeros(n, n);
        dust[(0, 0)] = 1.0;
        ctx.checks.push(CheckResult::below(
            "cold-beam dust tensor",
            (&t.value - dust).amax(),
            ctx.tol(1e-3),
        ));
    }

    // particle estimator of the same current, exported as a moment grid
    let gspec = GridSpec {
        lo: vec![0.0; 3],
        hi: vec![1.0; 3],
        cells: vec![4, 4, 4],
        periodic: true,
    };
    let x_box = SpacetimeBox {
        lo: vec![0.0; 4],
        hi: vec![0.0, 1.0, 1.0, 1.0],
    };
    let ens = seed_from_analytic(&ctx.model, &density, &x_box, d.count, ctx.cfg.numeric.seed)?;
    let grid = current_grid_from_ensemble(&ens, &gspec, 0.4, 0.0)?;
    ctx.write_csv("grid.csv", moment_grid_csv(&grid))?;
    let grid_meta = serde_json::json!({
        "model": ctx.model.name,
        "density": density.label,
        "chi": chis.iter().map(|c| c.label.clone()).collect::<Vec<_>>(),
        "quadrature": { "nodes": spec.nodes, "outer_nodes": spec.outer_nodes },
        "kernel_width": 0.4,
        "seed": ctx.cfg.numeric.seed,
        "tolerances": { "j_e_vs_u": ctx.tol(1e-3), "chi_independence": ctx.tol(1e-6), "continuity": ctx.tol(1e-6) },
    });
    write_atomic(
        &ctx.dir.join("grid_meta.json"),
        &serde_json::to_string_pretty(&grid_meta)?,
    )?;
    ctx.artifacts.push(ctx.dir.join("grid_meta.json"));
    // the cell-averaged particle current must sit near the quadrature value
    let mut mean = DVector::zeros(n);
    for j in &grid.current {
        mean += j;
    }
    mean /= grid.current.len() as f64;
    ctx.checks.push(CheckResult::below(
        "particle vs quadrature current (cell mean)",
        (&mean - &j_e.value).amax() / j_e.value.amax(),
        ctx.tol(0.05),
    ));

    // stationary beam continuity on a small periodic grid
    let gspec = GridSpec {
        lo: vec![0.0; 3],
        hi: vec![1.0; 3],
        cells: vec![4, 4, 4],
        periodic: true,
    };
    let mut series = Vec::new();
    for &tval in &[0.0, 0.5, 1.0] {
        let mut grid = MomentGrid::zeros(gspec.clone(), tval, 4);
        for c in 0..gspec.cell_count() {
            grid.current[c] = j_e.value.clone();
        }
        series.push(grid);
    }
    let residual = continuity_residual(&series)?.max_abs;
    ctx.checks.push(CheckResult::below(
        "stationary continuity residual",
        residual,
        ctx.tol(1e-6),
    ));
    Ok(())
}

fn run_dependence(ctx: &mut RunCtx) -> anyhow::Result<()> {
    let n = ctx.model.dim;
    if n != 4 {
        anyhow::bail!("dependence-report expects a 4-dimensional model");
    }
    if ctx.model.labtime.is_none() {
        anyhow::bail!("dependence-report needs a lab time on the model");
    }
    let spec = QuadratureSpec {
        nodes: ctx.cfg.numeric.quadrature_nodes,
        outer_nodes: 48,
    };
    let d = &ctx.cfg.density;
    let density = normalized_gaussian(&ctx.model, d.center.clone(), d.sigma, spec)?;
    let x = DVector::zeros(n);
    let domains = [
        indicator_hyperboloid_sqrt(&ctx.model),
        conic::vlasov::indicator_labtime(&ctx.model)?,
    ];
    let chis = [
        SupportForm::bump(),
        SupportForm::box_profile(),
        SupportForm::triangle(),
    ];
    let report = stress_energy_dependence_report(&ctx.model, &density, &x, &domains, &chis, spec)?;

    let mut rows: Vec<(Vec<String>, Vec<f64>)> = Vec::new();
    for e in &report.entries {
        let mut vals: Vec<f64> = Vec::new();
        for mu in 0..n {
            for nu in 0..n {
                vals.push(e.stress[(mu, nu)]);
            }
        }
        vals.extend(e.current.iter().copied());
        rows.push((vec![e.domain.clone(), e.chi.clone()], vals));
    }
    let mut header: Vec<String> = vec!["domain".into(), "chi".into()];
    for mu in 0..n {
        for nu in 0..n {
            header.push(format!("T{mu}{nu}"));
        }
    }
    header.extend((0..n).map(|mu| format!("J{mu}")));
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    ctx.write_csv("dependence.csv", csv_table_tagged(&header_refs, &rows))?;

    ctx.checks.push(CheckResult::above(
        "stress-energy varies across (E, chi)",
        report.max_stress_rel_diff,
        1e-3,
    ));
    ctx.checks.push(CheckResult::below(
        "current independent of (E, chi)",
        report.max_current_rel_diff,
        ctx.tol(1e-6),
    ));
    Ok(())
}

fn run_invariant_suite(ctx: &mut RunCtx) -> anyhow::Result<()> {
    match ctx.cfg.run.suite.as_deref().unwrap_or("") {
        "homogeneity" => suite_homogeneity(ctx),
        "bivector" => suite_bivector(ctx),
        "spray" => suite_spray(ctx),
        "hygiene" => suite_hygiene(ctx),
        other => anyhow::bail!("unknown suite {other}"),
    }
}

fn suite_homogeneity(ctx: &mut RunCtx) -> anyhow::Result<()> {
    let start = Instant::now();
    let models: Vec<Arc<SpacetimeModel>> = vec![
        Arc::new(catalog::minkowski(2)),
        Arc::new(catalog::minkowski(4)),
        Arc::new(catalog::schwarzschild(1.0)),
        Arc::new(catalog::minkowski_uniform_field(0.1, 1.0)),
        Arc::new(catalog::minkowski_perturbed_connection(0.05)),
        Arc::new(catalog::minkowski2_nonlinear_labtime(0.2)),
    ];
    let mut worst_quad: f64 = 0.0;
    let mut worst_bracket: f64 = 0.0;
    let mut rows: Vec<(Vec<String>, Vec<f64>)> = Vec::new();
    for m in &models {
        let samples = sample_bundle(
            m,
            &PhaseBox::default_for(m),
            ctx.cfg.numeric.sample_count,
            ctx.cfg.numeric.seed,
            false,
        );
        for w in [geodesic_field(m), lorentz_field(m)] {
            let quad = radial_quadraticity_defect(&w, &samples)?.max_defect;
            let bracket = bracket_defect(&w, &samples)?.max_defect;
            worst_quad = worst_quad.max(quad);
            worst_bracket = worst_bracket.max(bracket);
            rows.push((vec![m.name.clone(), w.label.clone()], vec![quad, bracket]));
        }
    }
    ctx.write_csv(
        "homogeneity.csv",
        csv_table_tagged(
            &["model", "field", "radial_quadraticity", "bracket_defect"],
            &rows,
        ),
    )?;
    let elapsed = start.elapsed().as_secs_f64();
    ctx.checks.push(CheckResult::below(
        "radial quadraticity",
        worst_quad,
        ctx.tol(1e-9),
    ));
    ctx.checks.push(CheckResult::below(
        "bracket defect",
        worst_bracket,
        ctx.tol(1e-6),
    ));
    ctx.checks
        .push(CheckResult::below("runtime seconds", elapsed, 5.0));
    Ok(())
}

fn suite_bivector(ctx: &mut RunCtx) -> anyhow::Result<()> {
    let m = ctx.model.clone();
    let w = ctx.cfg.build_field(&m).map_err(anyhow::Error::new)?;
    let samples = sample_bundle(
        &m,
        &PhaseBox::default_for(&m),
        ctx.cfg.numeric.sample_count,
        ctx.cfg.numeric.seed,
        false,
    );
    let k = indicator_hyperboloid_sqrt(&m).as_scalar();
    let shifted = conic::vlasov::add_radial_multiple(&w, &k);
    let equal = bivectors_equal(
        &bivector_from_field(&w),
        &bivector_from_field(&shifted),
        &samples,
    )?;
    ctx.checks
        .push(CheckResult::flag("radial-shift bivector equality", equal));

    let f = conic::vlasov::indicator_coordinate(&m);
    let via = field_from_bivector(&bivector_from_field(&w), &f);
    let direct = transform_to_domain(&w, &f);
    let mut round_trip: f64 = 0.0;
    for u in &samples {
        round_trip = round_trip.max((via.phi(u)? - direct.phi(u)?).amax());
    }
    ctx.checks.push(CheckResult::below(
        "extraction round trip",
        round_trip,
        ctx.tol(1e-12),
    ));
    Ok(())
}

fn suite_spray(ctx: &mut RunCtx) -> anyhow::Result<()> {
    let m = ctx.model.clone();
    let semi = SemiSpray::new(m.dim, "synthetic", |s, x, w| {
        (0..x.len())
            .map(|i| (0.7 * s).sin() + x[i] * w[(i + 1) % w.len()] - 0.2 * w[i])
            .collect()
    });
    let spray = quadratic_extension(&m, &semi);
    let back = restrict_to_slice(&spray);
    let mut rng = conic::rng::SeqRng::new(ctx.cfg.numeric.seed, 17);
    let mut worst: f64 = 0.0;
    for _ in 0..ctx.cfg.numeric.sample_count {
        let s = rng.next_in(-2.0, 2.0);
        let x: Vec<f64> = (0..m.dim - 1).map(|_| rng.next_in(-2.0, 2.0)).collect();
        let w: Vec<f64> = (0..m.dim - 1).map(|_| rng.next_in(-0.9, 0.9)).collect();
        for (a, b) in semi.coeffs(s, &x, &w).iter().zip(back.coeffs(s, &x, &w)) {
            worst = worst.max((a - b).abs());
        }
    }
    ctx.checks.push(CheckResult::below(
        "spray round-trip deviation",
        worst,
        ctx.tol(1e-12),
    ));
    Ok(())
}

fn suite_hygiene(ctx: &mut RunCtx) -> anyhow::Result<()> {
    // RK4 order on the constant-force closed form
    let m = Arc::new(catalog::minkowski_uniform_field(1.0, 1.0));
    let w = lorentz_field(&m);
    let u0 = PhasePoint::new(vec![0.0; 4], vec![1.0, 0.0, 0.0, 0.0]);
    let x_ref = DVector::from_vec(vec![1.0f64.sinh(), 1.0f64.cosh() - 1.0, 0.0, 0.0]);
    let v_ref = DVector::from_vec(vec![1.0f64.cosh(), 1.0f64.sinh(), 0.0, 0.0]);
    let err = |steps: usize| {
        endpoint_error(
            &integrate(&w, &u0, (0.0, 1.0), steps).unwrap(),
            &x_ref,
            &v_ref,
        )
    };
    let rk4_ratio = err(20) / err(40);
    ctx.checks.push(CheckResult::within(
        "RK4 step-halving ratio",
        rk4_ratio,
        14.0,
        18.0,
    ));

    let x = DVector::from_vec(vec![0.0, 10.0, 1.2, 0.3]);
    let fd_err = |h: f64| -> f64 {
        let m = catalog::schwarzschild(1.0).with_fd_step(FdStep::Fixed(h));
        let gamma = m.christoffel_at(&x).unwrap();
        let oracle = schwarzschild_oracle(1.0, &x);
        let mut worst: f64 = 0.0;
        for mu in 0..4 {
            for nu in 0..4 {
                for rho in 0..4 {
                    worst = worst.max((gamma.get(mu, nu, rho) - oracle.get(mu, nu, rho)).abs());
                }
            }
        }
        worst
    };
    let fd_ratio = fd_err(1e-2) / fd_err(5e-3);
    ctx.checks.push(CheckResult::within(
        "Christoffel FD halving ratio",
        fd_ratio,
        3.5,
        4.5,
    ));
    Ok(())
}

/// Long-format moment grid: one row per cell with its center coordinates.
fn moment_grid_csv(grid: &conic::observables::MomentGrid) -> String {
    let sdim = grid.spec.lo.len();
    let n = grid.current.first().map(|j| j.len()).unwrap_or(0);
    let mut header: Vec<String> = vec!["time".into()];
    header.extend((0..sdim).map(|d| format!("x{}", d + 1)));
    header.extend((0..n).map(|mu| format!("J{mu}")));
    if grid.stress.is_some() {
        for mu in 0..n {
            for nu in 0..n {
                header.push(format!("T{mu}{nu}"));
            }
        }
    }
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut rows = Vec::with_capacity(grid.current.len());
    for (flat, idx) in conic::quadrature::multi_indices(&grid.spec.cells)
        .into_iter()
        .enumerate()
    {
        let mut row = vec![grid.time];
        row.extend(grid.spec.cell_center(&idx));
        row.extend(grid.current[flat].iter().copied());
        if let Some(stress) = &grid.stress {
            row.extend(stress[flat].iter().copied());
        }
        rows.push(row);
    }
    csv_table(&header_refs, &rows)
}

fn schwarzschild_oracle(mass: f64, x: &DVector<f64>) -> conic::geometry::Rank3 {
    let r = x[1];
    let theta = x[2];
    let a = 1.0 - 2.0 * mass / r;
    let mut g = conic::geometry::Rank3::zeros(4);
    g.set(0, 0, 1, mass / (r * r * a));
    g.set(0, 1, 0, mass / (r * r * a));
    g.set(1, 0, 0, mass * a / (r * r));
    g.set(1, 1, 1, -mass / (r * r * a));
    g.set(1, 2, 2, -(r - 2.0 * mass));
    g.set(1, 3, 3, -(r - 2.0 * mass) * theta.sin().powi(2));
    g.set(2, 1, 2, 1.0 / r);
    g.set(2, 2, 1, 1.0 / r);
    g.set(2, 3, 3, -theta.sin() * theta.cos());
    g.set(3, 1, 3, 1.0 / r);
    g.set(3, 3, 1, 1.0 / r);
    g.set(3, 2, 3, theta.cos() / theta.sin());
    g.set(3, 3, 2, theta.cos() / theta.sin());
    g
}

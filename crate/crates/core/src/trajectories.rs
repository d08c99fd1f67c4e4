//! Integration of prolongations: integral curves of Vlasov fields in
//! 2n-dimensional phase space, reparameterisation, drift diagnostics, and
//! leaf integration for bivectors.
//!
//! The integrator is fixed-step classic RK4. Property tests need
//! deterministic nodes and clean convergence-order checks, and all
//! scenarios run on short desk-scale horizons, so adaptive stepping buys
//! nothing here.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::bivector::VlasovBivector;
use crate::error::{ConicError, Result};
use crate::phase_space::{BundleScalar, PhasePoint};
use crate::vlasov::{indicator_from_labtime, transform_to_domain, KinematicIndicator, VlasovField};

/// A discretised integral curve of a Vlasov field: strictly increasing
/// parameter values with the phase points along the curve.
#[derive(Clone, Debug)]
pub struct Prolongation {
    pub params: Vec<f64>,
    pub points: Vec<PhasePoint>,
    pub field_label: String,
    /// True when the path left the chart and was truncated there.
    pub truncated: bool,
}

impl Prolongation {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn step(&self) -> f64 {
        if self.params.len() < 2 {
            return 0.0;
        }
        self.params[1] - self.params[0]
    }

    /// Max defect of the prolongation property at interior nodes: the
    /// central-difference derivative of the base path must equal the stored
    /// velocity to O(dt^2).
    pub fn consistency_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 1..self.len().saturating_sub(1) {
            let dt = self.params[i + 1] - self.params[i - 1];
            let fd = (&self.points[i + 1].x - &self.points[i - 1].x) / dt;
            worst = worst.max((fd - &self.points[i].v).amax());
        }
        worst
    }

    /// Cumulative chordal length of the base path.
    pub fn chord_lengths(&self) -> Vec<f64> {
        let mut acc = Vec::with_capacity(self.len());
        let mut total = 0.0;
        acc.push(0.0);
        for i in 1..self.len() {
            total += (&self.points[i].x - &self.points[i - 1].x).norm();
            acc.push(total);
        }
        acc
    }
}

fn rk4_step(
    w: &VlasovField,
    x: &DVector<f64>,
    v: &DVector<f64>,
    h: f64,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let eval = |x: &DVector<f64>, v: &DVector<f64>| -> Result<(DVector<f64>, DVector<f64>)> {
        let u = PhasePoint {
            x: x.clone(),
            v: v.clone(),
        };
        Ok((v.clone(), w.phi(&u)?))
    };
    let (k1x, k1v) = eval(x, v)?;
    let (k2x, k2v) = eval(&(x + &k1x * (h / 2.0)), &(v + &k1v * (h / 2.0)))?;
    let (k3x, k3v) = eval(&(x + &k2x * (h / 2.0)), &(v + &k2v * (h / 2.0)))?;
    let (k4x, k4v) = eval(&(x + &k3x * h), &(v + &k3v * h))?;
    let xn = x + (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (h / 6.0);
    let vn = v + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
    Ok((xn, vn))
}

/// Integrate the prolongation through `u0` over `t_span` with `steps` RK4
/// steps. A path that leaves the chart is truncated and flagged rather than
/// failed, so long drift diagnostics stay usable.
pub fn integrate(
    w: &VlasovField,
    u0: &PhasePoint,
    t_span: (f64, f64),
    steps: usize,
) -> Result<Prolongation> {
    w.model.check_chart(&u0.x)?;
    let h = (t_span.1 - t_span.0) / steps as f64;
    let mut params = Vec::with_capacity(steps + 1);
    let mut points = Vec::with_capacity(steps + 1);
    params.push(t_span.0);
    points.push(u0.clone());
    let mut x = u0.x.clone();
    let mut v = u0.v.clone();
    let mut truncated = false;
    for i in 0..steps {
        let t = t_span.0 + h * i as f64;
        match rk4_step(w, &x, &v, h) {
            Ok((xn, vn)) => {
                if xn.iter().any(|c| !c.is_finite()) || vn.iter().any(|c| !c.is_finite()) {
                    return Err(ConicError::NonFiniteState { t: t + h });
                }
                if !w.model.chart.contains(&xn) {
                    truncated = true;
                    break;
                }
                x = xn;
                v = vn;
                params.push(t + h);
                points.push(PhasePoint {
                    x: x.clone(),
                    v: v.clone(),
                });
            }
            // a stage stepping outside the chart also truncates the path
            Err(ConicError::ChartDomain(_)) => {
                truncated = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Prolongation {
        params,
        points,
        field_label: w.label.clone(),
        truncated,
    })
}

/// Integrate a batch of initial conditions. Each integration is independent
/// and pure; the batch runs in parallel and results are ordered by input
/// index.
pub fn integrate_batch(
    w: &VlasovField,
    initial: &[PhasePoint],
    t_span: (f64, f64),
    steps: usize,
) -> Vec<Result<Prolongation>> {
    initial
        .par_iter()
        .map(|u0| integrate(w, u0, t_span, steps))
        .collect()
}

/// Cubic Hermite interpolation of the phase state between prolongation
/// nodes. Base positions use the stored velocities as exact derivatives;
/// velocity derivatives are estimated by central differences.
struct PathInterp<'a> {
    prol: &'a Prolongation,
    v_deriv: Vec<DVector<f64>>,
}

impl<'a> PathInterp<'a> {
    fn new(prol: &'a Prolongation) -> Self {
        let n = prol.len();
        let mut v_deriv = Vec::with_capacity(n);
        for i in 0..n {
            let (lo, hi) = if i == 0 {
                (0, 1.min(n - 1))
            } else if i == n - 1 {
                (n - 2, n - 1)
            } else {
                (i - 1, i + 1)
            };
            let dt = prol.params[hi] - prol.params[lo];
            let d = if dt == 0.0 {
                DVector::zeros(prol.points[0].dim())
            } else {
                (&prol.points[hi].v - &prol.points[lo].v) / dt
            };
            v_deriv.push(d);
        }
        PathInterp { prol, v_deriv }
    }

    fn segment_of(&self, t: f64) -> usize {
        let params = &self.prol.params;
        match params.binary_search_by(|p| p.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(params.len() - 2),
            Err(i) => i.saturating_sub(1).min(params.len() - 2),
        }
    }

    fn state_at(&self, t: f64) -> PhasePoint {
        let i = self.segment_of(t);
        let (t0, t1) = (self.prol.params[i], self.prol.params[i + 1]);
        let h = t1 - t0;
        let s = ((t - t0) / h).clamp(0.0, 1.0);
        let (h00, h10, h01, h11) = hermite_basis(s);
        let p0 = &self.prol.points[i];
        let p1 = &self.prol.points[i + 1];
        let x = &p0.x * h00 + &p0.v * (h10 * h) + &p1.x * h01 + &p1.v * (h11 * h);
        let v = &p0.v * h00
            + &self.v_deriv[i] * (h10 * h)
            + &p1.v * h01
            + &self.v_deriv[i + 1] * (h11 * h);
        PhasePoint { x, v }
    }
}

fn hermite_basis(s: f64) -> (f64, f64, f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    (
        2.0 * s3 - 3.0 * s2 + 1.0,
        s3 - 2.0 * s2 + s,
        -2.0 * s3 + 3.0 * s2,
        s3 - s2,
    )
}

/// Reparameterise a prolongation by a 1-homogeneous scalar `k`: solves
/// `s'' + k(eta(t)) s' = 0` with `s(t0) = t0`, `s'(t0) = 1`, then resamples
/// the base curve at uniform `s` and rescales velocities by `dt/ds`.
///
/// The output is a prolongation of the projectively related field
/// `W + k R`.
pub fn reparameterize(prol: &Prolongation, k: &BundleScalar) -> Result<Prolongation> {
    if prol.len() < 2 {
        return Err(ConicError::InvalidArgument("prolongation too short".into()));
    }
    let interp = PathInterp::new(prol);
    let m = prol.len();

    // RK4 on the scalar system (s, p = ds/dt), k evaluated along the path
    let mut s_nodes = Vec::with_capacity(m);
    let mut p_nodes = Vec::with_capacity(m);
    let mut s = prol.params[0];
    let mut p = 1.0;
    s_nodes.push(s);
    p_nodes.push(p);
    for i in 0..m - 1 {
        let t0 = prol.params[i];
        let h = prol.params[i + 1] - t0;
        let k_at = |t: f64| -> Result<f64> { k.eval(&interp.state_at(t)) };
        let f = |p: f64, kv: f64| -> (f64, f64) { (p, -kv * p) };
        let k0 = k_at(t0)?;
        let km = k_at(t0 + h / 2.0)?;
        let k1 = k_at(t0 + h)?;
        let (a1s, a1p) = f(p, k0);
        let (a2s, a2p) = f(p + 0.5 * h * a1p, km);
        let (a3s, a3p) = f(p + 0.5 * h * a2p, km);
        let (a4s, a4p) = f(p + h * a3p, k1);
        s += h / 6.0 * (a1s + 2.0 * a2s + 2.0 * a3s + a4s);
        p += h / 6.0 * (a1p + 2.0 * a2p + 2.0 * a3p + a4p);
        if p <= 0.0 {
            return Err(ConicError::ReparamDegenerate {
                rate: p,
                t: prol.params[i + 1],
            });
        }
        s_nodes.push(s);
        p_nodes.push(p);
    }

    // invert the monotone map s(t) on the uniform s grid
    let s_end = *s_nodes.last().unwrap();
    let s0 = s_nodes[0];
    let mut params = Vec::with_capacity(m);
    let mut points = Vec::with_capacity(m);
    for j in 0..m {
        let sj = s0 + (s_end - s0) * j as f64 / (m - 1) as f64;
        let t = invert_monotone(&prol.params, &s_nodes, &p_nodes, sj);
        let pj = hermite_scalar(&prol.params, &s_nodes, &p_nodes, t).1;
        let state = interp.state_at(t);
        params.push(sj);
        points.push(PhasePoint {
            x: state.x,
            v: state.v / pj,
        });
    }
    Ok(Prolongation {
        params,
        points,
        field_label: format!("{} reparam by {}", prol.field_label, k.label),
        truncated: prol.truncated,
    })
}

fn hermite_scalar(ts: &[f64], vals: &[f64], derivs: &[f64], t: f64) -> (f64, f64) {
    let i = match ts.binary_search_by(|p| p.partial_cmp(&t).unwrap()) {
        Ok(i) => i.min(ts.len() - 2),
        Err(i) => i.saturating_sub(1).min(ts.len() - 2),
    };
    let h = ts[i + 1] - ts[i];
    let s = ((t - ts[i]) / h).clamp(0.0, 1.0);
    let (h00, h10, h01, h11) = hermite_basis(s);
    let val = vals[i] * h00 + derivs[i] * h10 * h + vals[i + 1] * h01 + derivs[i + 1] * h11 * h;
    // derivative of the cubic wrt t
    let s2 = s * s;
    let d00 = (6.0 * s2 - 6.0 * s) / h;
    let d10 = 3.0 * s2 - 4.0 * s + 1.0;
    let d01 = (-6.0 * s2 + 6.0 * s) / h;
    let d11 = 3.0 * s2 - 2.0 * s;
    let deriv = vals[i] * d00 + derivs[i] * d10 + vals[i + 1] * d01 + derivs[i + 1] * d11;
    (val, deriv)
}

fn invert_monotone(ts: &[f64], s_nodes: &[f64], p_nodes: &[f64], target: f64) -> f64 {
    // bracket by node, then bisect the Hermite interpolant
    let idx = s_nodes.partition_point(|&s| s < target);
    if idx == 0 {
        return ts[0];
    }
    if idx >= s_nodes.len() {
        return *ts.last().unwrap();
    }
    let (mut lo, mut hi) = (ts[idx - 1], ts[idx]);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if hermite_scalar(ts, s_nodes, p_nodes, mid).0 < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// A kinematic indicator evaluated along a prolongation, with its
/// finite-difference rate of change.
#[derive(Clone, Debug)]
pub struct DriftSeries {
    pub params: Vec<f64>,
    pub values: Vec<f64>,
    pub rate: Vec<f64>,
}

impl DriftSeries {
    pub fn max_deviation_from(&self, reference: f64) -> f64 {
        self.values
            .iter()
            .map(|v| (v - reference).abs())
            .fold(0.0, f64::max)
    }
}

/// Evaluate `F` along a prolongation and differentiate the series. Interior
/// nodes use central differences, the ends one-sided ones.
pub fn indicator_drift(prol: &Prolongation, f: &KinematicIndicator) -> Result<DriftSeries> {
    let values: Vec<f64> = prol
        .points
        .iter()
        .map(|u| f.eval(u))
        .collect::<Result<_>>()?;
    let m = values.len();
    if m < 2 {
        return Ok(DriftSeries {
            params: prol.params.clone(),
            values,
            rate: vec![0.0; m],
        });
    }
    let mut rate = vec![0.0; m];
    for i in 0..m {
        rate[i] = if i == 0 {
            (values[1] - values[0]) / (prol.params[1] - prol.params[0])
        } else if i == m - 1 {
            (values[m - 1] - values[m - 2]) / (prol.params[m - 1] - prol.params[m - 2])
        } else {
            (values[i + 1] - values[i - 1]) / (prol.params[i + 1] - prol.params[i - 1])
        };
    }
    Ok(DriftSeries {
        params: prol.params.clone(),
        values,
        rate,
    })
}

/// Report of the null lab-time diagnostic: geodesic-equation residuals for a
/// null line parameterised by the model's lab time versus coordinate time.
#[derive(Clone, Debug)]
pub struct NullLabtimeReport {
    pub params: Vec<f64>,
    /// |nabla_C' C'| along the lab-time-parameterised line.
    pub residual: Vec<f64>,
    /// Residual components (per node) for oracle comparison.
    pub residual_vectors: Vec<DVector<f64>>,
    pub prolongation: Prolongation,
    /// Same diagnostic with coordinate time as the parameter.
    pub coordinate_residual: Vec<f64>,
    pub max_residual: f64,
    pub max_coordinate_residual: f64,
}

/// Integrate a null line of the 2D catalog model parameterised by the
/// registered lab time and measure the geodesic-equation residual along it;
/// the comparison run uses coordinate time.
///
/// `u0` must be null; it is rescaled so `v<s> = 1` before integration.
pub fn null_labtime_defect(
    model: &std::sync::Arc<crate::geometry::SpacetimeModel>,
    u0: &PhasePoint,
    t_span: (f64, f64),
    steps: usize,
) -> Result<NullLabtimeReport> {
    let gvv = model.metric_square(&u0.x, &u0.v)?;
    if gvv.abs() > 1e-9 * u0.v.norm_squared() {
        return Err(ConicError::InvalidArgument(format!(
            "u0 is not null: g(v,v) = {gvv}"
        )));
    }
    let labtime = model.labtime.clone().ok_or(ConicError::MissingLabTime)?;
    let geo = crate::vlasov::geodesic_field(model);

    let run = |indicator: &KinematicIndicator| -> Result<(Prolongation, Vec<DVector<f64>>)> {
        let sdot = indicator.eval(u0)?;
        if sdot <= 0.0 {
            return Err(ConicError::InvalidArgument("v<s> must be positive".into()));
        }
        let start = u0.scaled(1.0 / sdot);
        let what = transform_to_domain(&geo, indicator);
        let prol = integrate(&what, &start, t_span, steps)?;
        // nabla_C' C' = phi_hat + Gamma(v, v) = phi_hat - phi_geo along the curve
        let mut residuals = Vec::with_capacity(prol.len());
        for u in &prol.points {
            residuals.push(what.phi(u)? - geo.phi(u)?);
        }
        Ok((prol, residuals))
    };

    let lab_ind = indicator_from_labtime(model, &labtime);
    let (prol, vectors) = run(&lab_ind)?;
    let residual: Vec<f64> = vectors.iter().map(|r| r.norm()).collect();

    let coord_ind = indicator_from_labtime(
        model,
        &crate::geometry::catalog::coordinate_labtime(model.dim),
    );
    let (_, coord_vectors) = run(&coord_ind)?;
    let coordinate_residual: Vec<f64> = coord_vectors.iter().map(|r| r.norm()).collect();

    let max_residual = residual.iter().copied().fold(0.0, f64::max);
    let max_coordinate_residual = coordinate_residual.iter().copied().fold(0.0, f64::max);
    Ok(NullLabtimeReport {
        params: prol.params.clone(),
        residual,
        residual_vectors: vectors,
        prolongation: prol,
        coordinate_residual,
        max_residual,
        max_coordinate_residual,
    })
}

/// A sampled leaf of the foliation generated by a Vlasov bivector: the
/// surface swept by fiber scalings of one prolongation.
#[derive(Clone, Debug)]
pub struct Leaf {
    pub t_values: Vec<f64>,
    pub lambda_values: Vec<f64>,
    /// `points[i][j] = lambda_j * eta(t_i)`
    pub points: Vec<Vec<PhasePoint>>,
}

/// Integrate the representative through `u0` and sweep the leaf over the
/// lambda grid.
pub fn integrate_leaf(
    psi: &VlasovBivector,
    u0: &PhasePoint,
    t_span: (f64, f64),
    steps: usize,
    lambdas: &[f64],
) -> Result<Leaf> {
    let prol = integrate(&psi.representative, u0, t_span, steps)?;
    let points = prol
        .points
        .iter()
        .map(|u| lambdas.iter().map(|&l| u.scaled(l)).collect())
        .collect();
    Ok(Leaf {
        t_values: prol.params,
        lambda_values: lambdas.to_vec(),
        points,
    })
}

/// Rank-2 tangency check at interior leaf nodes: the finite-difference
/// surface tangents must lie in span{(0, v), (v, phi)}. Returns the largest
/// third-to-first singular-value ratio of the stacked 4 x 2n system.
pub fn leaf_tangency_defect(psi: &VlasovBivector, leaf: &Leaf) -> Result<f64> {
    let w = &psi.representative;
    let nt = leaf.t_values.len();
    let nl = leaf.lambda_values.len();
    let dim = leaf.points[0][0].dim();
    let mut worst: f64 = 0.0;
    for i in 1..nt.saturating_sub(1) {
        for j in 1..nl.saturating_sub(1) {
            let concat = |u: &PhasePoint| {
                let mut row = DVector::zeros(2 * dim);
                row.rows_mut(0, dim).copy_from(&u.x);
                row.rows_mut(dim, dim).copy_from(&u.v);
                row
            };
            let dt = leaf.t_values[i + 1] - leaf.t_values[i - 1];
            let tangent_t = (concat(&leaf.points[i + 1][j]) - concat(&leaf.points[i - 1][j])) / dt;
            let dl = leaf.lambda_values[j + 1] - leaf.lambda_values[j - 1];
            let tangent_l = (concat(&leaf.points[i][j + 1]) - concat(&leaf.points[i][j - 1])) / dl;
            let u = &leaf.points[i][j];
            let mut radial = DVector::zeros(2 * dim);
            radial.rows_mut(dim, dim).copy_from(&u.v);
            let mut field = DVector::zeros(2 * dim);
            field.rows_mut(0, dim).copy_from(&u.v);
            field.rows_mut(dim, dim).copy_from(&w.phi(u)?);

            let mut mat = DMatrix::zeros(4, 2 * dim);
            for (r, vec) in [&tangent_t, &tangent_l, &radial, &field].iter().enumerate() {
                mat.row_mut(r).copy_from(&vec.transpose());
            }
            let svd = mat.svd(false, false);
            let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
            sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
            if sv[0] > 0.0 {
                worst = worst.max(sv[2] / sv[0]);
            }
        }
    }
    Ok(worst)
}

/// Maximum pointwise distance between two base curves compared as point
/// sets: both are resampled by normalised cumulative chordal length over
/// the common length range, then compared node by node.
pub fn base_pointset_distance(a: &Prolongation, b: &Prolongation, resample: usize) -> f64 {
    if a.len() < 2 || b.len() < 2 {
        return match (a.points.first(), b.points.first()) {
            (Some(p), Some(q)) => (&p.x - &q.x).norm(),
            _ => f64::INFINITY,
        };
    }
    let la = a.chord_lengths();
    let lb = b.chord_lengths();
    let common = la.last().unwrap().min(*lb.last().unwrap());
    let sample = |prol: &Prolongation, lengths: &[f64], s: f64| -> DVector<f64> {
        let idx = lengths
            .partition_point(|&l| l < s)
            .min(lengths.len() - 1)
            .max(1);
        let (l0, l1) = (lengths[idx - 1], lengths[idx]);
        let w = if l1 > l0 { (s - l0) / (l1 - l0) } else { 0.0 };
        &prol.points[idx - 1].x * (1.0 - w) + &prol.points[idx].x * w
    };
    let mut worst: f64 = 0.0;
    for k in 0..resample {
        let s = common * k as f64 / (resample - 1) as f64;
        let pa = sample(a, &la, s);
        let pb = sample(b, &lb, s);
        worst = worst.max((pa - pb).norm());
    }
    worst
}

/// Symmetric sampled Hausdorff distance between two leaves, measured
/// against the piecewise-linear continuous leaf (free radial coefficient).
pub fn leaf_hausdorff(a: &Leaf, b: &Leaf) -> f64 {
    one_sided_leaf_distance(a, b).max(one_sided_leaf_distance(b, a))
}

fn one_sided_leaf_distance(from: &Leaf, to: &Leaf) -> f64 {
    let mut worst: f64 = 0.0;
    for row in &from.points {
        for p in row {
            worst = worst.max(point_to_leaf_distance(p, to));
        }
    }
    worst
}

fn point_to_leaf_distance(p: &PhasePoint, leaf: &Leaf) -> f64 {
    // distance to the surface {(x(t), c v(t))} with c free: closed-form
    // optimal c per t, ternary search in t on segments near the closest
    // spine node
    let mut best = f64::INFINITY;
    let spine: Vec<&PhasePoint> = leaf.points.iter().map(|row| &row[0]).collect();
    let lam0 = leaf.lambda_values[0];
    let nearest = spine
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            let da = (&p.x - &a.x).norm_squared();
            let db = (&p.x - &b.x).norm_squared();
            da.partial_cmp(&db).unwrap()
        })
        .map(|(i, _)| i)
        .unwrap_or(0);
    let seg_lo = nearest.saturating_sub(2);
    let seg_hi = (nearest + 2).min(spine.len() - 2);
    for seg in seg_lo..=seg_hi {
        let eval = |tau: f64| -> f64 {
            let x = &spine[seg].x * (1.0 - tau) + &spine[seg + 1].x * tau;
            let v = (&spine[seg].v * (1.0 - tau) + &spine[seg + 1].v * tau) / lam0;
            let vv = v.dot(&v);
            let base = (&p.x - &x).norm_squared();
            if vv == 0.0 {
                return base + p.v.dot(&p.v);
            }
            let c = p.v.dot(&v) / vv;
            base + (&p.v - v * c).norm_squared()
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..50 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if eval(m1) < eval(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        best = best.min(eval(0.5 * (lo + hi)).min(eval(0.0)).min(eval(1.0)));
    }
    best.sqrt()
}

/// Error of the final state against a reference solution, for convergence
/// probes.
pub fn endpoint_error(prol: &Prolongation, x_ref: &DVector<f64>, v_ref: &DVector<f64>) -> f64 {
    let last = prol.points.last().unwrap();
    (&last.x - x_ref).amax().max((&last.v - v_ref).amax())
}

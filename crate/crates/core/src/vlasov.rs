//! Vlasov fields on the conic bundle, kinematic indicators, and the
//! transformation between kinematic domains.
//!
//! A Vlasov field is structurally horizontal: it is always
//! `v^mu d/dx^mu + phi^mu d/dv^mu`, so only the vertical coefficient map
//! `phi` is stored. Radial quadraticity (`phi(lambda u) = lambda^2 phi(u)`)
//! is a checkable property, not an enforced construction.

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{ConicError, Result};
use crate::geometry::{LabTime, SpacetimeModel};
use crate::phase_space::{causal_indicator, BundleScalar, PhasePoint};

type PhiFn = Arc<dyn Fn(&PhasePoint) -> Result<DVector<f64>> + Send + Sync>;
type GradFn = Arc<dyn Fn(&PhasePoint) -> Result<DVector<f64>> + Send + Sync>;
type ScalarEvalFn = Arc<dyn Fn(&PhasePoint) -> Result<f64> + Send + Sync>;

/// `W = v^mu d/dx^mu + phi^mu d/dv^mu` over a fixed background model.
#[derive(Clone)]
pub struct VlasovField {
    pub model: Arc<SpacetimeModel>,
    phi: PhiFn,
    pub label: String,
}

impl VlasovField {
    pub fn new(
        model: Arc<SpacetimeModel>,
        label: impl Into<String>,
        phi: impl Fn(&PhasePoint) -> Result<DVector<f64>> + Send + Sync + 'static,
    ) -> Self {
        VlasovField {
            model,
            phi: Arc::new(phi),
            label: label.into(),
        }
    }

    /// Vertical coefficients `phi^mu(x, v)`.
    pub fn phi(&self, u: &PhasePoint) -> Result<DVector<f64>> {
        (self.phi)(u)
    }

    pub fn dim(&self) -> usize {
        self.model.dim
    }
}

/// How an indicator slices the bundle; drives fiber completion in the
/// moment integrals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndicatorKind {
    /// `F_H = -g(v, v)`, degree 2.
    Hyperboloid,
    /// `sigma sqrt(F_H)`, degree 1.
    HyperboloidSqrt,
    /// Lifted lab time `tdot`, degree 1.
    LabTime,
    /// Coordinate indicator `sum (v^mu)^2`, degree 2.
    Coordinate,
    Custom,
}

/// A non-vanishing fiber-homogeneous scalar whose level set defines a
/// kinematic domain. Catalog indicators register exact gradients; custom
/// ones fall back to finite differences inside [`field_derivative`].
#[derive(Clone)]
pub struct KinematicIndicator {
    pub label: String,
    pub degree: i32,
    pub level: f64,
    pub kind: IndicatorKind,
    eval: ScalarEvalFn,
    grad_x: Option<GradFn>,
    grad_v: Option<GradFn>,
}

impl KinematicIndicator {
    pub fn custom(
        label: impl Into<String>,
        degree: i32,
        level: f64,
        eval: impl Fn(&PhasePoint) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        KinematicIndicator {
            label: label.into(),
            degree,
            level,
            kind: IndicatorKind::Custom,
            eval: Arc::new(eval),
            grad_x: None,
            grad_v: None,
        }
    }

    pub fn eval(&self, u: &PhasePoint) -> Result<f64> {
        (self.eval)(u)
    }

    pub fn with_level(mut self, level: f64) -> Self {
        self.level = level;
        self
    }

    /// View as a plain bundle scalar (for homogeneity checks).
    pub fn as_scalar(&self) -> BundleScalar {
        let eval = self.eval.clone();
        BundleScalar::new(self.label.clone(), Some(self.degree), move |u| eval(u))
    }

    fn grad_x_at(&self, u: &PhasePoint) -> Result<DVector<f64>> {
        match &self.grad_x {
            Some(g) => g(u),
            None => fd_gradient(&self.eval, u, FdDirection::Base),
        }
    }

    fn grad_v_at(&self, u: &PhasePoint) -> Result<DVector<f64>> {
        match &self.grad_v {
            Some(g) => g(u),
            None => fd_gradient(&self.eval, u, FdDirection::Fiber),
        }
    }
}

enum FdDirection {
    Base,
    Fiber,
}

fn fd_gradient(eval: &ScalarEvalFn, u: &PhasePoint, dir: FdDirection) -> Result<DVector<f64>> {
    let n = u.dim();
    let h = match dir {
        FdDirection::Base => 1e-6 * u.x.amax().max(1.0),
        FdDirection::Fiber => 1e-6 * u.v.amax().max(1.0),
    };
    let mut grad = DVector::zeros(n);
    for mu in 0..n {
        let mut up = u.clone();
        let mut um = u.clone();
        match dir {
            FdDirection::Base => {
                up.x[mu] += h;
                um.x[mu] -= h;
            }
            FdDirection::Fiber => {
                up.v[mu] += h;
                um.v[mu] -= h;
            }
        }
        let d = (eval(&up)? - eval(&um)?) / (2.0 * h);
        if !d.is_finite() {
            return Err(ConicError::NonFiniteDerivative(
                "indicator FD gradient".into(),
            ));
        }
        grad[mu] = d;
    }
    Ok(grad)
}

/// Geodesic spray: `phi^mu = -Gamma^mu_{nu rho} v^nu v^rho`.
pub fn geodesic_field(model: &Arc<SpacetimeModel>) -> VlasovField {
    let m = model.clone();
    VlasovField::new(model.clone(), "geodesic", move |u| {
        let gamma = m.christoffel_at(&u.x)?;
        Ok(-gamma.contract2(&u.v, &u.v))
    })
}

/// Lorentz-force spray on the timelike bundle:
/// `phi^mu = (q/m) sigma sqrt(F_H) g^{mu nu} F_{nu rho} v^rho
///  - Gamma^mu_{nu rho} v^nu v^rho`.
///
/// The `sigma sqrt(F_H)` factor makes the electromagnetic term
/// 2-homogeneous. Gated to strictly timelike fibers; null dynamics are the
/// geodesic field's business.
pub fn lorentz_field(model: &Arc<SpacetimeModel>) -> VlasovField {
    let m = model.clone();
    VlasovField::new(model.clone(), "lorentz", move |u| {
        let gvv = m.metric_square(&u.x, &u.v)?;
        if gvv >= -1e-10 {
            return Err(ConicError::NonTimelike { gvv });
        }
        let sigma = causal_indicator(&m, u)?;
        let gamma = m.christoffel_at(&u.x)?;
        let ginv = m.inverse_metric_at(&u.x)?;
        let faraday = m.faraday_at(&u.x)?;
        let force = ginv * (faraday * &u.v);
        let factor = m.charge_to_mass * sigma * (-gvv).sqrt();
        Ok(force * factor - gamma.contract2(&u.v, &u.v))
    })
}

/// `F_H(u) = -g_x(v, v)`, the degree-2 indicator of the unit hyperboloid.
pub fn indicator_hyperboloid(model: &Arc<SpacetimeModel>) -> KinematicIndicator {
    let m = model.clone();
    let m_gx = model.clone();
    let m_gv = model.clone();
    KinematicIndicator {
        label: "F_H".into(),
        degree: 2,
        level: 1.0,
        kind: IndicatorKind::Hyperboloid,
        eval: Arc::new(move |u| Ok(-m.metric_square(&u.x, &u.v)?)),
        grad_x: Some(Arc::new(move |u| {
            let dg = m_gx.metric_partials(&u.x)?;
            Ok(DVector::from_iterator(
                u.dim(),
                dg.iter().map(|d| -(d * &u.v).dot(&u.v)),
            ))
        })),
        grad_v: Some(Arc::new(move |u| {
            let g = m_gv.metric_at(&u.x)?;
            Ok((g * &u.v) * -2.0)
        })),
    }
}

/// The 1-homogeneous hyperboloid indicator `sigma sqrt(F_H)`.
pub fn indicator_hyperboloid_sqrt(model: &Arc<SpacetimeModel>) -> KinematicIndicator {
    let base = indicator_hyperboloid(model);
    let m = model.clone();
    let val = {
        let base = base.clone();
        let m = m.clone();
        move |u: &PhasePoint| -> Result<f64> {
            let f = base.eval(u)?;
            if f <= 0.0 {
                return Err(ConicError::NonTimelike { gvv: -f });
            }
            Ok(causal_indicator(&m, u)? * f.sqrt())
        }
    };
    let eval = {
        let val = val.clone();
        Arc::new(move |u: &PhasePoint| val(u))
    };
    let grad_x = {
        let base = base.clone();
        let val = val.clone();
        Arc::new(move |u: &PhasePoint| {
            let s = val(u)?;
            Ok(base.grad_x_at(u)? / (2.0 * s))
        })
    };
    let grad_v = {
        let base = base.clone();
        let val = val.clone();
        Arc::new(move |u: &PhasePoint| {
            let s = val(u)?;
            Ok(base.grad_v_at(u)? / (2.0 * s))
        })
    };
    KinematicIndicator {
        label: "sigma sqrt(F_H)".into(),
        degree: 1,
        level: 1.0,
        kind: IndicatorKind::HyperboloidSqrt,
        eval,
        grad_x: Some(grad_x),
        grad_v: Some(grad_v),
    }
}

/// Lab-time indicator `tdot = v<t>` for the model's registered lab time.
pub fn indicator_labtime(model: &Arc<SpacetimeModel>) -> Result<KinematicIndicator> {
    let labtime = model.labtime.clone().ok_or(ConicError::MissingLabTime)?;
    Ok(indicator_from_labtime(model, &labtime))
}

/// Lab-time indicator for an arbitrary time scalar (not necessarily the
/// model's registered one).
pub fn indicator_from_labtime(
    model: &Arc<SpacetimeModel>,
    labtime: &LabTime,
) -> KinematicIndicator {
    let grad = labtime.gradient.clone();
    let grad_for_v = labtime.gradient.clone();
    let hess = labtime.hessian.clone();
    let _ = model;
    KinematicIndicator {
        label: format!("d/dt[{}]", labtime.label),
        degree: 1,
        level: 1.0,
        kind: IndicatorKind::LabTime,
        eval: Arc::new(move |u| Ok(grad(&u.x).dot(&u.v))),
        grad_x: Some(Arc::new(move |u| Ok(hess(&u.x) * &u.v))),
        grad_v: Some(Arc::new(move |u| Ok(grad_for_v(&u.x)))),
    }
}

/// Coordinate indicator `F_crd = sum_mu (v^mu)^2`, degree 2. Not physical
/// (chart dependent) but non-vanishing on the whole slit bundle.
pub fn indicator_coordinate(model: &Arc<SpacetimeModel>) -> KinematicIndicator {
    let _ = model;
    KinematicIndicator {
        label: "F_crd".into(),
        degree: 2,
        level: 1.0,
        kind: IndicatorKind::Coordinate,
        eval: Arc::new(|u| Ok(u.v.iter().map(|v| v * v).sum())),
        grad_x: Some(Arc::new(|u| Ok(DVector::zeros(u.dim())))),
        grad_v: Some(Arc::new(|u| Ok(&u.v * 2.0))),
    }
}

/// `W<F>(u)`: base-part contraction with the x-gradient plus vertical
/// contraction with the fiber gradient.
pub fn field_derivative(w: &VlasovField, f: &KinematicIndicator, u: &PhasePoint) -> Result<f64> {
    let gx = f.grad_x_at(u)?;
    let gv = f.grad_v_at(u)?;
    Ok(gx.dot(&u.v) + gv.dot(&w.phi(u)?))
}

/// The domain transformation: `What = W - (W<F> / R<F>) R` with
/// `R<F> = k F` by Euler's theorem. Vertical coefficients become
/// `phihat^mu = phi^mu - (W<F> / (k F)) v^mu`.
///
/// The output is compatible with `F` and remains radially quadratic, so the
/// base trajectories are preserved up to reparameterisation.
pub fn transform_to_domain(w: &VlasovField, f: &KinematicIndicator) -> VlasovField {
    let inner = w.clone();
    let f = f.clone();
    let label = format!("{}->{}", w.label, f.label);
    VlasovField::new(w.model.clone(), label, move |u| {
        let phi = inner.phi(u)?;
        let fval = f.eval(u)?;
        let denom = f.degree as f64 * fval;
        if denom == 0.0 {
            return Err(ConicError::NonFiniteDerivative(format!(
                "indicator '{}' vanishes at the evaluation point",
                f.label
            )));
        }
        let wf = f.grad_x_at(u)?.dot(&u.v) + f.grad_v_at(u)?.dot(&phi);
        Ok(phi - &u.v * (wf / denom))
    })
}

/// `W + k R` for a 1-homogeneous scalar `k`: vertical coefficients gain
/// `k(u) v^mu`. Projectively related to `W`.
pub fn add_radial_multiple(w: &VlasovField, k: &BundleScalar) -> VlasovField {
    let inner = w.clone();
    let k = k.clone();
    let label = format!("{} + ({})R", w.label, k.label);
    VlasovField::new(w.model.clone(), label, move |u| {
        Ok(inner.phi(u)? + &u.v * k.eval(u)?)
    })
}

/// Defect summary over a sample set.
#[derive(Clone, Debug)]
pub struct DefectReport {
    pub max_defect: f64,
    pub samples: usize,
}

/// Max over samples of `|W<F>| / max(1, |F|)`; zero iff `W` is compatible
/// with `F` on the samples.
pub fn compatibility_defect(
    w: &VlasovField,
    f: &KinematicIndicator,
    samples: &[PhasePoint],
) -> Result<DefectReport> {
    let mut max_defect: f64 = 0.0;
    for u in samples {
        let wf = field_derivative(w, f, u)?;
        let fval = f.eval(u)?;
        max_defect = max_defect.max(wf.abs() / fval.abs().max(1.0));
    }
    Ok(DefectReport {
        max_defect,
        samples: samples.len(),
    })
}

/// Max over samples and components of `|R<phi^mu> - 2 phi^mu|`, normalised
/// by `max(1, |phi|_inf)`. Small iff the vertical coefficients are radially
/// quadratic (Euler's theorem for degree 2).
pub fn bracket_defect(w: &VlasovField, samples: &[PhasePoint]) -> Result<DefectReport> {
    let mut max_defect: f64 = 0.0;
    for u in samples {
        let phi = w.phi(u)?;
        let vmax = u.v.amax();
        let delta = 1e-6 * vmax.max(1.0) / vmax;
        let phi_p = w.phi(&u.scaled(1.0 + delta))?;
        let phi_m = w.phi(&u.scaled(1.0 - delta))?;
        let radial = (phi_p - phi_m) / (2.0 * delta);
        let scale = phi.amax().max(1.0);
        let defect = (radial - phi * 2.0).amax() / scale;
        if !defect.is_finite() {
            return Err(ConicError::NonFiniteDerivative(
                "bracket defect non-finite".into(),
            ));
        }
        max_defect = max_defect.max(defect);
    }
    Ok(DefectReport {
        max_defect,
        samples: samples.len(),
    })
}

/// Max relative error of `phi(lambda u) = lambda^2 phi(u)` over
/// lambda in {0.5, 2} and the samples. Analytic scaling, no differencing.
pub fn radial_quadraticity_defect(w: &VlasovField, samples: &[PhasePoint]) -> Result<DefectReport> {
    let mut max_rel: f64 = 0.0;
    for u in samples {
        let phi = w.phi(u)?;
        for lam in [0.5, 2.0] {
            let scaled = w.phi(&u.scaled(lam))?;
            let expect = &phi * lam * lam;
            let rel = (scaled - &expect).amax() / expect.amax().max(1e-300);
            max_rel = max_rel.max(rel);
        }
    }
    Ok(DefectReport {
        max_defect: max_rel,
        samples: samples.len(),
    })
}

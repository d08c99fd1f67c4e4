//! The conic bundle: phase points, scalar fields on the bundle, the radial
//! derivative, the causal indicator, and homogeneity testing.
//!
//! The bundle itself is never enumerated; membership is a pointwise
//! predicate and fiber scalings act directly on [`PhasePoint`] velocities.

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{ConicError, Result};
use crate::geometry::{BundleKind, Point, SpacetimeModel};
use crate::rng::SeqRng;

/// A point (x, v) of the slit tangent bundle, v != 0.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint {
    pub x: Point,
    pub v: DVector<f64>,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, v: Vec<f64>) -> Self {
        assert_eq!(x.len(), v.len());
        PhasePoint {
            x: DVector::from_vec(x),
            v: DVector::from_vec(v),
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Fiber scaling u -> lambda u (base point unchanged).
    pub fn scaled(&self, lambda: f64) -> Self {
        PhasePoint {
            x: self.x.clone(),
            v: &self.v * lambda,
        }
    }

    /// Slit-bundle membership: max |v^mu| > 0.
    pub fn is_slit(&self) -> bool {
        self.v.amax() > 0.0
    }

    /// Membership in the scenario bundle at this point.
    pub fn in_bundle(&self, model: &SpacetimeModel) -> Result<bool> {
        if !self.is_slit() {
            return Ok(false);
        }
        let gvv = model.metric_square(&self.x, &self.v)?;
        Ok(match model.bundle {
            BundleKind::Timelike => gvv < 0.0,
            BundleKind::AllVectors => true,
            BundleKind::NullShell => gvv.abs() < 1e-10,
        })
    }
}

type EvalFn = Arc<dyn Fn(&PhasePoint) -> Result<f64> + Send + Sync>;

/// A scalar field on the bundle with an optionally declared homogeneity
/// degree.
#[derive(Clone)]
pub struct BundleScalar {
    eval: EvalFn,
    pub declared_degree: Option<i32>,
    pub label: String,
}

impl BundleScalar {
    pub fn new(
        label: impl Into<String>,
        declared_degree: Option<i32>,
        eval: impl Fn(&PhasePoint) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        BundleScalar {
            eval: Arc::new(eval),
            declared_degree,
            label: label.into(),
        }
    }

    /// Pullback of a base scalar (degree 0: the radial derivative kills it).
    pub fn pullback(
        label: impl Into<String>,
        h: impl Fn(&Point) -> f64 + Send + Sync + 'static,
    ) -> Self {
        BundleScalar::new(label, Some(0), move |u| Ok(h(&u.x)))
    }

    /// Scalar lift `hdot = v^mu d_mu h` of a base scalar given its gradient.
    pub fn lift(
        label: impl Into<String>,
        grad_h: impl Fn(&Point) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        BundleScalar::new(label, Some(1), move |u| Ok(grad_h(&u.x).dot(&u.v)))
    }

    pub fn eval(&self, u: &PhasePoint) -> Result<f64> {
        (self.eval)(u)
    }
}

pub type BaseValueFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
pub type BaseGradientFn = Arc<dyn Fn(&Point) -> DVector<f64> + Send + Sync>;

/// A base scalar together with its gradient, the input to [`scalar_lift`].
pub struct BaseScalar {
    pub value: BaseValueFn,
    pub gradient: BaseGradientFn,
}

/// Scalar lift at a point: `hdot|_u = v^mu d_mu h(x)`.
pub fn scalar_lift(model: &SpacetimeModel, h: &BaseScalar, u: &PhasePoint) -> Result<f64> {
    model.check_chart(&u.x)?;
    Ok((h.gradient)(&u.x).dot(&u.v))
}

/// Directional derivative of `G` along the radial vector at `u`, by central
/// differences in the fiber: `R<G> = v^mu dG/dv^mu`.
///
/// The step is multiplicative in the fiber (`v -> (1 +- delta) v`) so the
/// stencil scales with the velocity magnitude.
pub fn radial_derivative(g: &BundleScalar, u: &PhasePoint) -> Result<f64> {
    let vmax = u.v.amax();
    if vmax == 0.0 {
        return Err(ConicError::NonFiniteDerivative("zero velocity".into()));
    }
    let delta = 1e-6 * vmax.max(1.0) / vmax;
    let gp = g.eval(&u.scaled(1.0 + delta))?;
    let gm = g.eval(&u.scaled(1.0 - delta))?;
    let d = (gp - gm) / (2.0 * delta);
    if !d.is_finite() {
        return Err(ConicError::NonFiniteDerivative(format!(
            "radial derivative of '{}' non-finite",
            g.label
        )));
    }
    Ok(d)
}

/// Causal indicator sigma: +1 on future-pointing fibers, -1 on past.
///
/// Requires a time-orientable bundle and a timelike vector; orientation is
/// read from the sign of `v<t>` for the model's orienting time function.
pub fn causal_indicator(model: &SpacetimeModel, u: &PhasePoint) -> Result<f64> {
    if !model.bundle.is_time_orientable() {
        return Err(ConicError::NotTimeOrientable);
    }
    let gvv = model.metric_square(&u.x, &u.v)?;
    if gvv >= 0.0 {
        return Err(ConicError::NonTimelike { gvv });
    }
    let lift = model.orienting_time_gradient(&u.x).dot(&u.v);
    Ok(if lift > 0.0 { 1.0 } else { -1.0 })
}

/// Outcome of a homogeneity probe over a sample set.
#[derive(Clone, Debug)]
pub struct HomogeneityReport {
    pub degree: i32,
    pub max_rel_error: f64,
    pub pass: bool,
    pub lambdas: Vec<f64>,
    pub samples: usize,
}

/// Check `G(lambda u) = lambda^k G(u)` over lambda in {0.5, 2.0}, and
/// lambda = -1 when the sample set may include past-pointing fibers.
pub fn check_homogeneity(
    g: &BundleScalar,
    degree: i32,
    samples: &[PhasePoint],
    include_reflection: bool,
) -> HomogeneityReport {
    let mut lambdas: Vec<f64> = vec![0.5, 2.0];
    if include_reflection {
        lambdas.push(-1.0);
    }
    let mut max_rel: f64 = 0.0;
    for u in samples {
        let base = match g.eval(u) {
            Ok(v) => v,
            Err(_) => {
                max_rel = f64::INFINITY;
                continue;
            }
        };
        for &lam in &lambdas {
            let expect = lam.powi(degree) * base;
            match g.eval(&u.scaled(lam)) {
                Ok(actual) => {
                    let rel = (actual - expect).abs() / expect.abs().max(1e-300);
                    max_rel = max_rel.max(rel);
                }
                Err(_) => max_rel = f64::INFINITY,
            }
        }
    }
    HomogeneityReport {
        degree,
        max_rel_error: max_rel,
        pass: max_rel < 1e-9,
        lambdas,
        samples: samples.len(),
    }
}

/// Box in phase space for sampling policies. Reports carry the seed used.
#[derive(Clone, Debug)]
pub struct PhaseBox {
    pub x_lo: Vec<f64>,
    pub x_hi: Vec<f64>,
    pub v_lo: Vec<f64>,
    pub v_hi: Vec<f64>,
}

impl PhaseBox {
    /// A box suited to the given catalog model: chart interior in x, a
    /// symmetric velocity range in v.
    pub fn default_for(model: &SpacetimeModel) -> Self {
        let n = model.dim;
        let mut x_lo = vec![-2.0; n];
        let mut x_hi = vec![2.0; n];
        if model.name == "schwarzschild" {
            x_lo = vec![-2.0, 6.0, 0.6, -2.0];
            x_hi = vec![2.0, 20.0, 2.5, 2.0];
        }
        PhaseBox {
            x_lo,
            x_hi,
            v_lo: vec![-2.0; n],
            v_hi: vec![2.0; n],
        }
    }
}

/// Quasi-random phase points inside the box, filtered by the bundle
/// predicate (and optionally the future-pointing condition). Deterministic
/// under the seed; the draw is a fixed-order rejection stream.
pub fn sample_bundle(
    model: &SpacetimeModel,
    pbox: &PhaseBox,
    count: usize,
    seed: u64,
    future_only: bool,
) -> Vec<PhasePoint> {
    let n = model.dim;
    let mut rng = SeqRng::new(seed, 0);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count && attempts < count * 10_000 {
        attempts += 1;
        let x = DVector::from_iterator(n, (0..n).map(|d| rng.next_in(pbox.x_lo[d], pbox.x_hi[d])));
        let mut v =
            DVector::from_iterator(n, (0..n).map(|d| rng.next_in(pbox.v_lo[d], pbox.v_hi[d])));
        if model.bundle == BundleKind::Timelike {
            // bias the draw onto the cone rather than rejecting blindly
            let g = match model.metric_at(&x) {
                Ok(g) => g,
                Err(_) => continue,
            };
            let spatial: f64 = (1..n).map(|a| g[(a, a)] * v[a] * v[a]).sum();
            let v0_min = ((spatial + 0.05) / -g[(0, 0)]).sqrt();
            if v[0].abs() < v0_min {
                v[0] = v0_min * 1.05 * v[0].signum();
                if v[0] == 0.0 {
                    v[0] = v0_min * 1.05;
                }
            }
        }
        let u = PhasePoint { x, v };
        match u.in_bundle(model) {
            Ok(true) => {}
            _ => continue,
        }
        if future_only {
            match causal_indicator(model, &u) {
                Ok(s) if s > 0.0 => {}
                Ok(_) => continue,
                Err(_) => continue,
            }
        }
        out.push(u);
    }
    assert_eq!(out.len(), count, "sampling failed to fill the request");
    out
}

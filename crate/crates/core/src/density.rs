//! Particle density representations and transport by characteristics.
//!
//! The density form is represented by weighted characteristics: advecting
//! samples along integral curves with fixed weights realises closure and
//! tangency of the form-submanifolds directly, and makes particle-number
//! conservation exact. The alternative analytic representation carries the
//! scalar `f_E` on the unit mass shell with a bounded quadrature region.

use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{ConicError, Result};
use crate::geometry::{Point, SpacetimeModel};
use crate::phase_space::{causal_indicator, PhasePoint};
use crate::quadrature;
use crate::rng::SeqRng;
use crate::trajectories::integrate;
use crate::vlasov::{compatibility_defect, KinematicIndicator, VlasovField};

/// Which kinematic domain an ensemble currently lives on.
#[derive(Clone)]
pub enum DomainTag {
    OnU,
    OnE {
        indicator: KinematicIndicator,
        level: f64,
    },
}

impl DomainTag {
    pub fn label(&self) -> String {
        match self {
            DomainTag::OnU => "on_U".into(),
            DomainTag::OnE { indicator, level } => {
                format!("on_E({}, {})", indicator.label, level)
            }
        }
    }
}

/// Weighted particle ensemble on the future cone.
#[derive(Clone)]
pub struct ParticleEnsemble {
    pub samples: Vec<PhasePoint>,
    pub weights: Vec<f64>,
    pub domain_tag: DomainTag,
}

impl ParticleEnsemble {
    pub fn new(samples: Vec<PhasePoint>, weights: Vec<f64>) -> Self {
        assert_eq!(samples.len(), weights.len());
        ParticleEnsemble {
            samples,
            weights,
            domain_tag: DomainTag::OnU,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Verify the type invariants: bundle membership, future-pointing, and
    /// the on-domain level when tagged.
    pub fn validate(&self, model: &SpacetimeModel) -> Result<()> {
        for (i, u) in self.samples.iter().enumerate() {
            if !u.in_bundle(model)? {
                return Err(ConicError::InvalidArgument(format!(
                    "sample {i} is not in the bundle"
                )));
            }
            if causal_indicator(model, u)? <= 0.0 {
                return Err(ConicError::InvalidArgument(format!(
                    "sample {i} is past-pointing"
                )));
            }
        }
        if let DomainTag::OnE { indicator, level } = &self.domain_tag {
            for (i, u) in self.samples.iter().enumerate() {
                let f = indicator.eval(u)?;
                if (f - level).abs() > 1e-9 {
                    return Err(ConicError::InvalidArgument(format!(
                        "sample {i} off the domain: F = {f}, level {level}"
                    )));
                }
            }
        }
        if self.weights.iter().any(|w| *w <= 0.0) {
            return Err(ConicError::InvalidArgument("non-positive weight".into()));
        }
        Ok(())
    }

    pub fn max_level_deviation(&self, indicator: &KinematicIndicator, level: f64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for u in &self.samples {
            worst = worst.max((indicator.eval(u)? - level).abs());
        }
        Ok(worst)
    }
}

/// Rescale every sample onto the level set `F = level` by the exact
/// homogeneity solve `lambda = (level / F(u))^(1/k)`. Weights are
/// untouched; the domain tag is updated.
///
/// Even-degree indicators require `F(u) > 0` (the future-pointing gate
/// fixes the root branch); anything else is a `Sign` error.
pub fn project_to_domain(
    ens: &ParticleEnsemble,
    indicator: &KinematicIndicator,
    level: f64,
) -> Result<ParticleEnsemble> {
    let k = indicator.degree;
    let mut samples = Vec::with_capacity(ens.len());
    for u in &ens.samples {
        let f = indicator.eval(u)?;
        let ratio = level / f;
        let lambda = if k % 2 == 0 {
            if f <= 0.0 {
                return Err(ConicError::Sign { value: f });
            }
            ratio.powf(1.0 / k as f64)
        } else {
            ratio.signum() * ratio.abs().powf(1.0 / k as f64)
        };
        samples.push(u.scaled(lambda));
    }
    Ok(ParticleEnsemble {
        samples,
        weights: ens.weights.clone(),
        domain_tag: DomainTag::OnE {
            indicator: indicator.clone(),
            level,
        },
    })
}

/// A sample dropped by advection (chart exit), with its itemised weight.
#[derive(Clone, Debug)]
pub struct DroppedSample {
    pub index: usize,
    pub weight: f64,
}

/// Result of advecting an ensemble along a Vlasov field.
pub struct AdvectOutcome {
    pub ensemble: ParticleEnsemble,
    pub dropped: Vec<DroppedSample>,
    /// Largest |F - level| after transport when the input was tagged on a
    /// domain; `None` for untagged input.
    pub level_drift: Option<f64>,
}

/// Move every sample along the integral curves of `w` over a parameter
/// span `delta_t` (with `steps` RK4 steps each). Weights are untouched, so
/// total weight is conserved exactly on the retained set; dropped samples
/// are itemised, never silently removed.
///
/// The domain tag survives only when `w` is compatible with the tagged
/// indicator and the samples actually stayed on the level set.
pub fn advect(
    ens: &ParticleEnsemble,
    w: &VlasovField,
    delta_t: f64,
    steps: usize,
) -> Result<AdvectOutcome> {
    let results: Vec<Result<PhasePoint>> = ens
        .samples
        .par_iter()
        .map(|u0| {
            let prol = integrate(w, u0, (0.0, delta_t), steps)?;
            if prol.truncated {
                Err(ConicError::ChartDomain("sample left the chart".into()))
            } else {
                Ok(prol.points.last().unwrap().clone())
            }
        })
        .collect();

    let mut samples = Vec::with_capacity(ens.len());
    let mut weights = Vec::with_capacity(ens.len());
    let mut dropped = Vec::new();
    for (i, res) in results.into_iter().enumerate() {
        match res {
            Ok(u) => {
                samples.push(u);
                weights.push(ens.weights[i]);
            }
            Err(ConicError::ChartDomain(_)) => {
                dropped.push(DroppedSample {
                    index: i,
                    weight: ens.weights[i],
                });
            }
            Err(e) => return Err(e),
        }
    }

    let mut level_drift = None;
    let domain_tag = match &ens.domain_tag {
        DomainTag::OnE { indicator, level } => {
            let compat = compatibility_defect(w, indicator, &ens.samples)?;
            let out = ParticleEnsemble {
                samples: samples.clone(),
                weights: weights.clone(),
                domain_tag: DomainTag::OnU,
            };
            let drift = out.max_level_deviation(indicator, *level)?;
            level_drift = Some(drift);
            if compat.max_defect < 1e-9 && drift < 1e-7 {
                DomainTag::OnE {
                    indicator: indicator.clone(),
                    level: *level,
                }
            } else {
                DomainTag::OnU
            }
        }
        DomainTag::OnU => DomainTag::OnU,
    };

    Ok(AdvectOutcome {
        ensemble: ParticleEnsemble {
            samples,
            weights,
            domain_tag,
        },
        dropped,
        level_drift,
    })
}

type DensityFn = Arc<dyn Fn(&PhasePoint) -> f64 + Send + Sync>;

/// Analytic density `f_E` on the unit mass shell with a bounded spatial
/// velocity region for quadrature and sampling.
#[derive(Clone)]
pub struct AnalyticDensity {
    f: DensityFn,
    /// Bounds of the spatial velocity components (dim - 1 entries each).
    pub v_lo: Vec<f64>,
    pub v_hi: Vec<f64>,
    /// Level of the hyperboloid indicator the density lives on.
    pub level: f64,
    pub label: String,
}

impl AnalyticDensity {
    pub fn new(
        label: impl Into<String>,
        v_lo: Vec<f64>,
        v_hi: Vec<f64>,
        f: impl Fn(&PhasePoint) -> f64 + Send + Sync + 'static,
    ) -> Self {
        AnalyticDensity {
            f: Arc::new(f),
            v_lo,
            v_hi,
            level: 1.0,
            label: label.into(),
        }
    }

    pub fn eval(&self, u: &PhasePoint) -> f64 {
        (self.f)(u)
    }

    /// An isotropic Gaussian around the shell point with spatial velocity
    /// `center`, width `sigma`, unnormalised.
    pub fn gaussian(center: Vec<f64>, sigma: f64, half_width: f64) -> Self {
        let c = center.clone();
        let v_lo: Vec<f64> = center.iter().map(|v| v - half_width).collect();
        let v_hi: Vec<f64> = center.iter().map(|v| v + half_width).collect();
        AnalyticDensity {
            f: Arc::new(move |u: &PhasePoint| {
                let q: f64 = (1..u.dim())
                    .map(|a| (u.v[a] - c[a - 1]) * (u.v[a] - c[a - 1]))
                    .sum();
                (-q / (2.0 * sigma * sigma)).exp()
            }),
            v_lo,
            v_hi,
            level: 1.0,
            label: format!("gaussian(sigma={sigma})"),
        }
    }
}

/// Box in spacetime for ensemble seeding; zero-width axes pin the
/// coordinate instead of integrating over it.
#[derive(Clone, Debug)]
pub struct SpacetimeBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SpacetimeBox {
    fn active_dims(&self) -> Vec<usize> {
        (0..self.lo.len())
            .filter(|&d| self.hi[d] > self.lo[d])
            .collect()
    }
}

/// Complete `v^0` on the mass shell `g(v, v) = -level^2` (future branch).
pub(crate) fn complete_on_shell(
    model: &SpacetimeModel,
    x: &Point,
    v_spatial: &[f64],
    level: f64,
) -> Result<DVector<f64>> {
    let n = model.dim;
    let g = model.metric_at(x)?;
    let a = g[(0, 0)];
    let mut b = 0.0;
    let mut c = level * level;
    for i in 1..n {
        b += 2.0 * g[(0, i)] * v_spatial[i - 1];
        for j in 1..n {
            c += g[(i, j)] * v_spatial[i - 1] * v_spatial[j - 1];
        }
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 || a >= 0.0 {
        return Err(ConicError::QuadratureDomain(format!(
            "no timelike completion at {:?} for spatial velocity {:?}",
            x.as_slice(),
            v_spatial
        )));
    }
    let sqrt_disc = disc.sqrt();
    let r1 = (-b + sqrt_disc) / (2.0 * a);
    let r2 = (-b - sqrt_disc) / (2.0 * a);
    let mut v = DVector::zeros(n);
    for i in 1..n {
        v[i] = v_spatial[i - 1];
    }
    let orient = model.orienting_time_gradient(x);
    for root in [r1, r2] {
        v[0] = root;
        if orient.dot(&v) > 0.0 {
            return Ok(v);
        }
    }
    Err(ConicError::QuadratureDomain(
        "no future-pointing completion".into(),
    ))
}

/// Particle-number density per coordinate phase volume on the shell:
/// `f(u) v^0 sqrt(-det g) / (-v_0)`. This is the measure the ensemble
/// weights are calibrated against.
fn number_density(
    model: &SpacetimeModel,
    density: &AnalyticDensity,
    u: &PhasePoint,
) -> Result<f64> {
    let g = model.metric_at(&u.x)?;
    let det = g.determinant();
    let v_lower0 = g.row(0).transpose().dot(&u.v);
    Ok(density.eval(u) * u.v[0] * (-det).sqrt() / (-v_lower0))
}

/// Rejection-sample `count` particles from an analytic density over
/// `x_box` times the density's velocity region. Weights are the total
/// integral estimate divided by the count. Bit-reproducible under the seed:
/// each slot draws from its own counter-based stream, so parallel callers
/// see the same ensemble.
pub fn seed_from_analytic(
    model: &Arc<SpacetimeModel>,
    density: &AnalyticDensity,
    x_box: &SpacetimeBox,
    count: usize,
    seed: u64,
) -> Result<ParticleEnsemble> {
    let n = model.dim;
    if x_box.lo.len() != n {
        return Err(ConicError::InvalidArgument(
            "x_box dimension mismatch".into(),
        ));
    }
    let active = x_box.active_dims();

    let rho = |xv: &[f64]| -> f64 {
        let mut x = DVector::from_row_slice(&x_box.lo);
        for (slot, &d) in active.iter().enumerate() {
            x[d] = xv[slot];
        }
        let v_spatial = &xv[active.len()..];
        match complete_on_shell(model, &x, v_spatial, density.level) {
            Ok(v) => {
                let u = PhasePoint { x, v };
                number_density(model, density, &u).unwrap_or(0.0)
            }
            Err(_) => 0.0,
        }
    };

    // bound the density for rejection: coarse in x, fine in v (densities
    // vary fast in the fiber), with a safety margin; a draw exceeding the
    // bound fails loudly instead of silently biasing the sample
    let mut lo: Vec<f64> = active.iter().map(|&d| x_box.lo[d]).collect();
    let mut hi: Vec<f64> = active.iter().map(|&d| x_box.hi[d]).collect();
    lo.extend_from_slice(&density.v_lo);
    hi.extend_from_slice(&density.v_hi);
    let scan_counts: Vec<usize> = (0..lo.len())
        .map(|d| if d < active.len() { 5 } else { 16 })
        .collect();

    let mut rho_max: f64 = 0.0;
    for idx in quadrature::multi_indices(&scan_counts) {
        let p: Vec<f64> = idx
            .iter()
            .enumerate()
            .map(|(d, &i)| lo[d] + (hi[d] - lo[d]) * (i as f64 + 0.5) / scan_counts[d] as f64)
            .collect();
        rho_max = rho_max.max(rho(&p));
    }
    rho_max *= 2.0;
    if rho_max <= 0.0 {
        return Err(ConicError::DegenerateDensity);
    }

    // each slot draws from its own counter stream; attempts are counted so
    // the rejection statistics double as the (unbiased) integral estimate
    // weights = rho_max * box volume * acceptance rate / count
    let results: Vec<std::result::Result<(PhasePoint, u64), ConicError>> = (0..count)
        .into_par_iter()
        .map(|slot| {
            let mut rng = SeqRng::new(seed, slot as u64 + 1);
            let mut attempts: u64 = 0;
            loop {
                attempts += 1;
                if attempts > 10_000_000 {
                    return Err(ConicError::DegenerateDensity);
                }
                let p: Vec<f64> = (0..lo.len()).map(|d| rng.next_in(lo[d], hi[d])).collect();
                let value = rho(&p);
                if value > rho_max {
                    return Err(ConicError::InvalidArgument(
                        "density exceeds its rejection bound; refine the bound scan".into(),
                    ));
                }
                if rng.next_uniform() * rho_max < value {
                    let mut x = DVector::from_row_slice(&x_box.lo);
                    for (s, &d) in active.iter().enumerate() {
                        x[d] = p[s];
                    }
                    let v = complete_on_shell(model, &x, &p[active.len()..], density.level)
                        .expect("accepted point must complete");
                    return Ok((PhasePoint { x, v }, attempts));
                }
            }
        })
        .collect();

    let mut samples = Vec::with_capacity(count);
    let mut total_attempts: u64 = 0;
    for r in results {
        let (u, attempts) = r?;
        samples.push(u);
        total_attempts += attempts;
    }
    let box_volume: f64 = (0..lo.len()).map(|d| hi[d] - lo[d]).product();
    let integral = rho_max * box_volume * count as f64 / total_attempts as f64;
    let weight = integral / count as f64;

    let ens = ParticleEnsemble {
        samples,
        weights: vec![weight; count],
        domain_tag: DomainTag::OnE {
            indicator: crate::vlasov::indicator_hyperboloid(model),
            level: density.level * density.level,
        },
    };
    Ok(ens)
}

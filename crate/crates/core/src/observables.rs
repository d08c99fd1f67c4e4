//! Fiber-integrated moments: currents from a kinematic domain and from the
//! conic bundle (with support forms), particle-grid estimators, continuity
//! residuals, and stress-energy with its domain/support dependence
//! diagnostics.
//!
//! Moment integrals on the unit mass shell use the measure
//! `sqrt(-det g) d^{n-1}v / (-v_0)` with `v^0` completed on the shell. The
//! bundle route slices the cone along `r = log F` for the 1-homogeneous
//! hyperboloid indicator, weights the slices by the support profile, and
//! transports the density between slices by exact homogeneity.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::density::{complete_on_shell, AnalyticDensity, ParticleEnsemble};
use crate::error::{ConicError, Result};
use crate::geometry::{Point, SpacetimeModel};
use crate::quadrature::{gauss_legendre_on, multi_indices};
use crate::vlasov::KinematicIndicator;

/// A compactly supported radial profile with unit ray integral, the
/// 1-form `chi = profile(r) dr` in the coordinates `(x, r, xi)`.
#[derive(Clone)]
pub struct SupportForm {
    profile: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub r_min: f64,
    pub r_max: f64,
    scale: f64,
    pub label: String,
}

/// Node count used both to normalise profiles and for the outer slice
/// quadrature, so the normalisation is exact for the rule that consumes it.
const SUPPORT_NODES: usize = 48;

impl SupportForm {
    pub fn new(
        label: impl Into<String>,
        r_min: f64,
        r_max: f64,
        profile: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if r_max <= r_min {
            return Err(ConicError::InvalidArgument("empty support".into()));
        }
        let raw = Arc::new(profile);
        let (nodes, weights) = gauss_legendre_on(SUPPORT_NODES, r_min, r_max);
        let integral: f64 = nodes.iter().zip(&weights).map(|(r, w)| w * raw(*r)).sum();
        if integral <= 0.0 {
            return Err(ConicError::InvalidArgument(
                "support profile must have positive ray integral".into(),
            ));
        }
        Ok(SupportForm {
            profile: raw,
            r_min,
            r_max,
            scale: 1.0 / integral,
            label: label.into(),
        })
    }

    /// Test-only constructor bypassing normalisation.
    #[doc(hidden)]
    pub fn raw_unnormalised(
        label: impl Into<String>,
        r_min: f64,
        r_max: f64,
        profile: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        SupportForm {
            profile: Arc::new(profile),
            r_min,
            r_max,
            scale: 1.0,
            label: label.into(),
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r < self.r_min || r > self.r_max {
            return 0.0;
        }
        self.scale * (self.profile)(r)
    }

    /// Ray integral under the rule used at construction; 1 by normalisation.
    pub fn integral(&self) -> f64 {
        let (nodes, weights) = gauss_legendre_on(SUPPORT_NODES, self.r_min, self.r_max);
        nodes
            .iter()
            .zip(&weights)
            .map(|(r, w)| w * self.eval(*r))
            .sum()
    }

    /// C2 bump on [-1/2, 1/2].
    pub fn bump() -> Self {
        SupportForm::new("bump[-0.5,0.5]", -0.5, 0.5, |r| {
            let u = 2.0 * r;
            if u.abs() >= 1.0 {
                0.0
            } else {
                (1.0 - u * u).powi(3)
            }
        })
        .unwrap()
    }

    /// Box profile on [-1, 0].
    pub fn box_profile() -> Self {
        SupportForm::new("box[-1,0]", -1.0, 0.0, |_r| 1.0).unwrap()
    }

    /// Triangle on [0, 1] peaked at 1/2.
    pub fn triangle() -> Self {
        SupportForm::new("triangle[0,1]", 0.0, 1.0, |r| {
            if r <= 0.5 {
                r
            } else {
                1.0 - r
            }
        })
        .unwrap()
    }
}

/// Quadrature resolution for the moment integrals.
#[derive(Clone, Copy, Debug)]
pub struct QuadratureSpec {
    /// Nodes per velocity dimension.
    pub nodes: usize,
    /// Nodes for the outer slice (support form) quadrature.
    pub outer_nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            nodes: 32,
            outer_nodes: SUPPORT_NODES,
        }
    }
}

/// A moment value plus the boundary-decay diagnostic: `truncated` is set
/// when the density does not fall below 1e-12 at the quadrature boundary.
#[derive(Clone, Debug)]
pub struct Moment<T> {
    pub value: T,
    pub truncated: bool,
}

fn boundary_truncated(density: &AnalyticDensity, model: &SpacetimeModel, x: &Point) -> bool {
    let vdim = density.v_lo.len();
    let eval_at = |v_spatial: &[f64]| -> f64 {
        match complete_on_shell(model, x, v_spatial, density.level) {
            Ok(v) => density
                .eval(&crate::phase_space::PhasePoint { x: x.clone(), v })
                .abs(),
            Err(_) => 0.0,
        }
    };
    // density scale: coarse interior scan
    let mut peak: f64 = 0.0;
    let scan = 5usize;
    for idx in multi_indices(&vec![scan; vdim]) {
        let v: Vec<f64> = (0..vdim)
            .map(|d| {
                density.v_lo[d]
                    + (density.v_hi[d] - density.v_lo[d]) * (idx[d] as f64 + 0.5) / scan as f64
            })
            .collect();
        peak = peak.max(eval_at(&v));
    }
    // decay relative to the peak at the face centers of the velocity box
    for d in 0..vdim {
        for &edge in &[density.v_lo[d], density.v_hi[d]] {
            let mut v: Vec<f64> = density
                .v_lo
                .iter()
                .zip(&density.v_hi)
                .map(|(lo, hi)| 0.5 * (lo + hi))
                .collect();
            v[d] = edge;
            if eval_at(&v) > 1e-12 * peak.max(1e-300) {
                return true;
            }
        }
    }
    false
}

struct ShellRule {
    /// velocity nodes (spatial components) and combined weights
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

fn shell_rule(v_lo: &[f64], v_hi: &[f64], nodes: usize) -> ShellRule {
    let dim = v_lo.len();
    let rules: Vec<_> = (0..dim)
        .map(|d| gauss_legendre_on(nodes, v_lo[d], v_hi[d]))
        .collect();
    let mut out_nodes = Vec::new();
    let mut out_weights = Vec::new();
    for idx in multi_indices(&vec![nodes; dim]) {
        let mut p = Vec::with_capacity(dim);
        let mut w = 1.0;
        for d in 0..dim {
            p.push(rules[d].0[idx[d]]);
            w *= rules[d].1[idx[d]];
        }
        out_nodes.push(p);
        out_weights.push(w);
    }
    ShellRule {
        nodes: out_nodes,
        weights: out_weights,
    }
}

/// Integrate `integrand(v, measure_weight)` over the shell
/// `g(v,v) = -level^2` above `x`, where the measure weight is
/// `sqrt(-det g) / (-v_0)` and `v` is the completed velocity.
#[allow(clippy::too_many_arguments)]
fn shell_integral<T, F>(
    model: &SpacetimeModel,
    x: &Point,
    v_lo: &[f64],
    v_hi: &[f64],
    level: f64,
    nodes: usize,
    zero: T,
    mut accumulate: F,
) -> Result<T>
where
    F: FnMut(T, &DVector<f64>, f64) -> T,
{
    let g = model.metric_at(x)?;
    let det = g.determinant();
    if det >= 0.0 {
        return Err(ConicError::QuadratureDomain(
            "metric determinant not negative".into(),
        ));
    }
    let sqrt_g = (-det).sqrt();
    let rule = shell_rule(v_lo, v_hi, nodes);
    let mut acc = zero;
    for (p, w) in rule.nodes.iter().zip(&rule.weights) {
        let v = complete_on_shell(model, x, p, level)?;
        let v_lower0 = g.row(0).transpose().dot(&v);
        let measure = sqrt_g / (-v_lower0);
        acc = accumulate(acc, &v, w * measure);
    }
    Ok(acc)
}

/// Current components from a kinematic domain:
/// `J^mu(x) = int v^mu f_E sqrt(-det g)/(-v_0) d^{n-1}v` on the mass shell.
pub fn current_from_e(
    model: &Arc<SpacetimeModel>,
    density: &AnalyticDensity,
    x: &Point,
    spec: QuadratureSpec,
) -> Result<Moment<DVector<f64>>> {
    let n = model.dim;
    let value = shell_integral(
        model,
        x,
        &density.v_lo,
        &density.v_hi,
        density.level,
        spec.nodes,
        DVector::zeros(n),
        |acc, v, w| {
            let u = crate::phase_space::PhasePoint {
                x: x.clone(),
                v: v.clone(),
            };
            acc + v * (w * density.eval(&u))
        },
    )?;
    Ok(Moment {
        value,
        truncated: boundary_truncated(density, model, x),
    })
}

/// Current components from the bundle: outer quadrature over the radial
/// log-level `r` weighted by the support profile, inner quadrature over
/// each slice `sigma sqrt(F_H) = e^r` in the slice's own coordinates, with
/// the density lifted 0-homogeneously.
pub fn current_from_u(
    model: &Arc<SpacetimeModel>,
    density: &AnalyticDensity,
    chi: &SupportForm,
    x: &Point,
    spec: QuadratureSpec,
) -> Result<Moment<DVector<f64>>> {
    let n = model.dim;
    let (r_nodes, r_weights) = gauss_legendre_on(spec.outer_nodes, chi.r_min, chi.r_max);
    let mut total = DVector::zeros(n);
    for (r, wr) in r_nodes.iter().zip(&r_weights) {
        let chi_weight = chi.eval(*r) * wr;
        if chi_weight == 0.0 {
            continue;
        }
        let ell = r.exp();
        let slice_level = ell * density.level;
        let v_lo: Vec<f64> = density.v_lo.iter().map(|v| v * ell).collect();
        let v_hi: Vec<f64> = density.v_hi.iter().map(|v| v * ell).collect();
        // form pullback to the slice carries ell^{-(n-1)} in slice coordinates
        let measure_scale = ell.powi(-(n as i32 - 1));
        let slice = shell_integral(
            model,
            x,
            &v_lo,
            &v_hi,
            slice_level,
            spec.nodes,
            DVector::zeros(n),
            |acc, v, w| {
                let lifted = crate::phase_space::PhasePoint {
                    x: x.clone(),
                    v: v / ell,
                };
                acc + v * (w * density.eval(&lifted) * measure_scale)
            },
        )?;
        total += slice * chi_weight;
    }
    Ok(Moment {
        value: total,
        truncated: boundary_truncated(density, model, x),
    })
}

/// Stress-energy tensor from a kinematic domain:
/// `T^{mu nu} = int v^mu v^nu f_E sqrt(-det g)/(-v_0) d^{n-1}v`,
/// stored exactly symmetric.
pub fn stress_energy_at(
    model: &Arc<SpacetimeModel>,
    density: &AnalyticDensity,
    x: &Point,
    spec: QuadratureSpec,
) -> Result<Moment<DMatrix<f64>>> {
    let n = model.dim;
    let value = shell_integral(
        model,
        x,
        &density.v_lo,
        &density.v_hi,
        density.level,
        spec.nodes,
        DMatrix::zeros(n, n),
        |mut acc, v, w| {
            let u = crate::phase_space::PhasePoint {
                x: x.clone(),
                v: v.clone(),
            };
            let fw = w * density.eval(&u);
            for mu in 0..n {
                for nu in mu..n {
                    let c = fw * v[mu] * v[nu];
                    acc[(mu, nu)] += c;
                    if nu != mu {
                        acc[(nu, mu)] = acc[(mu, nu)];
                    }
                }
            }
            acc
        },
    )?;
    Ok(Moment {
        value,
        truncated: boundary_truncated(density, model, x),
    })
}

/// One labelled entry of the dependence report.
#[derive(Clone, Debug)]
pub struct DependenceEntry {
    pub domain: String,
    pub chi: String,
    pub stress: DMatrix<f64>,
    pub current: DVector<f64>,
}

/// Pairwise dependence diagnostics for the bundle stress-energy
/// `tau = pi_varsigma(chi /\ alpha_hat theta)` across kinematic-domain and
/// support-form choices, with the current computed alongside.
#[derive(Clone, Debug)]
pub struct DependenceReport {
    pub entries: Vec<DependenceEntry>,
    /// Largest pairwise relative Frobenius difference of the stress tensors.
    pub max_stress_rel_diff: f64,
    /// Largest pairwise relative difference of the currents.
    pub max_current_rel_diff: f64,
}

/// Compute the chi-weighted bundle stress-energy for each (domain, chi)
/// pair by slicing along the domain's 1-homogeneous indicator. The domain
/// enters through the homogeneity rescale `rho(v) = level / F(v)` of
/// unit-shell points onto the domain; the slice at log-level `r`
/// contributes `e^r rho(v)` per stress index pair beyond the current's
/// integrand (the stress weight `alpha_hat = v^nu` is 1-homogeneous, which
/// is exactly why the result depends on the choices while the current does
/// not).
pub fn stress_energy_dependence_report(
    model: &Arc<SpacetimeModel>,
    density: &AnalyticDensity,
    x: &Point,
    domains: &[KinematicIndicator],
    chis: &[SupportForm],
    spec: QuadratureSpec,
) -> Result<DependenceReport> {
    let n = model.dim;
    for d in domains {
        if d.degree != 1 {
            return Err(ConicError::InvalidArgument(format!(
                "dependence report expects 1-homogeneous domain indicators, got degree {} for {}",
                d.degree, d.label
            )));
        }
    }
    let mut entries = Vec::new();
    for domain in domains {
        for chi in chis {
            let (r_nodes, r_weights) = gauss_legendre_on(SUPPORT_NODES, chi.r_min, chi.r_max);
            let mut stress = DMatrix::zeros(n, n);
            let mut current = DVector::zeros(n);
            for (r, wr) in r_nodes.iter().zip(&r_weights) {
                let chi_weight = chi.eval(*r) * wr;
                if chi_weight == 0.0 {
                    continue;
                }
                let slice_scale = r.exp();
                let (s_slice, j_slice) = shell_integral(
                    model,
                    x,
                    &density.v_lo,
                    &density.v_hi,
                    density.level,
                    spec.nodes,
                    (DMatrix::zeros(n, n), DVector::zeros(n)),
                    |(mut s, j), v, w| {
                        let u = crate::phase_space::PhasePoint {
                            x: x.clone(),
                            v: v.clone(),
                        };
                        let f = density.eval(&u);
                        let rho = domain.level / domain.eval(&u).unwrap_or(f64::INFINITY);
                        let sw = w * f * slice_scale * rho;
                        for mu in 0..n {
                            for nu in mu..n {
                                s[(mu, nu)] += sw * v[mu] * v[nu];
                                if nu != mu {
                                    s[(nu, mu)] = s[(mu, nu)];
                                }
                            }
                        }
                        (s, j + v * (w * f))
                    },
                )?;
                stress += s_slice * chi_weight;
                current += j_slice * chi_weight;
            }
            entries.push(DependenceEntry {
                domain: domain.label.clone(),
                chi: chi.label.clone(),
                stress,
                current,
            });
        }
    }

    let mut max_stress = 0.0f64;
    let mut max_current = 0.0f64;
    for i in 0..entries.len() {
        for j in i + 1..entries.len() {
            let ds = (&entries[i].stress - &entries[j].stress).norm()
                / entries[i]
                    .stress
                    .norm()
                    .max(entries[j].stress.norm())
                    .max(1e-300);
            let dj = (&entries[i].current - &entries[j].current).norm()
                / entries[i]
                    .current
                    .norm()
                    .max(entries[j].current.norm())
                    .max(1e-300);
            max_stress = max_stress.max(ds);
            max_current = max_current.max(dj);
        }
    }
    Ok(DependenceReport {
        entries,
        max_stress_rel_diff: max_stress,
        max_current_rel_diff: max_current,
    })
}

/// A Gaussian beam density on the unit shell, normalised to unit particle
/// number against the shell measure at the given spacetime point (the
/// normalisation quadrature reuses the moment engine at the same node
/// count).
pub fn unit_gaussian(
    model: &Arc<SpacetimeModel>,
    x: &Point,
    center: Vec<f64>,
    sigma: f64,
    spec: QuadratureSpec,
) -> Result<AnalyticDensity> {
    let raw = AnalyticDensity::gaussian(center, sigma, 8.0 * sigma);
    let total = shell_integral(
        model,
        x,
        &raw.v_lo,
        &raw.v_hi,
        raw.level,
        spec.nodes,
        0.0,
        |acc, v, w| {
            let u = crate::phase_space::PhasePoint {
                x: x.clone(),
                v: v.clone(),
            };
            acc + w * raw.eval(&u)
        },
    )?;
    if total <= 0.0 {
        return Err(ConicError::DegenerateDensity);
    }
    let scale = 1.0 / total;
    let lo = raw.v_lo.clone();
    let hi = raw.v_hi.clone();
    Ok(AnalyticDensity::new(
        format!("unit-gaussian(sigma={sigma})"),
        lo,
        hi,
        move |u| raw.eval(u) * scale,
    ))
}

/// Spatial grid specification (n-1 dimensions) for moment deposition.
#[derive(Clone, Debug)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub cells: Vec<usize>,
    pub periodic: bool,
}

impl GridSpec {
    pub fn cell_count(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.lo.len())
            .map(|d| (self.hi[d] - self.lo[d]) / self.cells[d] as f64)
            .product()
    }

    pub fn cell_center(&self, index: &[usize]) -> Vec<f64> {
        (0..self.lo.len())
            .map(|d| {
                let h = (self.hi[d] - self.lo[d]) / self.cells[d] as f64;
                self.lo[d] + (index[d] as f64 + 0.5) * h
            })
            .collect()
    }

    fn flat_index(&self, index: &[usize]) -> usize {
        index
            .iter()
            .zip(&self.cells)
            .fold(0, |flat, (i, cells)| flat * cells + i)
    }
}

/// Per-cell moment values on one coordinate-time slice.
#[derive(Clone, Debug)]
pub struct MomentGrid {
    pub spec: GridSpec,
    pub time: f64,
    /// J^mu per cell, row-major cell order.
    pub current: Vec<DVector<f64>>,
    /// Optional T^{mu nu} per cell (stored symmetric).
    pub stress: Option<Vec<DMatrix<f64>>>,
}

impl MomentGrid {
    pub fn zeros(spec: GridSpec, time: f64, dim: usize) -> Self {
        let cells = spec.cell_count();
        MomentGrid {
            spec,
            time,
            current: vec![DVector::zeros(dim); cells],
            stress: None,
        }
    }
}

/// Kernel-smoothed deposition of an ensemble snapshot onto a spatial grid:
/// each sample contributes `weight * v^mu / v^0` spread by a normalised
/// product triangle kernel of the given width, divided by the cell volume.
///
/// The per-sample kernel weights are renormalised over the touched cells so
/// deposition conserves the total weight exactly (up to boundary clipping
/// on non-periodic grids).
pub fn current_grid_from_ensemble(
    ens: &ParticleEnsemble,
    spec: &GridSpec,
    kernel_width: f64,
    time: f64,
) -> Result<MomentGrid> {
    if ens.is_empty() {
        return Err(ConicError::EmptyEnsemble);
    }
    let sdim = spec.lo.len();
    let n = ens.samples[0].dim();
    if sdim != n - 1 {
        return Err(ConicError::InvalidArgument(format!(
            "grid has {sdim} spatial dimensions, ensemble points have {}",
            n - 1
        )));
    }
    let mut grid = MomentGrid::zeros(spec.clone(), time, n);
    let cell_volume = spec.cell_volume();
    let h: Vec<f64> = (0..sdim)
        .map(|d| (spec.hi[d] - spec.lo[d]) / spec.cells[d] as f64)
        .collect();
    let reach: Vec<isize> = (0..sdim)
        .map(|d| (kernel_width / h[d]).ceil() as isize)
        .collect();

    for (u, &w) in ens.samples.iter().zip(&ens.weights) {
        let flow: DVector<f64> = &u.v / u.v[0];
        // nearest cell indices per axis, then the kernel neighborhood
        let base: Vec<isize> = (0..sdim)
            .map(|d| ((u.x[d + 1] - spec.lo[d]) / h[d]).floor() as isize)
            .collect();
        let mut touched: Vec<(usize, f64)> = Vec::new();
        let dims: Vec<usize> = reach.iter().map(|r| (2 * r + 2) as usize).collect();
        for offset in multi_indices(&dims) {
            let mut weight = 1.0;
            let mut index = vec![0usize; sdim];
            let mut inside = true;
            #[allow(clippy::needless_range_loop)]
            for d in 0..sdim {
                let raw = base[d] + offset[d] as isize - reach[d];
                let cell = if spec.periodic {
                    raw.rem_euclid(spec.cells[d] as isize) as usize
                } else if raw < 0 || raw >= spec.cells[d] as isize {
                    inside = false;
                    break;
                } else {
                    raw as usize
                };
                // triangle kernel on the separation of sample and cell center
                let center = spec.lo[d] + (raw as f64 + 0.5) * h[d];
                let dist = (u.x[d + 1] - center).abs();
                let k = 1.0 - dist / kernel_width;
                if k <= 0.0 {
                    inside = false;
                    break;
                }
                weight *= k;
                index[d] = cell;
            }
            if inside && weight > 0.0 {
                touched.push((spec.flat_index(&index), weight));
            }
        }
        let norm: f64 = touched.iter().map(|(_, k)| k).sum();
        if norm <= 0.0 {
            continue;
        }
        for (flat, k) in touched {
            let share = w * k / (norm * cell_volume);
            grid.current[flat] += &flow * share;
        }
    }
    Ok(grid)
}

/// Continuity residual over a time series of moment grids:
/// max and L2 norms of `d_t J^0 + d_a J^a` by central differences over the
/// interior (all cells on periodic grids).
#[derive(Clone, Debug)]
pub struct ContinuityReport {
    pub max_abs: f64,
    pub l2: f64,
    pub evaluated_cells: usize,
}

pub fn continuity_residual(series: &[MomentGrid]) -> Result<ContinuityReport> {
    if series.len() < 2 {
        return Err(ConicError::InvalidArgument(
            "need at least 2 time slices".into(),
        ));
    }
    let spec = &series[0].spec;
    let sdim = spec.lo.len();
    let h: Vec<f64> = (0..sdim)
        .map(|d| (spec.hi[d] - spec.lo[d]) / spec.cells[d] as f64)
        .collect();
    let dt = series[1].time - series[0].time;

    let time_range: Vec<usize> = if series.len() == 2 {
        vec![0]
    } else {
        (1..series.len() - 1).collect()
    };

    let mut max_abs: f64 = 0.0;
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    for &k in &time_range {
        let dj_dt = |flat: usize| -> f64 {
            if series.len() == 2 {
                (series[1].current[flat][0] - series[0].current[flat][0]) / dt
            } else {
                (series[k + 1].current[flat][0] - series[k - 1].current[flat][0]) / (2.0 * dt)
            }
        };
        let slice = if series.len() == 2 {
            &series[0]
        } else {
            &series[k]
        };
        for idx in multi_indices(&spec.cells) {
            if !spec.periodic && (0..sdim).any(|d| idx[d] == 0 || idx[d] == spec.cells[d] - 1) {
                continue;
            }
            let flat = spec.flat_index(&idx);
            let mut div = dj_dt(flat);
            for d in 0..sdim {
                let mut plus = idx.clone();
                let mut minus = idx.clone();
                if spec.periodic {
                    plus[d] = (idx[d] + 1) % spec.cells[d];
                    minus[d] = (idx[d] + spec.cells[d] - 1) % spec.cells[d];
                } else {
                    plus[d] = idx[d] + 1;
                    minus[d] = idx[d] - 1;
                }
                let jp = &slice.current[spec.flat_index(&plus)];
                let jm = &slice.current[spec.flat_index(&minus)];
                div += (jp[d + 1] - jm[d + 1]) / (2.0 * h[d]);
            }
            max_abs = max_abs.max(div.abs());
            sum_sq += div * div;
            count += 1;
        }
    }
    Ok(ContinuityReport {
        max_abs,
        l2: (sum_sq / count.max(1) as f64).sqrt(),
        evaluated_cells: count,
    })
}

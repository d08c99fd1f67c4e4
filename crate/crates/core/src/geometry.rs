//! Spacetime backgrounds: charts, metrics, connections, electromagnetic
//! field, and lab-time scalars.
//!
//! Everything downstream (sprays, trajectories, fiber integrals) is built
//! over a [`SpacetimeModel`]. Models are immutable once constructed and all
//! evaluation entry points are pure, so a model can be shared freely between
//! worker threads.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{ConicError, Result};

pub type Point = DVector<f64>;

type MetricFn = Arc<dyn Fn(&Point) -> DMatrix<f64> + Send + Sync>;
type MetricDerivFn = Arc<dyn Fn(&Point) -> Vec<DMatrix<f64>> + Send + Sync>;
type FaradayFn = Arc<dyn Fn(&Point) -> DMatrix<f64> + Send + Sync>;
type ConnectionFn = Arc<dyn Fn(&Point) -> Rank3 + Send + Sync>;
type ScalarFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&Point) -> DVector<f64> + Send + Sync>;
type HessFn = Arc<dyn Fn(&Point) -> DMatrix<f64> + Send + Sync>;

/// Rank-3 coefficient array `T^mu_{nu rho}` stored as one matrix per upper
/// index.
#[derive(Clone, Debug, PartialEq)]
pub struct Rank3 {
    comps: Vec<DMatrix<f64>>,
}

impl Rank3 {
    pub fn zeros(n: usize) -> Self {
        Rank3 {
            comps: vec![DMatrix::zeros(n, n); n],
        }
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn get(&self, mu: usize, nu: usize, rho: usize) -> f64 {
        self.comps[mu][(nu, rho)]
    }

    pub fn set(&mut self, mu: usize, nu: usize, rho: usize, value: f64) {
        self.comps[mu][(nu, rho)] = value;
    }

    pub fn matrix(&self, mu: usize) -> &DMatrix<f64> {
        &self.comps[mu]
    }

    /// `T^mu_{nu rho} a^nu b^rho` for each upper index.
    pub fn contract2(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.comps.iter().map(|m| (m * b).dot(a)))
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().map(|m| m.amax()).fold(0.0, f64::max)
    }
}

/// Covariant rank-3 array `Q_{lambda mu nu}` (same storage, first index
/// selects the matrix).
pub type Rank3Cov = Rank3;

/// Rectangular chart bounds. Each scenario lives in a single chart.
#[derive(Clone, Debug)]
pub struct Chart {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Chart {
    pub fn unbounded(dim: usize) -> Self {
        Chart {
            lo: vec![-1e6; dim],
            hi: vec![1e6; dim],
        }
    }

    pub fn contains(&self, x: &Point) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(xi, (lo, hi))| *xi >= *lo && *xi <= *hi)
    }
}

/// Connection choice for the force/geodesic structure.
#[derive(Clone)]
pub enum Connection {
    /// Levi-Civita, assembled from metric derivatives.
    LeviCivita,
    /// User-supplied coefficients, returned verbatim.
    Explicit(ConnectionFn),
}

impl fmt::Debug for Connection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Connection::LeviCivita => write!(f, "LeviCivita"),
            Connection::Explicit(_) => write!(f, "Explicit(..)"),
        }
    }
}

/// Lab-time scalar with its first two derivatives.
#[derive(Clone)]
pub struct LabTime {
    pub value: ScalarFn,
    pub gradient: GradFn,
    pub hessian: HessFn,
    pub label: String,
}

/// Which subset of the slit tangent bundle a scenario works on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BundleKind {
    /// Timelike vectors, both orientations; time orientable.
    Timelike,
    /// The whole slit bundle; not time orientable.
    AllVectors,
    /// Null vectors only.
    NullShell,
}

impl BundleKind {
    pub fn is_time_orientable(self) -> bool {
        !matches!(self, BundleKind::AllVectors)
    }
}

/// Finite-difference step policy for metric derivatives.
#[derive(Clone, Copy, Debug)]
pub enum FdStep {
    /// `1e-6 * max(1, |x|_inf)`.
    Auto,
    Fixed(f64),
}

impl FdStep {
    pub fn step(&self, x: &Point) -> f64 {
        match self {
            FdStep::Auto => 1e-6 * x.amax().max(1.0),
            FdStep::Fixed(h) => *h,
        }
    }
}

/// The spacetime background over which every scenario is built: metric,
/// connection, Faraday 2-form, optional lab time, chart bounds, and the
/// bundle membership kind.
#[derive(Clone)]
pub struct SpacetimeModel {
    pub dim: usize,
    pub name: String,
    pub chart: Chart,
    metric: MetricFn,
    /// Exact metric derivative callback; bypasses finite differences.
    metric_derivs: Option<MetricDerivFn>,
    faraday: Option<FaradayFn>,
    pub charge_to_mass: f64,
    pub connection: Connection,
    pub labtime: Option<LabTime>,
    pub bundle: BundleKind,
    pub fd_step: FdStep,
    /// Time function whose lift orients the bundle; None means `x^0`.
    orienting_time_grad: Option<GradFn>,
}

impl fmt::Debug for SpacetimeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpacetimeModel")
            .field("dim", &self.dim)
            .field("name", &self.name)
            .field("bundle", &self.bundle)
            .finish()
    }
}

impl SpacetimeModel {
    pub fn new(dim: usize, name: impl Into<String>, metric: MetricFn) -> Self {
        SpacetimeModel {
            dim,
            name: name.into(),
            chart: Chart::unbounded(dim),
            metric,
            metric_derivs: None,
            faraday: None,
            charge_to_mass: 0.0,
            connection: Connection::LeviCivita,
            labtime: None,
            bundle: BundleKind::Timelike,
            fd_step: FdStep::Auto,
            orienting_time_grad: None,
        }
    }

    pub fn with_chart(mut self, chart: Chart) -> Self {
        self.chart = chart;
        self
    }

    pub fn with_faraday(mut self, faraday: FaradayFn, charge_to_mass: f64) -> Self {
        self.faraday = Some(faraday);
        self.charge_to_mass = charge_to_mass;
        self
    }

    pub fn with_connection(mut self, connection: Connection) -> Self {
        self.connection = connection;
        self
    }

    pub fn with_labtime(mut self, labtime: LabTime) -> Self {
        self.labtime = Some(labtime);
        self
    }

    pub fn with_bundle(mut self, bundle: BundleKind) -> Self {
        self.bundle = bundle;
        self
    }

    pub fn with_fd_step(mut self, fd_step: FdStep) -> Self {
        self.fd_step = fd_step;
        self
    }

    pub fn with_metric_derivs(mut self, derivs: MetricDerivFn) -> Self {
        self.metric_derivs = Some(derivs);
        self
    }

    pub fn check_chart(&self, x: &Point) -> Result<()> {
        if self.chart.contains(x) {
            Ok(())
        } else {
            Err(ConicError::ChartDomain(format!(
                "x = {:?} outside chart of model '{}'",
                x.as_slice(),
                self.name
            )))
        }
    }

    /// Metric components `g_{mu nu}(x)`.
    pub fn metric_at(&self, x: &Point) -> Result<DMatrix<f64>> {
        self.check_chart(x)?;
        Ok((self.metric)(x))
    }

    /// Inverse metric `g^{mu nu}(x)`; the inverse is verified by the
    /// residual `g g^{-1} - I`.
    pub fn inverse_metric_at(&self, x: &Point) -> Result<DMatrix<f64>> {
        let g = self.metric_at(x)?;
        let inv = g.clone().try_inverse().ok_or_else(|| {
            ConicError::SingularMetric(format!("metric not invertible at {:?}", x.as_slice()))
        })?;
        let residual = (&g * &inv - DMatrix::identity(self.dim, self.dim)).amax();
        if residual > 1e-9 {
            return Err(ConicError::SingularMetric(format!(
                "conditioning residual {residual:.3e} at {:?}",
                x.as_slice()
            )));
        }
        Ok(inv)
    }

    /// Faraday 2-form `F_{mu nu}(x)`; identically zero when absent.
    pub fn faraday_at(&self, x: &Point) -> Result<DMatrix<f64>> {
        self.check_chart(x)?;
        Ok(match &self.faraday {
            Some(f) => f(x),
            None => DMatrix::zeros(self.dim, self.dim),
        })
    }

    /// `g(v, v)` at x.
    pub fn metric_square(&self, x: &Point, v: &DVector<f64>) -> Result<f64> {
        let g = self.metric_at(x)?;
        Ok((&g * v).dot(v))
    }

    /// Partial derivatives `d_lambda g_{mu nu}` (outer index lambda), either
    /// from the registered exact callback or by central finite differences.
    pub fn metric_partials(&self, x: &Point) -> Result<Vec<DMatrix<f64>>> {
        self.check_chart(x)?;
        if let Some(derivs) = &self.metric_derivs {
            return Ok(derivs(x));
        }
        let h = self.fd_step.step(x);
        let mut out = Vec::with_capacity(self.dim);
        for lam in 0..self.dim {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[lam] += h;
            xm[lam] -= h;
            if !self.chart.contains(&xp) || !self.chart.contains(&xm) {
                return Err(ConicError::NonFiniteDerivative(format!(
                    "metric FD stencil leaves chart at {:?}",
                    x.as_slice()
                )));
            }
            let gp = (self.metric)(&xp);
            let gm = (self.metric)(&xm);
            let d = (gp - gm) / (2.0 * h);
            if d.iter().any(|v| !v.is_finite()) {
                return Err(ConicError::NonFiniteDerivative(format!(
                    "metric FD produced non-finite entries at {:?}",
                    x.as_slice()
                )));
            }
            out.push(d);
        }
        Ok(out)
    }

    /// Connection coefficients `Gamma^mu_{nu rho}(x)`: Levi-Civita from
    /// metric derivatives, or the user map verbatim.
    pub fn christoffel_at(&self, x: &Point) -> Result<Rank3> {
        match &self.connection {
            Connection::Explicit(gamma) => {
                self.check_chart(x)?;
                Ok(gamma(x))
            }
            Connection::LeviCivita => {
                let dg = self.metric_partials(x)?;
                let ginv = self.inverse_metric_at(x)?;
                let n = self.dim;
                let mut gamma = Rank3::zeros(n);
                for mu in 0..n {
                    for nu in 0..n {
                        for rho in nu..n {
                            let mut sum = 0.0;
                            for sig in 0..n {
                                sum += ginv[(mu, sig)]
                                    * (dg[nu][(sig, rho)] + dg[rho][(sig, nu)]
                                        - dg[sig][(nu, rho)]);
                            }
                            let val = 0.5 * sum;
                            gamma.set(mu, nu, rho, val);
                            gamma.set(mu, rho, nu, val);
                        }
                    }
                }
                Ok(gamma)
            }
        }
    }

    /// Non-metricity `Q_{lambda mu nu} = d_lambda g_{mu nu}
    /// - Gamma^rho_{lambda mu} g_{rho nu} - Gamma^rho_{lambda nu} g_{mu rho}`.
    pub fn nonmetricity_at(&self, x: &Point) -> Result<Rank3Cov> {
        let dg = self.metric_partials(x)?;
        let g = self.metric_at(x)?;
        let gamma = self.christoffel_at(x)?;
        let n = self.dim;
        let mut q = Rank3::zeros(n);
        for (lam, dg_lam) in dg.iter().enumerate() {
            for mu in 0..n {
                for nu in mu..n {
                    let mut val = dg_lam[(mu, nu)];
                    for rho in 0..n {
                        val -= gamma.get(rho, lam, mu) * g[(rho, nu)]
                            + gamma.get(rho, lam, nu) * g[(mu, rho)];
                    }
                    q.set(lam, mu, nu, val);
                    q.set(lam, nu, mu, val);
                }
            }
        }
        Ok(q)
    }

    /// `Q(v, v, v)`, the contraction driving mass-shell drift under a
    /// non-metric connection.
    pub fn nonmetricity_cubed(&self, x: &Point, v: &DVector<f64>) -> Result<f64> {
        let q = self.nonmetricity_at(x)?;
        Ok(q.contract2(v, v).dot(v))
    }

    /// Gradient of the orienting time function (default `x^0`).
    pub fn orienting_time_gradient(&self, x: &Point) -> DVector<f64> {
        match &self.orienting_time_grad {
            Some(g) => g(x),
            None => {
                let mut e0 = DVector::zeros(self.dim);
                e0[0] = 1.0;
                e0
            }
        }
    }
}

/// Built-in model catalog.
pub mod catalog {
    use super::*;

    fn minkowski_metric(n: usize) -> MetricFn {
        Arc::new(move |_x: &Point| {
            let mut g = DMatrix::identity(n, n);
            g[(0, 0)] = -1.0;
            g
        })
    }

    /// Flat spacetime, dimension `n` (2 or 4 in the catalog). The metric is
    /// constant, so exact (zero) derivatives are registered.
    pub fn minkowski(n: usize) -> SpacetimeModel {
        SpacetimeModel::new(n, format!("minkowski{n}"), minkowski_metric(n))
            .with_metric_derivs(Arc::new(move |_x: &Point| vec![DMatrix::zeros(n, n); n]))
    }

    /// Flat spacetime with a constant electric field `e0` along `x^1`.
    ///
    /// The Faraday components are fixed so that a particle at rest with
    /// charge-to-mass `q/m` feels the vertical coefficient
    /// `phi^1 = (q/m) e0`: `F_{10} = e0`, `F_{01} = -e0`.
    pub fn minkowski_uniform_field(e0: f64, charge_to_mass: f64) -> SpacetimeModel {
        let faraday: FaradayFn = Arc::new(move |_x: &Point| {
            let mut f = DMatrix::zeros(4, 4);
            f[(1, 0)] = e0;
            f[(0, 1)] = -e0;
            f
        });
        SpacetimeModel::new(4, "minkowski-uniform-e", minkowski_metric(4))
            .with_metric_derivs(Arc::new(|_x: &Point| vec![DMatrix::zeros(4, 4); 4]))
            .with_faraday(faraday, charge_to_mass)
    }

    /// Schwarzschild exterior in Schwarzschild coordinates (t, r, theta, phi).
    pub fn schwarzschild(mass: f64) -> SpacetimeModel {
        let metric: MetricFn = Arc::new(move |x: &Point| {
            let r = x[1];
            let theta = x[2];
            let a = 1.0 - 2.0 * mass / r;
            let mut g = DMatrix::zeros(4, 4);
            g[(0, 0)] = -a;
            g[(1, 1)] = 1.0 / a;
            g[(2, 2)] = r * r;
            g[(3, 3)] = r * r * theta.sin().powi(2);
            g
        });
        let chart = Chart {
            lo: vec![-1e6, 2.0 * mass + 0.5 * mass, 0.05, -1e6],
            hi: vec![1e6, 1e6, std::f64::consts::PI - 0.05, 1e6],
        };
        SpacetimeModel::new(4, "schwarzschild", metric).with_chart(chart)
    }

    /// Flat spacetime with an explicit non-metric connection: the only
    /// nonzero coefficient is `Gamma^0_{00} = eps * exp(-(x^1)^2)`.
    pub fn minkowski_perturbed_connection(eps: f64) -> SpacetimeModel {
        let gamma: ConnectionFn = Arc::new(move |x: &Point| {
            let mut g = Rank3::zeros(4);
            g.set(0, 0, 0, eps * (-(x[1] * x[1])).exp());
            g
        });
        SpacetimeModel::new(4, "minkowski-nonmetric", minkowski_metric(4))
            .with_metric_derivs(Arc::new(|_x: &Point| vec![DMatrix::zeros(4, 4); 4]))
            .with_connection(Connection::Explicit(gamma))
    }

    /// Bump amplitude used by `minkowski_perturbed_connection` at x.
    pub fn perturbation_amplitude(eps: f64, x: &Point) -> f64 {
        eps * (-(x[1] * x[1])).exp()
    }

    /// 2D flat spacetime with the nonlinear lab time `s = t + amp sin(x)`.
    pub fn minkowski2_nonlinear_labtime(amp: f64) -> SpacetimeModel {
        let value: ScalarFn = Arc::new(move |x: &Point| x[0] + amp * x[1].sin());
        let gradient: GradFn =
            Arc::new(move |x: &Point| DVector::from_vec(vec![1.0, amp * x[1].cos()]));
        let hessian: HessFn = Arc::new(move |x: &Point| {
            let mut h = DMatrix::zeros(2, 2);
            h[(1, 1)] = -amp * x[1].sin();
            h
        });
        SpacetimeModel::new(2, "minkowski2-nonlinear-labtime", minkowski_metric(2)).with_labtime(
            LabTime {
                value,
                gradient,
                hessian,
                label: format!("t + {amp} sin(x)"),
            },
        )
    }

    /// 2D flat spacetime with coordinate lab time `s = t`.
    pub fn minkowski2_coordinate_labtime() -> SpacetimeModel {
        let value: ScalarFn = Arc::new(|x: &Point| x[0]);
        let gradient: GradFn = Arc::new(|_x: &Point| DVector::from_vec(vec![1.0, 0.0]));
        let hessian: HessFn = Arc::new(|_x: &Point| DMatrix::zeros(2, 2));
        SpacetimeModel::new(2, "minkowski2-coordinate-labtime", minkowski_metric(2)).with_labtime(
            LabTime {
                value,
                gradient,
                hessian,
                label: "t".into(),
            },
        )
    }

    /// Coordinate lab time `t = x^0` on an n-dimensional model.
    pub fn coordinate_labtime(n: usize) -> LabTime {
        let value: ScalarFn = Arc::new(|x: &Point| x[0]);
        let gradient: GradFn = Arc::new(move |_x: &Point| {
            let mut g = DVector::zeros(_x.len());
            g[0] = 1.0;
            g
        });
        let hessian: HessFn = Arc::new(move |x: &Point| DMatrix::zeros(x.len(), x.len()));
        let _ = n;
        LabTime {
            value,
            gradient,
            hessian,
            label: "x0".into(),
        }
    }

    /// Tilted lab time `t = x^0 + slope * x^1`.
    pub fn tilted_labtime(n: usize, slope: f64) -> LabTime {
        let value: ScalarFn = Arc::new(move |x: &Point| x[0] + slope * x[1]);
        let gradient: GradFn = Arc::new(move |x: &Point| {
            let mut g = DVector::zeros(x.len());
            g[0] = 1.0;
            g[1] = slope;
            g
        });
        let hessian: HessFn = Arc::new(move |x: &Point| DMatrix::zeros(x.len(), x.len()));
        let _ = n;
        LabTime {
            value,
            gradient,
            hessian,
            label: format!("x0 + {slope} x1"),
        }
    }
}

/// Count of negative eigenvalues of the (symmetric) metric at x.
pub fn negative_eigenvalue_count(g: &DMatrix<f64>) -> usize {
    let eig = g.clone().symmetric_eigen();
    eig.eigenvalues.iter().filter(|&&l| l < 0.0).count()
}

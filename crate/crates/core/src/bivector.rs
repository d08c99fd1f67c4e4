//! Vlasov bivectors: the parameterisation-free object `Psi = R /\ W`.
//!
//! A bivector is stored through a representative field; every operation the
//! theory needs factors through `Psi<F, .>`, which only requires the
//! representative, and equality of bivectors is decidable by the
//! parallel-difference test (the vertical difference of two representatives
//! must be a 1-homogeneous multiple of the fiber velocity).

use nalgebra::DVector;

use crate::error::Result;
use crate::phase_space::PhasePoint;
use crate::vlasov::{transform_to_domain, KinematicIndicator, VlasovField};

/// `Psi = R /\ W`, held by a representative `W`.
#[derive(Clone)]
pub struct VlasovBivector {
    pub representative: VlasovField,
}

pub fn bivector_from_field(w: &VlasovField) -> VlasovBivector {
    VlasovBivector {
        representative: w.clone(),
    }
}

/// Extract the Vlasov field compatible with `F`:
/// `W_F = Psi<F, .> / (k F)`. Expanding the pairing with `R<F> = k F`
/// gives exactly the domain transformation of the representative, so the
/// two routes are algebraically identical.
pub fn field_from_bivector(psi: &VlasovBivector, f: &KinematicIndicator) -> VlasovField {
    transform_to_domain(&psi.representative, f)
}

/// Outcome of the projective-relation solve `phi2 - phi1 = k v`.
#[derive(Clone, Debug)]
pub struct ProjectiveReport {
    pub pass: bool,
    pub max_residual: f64,
    pub k_values: Vec<f64>,
    pub k_homogeneity_pass: bool,
    pub k_max_homogeneity_error: f64,
}

/// Test whether two fields differ by `k R` with `k` 1-homogeneous, i.e.
/// whether they generate the same trajectories as point sets.
///
/// At each sample the coefficient is recovered by least squares across the
/// components; the residual must vanish (relative to the field scale) and
/// the recovered `k` must scale linearly under fiber scalings.
pub fn projectively_equivalent(
    w1: &VlasovField,
    w2: &VlasovField,
    samples: &[PhasePoint],
) -> Result<ProjectiveReport> {
    projectively_equivalent_with_tol(w1, w2, samples, 1e-9, 1e-8)
}

pub fn projectively_equivalent_with_tol(
    w1: &VlasovField,
    w2: &VlasovField,
    samples: &[PhasePoint],
    residual_tol: f64,
    homogeneity_tol: f64,
) -> Result<ProjectiveReport> {
    let mut max_residual: f64 = 0.0;
    let mut k_values = Vec::with_capacity(samples.len());
    let mut k_hom_err: f64 = 0.0;

    let solve_k = |w1: &VlasovField, w2: &VlasovField, u: &PhasePoint| -> Result<(f64, f64)> {
        let diff = w2.phi(u)? - w1.phi(u)?;
        let k = diff.dot(&u.v) / u.v.dot(&u.v);
        let residual = (&diff - &u.v * k).amax();
        Ok((k, residual))
    };

    let mut pass = true;
    for u in samples {
        let scale = w1.phi(u)?.amax().max(w2.phi(u)?.amax()).max(1.0);
        let (k, residual) = solve_k(w1, w2, u)?;
        max_residual = max_residual.max(residual / scale);
        if residual > residual_tol * scale {
            pass = false;
        }
        k_values.push(k);
        for lam in [0.5, 2.0] {
            let (k_scaled, _) = solve_k(w1, w2, &u.scaled(lam))?;
            let err = (k_scaled - lam * k).abs() / k.abs().max(1.0);
            k_hom_err = k_hom_err.max(err);
            if err > homogeneity_tol {
                pass = false;
            }
        }
    }

    Ok(ProjectiveReport {
        pass,
        max_residual,
        k_values,
        k_homogeneity_pass: k_hom_err <= homogeneity_tol,
        k_max_homogeneity_error: k_hom_err,
    })
}

/// Bivector equality: the representatives must be projectively related
/// (relative tolerance 1e-8 on both the parallel residual and the
/// 1-homogeneity of the recovered coefficient).
pub fn bivectors_equal(
    a: &VlasovBivector,
    b: &VlasovBivector,
    samples: &[PhasePoint],
) -> Result<bool> {
    let rep = projectively_equivalent_with_tol(
        &a.representative,
        &b.representative,
        samples,
        1e-8,
        1e-8,
    )?;
    Ok(rep.pass)
}

/// Componentwise comparison of the antisymmetrised outer products
/// `X1 (x) X2 - X2 (x) X1` and the Y pair, within 1e-12.
///
/// Pairs related by a determinant-one linear substitution wedge to the same
/// bivector; any other substitution does not.
pub fn wedge_pair_equal(
    x1: &DVector<f64>,
    x2: &DVector<f64>,
    y1: &DVector<f64>,
    y2: &DVector<f64>,
) -> bool {
    let n = x1.len();
    for i in 0..n {
        for j in 0..n {
            let lhs = x1[i] * x2[j] - x1[j] * x2[i];
            let rhs = y1[i] * y2[j] - y1[j] * y2[i];
            if (lhs - rhs).abs() > 1e-12 {
                return false;
            }
        }
    }
    true
}

//! Sprays restricted to lab-time slices (semi-sprays) and the quadratic
//! extension back to the full bundle.
//!
//! On the slice `v^0 = 1` of an adapted chart (`x^0` is the lab time) the
//! second-order dynamics are given by slice coefficients
//! `a^i(s, x^i, w^i)` with no homogeneity requirement. The quadratic
//! extension promotes them to spray coefficients
//! `phi^0 = 0`, `phi^i = (v^0)^2 a^i(x^0, x^i, v^i / v^0)`,
//! which are radially quadratic by construction and restrict back to the
//! original coefficients on the slice.

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::ConicError;
use crate::geometry::SpacetimeModel;
use crate::vlasov::VlasovField;

type SliceCoeffFn = Arc<dyn Fn(f64, &[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// Second-order coefficients on a lab-time slice: `a^i(s, x^i, dx^i/ds)`.
#[derive(Clone)]
pub struct SemiSpray {
    pub dim: usize,
    coeffs: SliceCoeffFn,
    pub label: String,
}

impl SemiSpray {
    pub fn new(
        dim: usize,
        label: impl Into<String>,
        coeffs: impl Fn(f64, &[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        SemiSpray {
            dim,
            coeffs: Arc::new(coeffs),
            label: label.into(),
        }
    }

    /// Slice coefficients `a^i` (length `dim - 1`).
    pub fn coeffs(&self, s: f64, x_spatial: &[f64], w: &[f64]) -> Vec<f64> {
        (self.coeffs)(s, x_spatial, w)
    }
}

/// Quadratic extension of a semi-spray to a spray on the slit bundle.
pub fn quadratic_extension(model: &Arc<SpacetimeModel>, semi: &SemiSpray) -> VlasovField {
    let semi = semi.clone();
    let label = format!("extend({})", semi.label);
    VlasovField::new(model.clone(), label, move |u| {
        let v0 = u.v[0];
        if v0 == 0.0 {
            return Err(ConicError::InvalidArgument(
                "quadratic extension undefined on v^0 = 0".into(),
            ));
        }
        let n = u.dim();
        let x_spatial: Vec<f64> = (1..n).map(|i| u.x[i]).collect();
        let w: Vec<f64> = (1..n).map(|i| u.v[i] / v0).collect();
        let a = semi.coeffs(u.x[0], &x_spatial, &w);
        let mut phi = DVector::zeros(n);
        for i in 1..n {
            phi[i] = v0 * v0 * a[i - 1];
        }
        Ok(phi)
    })
}

/// Restrict a spray to the slice `v^0 = 1` of the adapted chart, recovering
/// slice coefficients. The spray's `phi^0` must vanish on the slice for the
/// restriction to be a faithful semi-spray (true of any field compatible
/// with the coordinate lab time).
pub fn restrict_to_slice(w: &VlasovField) -> SemiSpray {
    let w = w.clone();
    let n = w.dim();
    let label = format!("restrict({})", w.label);
    SemiSpray::new(n, label, move |s, x_spatial, vel| {
        let mut x = Vec::with_capacity(n);
        x.push(s);
        x.extend_from_slice(x_spatial);
        let mut v = Vec::with_capacity(n);
        v.push(1.0);
        v.extend_from_slice(vel);
        let u = crate::phase_space::PhasePoint::new(x, v);
        let phi = w.phi(&u).expect("spray evaluable on the slice");
        (1..n).map(|i| phi[i]).collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::catalog;
    use crate::phase_space::{sample_bundle, PhaseBox, PhasePoint};
    use crate::rng::SeqRng;
    use crate::vlasov::{
        indicator_labtime, lorentz_field, radial_quadraticity_defect, transform_to_domain,
    };

    #[test]
    fn extension_restricts_to_original_coefficients() {
        // closed-form slice dynamics with genuine (s, x, w) dependence
        let semi = SemiSpray::new(4, "synthetic", |s, x, w| {
            vec![
                s.sin() + x[0] * w[1],
                w[0] * w[0] - 0.3 * x[1],
                x[2] + 2.0 * w[2] * s,
            ]
        });
        let m = Arc::new(catalog::minkowski(4));
        let spray = quadratic_extension(&m, &semi);
        let back = restrict_to_slice(&spray);
        let mut rng = SeqRng::new(71, 0);
        for _ in 0..100 {
            let s = rng.next_in(-2.0, 2.0);
            let x: Vec<f64> = (0..3).map(|_| rng.next_in(-2.0, 2.0)).collect();
            let w: Vec<f64> = (0..3).map(|_| rng.next_in(-0.9, 0.9)).collect();
            let orig = semi.coeffs(s, &x, &w);
            let round = back.coeffs(s, &x, &w);
            for (a, b) in orig.iter().zip(&round) {
                assert!((a - b).abs() < 1e-12, "round trip defect {}", (a - b).abs());
            }
        }
    }

    #[test]
    fn extension_is_radially_quadratic() {
        let semi = SemiSpray::new(4, "synthetic", |s, x, w| {
            vec![s + w[0], x[0] * w[1], w[2] * w[2]]
        });
        let m = Arc::new(catalog::minkowski(4));
        let spray = quadratic_extension(&m, &semi);
        // quadraticity on the positive-v0 half where the extension lives
        let samples: Vec<PhasePoint> = sample_bundle(&m, &PhaseBox::default_for(&m), 100, 73, true);
        let rep = radial_quadraticity_defect(&spray, &samples).unwrap();
        assert!(rep.max_defect < 1e-9, "defect {}", rep.max_defect);
    }

    #[test]
    fn labtime_field_is_the_extension_of_its_restriction() {
        // a field compatible with the coordinate lab time has phi^0 = 0, so
        // restriction followed by extension reproduces it on v^0 > 0
        let m = Arc::new(
            catalog::minkowski_uniform_field(0.1, 1.0).with_labtime(catalog::coordinate_labtime(4)),
        );
        let w_lab = transform_to_domain(&lorentz_field(&m), &indicator_labtime(&m).unwrap());
        let rebuilt = quadratic_extension(&m, &restrict_to_slice(&w_lab));
        let samples = sample_bundle(&m, &PhaseBox::default_for(&m), 50, 79, true);
        for u in &samples {
            let a = w_lab.phi(u).unwrap();
            let b = rebuilt.phi(u).unwrap();
            assert!((a - b).amax() < 1e-12);
        }
    }
}

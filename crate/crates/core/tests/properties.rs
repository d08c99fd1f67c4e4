//! Randomised property tests for the structural invariants.

use std::sync::Arc;

use nalgebra::DVector;
use proptest::prelude::*;

use conic::bivector::wedge_pair_equal;
use conic::density::{project_to_domain, ParticleEnsemble};
use conic::geometry::catalog;
use conic::phase_space::{causal_indicator, PhasePoint};
use conic::trajectories::integrate;
use conic::vlasov::{geodesic_field, indicator_hyperboloid, indicator_labtime};

fn timelike_velocity() -> impl Strategy<Value = Vec<f64>> {
    (prop::collection::vec(-0.9f64..0.9, 3), -1.0f64..1.0).prop_map(|(spatial, skew)| {
        let norm: f64 = spatial.iter().map(|v| v * v).sum::<f64>();
        let v0 = (norm + 0.1).sqrt() * (1.2 + skew.abs());
        let sign = if skew >= 0.0 { 1.0 } else { -1.0 };
        let mut v = vec![sign * v0];
        v.extend(spatial);
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn causal_indicator_flips_under_reflection(v in timelike_velocity()) {
        let m = Arc::new(catalog::minkowski(4));
        let u = PhasePoint::new(vec![0.0; 4], v);
        let s = causal_indicator(&m, &u).unwrap();
        let s_neg = causal_indicator(&m, &u.scaled(-1.0)).unwrap();
        prop_assert_eq!(s, -s_neg);
    }

    #[test]
    fn hyperboloid_indicator_is_two_homogeneous(
        v in timelike_velocity(),
        lambda in 0.2f64..5.0,
    ) {
        let m = Arc::new(catalog::minkowski(4));
        let f = indicator_hyperboloid(&m);
        let u = PhasePoint::new(vec![0.0; 4], v);
        let base = f.eval(&u).unwrap();
        let scaled = f.eval(&u.scaled(lambda)).unwrap();
        prop_assert!((scaled - lambda * lambda * base).abs() <= 1e-9 * scaled.abs());
    }

    #[test]
    fn wedge_equality_iff_unit_determinant(
        alpha in 0.3f64..2.0,
        beta in -1.0f64..1.0,
        gamma in -1.0f64..1.0,
        extra in 0.05f64..0.5,
        seed in 0u64..1000,
    ) {
        let rng = conic::rng::CounterRng::new(seed, 0);
        let x1 = DVector::from_iterator(8, (0..8).map(|c| rng.uniform(c) * 2.0 - 1.0));
        let x2 = DVector::from_iterator(8, (8..16).map(|c| rng.uniform(c) * 2.0 - 1.0));
        let delta = (1.0 + beta * gamma) / alpha;
        let y1 = &x1 * alpha + &x2 * beta;
        let y2 = &x1 * gamma + &x2 * delta;
        prop_assert!(wedge_pair_equal(&x1, &x2, &y1, &y2));
        let y2_off = &x1 * gamma + &x2 * (delta + extra);
        prop_assert!(!wedge_pair_equal(&x1, &x2, &y1, &y2_off));
    }

    #[test]
    fn projection_is_idempotent_for_random_ensembles(
        vs in prop::collection::vec(timelike_velocity(), 1..10),
        level in 0.5f64..2.0,
    ) {
        let m = Arc::new(catalog::minkowski(4));
        let f = indicator_hyperboloid(&m);
        // keep only future-pointing samples for the even-degree gate
        let samples: Vec<PhasePoint> = vs
            .into_iter()
            .map(|mut v| {
                v[0] = v[0].abs();
                PhasePoint::new(vec![0.0; 4], v)
            })
            .collect();
        let weights = vec![1.0; samples.len()];
        let ens = ParticleEnsemble::new(samples, weights);
        let once = project_to_domain(&ens, &f, level).unwrap();
        let twice = project_to_domain(&once, &f, level).unwrap();
        for (a, b) in once.samples.iter().zip(&twice.samples) {
            prop_assert!((&a.v - &b.v).amax() < 1e-12);
        }
        prop_assert!(once.max_level_deviation(&f, level).unwrap() < 1e-9);
        prop_assert_eq!(once.total_weight(), ens.total_weight());
    }

    #[test]
    fn labtime_projection_solves_linear_level(
        v in timelike_velocity(),
        level in 0.5f64..2.0,
    ) {
        let m = Arc::new(catalog::minkowski(4).with_labtime(catalog::coordinate_labtime(4)));
        let f = indicator_labtime(&m).unwrap();
        let mut v = v;
        v[0] = v[0].abs();
        let ens = ParticleEnsemble::new(vec![PhasePoint::new(vec![0.0; 4], v)], vec![1.0]);
        let out = project_to_domain(&ens, &f, level).unwrap();
        prop_assert!((out.samples[0].v[0] - level).abs() < 1e-12);
    }

    #[test]
    fn free_trajectories_are_straight_lines(
        v in timelike_velocity(),
        span in 0.1f64..2.0,
    ) {
        let m = Arc::new(catalog::minkowski(4));
        let w = geodesic_field(&m);
        let u0 = PhasePoint::new(vec![0.0; 4], v);
        let prol = integrate(&w, &u0, (0.0, span), 50).unwrap();
        let last = prol.points.last().unwrap();
        prop_assert!((&last.x - &u0.v * span).amax() < 1e-12);
        prop_assert!((&last.v - &u0.v).amax() < 1e-12);
    }
}

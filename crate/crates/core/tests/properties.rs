//! Invariants checked on random inputs.

use std::f64::consts::PI;

use bubble_forge::constants::{derive_table, Normalization};
use bubble_forge::diagnostics::{lk_eval, norm_estimate, weight_eval, WeightKind, WeightedSampleSet};
use bubble_forge::geometry::{scale_transform, sector_of, w_eval, Configuration, ScaleDirection, Side};
use bubble_forge::lattice::{cross_sum_exact, ring_sum_exact};
use bubble_forge::params::ModelParams;
use bubble_forge::quadrature::{energy_total, interaction_integral, QuadratureSpec};
use proptest::prelude::*;

fn rotate(y: &[f64], a: f64) -> Vec<f64> {
    let mut z = y.to_vec();
    z[0] = a.cos() * y[0] - a.sin() * y[1];
    z[1] = a.sin() * y[0] + a.cos() * y[1];
    z
}

fn reflect(y: &[f64], axis: usize) -> Vec<f64> {
    let mut z = y.to_vec();
    z[axis] = -z[axis];
    z
}

fn config(k: usize, r: f64, h: f64, lambda: f64) -> Configuration {
    Configuration::new(r, h, lambda, ModelParams::default().at_k(k)).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

prop_compose! {
    fn point()(v in prop::collection::vec(-3.0f64..3.0, 5)) -> Vec<f64> { v }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ansatz_and_residual_are_symmetric(
        k in 2usize..24, r in 0.5f64..3.0, h in 0.05f64..0.95, lambda in 0.5f64..3.0, y in point(), s in 0usize..24,
    ) {
        let c = config(k, r, h, lambda);
        let a = 2.0 * PI * (s % k) as f64 / k as f64;
        let images = [rotate(&y, a), reflect(&y, 2), reflect(&y, 1), reflect(&y, 3)];
        let (w, l) = (w_eval(&c, &y), lk_eval(&c, &y));
        let ws = weight_eval(WeightKind::Star, &c, &y);
        for z in &images {
            prop_assert!(close(w, w_eval(&c, z), 1e-12));
            prop_assert!(close(l, lk_eval(&c, z), 1e-12) || (l - lk_eval(&c, z)).abs() < 1e-12 * w.powf(7.0 / 3.0));
            prop_assert!(close(ws, weight_eval(WeightKind::Star, &c, z), 1e-12));
        }
    }

    #[test]
    fn sectors_partition_and_rotate(k in 2usize..40, rho in 0.1f64..10.0, frac in 0.01f64..0.99, j0 in 0usize..40, z in -1.0f64..1.0) {
        let j0 = j0 % k;
        let th = 2.0 * PI * (j0 as f64 + frac - 0.5) / k as f64;
        let y = [rho * th.cos(), rho * th.sin(), z, 0.0, 0.0];
        let (j, side) = sector_of(&y, k).unwrap();
        prop_assert_eq!(j, j0 + 1);
        prop_assert_eq!(side, if z >= 0.0 { Side::Plus } else { Side::Minus });
        let y2 = rotate(&y, 2.0 * PI / k as f64);
        prop_assert_eq!(sector_of(&y2, k).unwrap().0, (j0 + 1) % k + 1);
    }

    #[test]
    fn lattice_sums_scale_homogeneously(k in 2usize..200, r in 0.1f64..10.0, c in 0.1f64..10.0, h in 0.01f64..0.9, p in 1.5f64..6.0) {
        prop_assert!(close(ring_sum_exact(c * r, h, k, p).unwrap(), c.powf(-p) * ring_sum_exact(r, h, k, p).unwrap(), 1e-12));
        prop_assert!(close(cross_sum_exact(c * r, h, k, p).unwrap(), c.powf(-p) * cross_sum_exact(r, h, k, p).unwrap(), 1e-12));
    }

    #[test]
    fn scale_transform_round_trip(rhat in 0.5f64..100.0, y in point()) {
        let f = |v: &[f64]| (1.0 + v.iter().map(|x| x * x).sum::<f64>()).powf(-1.5);
        let there = scale_transform(f, rhat, ScaleDirection::ToSphereSide);
        let back = scale_transform(there, rhat, ScaleDirection::ToScaledSide);
        prop_assert!(close(back(&y), f(&y), 1e-13));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn interaction_depends_on_lambda_d_only(d in 0.5f64..30.0, lambda in 0.3f64..3.0) {
        let spec = QuadratureSpec::default();
        let a = interaction_integral(d, lambda, 5, &spec).unwrap();
        let b = interaction_integral(lambda * d, 1.0, 5, &spec).unwrap();
        prop_assert!(close(a.value, b.value, 1e-9));
    }

    #[test]
    fn norm_estimate_grows_with_samples(k in 4usize..40, cut in 0.1f64..0.9) {
        let p = ModelParams::default().at_k(k);
        let t = derive_table(&p, Normalization::Bubble, 1e-12).unwrap();
        let c = Configuration::new(p.rhat(), t.hhat(k), t.lambda0, p).unwrap();
        let full = WeightedSampleSet::structured(&c);
        let n = ((full.count() as f64) * cut) as usize;
        let part = WeightedSampleSet { points: full.points[..n].to_vec(), strategy: "prefix".into() };
        let f = |y: &[f64]| lk_eval(&c, y);
        prop_assert!(norm_estimate(WeightKind::StarStar, &c, f, &part) <= norm_estimate(WeightKind::StarStar, &c, f, &full));
    }
}

#[test]
fn energy_is_identical_across_thread_counts() {
    let p = ModelParams::default().at_k(6);
    let c = Configuration::new(p.rhat(), 0.5, 1.0, p).unwrap();
    let spec = QuadratureSpec {
        samples: 100_000,
        ..QuadratureSpec::default()
    };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| energy_total(&c, &spec).unwrap())
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.total.to_bits(), b.total.to_bits());
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    let other = energy_total(&c, &QuadratureSpec { seed: 7, ..spec }).unwrap();
    assert_ne!(other.potential_part.to_bits(), a.potential_part.to_bits());
}

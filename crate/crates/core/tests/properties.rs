//! Randomized structural invariants of the operator calculus.

use kernprod::*;
use proptest::prelude::*;

fn kernel_strategy(p: usize) -> impl Strategy<Value = PositiveKernel> {
    proptest::collection::vec(0.01f64..2.0, p * p)
        .prop_map(move |entries| PositiveKernel::dense(p, entries).unwrap())
}

fn measure_strategy(p: usize) -> impl Strategy<Value = SignedMeasure> {
    proptest::collection::vec(-1.0f64..1.0, p).prop_map(SignedMeasure::new)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn op_norm_submultiplicative(a in kernel_strategy(4), b in kernel_strategy(4)) {
        let ab = a.compose(&b).unwrap();
        prop_assert!(ab.op_norm() <= a.op_norm() * b.op_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn tv_distance_metric(
        mu1 in measure_strategy(5),
        mu2 in measure_strategy(5),
        mu3 in measure_strategy(5),
    ) {
        let d12 = tv_distance(&mu1, &mu2).unwrap();
        let d21 = tv_distance(&mu2, &mu1).unwrap();
        let d13 = tv_distance(&mu1, &mu3).unwrap();
        let d32 = tv_distance(&mu3, &mu2).unwrap();
        prop_assert!((d12 - d21).abs() < 1e-12);
        prop_assert!(d12 <= d13 + d32 + 1e-12);
    }

    #[test]
    fn projective_step_scale_invariant(
        q in kernel_strategy(3),
        w in proptest::collection::vec(0.01f64..1.0, 3),
        scale in 0.1f64..100.0,
    ) {
        let mu = SignedMeasure::new(w);
        let (pi, _) = projective_step(&mu, &q).unwrap();
        let (pi_scaled, _) = projective_step(&mu.scale(scale), &q).unwrap();
        prop_assert!(tv_distance(&pi, &pi_scaled).unwrap() < 1e-12);
    }

    #[test]
    fn duality_pairing(
        q in kernel_strategy(4),
        w in proptest::collection::vec(-1.0f64..1.0, 4),
        v in proptest::collection::vec(-1.0f64..1.0, 4),
    ) {
        let mu = SignedMeasure::new(w);
        let f = BoundedFunction::new(v);
        let lhs = mu.pair(&q.act_right(&f).unwrap()).unwrap();
        let rhs = q.act_left(&mu).unwrap().pair(&f).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn hilbert_distance_projective_metric(
        u in proptest::collection::vec(0.01f64..10.0, 4),
        v in proptest::collection::vec(0.01f64..10.0, 4),
        scale in 0.1f64..10.0,
    ) {
        let d = hilbert_distance(&u, &v);
        prop_assert!(d >= -1e-12);
        let scaled: Vec<f64> = u.iter().map(|x| x * scale).collect();
        prop_assert!((hilbert_distance(&scaled, &v) - d).abs() < 1e-9);
        prop_assert!((hilbert_distance(&v, &u) - d).abs() < 1e-12);
    }
}

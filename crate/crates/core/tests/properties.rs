use std::f64::consts::PI;

use kuramoto_graphon::finite::{order_parameter, FiniteSystem};
use kuramoto_graphon::freqdist::FrequencyModel;
use kuramoto_graphon::graphon::{cut_norm_estimate, Graphon, SampleMode, SamplePoints, StepGraphon};
use kuramoto_graphon::instance::{GraphKind, Instance, InstanceSpec};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn symmetric(n: usize, vals: &[f64]) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    let mut it = vals.iter().cycle();
    for j in 0..n {
        for k in 0..j {
            let v = *it.next().unwrap();
            a[(j, k)] = v;
            a[(k, j)] = v;
        }
    }
    a
}

fn system() -> impl Strategy<Value = (FiniteSystem, DVector<f64>)> {
    (3usize..20).prop_flat_map(|n| {
        (
            prop::collection::vec(-1.0f64..1.0, n),
            prop::collection::vec(0.0f64..1.0, 1..64),
            prop::collection::vec(-PI..PI, n),
            0.1f64..10.0,
        )
            .prop_map(move |(omega, w, u, k)| {
                let sys = FiniteSystem::new(omega, symmetric(n, &w), k).unwrap();
                (sys, DVector::from_vec(u))
            })
    })
}

fn model() -> impl Strategy<Value = FrequencyModel> {
    prop_oneof![
        Just(FrequencyModel::Uniform),
        Just(FrequencyModel::ArcsineCosine),
        Just(FrequencyModel::CauchyLike),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn order_parameter_is_a_modulus(theta in prop::collection::vec(-10.0f64..10.0, 1..50)) {
        let r = order_parameter(&theta);
        prop_assert!((0.0..=1.0).contains(&r));
        let shifted: Vec<f64> = theta.iter().map(|t| t + 1.234).collect();
        prop_assert!((order_parameter(&shifted) - r).abs() < 1e-12);
    }

    #[test]
    fn jacobian_structure((sys, u) in system()) {
        let j = sys.jacobian(&u);
        prop_assert!((&j - j.transpose()).amax() <= 1e-14);
        prop_assert!(j.column_sum().amax() <= 1e-12);
    }

    #[test]
    fn coupling_is_balanced_and_rotation_invariant((sys, u) in system(), c in -PI..PI) {
        // a symmetric network exerts no net torque
        prop_assert!(sys.coupling_term(&u).sum().abs() <= 1e-12);
        let g = sys.rhs(&u, 0.3);
        let g_shift = sys.rhs(&u.add_scalar(c), 0.3);
        prop_assert!((g - g_shift).amax() <= 1e-12);
    }

    #[test]
    fn quantile_inverts_cdf(m in model(), x in 1e-9f64..(1.0 - 1e-9)) {
        let w = m.quantile(x).unwrap();
        prop_assert!((-1.0..=1.0).contains(&w));
        prop_assert!((m.cdf(w) - x).abs() <= 1e-10);
        prop_assert!((m.omega(x) - w).abs() <= 1e-10);
    }

    #[test]
    fn cut_norm_bounds(n in 2usize..30, a in prop::collection::vec(0.0f64..1.0, 1..64), b in prop::collection::vec(0.0f64..1.0, 1..64), seed: u64) {
        let s = StepGraphon::from_matrix(symmetric(n, &a)).unwrap();
        let t = StepGraphon::from_matrix(symmetric(n, &b)).unwrap();
        let st = cut_norm_estimate(&s, &t, 4, seed).unwrap();
        let ts = cut_norm_estimate(&t, &s, 4, seed).unwrap();
        let d = s.weights() - t.weights();
        let l1 = d.abs().sum() / (n * n) as f64;
        prop_assert!(st.value >= 0.0 && st.value <= l1 + 1e-12);
        // the full square is always a candidate rectangle
        prop_assert!(st.value >= d.sum().abs() / (n * n) as f64 - 1e-12);
        if n <= 14 {
            prop_assert!((st.value - ts.value).abs() <= 1e-12);
        }
        prop_assert_eq!(cut_norm_estimate(&s, &s, 4, seed).unwrap().value, 0.0);
    }

    #[test]
    fn sample_points_are_sorted_in_the_unit_interval(n in 1usize..200, seed: u64) {
        for mode in [SampleMode::IidUniform, SampleMode::StratifiedUniform, SampleMode::Midpoint, SampleMode::Deterministic] {
            let pts = SamplePoints::generate(n, mode, seed).unwrap();
            let x = pts.as_slice();
            prop_assert_eq!(x.len(), n);
            prop_assert!(x.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn sampled_graphs_are_simple(n in 2usize..60, p in 0.01f64..1.0, seed: u64) {
        let spec = InstanceSpec {
            n,
            graphon: Graphon::ErdosRenyi { p },
            model: FrequencyModel::Uniform,
            mode: SampleMode::IidUniform,
            kind: GraphKind::Simple,
        };
        let inst = Instance::sample(&spec, seed).unwrap();
        prop_assert!(inst.graph.is_symmetric() && inst.graph.has_zero_diagonal());
        prop_assert!(inst.graph.weights().iter().all(|&w| w == 0.0 || w == 1.0));
        let again = Instance::sample(&spec, seed).unwrap();
        prop_assert_eq!(inst.graph.weights(), again.graph.weights());
    }
}

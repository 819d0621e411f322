use kuramoto_graphon::continuation::{measure_kcrit, KcritMethod, KcritOptions, Strategy};
use kuramoto_graphon::freqdist::FrequencyModel;
use kuramoto_graphon::graphon::{Graphon, SampleMode};
use kuramoto_graphon::instance::{GraphKind, InstanceSpec};
use kuramoto_graphon::meanfield::critical_coupling;
use kuramoto_graphon::rng::derive_seed;

fn er_cosine(n: usize) -> InstanceSpec {
    InstanceSpec {
        n,
        graphon: Graphon::ErdosRenyi { p: 0.5 },
        model: FrequencyModel::ArcsineCosine,
        mode: SampleMode::IidUniform,
        kind: GraphKind::Simple,
    }
}

#[test]
fn fold_tracking_and_bisection_agree() {
    let spec = er_cosine(200);
    let opts = KcritOptions::default();
    for r in 0..10 {
        let seed = derive_seed(31, 200, r, "cross-method");
        let fold = measure_kcrit(&spec, seed, Strategy::FoldTracking, &opts).unwrap();
        let sweep = measure_kcrit(&spec, seed, Strategy::SweepBisection, &opts).unwrap();
        assert_eq!(fold.method, KcritMethod::FoldTracking);
        assert_eq!(sweep.method, KcritMethod::SweepBisection);
        let diff = (fold.k_crit_n - sweep.k_crit_n).abs();
        assert!(diff <= 5e-3, "seed {seed}: fold {} vs sweep {}", fold.k_crit_n, sweep.k_crit_n);
    }
}

#[test]
fn finite_n_critical_coupling_approaches_the_graphon_value() {
    let k_crit = critical_coupling(&FrequencyModel::ArcsineCosine, 0.5).unwrap();
    let median_gap = |n: usize| {
        let mut gaps: Vec<f64> = (0..20)
            .map(|r| {
                let seed = derive_seed(47, n, r, "trend");
                let res = measure_kcrit(&er_cosine(n), seed, Strategy::FoldTracking, &KcritOptions::default()).unwrap();
                assert!((res.reference_k_crit.unwrap() - k_crit).abs() < 1e-12);
                (res.k_crit_n - k_crit).abs()
            })
            .collect();
        gaps.sort_by(f64::total_cmp);
        0.5 * (gaps[9] + gaps[10])
    };
    let (small, large) = (median_gap(100), median_gap(400));
    assert!(large < small, "median gap n=100 {small}, n=400 {large}");
}

#[test]
fn cauchy_like_fold_matches_reported_value() {
    let spec = InstanceSpec { model: FrequencyModel::CauchyLike, ..er_cosine(500) };
    let ks: Vec<f64> = (0..10)
        .map(|r| {
            let res = measure_kcrit(&spec, derive_seed(3, 500, r, "cauchy"), Strategy::Auto, &KcritOptions::default()).unwrap();
            assert_eq!(res.method, KcritMethod::FoldTracking);
            res.k_crit_n
        })
        .collect();
    let mean = ks.iter().sum::<f64>() / ks.len() as f64;
    assert!((mean - 2.4265).abs() <= 0.05 * 2.4265, "{ks:?}");
}

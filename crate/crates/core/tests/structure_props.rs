use std::collections::BTreeMap;

use ellis_core::algebra::CheckMode;
use ellis_core::envelope::{exact_envelope, theta_check_exact};
use ellis_core::hyperspace::{build_hyper_model, hausdorff_distance, HyperPoint};
use ellis_core::properties::{
    build_cover, classify_transitivity, distal_semiflow_check, equicontinuity_scan, hitting_set,
    strong_transitivity_check, CoverSpec, OpenSet,
};
use ellis_core::spaces::load_model;
use ellis_core::verify::check_table;
use ellis_core::{CascadeModel, PointId};
use proptest::prelude::*;

fn table() -> impl Strategy<Value = Vec<usize>> {
    (1usize..=8).prop_flat_map(|n| {
        prop_oneof![
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            prop::collection::vec(0..n, n),
        ]
    })
}

fn line_model(t: Vec<usize>, positions: &[f64]) -> CascadeModel {
    let n = t.len();
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = (positions[i] - positions[j]).abs();
        }
    }
    CascadeModel::finite("random", t, Some(m)).unwrap()
}

fn positions(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 + 0.25 * (i % 3) as f64).collect()
}

fn catalog(name: &str, params: &[(&str, &str)]) -> CascadeModel {
    let p: BTreeMap<String, String> = params
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    load_model(name, &p).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn theorem_checks_hold(t in table()) {
        for (check, ok, detail) in check_table(&t).unwrap() {
            prop_assert!(ok, "{check}: {detail}");
        }
    }

    #[test]
    fn exact_envelope_products_compose(t in table()) {
        let env = exact_envelope(&t, 1000).unwrap();
        let s = ellis_core::algebra::FiniteSemigroup::new(
            env.semigroup().unwrap().rows(), Some(0), None, env.maps().iter().enumerate().map(|(k, _)| env.name(k)).collect(), CheckMode::Assert,
        );
        prop_assert!(s.is_ok());
        for a in 0..env.len() {
            for b in 0..env.len() {
                let composed: Vec<usize> = env.map(b).iter().map(|&y| env.map(a)[y]).collect();
                prop_assert_eq!(env.map(env.product(a, b)), composed.as_slice());
            }
        }
    }

    #[test]
    fn hausdorff_is_a_metric(t in table(), picks in prop::collection::vec(prop::collection::vec(0usize..8, 1..3), 3)) {
        let n = t.len();
        let m = line_model(t, &positions(n));
        let sets: Vec<HyperPoint> = picks
            .iter()
            .map(|p| HyperPoint::new(p.iter().map(|&i| PointId(i % n)).collect()).unwrap())
            .collect();
        let d = |a: &HyperPoint, b: &HyperPoint| hausdorff_distance(&m, a, b).unwrap();
        for a in &sets {
            for b in &sets {
                prop_assert_eq!(d(a, b), d(b, a));
                prop_assert_eq!(d(a, b) == 0.0, a == b);
                for c in &sets {
                    prop_assert!(d(a, c) <= d(a, b) + d(b, c) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn theta_is_a_homomorphism(t in table()) {
        let n = t.len();
        let m = line_model(t.clone(), &positions(n));
        let h = build_hyper_model(&m, 2, 10_000).unwrap();
        let be = exact_envelope(&t, 10_000).unwrap();
        let he = exact_envelope(h.table(), 10_000).unwrap();
        let r = theta_check_exact(&be, &he, &h).unwrap();
        prop_assert!(r.well_defined && r.injective && r.surjective);
        prop_assert!(r.homomorphism_violations.is_empty());
    }

    #[test]
    fn transitivity_witness_survives_longer_horizons(t in table(), h in 1u64..12) {
        let m = line_model(t.clone(), &positions(t.len()));
        let cover = build_cover(&m, &CoverSpec::Auto);
        let short = classify_transitivity(&m, h, &cover, 1).unwrap();
        let long = classify_transitivity(&m, h + 7, &cover, 1).unwrap();
        if short.transitive.holds() {
            prop_assert!(long.transitive.holds());
        }
        prop_assert!(short.chain_ok && long.chain_ok);
    }

    #[test]
    fn strong_transitivity_is_minimality_for_permutations(p in (1usize..=8).prop_flat_map(|n| Just((0..n).collect::<Vec<_>>()).prop_shuffle())) {
        let n = p.len();
        let m = line_model(p, &positions(n));
        let cover = build_cover(&m, &CoverSpec::Auto);
        let r = strong_transitivity_check(&m, n as u64, &cover).unwrap();
        prop_assert!(r.agrees_with_minimality && r.chain_ok);
    }

    #[test]
    fn distal_models_are_groups_and_equicontinuous(t in table()) {
        let m = line_model(t.clone(), &positions(t.len()));
        let d = distal_semiflow_check(&m).unwrap();
        prop_assert!(d.consequences_hold);
        if d.distal {
            let env = exact_envelope(&t, 1000).unwrap();
            let s = env.semigroup().unwrap();
            prop_assert!(ellis_core::algebra::is_group_distal(&s, CheckMode::Assert).unwrap().is_group);
            let cover = build_cover(&m, &CoverSpec::Auto);
            let eq = equicontinuity_scan(&m, &[0.1], 20, &cover).unwrap();
            prop_assert!(eq.equicontinuous.holds());
        }
    }
}

#[test]
fn full_shift_hits_immediately() {
    let m = catalog("full-shift", &[("symbols", "2")]);
    let u = OpenSet::Cylinder {
        offset: 0,
        symbols: vec![1],
    };
    let v = OpenSet::Cylinder {
        offset: 0,
        symbols: vec![0],
    };
    assert_eq!(
        hitting_set(&m, &u, &v, 10).unwrap(),
        (1..=10).collect::<Vec<_>>()
    );
}

#[test]
fn invariant_circles_never_meet() {
    let m = catalog("double-circle-rotation", &[]);
    let radius = |i: usize| m.space().point(i)[0];
    let inner = (0..m.len()).find(|&i| radius(i) == 1.0).unwrap();
    let outer = (0..m.len()).find(|&i| radius(i) == 2.0).unwrap();
    let u = OpenSet::Ball {
        center: inner,
        radius: 0.5,
    };
    let v = OpenSet::Ball {
        center: outer,
        radius: 0.5,
    };
    assert!(hitting_set(&m, &u, &v, 200).unwrap().is_empty());
}

#[test]
fn empty_open_set_rejected() {
    let m = catalog("full-shift", &[("symbols", "2")]);
    let u = OpenSet::Cylinder {
        offset: 0,
        symbols: vec![5],
    };
    let v = OpenSet::Cylinder {
        offset: 0,
        symbols: vec![0],
    };
    assert!(hitting_set(&m, &u, &v, 5).is_err());
}

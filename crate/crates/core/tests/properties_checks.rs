use std::collections::BTreeMap;

use ellis_core::envelope::{approx_envelope, ApproxOptions};
use ellis_core::properties::{
    build_cover, classify_transitivity, equicontinuity_scan, recurrence_report, rigidity_battery,
    strong_transitivity_check, wap_proxy_check, wap_proxy_exact, CoverSpec,
};
use ellis_core::spaces::load_model;
use ellis_core::CascadeModel;

fn catalog(name: &str, params: &[(&str, &str)]) -> CascadeModel {
    let p: BTreeMap<String, String> = params
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    load_model(name, &p).unwrap()
}

/// Denominators of the continued-fraction convergents of `(sqrt 5 - 1) / 2`,
/// from the integer recurrence `q_k = a_k q_(k-1) + q_(k-2)` with all `a_k = 1`.
fn golden_denominators(limit: u64) -> Vec<u64> {
    let mut q = vec![1u64, 1];
    while *q.last().unwrap() <= limit {
        let k = q.len();
        q.push(q[k - 1] + q[k - 2]);
    }
    q
}

#[test]
fn rotation_uniformly_rigid_at_a_convergent() {
    let m = catalog("irrational-rotation", &[]);
    let r = rigidity_battery(&m, 1000, 0.02, 3, 1).unwrap();
    assert!(r.uniformly_rigid.holds() && r.rigid.holds() && r.weakly_rigid.holds());
    let n = r.uniformly_rigid.witness["witness_n"].as_u64().unwrap();
    assert!(golden_denominators(1000).contains(&n), "witness {n}");
}

#[test]
fn inward_stack_rigid_but_not_uniformly() {
    let m = catalog("dyadic-circle-stack-inward", &[]);
    let r = rigidity_battery(&m, 512, 0.02, 3, 1).unwrap();
    assert!(r.rigid.holds());
    let n = r.rigid.witness["witness_n"].as_u64().unwrap();
    assert!(n.is_power_of_two());
    let r = rigidity_battery(&m, 512, 0.5, 3, 1).unwrap();
    assert!(!r.uniformly_rigid.holds());
    assert!(r.chain_ok);
}

#[test]
fn two_shift_not_weakly_rigid_and_sensitive() {
    let m = catalog("full-shift", &[("symbols", "2")]);
    let r = rigidity_battery(&m, 500, 0.4, 3, 1).unwrap();
    assert!(!r.weakly_rigid.holds());
    let cover = build_cover(&m, &CoverSpec::Auto);
    let eq = equicontinuity_scan(&m, &[0.25, 0.45], 40, &cover).unwrap();
    assert!(eq.sensitive.holds());
    assert!(eq.rows.iter().all(|row| row.equicontinuity_points == 0));
    let t = classify_transitivity(&m, 50, &cover, 10).unwrap();
    assert!(t.mixing.holds() && t.weakly_mixing.holds() && t.transitive.holds());
}

#[test]
fn golden_mean_shift_mixes() {
    let m = catalog("golden-mean-shift", &[]);
    let cover = build_cover(&m, &CoverSpec::Cylinders { max_len: 3 });
    assert!(classify_transitivity(&m, 50, &cover, 10)
        .unwrap()
        .mixing
        .holds());
}

#[test]
fn square_map_almost_equicontinuous() {
    let m = catalog("square-map", &[("grid", "201")]);
    let cover = build_cover(&m, &CoverSpec::Auto);
    let eq = equicontinuity_scan(&m, &[0.5], 40, &cover).unwrap();
    assert!(eq.almost_equicontinuous.holds());
    assert!(!eq.sensitive.holds());
    for &x in &eq.rows[0].failures {
        assert!(m.space().line_value(x).unwrap() > 0.98);
    }
    assert!(eq.rows[0].failures.contains(&200));
}

#[test]
fn rotation_equicontinuous() {
    let m = catalog("irrational-rotation", &[]);
    let eq = equicontinuity_scan(&m, &[0.1], 200, &build_cover(&m, &CoverSpec::Auto)).unwrap();
    assert!(eq.equicontinuous.holds());
}

#[test]
fn square_map_not_strongly_transitive() {
    let m = catalog("square-map", &[("grid", "101")]);
    let r = strong_transitivity_check(&m, 40, &build_cover(&m, &CoverSpec::Auto)).unwrap();
    assert!(!r.strongly_transitive.holds());
    assert_eq!(
        r.strongly_transitive.witness["sparse_backward_orbit"],
        "(0)"
    );
}

#[test]
fn periodic_stack_recurrence() {
    let m = catalog("periodic-stack", &[("n", "3"), ("truncate", "20")]);
    let r = recurrence_report(&m, 60, 1e-6, |i| m.space().label(i)).unwrap();
    for p in &r.points {
        let on_infinity = p.point.contains("inf");
        assert_eq!(p.recurrent, on_infinity, "{}", p.point);
        assert_eq!(p.nonwandering, on_infinity, "{}", p.point);
        if on_infinity {
            // returns only at multiples of 3, so no tail of consecutive returns
            assert!(p.almost_periodic && !p.essentially_nonwandering);
            assert_eq!(p.gap, Some(3));
        }
    }
}

#[test]
fn square_map_limits_discontinuous() {
    let m = catalog("square-map", &[("grid", "201")]);
    let env = approx_envelope(
        &m,
        &ApproxOptions {
            horizon: 40,
            tau: 1e-3,
            two_sided: true,
            max_elements: 256,
            close: true,
        },
    )
    .unwrap();
    let w = wap_proxy_check(&m, &env, &[0.25, 0.5]).unwrap();
    assert!(!w.all_elements_continuous);
    let g1 = w.elements.iter().find(|e| e.jumps.contains(&200)).unwrap();
    assert!(!g1.continuous);
}

#[test]
fn isolated_ones_limit_continuous() {
    let m = catalog("isolated-ones-subshift", &[]);
    let w = wap_proxy_exact(&m, &[0.25, 0.5], 10_000).unwrap();
    assert!(w.all_elements_continuous);
}

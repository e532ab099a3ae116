use std::collections::BTreeMap;

use ellis_core::algebra::{ideal_isomorphism_check, idempotents, minimal_left_ideals};
use ellis_core::envelope::{approx_envelope, ApproxEnvelope, ApproxOptions, Provenance};
use ellis_core::spaces::load_model;
use ellis_core::CascadeModel;

fn model(name: &str, grid: &str) -> CascadeModel {
    let p: BTreeMap<String, String> = [("grid".to_string(), grid.to_string())]
        .into_iter()
        .collect();
    load_model(name, &p).unwrap()
}

fn envelope(m: &CascadeModel, horizon: u64) -> ApproxEnvelope {
    approx_envelope(
        m,
        &ApproxOptions {
            horizon,
            tau: 1e-3,
            two_sided: true,
            max_elements: 512,
            close: true,
        },
    )
    .unwrap()
}

fn limit_by_witness(env: &ApproxEnvelope, w: i64) -> usize {
    env.limit_indices()
        .into_iter()
        .find(|&l| matches!(env.element(l).provenance, Provenance::Limit { witness, .. } if witness == w))
        .unwrap()
}

fn value(m: &CascadeModel, env: &ApproxEnvelope, k: usize, x: usize) -> f64 {
    m.space().metric().line_value(env.image(k, x)).unwrap()
}

#[test]
fn square_map_two_limits() {
    let m = model("square-map", "201");
    let env = envelope(&m, 40);
    assert!(env.stabilized());
    let limits = env.limit_indices();
    assert_eq!(limits.len(), 2);
    let g1 = limit_by_witness(&env, 40);
    let g2 = limit_by_witness(&env, -40);
    for x in 0..m.len() {
        let v = m.space().line_value(x).unwrap();
        let want1 = if v == 1.0 { 1.0 } else { 0.0 };
        let want2 = if v == 0.0 { 0.0 } else { 1.0 };
        assert!((value(&m, &env, g1, x) - want1).abs() < 1e-3, "g1 at {v}");
        assert!((value(&m, &env, g2, x) - want2).abs() < 1e-3, "g2 at {v}");
    }
    let t = env.table();
    let f = env.find("f^1").unwrap();
    for g in [g1, g2] {
        assert_eq!(t[g][g], g);
        assert_eq!(t[f][g], g);
    }
    assert_eq!(t[g1][g2], g2);
    assert_eq!(t[g2][g1], g1);
    let s = env.semigroup().unwrap();
    let mut idem = idempotents(&s);
    idem.retain(|&i| i != 0);
    assert_eq!(idem.len(), 2);
    let ideals = minimal_left_ideals(&s);
    assert_eq!(ideals, vec![vec![g1], vec![g2]]);
    let iso = ideal_isomorphism_check(&s, &ideals[0], &ideals[1]).unwrap();
    assert!(iso.isomorphic);
    assert_eq!(iso.orientation, "uv=v,vu=u");
}

#[test]
fn neg_cube_four_limits() {
    let m = model("neg-cube", "401");
    let env = envelope(&m, 60);
    assert_eq!(env.limit_indices().len(), 4);
    let (g, h, mm, n) = (
        limit_by_witness(&env, 60),
        limit_by_witness(&env, 59),
        limit_by_witness(&env, -60),
        limit_by_witness(&env, -59),
    );
    let sign = |v: f64| if v == 0.0 { 0.0 } else { v.signum() };
    for x in 0..m.len() {
        let v = m.space().line_value(x).unwrap();
        let edge = if v.abs() == 1.0 { v } else { 0.0 };
        let checks = [(g, edge), (h, -edge), (mm, sign(v)), (n, -sign(v))];
        for (k, want) in checks {
            assert!(
                (value(&m, &env, k, x) - want).abs() < 1e-3,
                "{} at {v}",
                env.element(k).name
            );
        }
    }
    let t = env.table();
    let f = env.find("f^1").unwrap();
    let products = [
        (mm, mm, mm),
        (n, n, mm),
        (mm, g, g),
        (g, mm, mm),
        (n, g, h),
        (g, n, n),
        (h, h, g),
        (h, n, mm),
        (mm, h, h),
        (g, h, h),
        (h, g, h),
        (g, g, g),
        (f, g, h),
        (f, h, g),
        (f, mm, n),
        (f, n, mm),
    ];
    for (a, b, c) in products {
        assert_eq!(
            t[a][b],
            c,
            "{} {}",
            env.element(a).name,
            env.element(b).name
        );
    }
}

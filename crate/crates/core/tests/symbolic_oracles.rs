use ellis_core::symbolic::{
    classify, cylinder_metric, entropy_estimates, language, language_counts, periodic_spectrum,
    verify_factor, ShiftDefinition, ShiftSpec, SlidingBlockCode, Subshift,
};
use proptest::prelude::*;

fn fibonacci_counts(n: usize) -> Vec<u128> {
    // |B_n|, n = 0..=max, of the golden mean shift: F(n+2) with F(1) = F(2) = 1.
    let mut f = vec![1u128, 1];
    while f.len() < n + 3 {
        let k = f.len();
        f.push(f[k - 1] + f[k - 2]);
    }
    (0..=n).map(|k| f[k + 1]).collect()
}

fn even_forbidden(word: &[u8]) -> bool {
    let ones: Vec<usize> = (0..word.len()).filter(|&i| word[i] == 1).collect();
    ones.windows(2).any(|w| (w[1] - w[0] - 1) % 2 == 1)
}

#[test]
fn golden_mean_counts_match_recurrence() {
    let g = Subshift::golden_mean();
    assert_eq!(language_counts(&g, 30), fibonacci_counts(30));
}

#[test]
fn golden_mean_entropy() {
    let g = Subshift::golden_mean();
    let r = entropy_estimates(&g, 24).unwrap();
    let log_phi = ((1.0 + 5f64.sqrt()) / 2.0).ln();
    let counts = fibonacci_counts(24);
    let oracle = (counts[24] as f64).ln() - (counts[23] as f64).ln();
    assert!((r.increment_estimate - oracle).abs() < 1e-12);
    assert!((r.spectral - log_phi).abs() < 1e-9);
    assert!((r.spectral - r.increment_estimate).abs() < 1e-6);
}

#[test]
fn even_shift_counts_match_brute_force() {
    let e = Subshift::even();
    let counts = language_counts(&e, 16);
    for (n, &count) in counts.iter().enumerate().skip(1) {
        let brute = (0u32..1 << n)
            .filter(|bits| {
                let w: Vec<u8> = (0..n).map(|i| (bits >> i & 1) as u8).collect();
                !even_forbidden(&w)
            })
            .count() as u128;
        assert_eq!(count, brute, "n = {n}");
    }
}

#[test]
fn golden_to_even_is_a_factor() {
    let code = SlidingBlockCode::golden_to_even();
    for n in [2, 4, 9, 16] {
        let r = verify_factor(&code, &Subshift::golden_mean(), &Subshift::even(), n).unwrap();
        assert!(r.into && r.onto, "n = {n}: {r:?}");
    }
}

#[test]
fn golden_mean_periodic_points_are_lucas() {
    let s = periodic_spectrum(&Subshift::golden_mean(), 12).unwrap();
    let mut lucas = vec![1u64, 3];
    while lucas.len() < 12 {
        let k = lucas.len();
        lucas.push(lucas[k - 1] + lucas[k - 2]);
    }
    assert_eq!(s.fixed, lucas);
    let least: Vec<i64> = (1..=12usize)
        .map(|n| {
            // points of least period n: remove those fixed by a proper divisor
            let mut exact = vec![0i64; n + 1];
            for d in 1..=n {
                if n % d == 0 {
                    exact[d] = lucas[d - 1] as i64
                        - (1..d).filter(|e| d % e == 0).map(|e| exact[e]).sum::<i64>();
                }
            }
            exact[n]
        })
        .collect();
    assert_eq!(s.least, least);
}

#[test]
fn classification() {
    assert!(classify(&Subshift::golden_mean()).primitive);
    let alternating = Subshift::new(ShiftDefinition {
        alphabet: "01".into(),
        spec: ShiftSpec::Forbidden {
            blocks: vec!["00".into(), "11".into()],
        },
        one_sided: false,
    })
    .unwrap();
    let c = classify(&alternating);
    assert!(c.irreducible && !c.primitive);
    assert_eq!(c.period, Some(2));
}

#[test]
fn cylinder_distance_examples() {
    assert_eq!(cylinder_metric("00100", "00100").unwrap().distance, 0.0);
    assert_eq!(cylinder_metric("00100", "10101").unwrap().distance, 0.25);
    assert_eq!(cylinder_metric("010", "000").unwrap().distance, 1.0);
}

fn forbidden_shift() -> impl Strategy<Value = Subshift> {
    prop::collection::vec("[01]{2,3}", 0..3).prop_filter_map("empty shift", |blocks| {
        Subshift::new(ShiftDefinition {
            alphabet: "01".into(),
            spec: ShiftSpec::Forbidden { blocks },
            one_sided: false,
        })
        .ok()
        .filter(|s| language_counts(s, 1)[1] > 0)
    })
}

proptest! {
    #[test]
    fn counts_submultiplicative(s in forbidden_shift()) {
        let c = language_counts(&s, 10);
        for m in 1..=5 {
            for n in 1..=5 {
                prop_assert!(c[m + n] <= c[m] * c[n]);
            }
        }
        for w in c.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn language_words_are_allowed(s in forbidden_shift()) {
        for w in language(&s, 6).unwrap() {
            let enc = s.encode(&w).unwrap();
            prop_assert!(s.contains_word(&enc));
            if let ShiftSpec::Forbidden { blocks } = &s.definition().spec {
                prop_assert!(blocks.iter().all(|b| !w.contains(b.as_str())));
            }
        }
    }

    #[test]
    fn spectral_entropy_bounded_by_rates(s in forbidden_shift()) {
        let r = entropy_estimates(&s, 12).unwrap();
        for row in &r.rows {
            prop_assert!(r.spectral <= row.rate + 1e-9);
        }
    }

    #[test]
    fn cylinder_metric_symmetric(x in "[01]{7}", y in "[01]{7}") {
        let a = cylinder_metric(&x, &y).unwrap();
        let b = cylinder_metric(&y, &x).unwrap();
        prop_assert_eq!(a.distance, b.distance);
        prop_assert_eq!(a.distance == 0.0, x == y);
    }
}

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Subshift;
use crate::spaces::{CascadeModel, Metric, MetricSpaceModel, PointMap, SequenceBank};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct WindowOptions {
    pub samples: usize,
    /// Sequences are stored on `[-reach, reach]`.
    pub reach: i64,
    /// Radius of the window metric.
    pub window: usize,
    pub seed: u64,
}

impl Default for WindowOptions {
    fn default() -> Self {
        WindowOptions {
            samples: 600,
            reach: 2100,
            window: 8,
            seed: 7,
        }
    }
}

fn is_primitive(w: &[u8]) -> bool {
    let n = w.len();
    (1..n)
        .filter(|d| n.is_multiple_of(*d))
        .all(|d| (0..n).any(|i| w[i] != w[i % d]))
}

fn is_min_rotation(w: &[u8]) -> bool {
    let n = w.len();
    (1..n).all(|r| {
        let rot: Vec<u8> = (0..n).map(|i| w[(i + r) % n]).collect();
        w <= rot.as_slice()
    })
}

/// Sample of the shift as a sampled model on `[sequence, offset]` pairs with
/// the left shift. Structured points come first: fixed points, short periodic
/// orbits and blocks `b^m` inside `a^inf`; the rest are random bi-infinite
/// paths of the presentation.
pub fn window_model(shift: &Subshift, opts: &WindowOptions) -> Result<CascadeModel> {
    if opts.samples == 0 || opts.reach < opts.window as i64 {
        return Err(Error::param(
            "reach",
            "need samples >= 1 and reach >= window",
        ));
    }
    let graph = shift.graph().essential(true);
    if graph.states == 0 {
        return Err(Error::BadShift("no bi-infinite paths".into()));
    }
    let r = opts.reach;
    let len = (2 * r + 1) as usize;
    let k = shift.alphabet().len() as u8;
    let mut seqs: Vec<Vec<u8>> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let structured_cap = opts.samples / 2;

    let fixed: Vec<u8> = (0..k).filter(|&a| shift.has_periodic_point(&[a])).collect();
    for &a in &fixed {
        seqs.push(vec![a; len]);
        names.push(format!("{}^inf", shift.decode(&[a])));
    }
    for p in 2..=4usize {
        for code in 0..(k as usize).pow(p as u32) {
            let w: Vec<u8> = (0..p)
                .map(|i| ((code / (k as usize).pow((p - 1 - i) as u32)) % k as usize) as u8)
                .collect();
            if is_primitive(&w) && is_min_rotation(&w) && shift.has_periodic_point(&w) {
                seqs.push(
                    (0..len)
                        .map(|i| w[(i as i64 - r).rem_euclid(p as i64) as usize])
                        .collect(),
                );
                names.push(format!("({})^inf", shift.decode(&w)));
            }
        }
    }
    for &a in &fixed {
        for b in (0..k).filter(|&b| b != a) {
            for m in 1..=7usize {
                let mut probe = vec![a; 12];
                probe.extend(std::iter::repeat_n(b, m));
                probe.extend(std::iter::repeat_n(a, 12));
                if !shift.contains_word(&probe) {
                    continue;
                }
                let seq = (0..len)
                    .map(|i| {
                        if (r as usize..r as usize + m).contains(&i) {
                            b
                        } else {
                            a
                        }
                    })
                    .collect();
                seqs.push(seq);
                let (sa, sb) = (shift.decode(&[a]), shift.decode(&[b]));
                names.push(format!("{sa}^inf {sb}^{m} {sa}^inf"));
            }
        }
    }
    seqs.truncate(structured_cap.max(1));
    names.truncate(seqs.len());

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    while seqs.len() < opts.samples {
        let mut seq = vec![0u8; len];
        let s0 = rng.gen_range(0..graph.states);
        let mut s = s0;
        for pos in 1..=r {
            let e = &graph.edges[graph.out[s][rng.gen_range(0..graph.out[s].len())]];
            seq[(r + pos) as usize] = e.label;
            s = e.to;
        }
        s = s0;
        for pos in (-r..=0).rev() {
            let e = &graph.edges[graph.inc[s][rng.gen_range(0..graph.inc[s].len())]];
            seq[(r + pos) as usize] = e.label;
            s = e.from;
        }
        names.push(format!("random#{}", seqs.len()));
        seqs.push(seq);
    }

    let coords = (0..seqs.len()).flat_map(|s| [s as f64, 0.0]).collect();
    let bank = Arc::new(SequenceBank::new(
        r,
        shift.alphabet().to_vec(),
        seqs,
        names.clone(),
    ));
    let metric = Metric::Shift {
        bank,
        radius: opts.window,
    };
    let space = MetricSpaceModel::new(2, coords, metric, false)?.with_labels(names);
    CascadeModel::new("window-model", BTreeMap::new(), space, PointMap::Shift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{PointId, SampledDynamics};

    fn small() -> WindowOptions {
        WindowOptions {
            samples: 60,
            reach: 40,
            window: 4,
            seed: 3,
        }
    }

    #[test]
    fn golden_samples_avoid_11() {
        let m = window_model(&Subshift::golden_mean(), &small()).unwrap();
        let Metric::Shift { bank, .. } = m.space().metric() else {
            panic!()
        };
        for s in 0..bank.len() {
            let w = bank.window(s, 0, 40);
            assert!(!w.contains("11"), "{}: {w}", bank.name(s));
        }
    }

    #[test]
    fn deterministic_bank() {
        let a = window_model(&Subshift::full(2), &small()).unwrap();
        let b = window_model(&Subshift::full(2), &small()).unwrap();
        assert_eq!(a.export_json().unwrap(), b.export_json().unwrap());
    }

    #[test]
    fn shift_metric_on_structured_points() {
        let m = window_model(&Subshift::full(2), &small()).unwrap();
        let zero = m.find_label("0^inf").unwrap();
        let one = m.find_label("0^inf 1^1 0^inf").unwrap();
        assert_eq!(m.metric(zero, one).unwrap(), 1.0);
        let mut img = [0.0; 2];
        m.advance(&[one.0 as f64, 0.0], -1, &mut img).unwrap();
        let moved = m.space().metric().distance(&[zero.0 as f64, 0.0], &img);
        assert_eq!(moved, 0.5);
        assert!(m.advance(&[one.0 as f64, 0.0], 40, &mut img).is_err());
        let _ = PointId(0);
    }
}

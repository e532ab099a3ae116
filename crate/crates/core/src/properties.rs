//! Horizon-bounded property checks. Every verdict is relative to the horizon
//! and tolerance it was computed with, and carries them in its output.

use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::envelope::{exact_envelope, ApproxEnvelope};
use crate::spaces::{CascadeModel, SampledDynamics};
use crate::{Error, Result};

/// Open set used in hitting-set computations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OpenSet {
    /// `{y : d(center, y) < radius}` around a sample point.
    Ball { center: usize, radius: f64 },
    /// Points whose coordinates `offset .. offset + len` read `symbols`.
    Cylinder { offset: i64, symbols: Vec<u8> },
    /// An explicit set of sample points; images are snapped before testing.
    Points { members: Vec<usize> },
}

impl OpenSet {
    pub fn contains<D: SampledDynamics + ?Sized>(&self, sys: &D, img: &[f64]) -> bool {
        match self {
            OpenSet::Ball { center, radius } => {
                let mut buf = vec![0.0; sys.stride()];
                sys.write_sample(*center, &mut buf);
                sys.image_dist(img, &buf) < *radius
            }
            OpenSet::Cylinder { offset, symbols } => {
                sys.symbols_at(img, *offset, symbols.len()).as_deref() == Some(symbols.as_slice())
            }
            OpenSet::Points { members } => members.contains(&sys.nearest_sample(img).0),
        }
    }

    /// Sample points inside the set.
    pub fn sample_members<D: SampledDynamics + ?Sized>(&self, sys: &D) -> Vec<usize> {
        let mut buf = vec![0.0; sys.stride()];
        (0..sys.sample_len())
            .filter(|&i| {
                sys.write_sample(i, &mut buf);
                self.contains(sys, &buf)
            })
            .collect()
    }

    pub fn describe(&self) -> String {
        match self {
            OpenSet::Ball { center, radius } => format!("B({center},{radius:.4})"),
            OpenSet::Cylinder { offset, symbols } => {
                let w: String = symbols.iter().map(|s| char::from(b'0' + s)).collect();
                format!("[{w}]@{offset}")
            }
            OpenSet::Points { members } => format!("{members:?}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl Verdict {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Verdict::Holds
        } else {
            Verdict::Fails
        }
    }

    pub fn holds(self) -> bool {
        self == Verdict::Holds
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PropertyVerdict {
    pub property: String,
    pub verdict: Verdict,
    pub horizon: u64,
    pub witness: Value,
}

impl PropertyVerdict {
    fn new(property: &str, holds: bool, horizon: u64, witness: Value) -> Self {
        PropertyVerdict {
            property: property.to_string(),
            verdict: Verdict::from_bool(holds),
            horizon,
            witness,
        }
    }

    pub fn holds(&self) -> bool {
        self.verdict.holds()
    }
}

/// How to build the default family of open sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CoverSpec {
    /// Cylinders for shift models, singletons for exact models, balls otherwise.
    Auto,
    Cylinders {
        max_len: usize,
    },
    Balls {
        radius: f64,
    },
    Singletons,
}

fn is_shift<D: SampledDynamics + ?Sized>(sys: &D) -> bool {
    let mut buf = vec![0.0; sys.stride()];
    sys.write_sample(0, &mut buf);
    sys.symbols_at(&buf, 0, 1).is_some()
}

/// Builds a cover of the sample. Every returned set meets the sample.
pub fn build_cover<D: SampledDynamics + ?Sized>(sys: &D, spec: &CoverSpec) -> Vec<OpenSet> {
    let spec = match spec {
        CoverSpec::Auto if is_shift(sys) => CoverSpec::Cylinders { max_len: 3 },
        CoverSpec::Auto if sys.is_exact() => CoverSpec::Singletons,
        CoverSpec::Auto => CoverSpec::Balls {
            radius: 4.0 * sys.resolution(),
        },
        other => other.clone(),
    };
    let n = sys.sample_len();
    let mut buf = vec![0.0; sys.stride()];
    match spec {
        CoverSpec::Singletons => (0..n)
            .map(|i| OpenSet::Points { members: vec![i] })
            .collect(),
        CoverSpec::Cylinders { max_len } => {
            let mut words = std::collections::BTreeSet::new();
            for i in 0..n {
                sys.write_sample(i, &mut buf);
                for len in 1..=max_len {
                    if let Some(w) = sys.symbols_at(&buf, 0, len) {
                        words.insert((len, w));
                    }
                }
            }
            words
                .into_iter()
                .map(|(_, symbols)| OpenSet::Cylinder { offset: 0, symbols })
                .collect()
        }
        CoverSpec::Balls { radius } => {
            let mut centers: Vec<usize> = Vec::new();
            let mut other = vec![0.0; sys.stride()];
            for i in 0..n {
                sys.write_sample(i, &mut buf);
                let covered = centers.iter().any(|&c| {
                    sys.write_sample(c, &mut other);
                    sys.image_dist(&buf, &other) < radius
                });
                if !covered {
                    centers.push(i);
                }
            }
            centers
                .into_iter()
                .map(|center| OpenSet::Ball { center, radius })
                .collect()
        }
        CoverSpec::Auto => unreachable!(),
    }
}

/// Calls `f(n, images)` for `n = 0..=horizon`, where `images` holds `f^n` of
/// every sample point (forward if `step` is 1, backward if -1).
fn for_each_iterate<D, F>(sys: &D, horizon: u64, step: i64, mut f: F) -> Result<()>
where
    D: SampledDynamics + ?Sized,
    F: FnMut(u64, &[f64]) -> Result<()>,
{
    let s = sys.stride();
    let mut cur = vec![0.0; s * sys.sample_len()];
    for (i, chunk) in cur.chunks_mut(s).enumerate() {
        sys.write_sample(i, chunk);
    }
    let mut next = cur.clone();
    f(0, &cur)?;
    for n in 1..=horizon {
        for (src, dst) in cur.chunks(s).zip(next.chunks_mut(s)) {
            sys.advance(src, step, dst)?;
        }
        std::mem::swap(&mut cur, &mut next);
        f(n, &cur)?;
    }
    Ok(())
}

#[derive(Clone, Debug, Default, PartialEq)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(len: usize) -> Self {
        Bits(vec![0; len.div_ceil(64)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    fn meets(&self, other: &Bits) -> bool {
        self.0.iter().zip(&other.0).any(|(a, b)| a & b != 0)
    }
}

/// `membership[v][n]`: samples whose `n`-th image lies in `cover[v]`.
fn membership<D: SampledDynamics + ?Sized>(
    sys: &D,
    cover: &[OpenSet],
    horizon: u64,
) -> Result<Vec<Vec<Bits>>> {
    let len = sys.sample_len();
    let s = sys.stride();
    let mut out = vec![Vec::with_capacity(horizon as usize + 1); cover.len()];
    for_each_iterate(sys, horizon, 1, |_, imgs| {
        for (v, set) in cover.iter().enumerate() {
            let mut bits = Bits::new(len);
            for (i, img) in imgs.chunks(s).enumerate() {
                if set.contains(sys, img) {
                    bits.set(i);
                }
            }
            out[v].push(bits);
        }
        Ok(())
    })?;
    Ok(out)
}

fn hits(u: &Bits, mem_v: &[Bits]) -> Bits {
    let mut out = Bits::new(mem_v.len());
    for (n, m) in mem_v.iter().enumerate().skip(1) {
        if u.meets(m) {
            out.set(n);
        }
    }
    out
}

/// `N(U, V) ∩ [1, horizon]`.
pub fn hitting_set<D: SampledDynamics + ?Sized>(
    sys: &D,
    u: &OpenSet,
    v: &OpenSet,
    horizon: u64,
) -> Result<Vec<u64>> {
    let members = u.sample_members(sys);
    if members.is_empty() || v.sample_members(sys).is_empty() {
        return Err(Error::EmptyOpenSet);
    }
    let s = sys.stride();
    let mut out = Vec::new();
    for_each_iterate(sys, horizon, 1, |n, imgs| {
        if n > 0
            && members
                .iter()
                .any(|&i| v.contains(sys, &imgs[i * s..(i + 1) * s]))
        {
            out.push(n);
        }
        Ok(())
    })?;
    Ok(out)
}

/// Longest run of consecutive members and the start of the maximal tail ending at `horizon`.
fn runs(set: &Bits, horizon: u64) -> (u64, Option<u64>) {
    let mut best = 0;
    let mut cur = 0;
    for n in 1..=horizon {
        if set.get(n as usize) {
            cur += 1;
            best = best.max(cur);
        } else {
            cur = 0;
        }
    }
    let tail = (cur > 0).then(|| horizon + 1 - cur);
    (best, tail)
}

#[derive(Clone, Debug, Serialize)]
pub struct TransitivityReport {
    pub horizon: u64,
    pub cover_size: usize,
    pub run_length: u64,
    pub transitive: PropertyVerdict,
    pub weakly_mixing: PropertyVerdict,
    pub mixing: PropertyVerdict,
    pub chain_ok: bool,
    /// `(U, V)` descriptions in row-major cover order.
    #[serde(skip)]
    pub pairs: Vec<(String, String)>,
    /// `N(U, V) ∩ [1, horizon]` for each pair.
    #[serde(skip)]
    pub hitting: Vec<Vec<u64>>,
}

/// Transitivity hierarchy on a cover. Mixing asks every `N(U,V)` to contain a
/// tail `[n0, horizon]` with `n0 <= horizon / 2` and length at least
/// `run_length`; weak mixing asks every `N(U,V)` to contain a run of length
/// `run_length` and every two hitting sets to meet.
pub fn classify_transitivity<D: SampledDynamics + ?Sized>(
    sys: &D,
    horizon: u64,
    cover: &[OpenSet],
    run_length: u64,
) -> Result<TransitivityReport> {
    if cover.is_empty() {
        return Err(Error::EmptyOpenSet);
    }
    let mem = membership(sys, cover, horizon)?;
    let starts: Vec<&Bits> = mem.iter().map(|m| &m[0]).collect();
    if let Some(k) = starts.iter().position(|b| b.0.iter().all(|w| *w == 0)) {
        return Err(Error::param(
            "cover",
            format!("set {} misses the sample", cover[k].describe()),
        ));
    }
    let mut sets = Vec::with_capacity(cover.len() * cover.len());
    for u in &starts {
        for m in &mem {
            sets.push(hits(u, m));
        }
    }
    let c = cover.len();
    let pair = |k: usize| json!([cover[k / c].describe(), cover[k % c].describe()]);

    let empty = sets.iter().position(|s| s.0.iter().all(|w| *w == 0));
    let transitive = match empty {
        Some(k) => PropertyVerdict::new(
            "transitive",
            false,
            horizon,
            json!({ "empty_pair": pair(k) }),
        ),
        None => {
            let first: Vec<u64> = sets
                .iter()
                .map(|s| (1..=horizon).find(|&n| s.get(n as usize)).unwrap())
                .collect();
            PropertyVerdict::new(
                "transitive",
                true,
                horizon,
                json!({ "max_first_hit": first.iter().max() }),
            )
        }
    };

    let info: Vec<(u64, Option<u64>)> = sets.iter().map(|s| runs(s, horizon)).collect();
    let thin = info.iter().position(|(best, _)| *best < run_length);
    let mut disjoint = None;
    'outer: for a in 0..sets.len() {
        for b in a..sets.len() {
            if !sets[a].meets(&sets[b]) {
                disjoint = Some((a, b));
                break 'outer;
            }
        }
    }
    let weakly_mixing = match (thin, disjoint) {
        (Some(k), _) => PropertyVerdict::new(
            "weakly_mixing",
            false,
            horizon,
            json!({ "thin_pair": pair(k), "longest_run": info[k].0 }),
        ),
        (None, Some((a, b))) => PropertyVerdict::new(
            "weakly_mixing",
            false,
            horizon,
            json!({ "disjoint_pairs": [pair(a), pair(b)] }),
        ),
        (None, None) => PropertyVerdict::new(
            "weakly_mixing",
            true,
            horizon,
            json!({ "min_longest_run": info.iter().map(|i| i.0).min() }),
        ),
    };

    let half = horizon / 2;
    let no_tail = info.iter().position(|(_, tail)| match tail {
        Some(t) => *t > half.max(1) || horizon + 1 - *t < run_length,
        None => true,
    });
    let mixing = match no_tail {
        Some(k) => PropertyVerdict::new(
            "mixing",
            false,
            horizon,
            json!({ "pair": pair(k), "tail_start": info[k].1 }),
        ),
        None => PropertyVerdict::new(
            "mixing",
            true,
            horizon,
            json!({ "max_tail_start": info.iter().filter_map(|i| i.1).max() }),
        ),
    };
    let chain_ok = (!mixing.holds() || weakly_mixing.holds())
        && (!weakly_mixing.holds() || transitive.holds());
    let pairs = (0..sets.len())
        .map(|k| (cover[k / c].describe(), cover[k % c].describe()))
        .collect();
    let hitting = sets
        .iter()
        .map(|s| (1..=horizon).filter(|&n| s.get(n as usize)).collect())
        .collect();
    Ok(TransitivityReport {
        horizon,
        cover_size: cover.len(),
        run_length,
        transitive,
        weakly_mixing,
        mixing,
        chain_ok,
        pairs,
        hitting,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct StrongTransitivityReport {
    pub strongly_transitive: PropertyVerdict,
    pub minimal: PropertyVerdict,
    pub transitive: bool,
    /// Strong transitivity and minimality agree (expected for invertible models).
    pub agrees_with_minimality: bool,
    pub chain_ok: bool,
}

fn cover_hits<D: SampledDynamics + ?Sized>(
    sys: &D,
    cover: &[OpenSet],
    img: &[f64],
    seen: &mut [bool],
) {
    for (k, set) in cover.iter().enumerate() {
        if !seen[k] && set.contains(sys, img) {
            seen[k] = true;
        }
    }
}

/// Backward orbits (strong transitivity) and forward orbits (minimality)
/// tested for density against a cover.
pub fn strong_transitivity_check(
    model: &CascadeModel,
    horizon: u64,
    cover: &[OpenSet],
) -> Result<StrongTransitivityReport> {
    let n = model.len();
    let s = model.stride();
    let mut back_dense = vec![true; n];
    let mut fwd_dense = vec![true; n];
    if model.is_exact() {
        let table = model.table()?;
        let mut pre = vec![Vec::new(); n];
        for (x, &y) in table.iter().enumerate() {
            pre[y].push(x);
        }
        for x in 0..n {
            let mut seen = vec![false; cover.len()];
            let mut level = vec![x];
            let mut visited = vec![false; n];
            for _ in 0..=horizon {
                let mut next = Vec::new();
                for &y in &level {
                    if !visited[y] {
                        visited[y] = true;
                        cover_hits(model, cover, &[y as f64], &mut seen);
                        next.extend(pre[y].iter().copied());
                    }
                }
                if next.is_empty() {
                    break;
                }
                level = next;
            }
            back_dense[x] = seen.iter().all(|b| *b);
            let mut seen = vec![false; cover.len()];
            let mut y = x;
            for _ in 0..=horizon {
                cover_hits(model, cover, &[y as f64], &mut seen);
                y = table[y];
            }
            fwd_dense[x] = seen.iter().all(|b| *b);
        }
    } else {
        if !model.invertible() {
            return Err(Error::PreimagesUnavailable);
        }
        for (step, dense) in [(-1i64, &mut back_dense), (1, &mut fwd_dense)] {
            let mut seen = vec![vec![false; cover.len()]; n];
            for_each_iterate(model, horizon, step, |_, imgs| {
                for (x, img) in imgs.chunks(s).enumerate() {
                    cover_hits(model, cover, img, &mut seen[x]);
                }
                Ok(())
            })?;
            for (d, s) in dense.iter_mut().zip(&seen) {
                *d = s.iter().all(|b| *b);
            }
        }
    }
    let strong_fail = back_dense.iter().position(|d| !d);
    let min_fail = fwd_dense.iter().position(|d| !d);
    let strongly_transitive = PropertyVerdict::new(
        "strongly_transitive",
        strong_fail.is_none(),
        horizon,
        match strong_fail {
            Some(x) => json!({ "sparse_backward_orbit": model.label(crate::PointId(x)) }),
            None => json!({ "points_checked": n }),
        },
    );
    let minimal = PropertyVerdict::new(
        "minimal",
        min_fail.is_none(),
        horizon,
        match min_fail {
            Some(x) => json!({ "sparse_forward_orbit": model.label(crate::PointId(x)) }),
            None => json!({ "points_checked": n }),
        },
    );
    let transitive = classify_transitivity(model, horizon, cover, 1)?
        .transitive
        .holds();
    Ok(StrongTransitivityReport {
        agrees_with_minimality: strongly_transitive.holds() == minimal.holds(),
        chain_ok: !strongly_transitive.holds() || transitive,
        strongly_transitive,
        minimal,
        transitive,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EpsilonRow {
    pub epsilon: f64,
    pub equicontinuity_points: usize,
    pub dense: bool,
    /// Labels of sample points that are not ε-equicontinuity points (first 16).
    pub failures: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquicontinuityReport {
    pub horizon: u64,
    pub rows: Vec<EpsilonRow>,
    /// Largest separation reached by nearest neighbours of each point.
    #[serde(skip)]
    pub oscillation: Vec<f64>,
    pub sensitivity_constant: f64,
    pub sensitive: PropertyVerdict,
    pub almost_equicontinuous: PropertyVerdict,
    pub equicontinuous: PropertyVerdict,
}

/// Nearest-neighbour sets: for exact models every point is isolated.
fn neighbours<D: SampledDynamics + ?Sized>(sys: &D) -> Vec<Vec<usize>> {
    let n = sys.sample_len();
    if sys.is_exact() {
        return vec![Vec::new(); n];
    }
    let s = sys.stride();
    let mut pts = vec![0.0; n * s];
    for (i, c) in pts.chunks_mut(s).enumerate() {
        sys.write_sample(i, c);
    }
    let mut d = vec![f64::INFINITY; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = sys.image_dist(&pts[i * s..(i + 1) * s], &pts[j * s..(j + 1) * s]);
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    (0..n)
        .map(|i| {
            let row = &d[i * n..(i + 1) * n];
            let nn = row.iter().copied().fold(f64::INFINITY, f64::min);
            (0..n)
                .filter(|&j| j != i && row[j] <= nn * (1.0 + 1e-9))
                .collect()
        })
        .collect()
}

/// A sample point is an ε-equicontinuity point when its nearest sample
/// neighbours stay ε-close to it under every `f^n`, `n <= horizon`.
pub fn equicontinuity_scan<D: SampledDynamics + ?Sized>(
    sys: &D,
    epsilons: &[f64],
    horizon: u64,
    cover: &[OpenSet],
) -> Result<EquicontinuityReport> {
    let nbrs = neighbours(sys);
    let s = sys.stride();
    let mut osc = vec![0.0f64; sys.sample_len()];
    for_each_iterate(sys, horizon, 1, |_, imgs| {
        for (y, ns) in nbrs.iter().enumerate() {
            for &z in ns {
                let d = sys.image_dist(&imgs[y * s..(y + 1) * s], &imgs[z * s..(z + 1) * s]);
                if d > osc[y] {
                    osc[y] = d;
                }
            }
        }
        Ok(())
    })?;
    let members: Vec<Vec<usize>> = cover.iter().map(|c| c.sample_members(sys)).collect();
    let rows: Vec<EpsilonRow> = epsilons
        .iter()
        .map(|&eps| {
            let good: Vec<bool> = osc.iter().map(|o| *o < eps).collect();
            EpsilonRow {
                epsilon: eps,
                equicontinuity_points: good.iter().filter(|g| **g).count(),
                dense: members.iter().all(|m| m.iter().any(|&i| good[i])),
                failures: (0..good.len()).filter(|&i| !good[i]).take(16).collect(),
            }
        })
        .collect();
    let constant = osc.iter().copied().fold(f64::INFINITY, f64::min);
    let eps_min = epsilons.iter().copied().fold(f64::INFINITY, f64::min);
    let all_points = rows.iter().all(|r| r.equicontinuity_points == osc.len());
    let ae = rows.iter().all(|r| r.dense);
    let worst = osc.iter().copied().fold(0.0, f64::max);
    Ok(EquicontinuityReport {
        horizon,
        sensitivity_constant: constant,
        sensitive: PropertyVerdict::new(
            "sensitive",
            constant >= eps_min,
            horizon,
            json!({ "constant": constant, "epsilon": eps_min }),
        ),
        almost_equicontinuous: PropertyVerdict::new(
            "almost_equicontinuous",
            ae,
            horizon,
            json!({ "epsilons": epsilons, "dense": rows.iter().map(|r| r.dense).collect::<Vec<_>>() }),
        ),
        equicontinuous: PropertyVerdict::new(
            "equicontinuous",
            all_points,
            horizon,
            json!({ "max_oscillation": worst }),
        ),
        rows,
        oscillation: osc,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HyperCrosscheck {
    pub k: usize,
    pub base: EquicontinuityReport,
    pub hyper: EquicontinuityReport,
    pub agree: bool,
}

/// Runs [`equicontinuity_scan`] on a model and on its hyperspace of subsets of size at most `k`.
pub fn hyper_equicontinuity_crosscheck(
    base: &CascadeModel,
    k: usize,
    epsilons: &[f64],
    horizon: u64,
) -> Result<HyperCrosscheck> {
    let hyper = crate::hyperspace::build_hyper_model(base, k, crate::hyperspace::DEFAULT_BUDGET)?;
    let base_cover = build_cover(base, &CoverSpec::Auto);
    let hyper_cover = build_cover(&hyper, &CoverSpec::Auto);
    let b = equicontinuity_scan(base, epsilons, horizon, &base_cover)?;
    let h = equicontinuity_scan(&hyper, epsilons, horizon, &hyper_cover)?;
    Ok(HyperCrosscheck {
        k,
        agree: b.almost_equicontinuous.verdict == h.almost_equicontinuous.verdict,
        base: b,
        hyper: h,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RigidityReport {
    pub tau: f64,
    pub horizon: u64,
    pub tuples_checked: usize,
    pub weakly_rigid: PropertyVerdict,
    pub rigid: PropertyVerdict,
    pub uniformly_rigid: PropertyVerdict,
    /// `max_x d(f^n x, x)` over the sample, indexed by `n - 1`.
    #[serde(skip)]
    pub returns: Vec<f64>,
    pub chain_ok: bool,
}

/// Return-time battery. Weak rigidity needs one `n` in `[1, H]` returning every
/// sampled tuple (and the whole sample) within `tau`; rigidity needs such an `n`
/// in `[ceil(H/2), H]`; uniform rigidity additionally returns the probe points.
pub fn rigidity_battery<D: SampledDynamics + ?Sized>(
    sys: &D,
    horizon: u64,
    tau: f64,
    tuple_size: usize,
    seed: u64,
) -> Result<RigidityReport> {
    if tau <= 0.0 {
        return Err(Error::param("tau", "must be positive"));
    }
    let s = sys.stride();
    let len = sys.sample_len();
    let mut start = vec![0.0; s * len];
    for (i, c) in start.chunks_mut(s).enumerate() {
        sys.write_sample(i, c);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = tuple_size.clamp(1, len);
    let tuples: Vec<Vec<usize>> = (0..64)
        .map(|_| sample_indices(&mut rng, len, k).into_vec())
        .collect();
    let mut tuple_ok = vec![false; tuples.len()];
    let mut returns = Vec::with_capacity(horizon as usize);
    let mut point_dist = vec![0.0; len];
    for_each_iterate(sys, horizon, 1, |n, imgs| {
        if n == 0 {
            return Ok(());
        }
        for (i, d) in point_dist.iter_mut().enumerate() {
            *d = sys.image_dist(&imgs[i * s..(i + 1) * s], &start[i * s..(i + 1) * s]);
        }
        for (t, ok) in tuples.iter().zip(tuple_ok.iter_mut()) {
            if t.iter().all(|&i| point_dist[i] < tau) {
                *ok = true;
            }
        }
        returns.push(point_dist.iter().copied().fold(0.0, f64::max));
        Ok(())
    })?;

    let plen = sys.probe_len();
    let mut probe_returns = vec![0.0; horizon as usize];
    if plen > 0 {
        let mut p = vec![0.0; s];
        let mut out = vec![0.0; s];
        for j in 0..plen {
            sys.write_probe(j, &mut p);
            for n in 1..=horizon {
                sys.advance(&p, n as i64, &mut out)?;
                let d = sys.image_dist(&out, &p);
                let r = &mut probe_returns[n as usize - 1];
                *r = f64::max(*r, d);
            }
        }
    }

    let late = horizon.div_ceil(2).max(1);
    let weak_n = (1..=horizon).find(|&n| returns[n as usize - 1] < tau);
    let rigid_n = (late..=horizon).find(|&n| returns[n as usize - 1] < tau);
    let uniform_n = (late..=horizon)
        .find(|&n| returns[n as usize - 1].max(probe_returns[n as usize - 1]) < tau);
    let closest = |from: u64, probes: bool| {
        (from..=horizon)
            .map(|n| {
                let i = n as usize - 1;
                if probes {
                    returns[i].max(probe_returns[i])
                } else {
                    returns[i]
                }
            })
            .fold(f64::INFINITY, f64::min)
    };
    let tuples_ok = tuple_ok.iter().all(|b| *b);
    let weakly_rigid = PropertyVerdict::new(
        "weakly_rigid",
        weak_n.is_some() && tuples_ok,
        horizon,
        json!({ "witness_n": weak_n, "closest": closest(1, false), "tuples_returned": tuple_ok.iter().filter(|b| **b).count() }),
    );
    let rigid = PropertyVerdict::new(
        "rigid",
        rigid_n.is_some(),
        horizon,
        json!({ "witness_n": rigid_n, "closest": closest(late, false) }),
    );
    let uniformly_rigid = PropertyVerdict::new(
        "uniformly_rigid",
        uniform_n.is_some(),
        horizon,
        json!({ "witness_n": uniform_n, "closest": closest(late, true), "probes": plen }),
    );
    let chain_ok =
        (!uniformly_rigid.holds() || rigid.holds()) && (!rigid.holds() || weakly_rigid.holds());
    Ok(RigidityReport {
        tau,
        horizon,
        tuples_checked: tuples.len(),
        weakly_rigid,
        rigid,
        uniformly_rigid,
        returns,
        chain_ok,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecurrenceFlags {
    pub point: String,
    pub recurrent: bool,
    pub nonwandering: bool,
    pub essentially_nonwandering: bool,
    pub almost_periodic: bool,
    /// Largest gap between consecutive returns, counting the start and the horizon.
    pub gap: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RecurrenceReport {
    pub horizon: u64,
    pub tau: f64,
    pub points: Vec<RecurrenceFlags>,
    pub counts: [usize; 4],
}

/// Per-point recurrence flags with `U = B(x, tau)`. A point is almost periodic
/// here when the gaps of `N(x, U)` stay below `horizon / 2`.
pub fn recurrence_report<D: SampledDynamics + ?Sized>(
    sys: &D,
    horizon: u64,
    tau: f64,
    labels: impl Fn(usize) -> String,
) -> Result<RecurrenceReport> {
    let len = sys.sample_len();
    let s = sys.stride();
    let mut start = vec![0.0; s * len];
    for (i, c) in start.chunks_mut(s).enumerate() {
        sys.write_sample(i, c);
    }
    let mut ball = vec![Vec::new(); len];
    for x in 0..len {
        for y in 0..len {
            if sys.image_dist(&start[x * s..(x + 1) * s], &start[y * s..(y + 1) * s]) < tau {
                ball[x].push(y);
            }
        }
    }
    let hsize = horizon as usize + 1;
    let mut self_hits = vec![Bits::new(hsize); len];
    let mut ball_hits = vec![Bits::new(hsize); len];
    for_each_iterate(sys, horizon, 1, |n, imgs| {
        if n == 0 {
            return Ok(());
        }
        for x in 0..len {
            let img_x = &imgs[x * s..(x + 1) * s];
            if sys.image_dist(img_x, &start[x * s..(x + 1) * s]) < tau {
                self_hits[x].set(n as usize);
            }
        }
        for x in 0..len {
            let center = &start[x * s..(x + 1) * s];
            let hit = ball[x]
                .iter()
                .any(|&y| sys.image_dist(&imgs[y * s..(y + 1) * s], center) < tau);
            if hit {
                ball_hits[x].set(n as usize);
            }
        }
        Ok(())
    })?;
    let half = horizon / 2;
    let mut counts = [0; 4];
    let points = (0..len)
        .map(|x| {
            let returns: Vec<u64> = (1..=horizon)
                .filter(|&n| self_hits[x].get(n as usize))
                .collect();
            let gap = (!returns.is_empty()).then(|| {
                let mut g = returns[0];
                for w in returns.windows(2) {
                    g = g.max(w[1] - w[0]);
                }
                g.max(horizon - returns[returns.len() - 1])
            });
            let (_, tail) = runs(&ball_hits[x], horizon);
            let flags = RecurrenceFlags {
                point: labels(x),
                recurrent: returns.len() >= 2,
                nonwandering: ball_hits[x].0.iter().any(|w| *w != 0),
                essentially_nonwandering: tail.is_some_and(|t| t <= half.max(1)),
                almost_periodic: gap.is_some_and(|g| g <= half.max(1)),
                gap,
            };
            for (c, f) in counts.iter_mut().zip([
                flags.recurrent,
                flags.nonwandering,
                flags.essentially_nonwandering,
                flags.almost_periodic,
            ]) {
                *c += f as usize;
            }
            flags
        })
        .collect();
    Ok(RecurrenceReport {
        horizon,
        tau,
        points,
        counts,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ElementModulus {
    pub name: String,
    /// Per ε, the largest scale δ (a multiple of the local sample spacing)
    /// with `d(x,y) < δ ⇒ d(px,py) < ε` at every sample point; `None` if it
    /// collapses below the sample spacing.
    pub delta: Vec<Option<f64>>,
    pub continuous: bool,
    /// Sample points where nearest neighbours are mapped at least the largest ε apart (first 16).
    pub jumps: Vec<usize>,
    pub max_jump: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct WapReport {
    pub epsilons: Vec<f64>,
    pub elements: Vec<ElementModulus>,
    pub all_elements_continuous: bool,
    pub worst_modulus: Vec<Option<f64>>,
}

fn modulus<D: SampledDynamics + ?Sized>(
    sys: &D,
    name: &str,
    images: &[f64],
    epsilons: &[f64],
    nbrs: &[Vec<usize>],
    starts: &[f64],
) -> ElementModulus {
    let s = sys.stride();
    let len = sys.sample_len();
    let img = |i: usize| &images[i * s..(i + 1) * s];
    let pt = |i: usize| &starts[i * s..(i + 1) * s];
    let mut jump = vec![0.0f64; len];
    for x in 0..len {
        for &y in &nbrs[x] {
            jump[x] = jump[x].max(sys.image_dist(img(x), img(y)));
        }
    }
    let nn = |x: usize| nbrs[x].first().map(|&y| sys.image_dist(pt(x), pt(y)));
    let delta = epsilons
        .iter()
        .map(|&eps| {
            let mut worst = f64::INFINITY;
            for (x, &jx) in jump.iter().enumerate().take(len) {
                let Some(base) = nn(x) else { continue };
                if jx >= eps {
                    return None;
                }
                let mut r = base;
                'grow: for _ in 0..16 {
                    let bigger = r * 2.0;
                    for y in 0..len {
                        let d = sys.image_dist(pt(x), pt(y));
                        if d < bigger && sys.image_dist(img(x), img(y)) >= eps {
                            break 'grow;
                        }
                    }
                    r = bigger;
                }
                worst = worst.min(r);
            }
            Some(worst)
        })
        .collect::<Vec<_>>();
    let eps_max = epsilons.iter().copied().fold(0.0, f64::max);
    let jumps: Vec<usize> = (0..len).filter(|&x| jump[x] >= eps_max).take(16).collect();
    ElementModulus {
        name: name.to_string(),
        continuous: delta.iter().all(|d| d.is_some()),
        delta,
        jumps,
        max_jump: jump.iter().copied().fold(0.0, f64::max),
    }
}

/// Discrete continuity-modulus scan of the limit and composite elements of an
/// approximate envelope. Iterates are continuous by construction and skipped.
pub fn wap_proxy_check<D: SampledDynamics + ?Sized>(
    sys: &D,
    env: &ApproxEnvelope,
    epsilons: &[f64],
) -> Result<WapReport> {
    let nbrs = neighbours_metric(sys);
    let s = sys.stride();
    let mut starts = vec![0.0; s * sys.sample_len()];
    for (i, c) in starts.chunks_mut(s).enumerate() {
        sys.write_sample(i, c);
    }
    let elements: Vec<ElementModulus> = env
        .limit_indices()
        .into_iter()
        .map(|k| {
            let e = env.element(k);
            modulus(sys, &e.name, &e.images, epsilons, &nbrs, &starts)
        })
        .collect();
    Ok(wap_summary(epsilons, elements))
}

/// WAP proxy for an exact envelope: elements in the eventual cycle are scanned
/// with the model metric.
pub fn wap_proxy_exact(
    model: &CascadeModel,
    epsilons: &[f64],
    max_elements: usize,
) -> Result<WapReport> {
    let env = exact_envelope(model.table()?, max_elements)?;
    let nbrs = neighbours_metric(model);
    let starts: Vec<f64> = (0..model.len()).map(|i| i as f64).collect();
    let elements = (env.preperiod()..env.len())
        .map(|k| {
            let images: Vec<f64> = env.map(k).iter().map(|&y| y as f64).collect();
            modulus(model, &env.name(k), &images, epsilons, &nbrs, &starts)
        })
        .collect();
    Ok(wap_summary(epsilons, elements))
}

fn wap_summary(epsilons: &[f64], elements: Vec<ElementModulus>) -> WapReport {
    let worst_modulus = (0..epsilons.len())
        .map(|j| {
            elements
                .iter()
                .map(|e| e.delta[j])
                .try_fold(f64::INFINITY, |acc, d| d.map(|d| acc.min(d)))
        })
        .collect();
    WapReport {
        epsilons: epsilons.to_vec(),
        all_elements_continuous: elements.iter().all(|e| e.continuous),
        elements,
        worst_modulus,
    }
}

/// Nearest neighbours in the metric, also for exact models.
fn neighbours_metric<D: SampledDynamics + ?Sized>(sys: &D) -> Vec<Vec<usize>> {
    let n = sys.sample_len();
    let s = sys.stride();
    let mut pts = vec![0.0; n * s];
    for (i, c) in pts.chunks_mut(s).enumerate() {
        sys.write_sample(i, c);
    }
    (0..n)
        .map(|i| {
            let d: Vec<f64> = (0..n)
                .map(|j| {
                    if i == j {
                        f64::INFINITY
                    } else {
                        sys.image_dist(&pts[i * s..(i + 1) * s], &pts[j * s..(j + 1) * s])
                    }
                })
                .collect();
            let nn = d.iter().copied().fold(f64::INFINITY, f64::min);
            (0..n)
                .filter(|&j| j != i && d[j] <= nn * (1.0 + 1e-9))
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct DistalSemiflowReport {
    pub distal: bool,
    pub pointwise_almost_periodic: bool,
    pub surjective: bool,
    /// A pair collapsed by some envelope element, when not distal.
    pub proximal_pair: Option<(String, String)>,
    /// Distality implies the other two; false means a violated consequence.
    pub consequences_hold: bool,
}

/// Distality of a finite semicascade and its consequences.
pub fn distal_semiflow_check(model: &CascadeModel) -> Result<DistalSemiflowReport> {
    if !model.is_exact() {
        return Err(Error::NotFiniteExact);
    }
    let table = model.table()?;
    let n = table.len();
    let env = exact_envelope(table, usize::MAX)?;
    let mut proximal_pair = None;
    'search: for m in env.maps() {
        let mut owner = vec![usize::MAX; n];
        for (x, &y) in m.iter().enumerate() {
            if owner[y] != usize::MAX {
                proximal_pair = Some((
                    model.label(crate::PointId(owner[y])),
                    model.label(crate::PointId(x)),
                ));
                break 'search;
            }
            owner[y] = x;
        }
    }
    let distal = proximal_pair.is_none();
    let pointwise_almost_periodic = (0..n).all(|x| {
        let mut y = table[x];
        for _ in 0..n {
            if y == x {
                return true;
            }
            y = table[y];
        }
        false
    });
    let mut hit = vec![false; n];
    for &y in table {
        hit[y] = true;
    }
    let surjective = hit.iter().all(|b| *b);
    Ok(DistalSemiflowReport {
        distal,
        pointwise_almost_periodic,
        surjective,
        proximal_pair,
        consequences_hold: !distal || (pointwise_almost_periodic && surjective),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn catalog(name: &str, params: &[(&str, &str)]) -> CascadeModel {
        let p: BTreeMap<String, String> = params
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        crate::spaces::load_model(name, &p).unwrap()
    }

    #[test]
    fn identity_hits_everything() {
        let m = catalog("identity", &[]);
        let u = OpenSet::Points { members: vec![0] };
        assert_eq!(
            hitting_set(&m, &u, &u, 10).unwrap(),
            (1..=10).collect::<Vec<_>>()
        );
        let v = OpenSet::Points { members: vec![1] };
        assert!(hitting_set(&m, &u, &v, 10).unwrap().is_empty());
        let t = classify_transitivity(&m, 10, &build_cover(&m, &CoverSpec::Auto), 10).unwrap();
        assert!(!t.transitive.holds());
        assert!(t.chain_ok);
    }

    #[test]
    fn three_cycle_strongly_transitive() {
        let m = CascadeModel::finite("c3", vec![1, 2, 0], None).unwrap();
        let cover = build_cover(&m, &CoverSpec::Auto);
        let r = strong_transitivity_check(&m, 3, &cover).unwrap();
        assert!(r.strongly_transitive.holds() && r.minimal.holds() && r.transitive);
    }

    #[test]
    fn constant_map_not_distal() {
        let m = CascadeModel::finite("k", vec![0, 0], None).unwrap();
        let r = distal_semiflow_check(&m).unwrap();
        assert!(!r.distal && r.consequences_hold);
        let p = CascadeModel::finite("p", vec![1, 2, 0, 4, 3], None).unwrap();
        let r = distal_semiflow_check(&p).unwrap();
        assert!(r.distal && r.pointwise_almost_periodic && r.surjective);
    }

    #[test]
    fn identity_recurrence_flags() {
        let m = catalog("identity", &[]);
        let r = recurrence_report(&m, 10, 0.5, |i| i.to_string()).unwrap();
        for p in &r.points {
            assert!(
                p.recurrent && p.nonwandering && p.essentially_nonwandering && p.almost_periodic
            );
            assert_eq!(p.gap, Some(1));
        }
    }
}

//! Enveloping semigroups.
//!
//! Finite-exact models get the exact iterate monoid `{f^0, ..., f^(i+p-1)}`
//! with index `i` and period `p`. Sampled models get a tolerance-based
//! approximation: pointwise limits of tail iterates are detected by
//! clustering, then the element set is closed under composition with every
//! product snapped to the nearest element in the sup-distance over the sample.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::algebra::{CheckMode, FiniteSemigroup};
use crate::hyperspace::{HyperCascadeModel, HyperPoint};
use crate::spaces::{CascadeModel, SampledDynamics};
use crate::{Error, Result};

/// Exact envelope of a self-map of `0..n` given by a table.
#[derive(Clone, Debug)]
pub struct ExactEnvelope {
    maps: Vec<Vec<usize>>,
    preperiod: usize,
    period: usize,
}

pub fn exact_envelope(table: &[usize], max_elements: usize) -> Result<ExactEnvelope> {
    let n = table.len();
    if let Some(&bad) = table.iter().find(|&&y| y >= n) {
        return Err(Error::PointOutOfRange(bad));
    }
    let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut maps: Vec<Vec<usize>> = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        if let Some(&i) = seen.get(&cur) {
            let period = maps.len() - i;
            return Ok(ExactEnvelope {
                maps,
                preperiod: i,
                period,
            });
        }
        if maps.len() >= max_elements {
            return Err(Error::ElementBudget(max_elements));
        }
        seen.insert(cur.clone(), maps.len());
        let next = cur.iter().map(|&y| table[y]).collect();
        maps.push(std::mem::replace(&mut cur, next));
    }
}

impl ExactEnvelope {
    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Index `i`: the least `i` with `f^i = f^(i+p)`.
    pub fn preperiod(&self) -> usize {
        self.preperiod
    }

    pub fn period(&self) -> usize {
        self.period
    }

    /// Element `k` is `f^k`.
    pub fn map(&self, k: usize) -> &[usize] {
        &self.maps[k]
    }

    pub fn maps(&self) -> &[Vec<usize>] {
        &self.maps
    }

    pub fn name(&self, k: usize) -> String {
        if k == 0 {
            "e".into()
        } else {
            format!("f^{k}")
        }
    }

    /// Index of `f^(a+b)`.
    pub fn product(&self, a: usize, b: usize) -> usize {
        let s = a + b;
        if s < self.maps.len() {
            s
        } else {
            self.preperiod + (s - self.preperiod) % self.period
        }
    }

    pub fn find(&self, map: &[usize]) -> Option<usize> {
        self.maps.iter().position(|m| m == map)
    }

    pub fn generator(&self) -> usize {
        if self.maps.len() > 1 {
            1
        } else {
            0
        }
    }

    pub fn semigroup(&self) -> Result<FiniteSemigroup> {
        let n = self.len();
        let table = (0..n)
            .map(|a| (0..n).map(|b| self.product(a, b)).collect())
            .collect();
        let names = (0..n).map(|k| self.name(k)).collect();
        FiniteSemigroup::new(
            table,
            Some(0),
            Some(self.generator()),
            names,
            CheckMode::Assert,
        )
    }

    /// Smallest `n` in `1..=horizon` with `sup_x d(f^n x, x) < tau`.
    pub fn identity_witness(&self, model: &CascadeModel, horizon: u64, tol: f64) -> Option<u64> {
        (1..=horizon).find(|&n| {
            let k = if (n as usize) < self.len() {
                n as usize
            } else {
                self.preperiod + (n as usize - self.preperiod) % self.period
            };
            self.maps[k]
                .iter()
                .enumerate()
                .all(|(x, &y)| model.space().distance(x, y) < tol)
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Token {
    /// `f^n`; adjacent powers merge.
    Pow(i64),
    /// A limit element represented by `f^n`; never merged.
    Frozen(i64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    Iterate { n: i64 },
    Limit { witness: i64, members: usize },
    Composite { left: usize, right: usize },
}

/// One element of an approximate envelope: its images on the sample.
#[derive(Clone, Debug, Serialize)]
pub struct MapSample {
    pub name: String,
    pub provenance: Provenance,
    pub word: Vec<Token>,
    #[serde(skip)]
    pub images: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct IterateRecord {
    pub n: i64,
    pub element: usize,
    pub dist_to_identity: f64,
}

#[derive(Clone, Debug)]
pub struct ApproxOptions {
    pub horizon: u64,
    pub tau: f64,
    pub two_sided: bool,
    pub max_elements: usize,
    /// Close the element set under composition.
    pub close: bool,
}

impl Default for ApproxOptions {
    fn default() -> Self {
        ApproxOptions {
            horizon: 60,
            tau: 1e-3,
            two_sided: false,
            max_elements: 512,
            close: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ApproxEnvelope {
    elements: Vec<MapSample>,
    table: Vec<Vec<usize>>,
    closed: bool,
    observed: usize,
    limits: usize,
    max_snap_error: f64,
    iterates: Vec<IterateRecord>,
    stride: usize,
    sample_len: usize,
    tau: f64,
    horizon: u64,
}

fn within<D: SampledDynamics + ?Sized>(sys: &D, a: &[f64], b: &[f64], bound: f64) -> Option<f64> {
    let s = sys.stride();
    let mut worst: f64 = 0.0;
    for (x, y) in a.chunks(s).zip(b.chunks(s)) {
        worst = worst.max(sys.image_dist(x, y));
        if worst >= bound {
            return None;
        }
    }
    Some(worst)
}

/// Sup-distance between two image buffers.
pub fn sup_distance<D: SampledDynamics + ?Sized>(sys: &D, a: &[f64], b: &[f64]) -> f64 {
    within(sys, a, b, f64::INFINITY).unwrap_or(f64::INFINITY)
}

fn advance_all<D: SampledDynamics + ?Sized>(
    sys: &D,
    src: &[f64],
    n: i64,
    dst: &mut [f64],
) -> Result<()> {
    let s = sys.stride();
    for (x, y) in src.chunks(s).zip(dst.chunks_mut(s)) {
        sys.advance(x, n, y)?;
    }
    Ok(())
}

fn eval_word<D: SampledDynamics + ?Sized>(
    sys: &D,
    word: &[Token],
    src: &[f64],
) -> Result<Vec<f64>> {
    let mut cur = src.to_vec();
    let mut next = vec![0.0; cur.len()];
    for t in word.iter().rev() {
        let (n, frozen) = match t {
            Token::Pow(n) => (*n, false),
            Token::Frozen(n) => (*n, true),
        };
        advance_all(sys, &cur, n, &mut next)?;
        std::mem::swap(&mut cur, &mut next);
        if frozen {
            clean_residue(sys, &mut cur, RESIDUE);
        }
    }
    Ok(cur)
}

fn concat(a: &[Token], b: &[Token]) -> Vec<Token> {
    let mut out = a.to_vec();
    for &t in b {
        match (out.last_mut(), t) {
            (Some(Token::Pow(x)), Token::Pow(y)) => *x += y,
            _ => out.push(t),
        }
        if out.last() == Some(&Token::Pow(0)) {
            out.pop();
        }
    }
    out
}

/// Replaces image coordinates lying within `tol` of a sample point by that point.
fn clean_residue<D: SampledDynamics + ?Sized>(sys: &D, img: &mut [f64], tol: f64) {
    let s = sys.stride();
    let mut buf = vec![0.0; s];
    for chunk in img.chunks_mut(s) {
        let (i, d) = sys.nearest_sample(chunk);
        if d < tol {
            sys.write_sample(i, &mut buf);
            chunk.copy_from_slice(&buf);
        }
    }
}

struct Cluster {
    leader: Vec<f64>,
    rep: Vec<f64>,
    rep_n: i64,
    members: usize,
}

const RESIDUE: f64 = 1e-9;

/// Tolerance-based envelope of a sampled system.
pub fn approx_envelope<D: SampledDynamics + ?Sized>(
    sys: &D,
    opts: &ApproxOptions,
) -> Result<ApproxEnvelope> {
    if opts.two_sided && !sys.invertible() {
        return Err(Error::NegativePowerOnNoninvertible);
    }
    if opts.horizon == 0 || opts.tau <= 0.0 {
        return Err(Error::param("horizon", "need horizon >= 1 and tau > 0"));
    }
    let n_max = opts.horizon as i64;
    let len = sys.sample_len();
    let stride = sys.stride();
    let mut identity = vec![0.0; len * stride];
    for (i, chunk) in identity.chunks_mut(stride).enumerate() {
        sys.write_sample(i, chunk);
    }
    let dirs: &[i64] = if opts.two_sided { &[1, -1] } else { &[1] };
    let tail_start = (n_max + 1) / 2;

    // Pass 1: leader clustering of tail iterates in each direction.
    let mut candidates: Vec<Cluster> = Vec::new();
    for &dir in dirs {
        let mut clusters: Vec<Cluster> = Vec::new();
        let mut cur = identity.clone();
        let mut next = identity.clone();
        for m in 1..=n_max {
            advance_all(sys, &cur, dir, &mut next)?;
            std::mem::swap(&mut cur, &mut next);
            if m < tail_start.max(1) {
                continue;
            }
            match clusters
                .iter_mut()
                .find(|c| within(sys, &c.leader, &cur, opts.tau).is_some())
            {
                Some(c) => {
                    c.members += 1;
                    c.rep.copy_from_slice(&cur);
                    c.rep_n = dir * m;
                }
                None => clusters.push(Cluster {
                    leader: cur.clone(),
                    rep: cur.clone(),
                    rep_n: dir * m,
                    members: 1,
                }),
            }
        }
        candidates.extend(clusters.into_iter().filter(|c| c.members >= 3));
    }
    for c in &mut candidates {
        clean_residue(sys, &mut c.rep, RESIDUE);
    }

    // Pass 2: iterates in the order 1, -1, 2, -2, ...
    let mut elements = vec![MapSample {
        name: "e".into(),
        provenance: Provenance::Iterate { n: 0 },
        word: Vec::new(),
        images: identity.clone(),
    }];
    let mut realized: Vec<Option<usize>> = vec![None; candidates.len()];
    let mut limits = 0usize;
    let mut iterates = Vec::new();
    let mut fronts: Vec<Vec<f64>> = dirs.iter().map(|_| identity.clone()).collect();
    let mut scratch = identity.clone();
    let mut budget_hit = false;
    'outer: for m in 1..=n_max {
        for (d, &dir) in dirs.iter().enumerate() {
            advance_all(sys, &fronts[d], dir, &mut scratch)?;
            std::mem::swap(&mut fronts[d], &mut scratch);
            let img = &fronts[d];
            let n = dir * m;
            let dist_to_identity = sup_distance(sys, img, &identity);
            let nearest = |pool: &mut dyn Iterator<Item = (usize, &[f64])>| {
                let mut best: Option<(usize, f64)> = None;
                for (i, imgs) in pool {
                    let bound = best.map_or(opts.tau, |b| b.1);
                    if let Some(d) = within(sys, imgs, img, bound) {
                        best = Some((i, d));
                    }
                }
                best
            };
            let existing = nearest(
                &mut elements
                    .iter()
                    .enumerate()
                    .map(|(i, e)| (i, e.images.as_slice())),
            );
            let element = if let Some((i, _)) = existing {
                i
            } else if let Some((c, d)) = nearest(
                &mut candidates
                    .iter()
                    .enumerate()
                    .filter(|(c, _)| realized[*c].is_none())
                    .map(|(c, cl)| (c, cl.rep.as_slice())),
            ) {
                let cl = &candidates[c];
                let sample = if d == 0.0 {
                    MapSample {
                        name: format!("f^{n}"),
                        provenance: Provenance::Iterate { n },
                        word: vec![Token::Pow(n)],
                        images: img.clone(),
                    }
                } else {
                    limits += 1;
                    MapSample {
                        name: format!("lim#{}", limits - 1),
                        provenance: Provenance::Limit {
                            witness: cl.rep_n,
                            members: cl.members,
                        },
                        word: vec![Token::Frozen(cl.rep_n)],
                        images: cl.rep.clone(),
                    }
                };
                elements.push(sample);
                realized[c] = Some(elements.len() - 1);
                elements.len() - 1
            } else {
                elements.push(MapSample {
                    name: format!("f^{n}"),
                    provenance: Provenance::Iterate { n },
                    word: vec![Token::Pow(n)],
                    images: img.clone(),
                });
                elements.len() - 1
            };
            iterates.push(IterateRecord {
                n,
                element,
                dist_to_identity,
            });
            if elements.len() >= opts.max_elements {
                budget_hit = true;
                break 'outer;
            }
        }
    }
    for (c, cl) in candidates.iter().enumerate() {
        if realized[c].is_some() || budget_hit {
            continue;
        }
        if elements
            .iter()
            .all(|e| within(sys, &e.images, &cl.rep, opts.tau).is_none())
        {
            limits += 1;
            elements.push(MapSample {
                name: format!("lim#{}", limits - 1),
                provenance: Provenance::Limit {
                    witness: cl.rep_n,
                    members: cl.members,
                },
                word: vec![Token::Frozen(cl.rep_n)],
                images: cl.rep.clone(),
            });
        }
    }
    let observed = elements.len();

    let mut env = ApproxEnvelope {
        elements,
        table: Vec::new(),
        closed: false,
        observed,
        limits,
        max_snap_error: 0.0,
        iterates,
        stride,
        sample_len: len,
        tau: opts.tau,
        horizon: opts.horizon,
    };
    if opts.close && !budget_hit {
        env.close(sys, opts.max_elements)?;
    }
    Ok(env)
}

impl ApproxEnvelope {
    fn close<D: SampledDynamics + ?Sized>(&mut self, sys: &D, max_elements: usize) -> Result<()> {
        let identity = self.elements[0].images.clone();
        let mut table: Vec<Vec<Option<usize>>> = Vec::new();
        let mut worst: f64 = 0.0;
        let mut k = 0;
        while k < self.elements.len() {
            // Fill row k and column k against all elements known so far.
            table.resize(self.elements.len(), Vec::new());
            for row in table.iter_mut() {
                row.resize(self.elements.len(), None);
            }
            for other in 0..=k {
                for (a, b) in [(k, other), (other, k)] {
                    if table[a][b].is_some() {
                        continue;
                    }
                    let word = concat(&self.elements[a].word, &self.elements[b].word);
                    let img = eval_word(sys, &word, &identity)?;
                    let mut best: Option<(usize, f64)> = None;
                    for (i, e) in self.elements.iter().enumerate() {
                        let bound = best.map_or(self.tau, |b| b.1);
                        if let Some(d) = within(sys, &e.images, &img, bound) {
                            best = Some((i, d));
                        }
                    }
                    let c = match best {
                        Some((i, d)) => {
                            worst = worst.max(d);
                            i
                        }
                        None => {
                            if self.elements.len() >= max_elements {
                                self.table = Vec::new();
                                self.max_snap_error = worst;
                                self.closed = false;
                                return Ok(());
                            }
                            let mut images = img;
                            clean_residue(sys, &mut images, RESIDUE);
                            self.limits += 1;
                            self.elements.push(MapSample {
                                name: format!("lim#{}", self.limits - 1),
                                provenance: Provenance::Composite { left: a, right: b },
                                word,
                                images,
                            });
                            for row in table.iter_mut() {
                                row.push(None);
                            }
                            table.push(vec![None; self.elements.len()]);
                            self.elements.len() - 1
                        }
                    };
                    table[a][b] = Some(c);
                }
            }
            k += 1;
        }
        self.table = table
            .into_iter()
            .map(|r| r.into_iter().map(|c| c.expect("filled")).collect())
            .collect();
        self.max_snap_error = worst;
        self.closed = true;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[MapSample] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &MapSample {
        &self.elements[i]
    }

    pub fn names(&self) -> Vec<String> {
        self.elements.iter().map(|e| e.name.clone()).collect()
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.elements.iter().position(|e| e.name == name)
    }

    /// Composition table `table[a][b] = a o b`; empty unless closed.
    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }

    /// Whether closure finished within the element budget.
    pub fn stabilized(&self) -> bool {
        self.closed
    }

    /// Elements found before closure (identity, distinct iterates, limits).
    pub fn observed(&self) -> usize {
        self.observed
    }

    pub fn limit_indices(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| !matches!(self.elements[i].provenance, Provenance::Iterate { .. }))
            .collect()
    }

    pub fn max_snap_error(&self) -> f64 {
        self.max_snap_error
    }

    pub fn iterates(&self) -> &[IterateRecord] {
        &self.iterates
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn sample_len(&self) -> usize {
        self.sample_len
    }

    /// Image of sample point `x` under element `i`.
    pub fn image(&self, i: usize, x: usize) -> &[f64] {
        &self.elements[i].images[x * self.stride..(x + 1) * self.stride]
    }

    /// Element to which `f^1` was assigned.
    pub fn generator(&self) -> Option<usize> {
        self.iterates.iter().find(|r| r.n == 1).map(|r| r.element)
    }

    /// Semigroup of a closed envelope; checks run in report mode.
    pub fn semigroup(&self) -> Result<FiniteSemigroup> {
        if !self.closed {
            return Err(Error::ElementBudget(self.len()));
        }
        FiniteSemigroup::new(
            self.table.clone(),
            Some(0),
            self.generator(),
            self.names(),
            CheckMode::Report,
        )
    }

    /// Element maps with images snapped to sample indices.
    pub fn snapped_maps<D: SampledDynamics + ?Sized>(&self, sys: &D) -> Vec<Vec<usize>> {
        self.elements
            .iter()
            .map(|e| {
                e.images
                    .chunks(self.stride)
                    .map(|c| sys.nearest_sample(c).0)
                    .collect()
            })
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityIsolation {
    pub isolated: bool,
    pub witness: Option<i64>,
    pub closest: f64,
}

/// Whether some iterate `f^n`, `1 <= n <= horizon`, is within `tau` of the identity.
pub fn identity_isolated(env: &ApproxEnvelope, tau: f64) -> IdentityIsolation {
    let forward = env.iterates.iter().filter(|r| r.n >= 1);
    let witness = forward
        .clone()
        .find(|r| r.dist_to_identity < tau)
        .map(|r| r.n);
    IdentityIsolation {
        isolated: witness.is_none(),
        witness,
        closest: forward
            .map(|r| r.dist_to_identity)
            .fold(f64::INFINITY, f64::min),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StabilizationVerdict {
    Stabilizing,
    Growing,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilizationRow {
    pub horizon: u64,
    pub elements: usize,
    pub limits: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilizationReport {
    pub rows: Vec<StabilizationRow>,
    pub verdict: StabilizationVerdict,
}

/// Observed element counts per horizon: equal last two counts mean
/// stabilizing, strictly increasing counts mean growing.
pub fn stabilization_diagnostic<D: SampledDynamics + ?Sized>(
    sys: &D,
    horizons: &[u64],
    tau: f64,
    two_sided: bool,
) -> Result<StabilizationReport> {
    let mut rows = Vec::new();
    for &h in horizons {
        let env = approx_envelope(
            sys,
            &ApproxOptions {
                horizon: h,
                tau,
                two_sided,
                max_elements: usize::MAX,
                close: false,
            },
        )?;
        rows.push(StabilizationRow {
            horizon: h,
            elements: env.observed(),
            limits: env.limits,
        });
    }
    let counts: Vec<usize> = rows.iter().map(|r| r.elements).collect();
    let verdict = if counts.len() >= 2 && counts.windows(2).all(|w| w[0] < w[1]) {
        StabilizationVerdict::Growing
    } else if counts.len() >= 2 && counts[counts.len() - 1] == counts[counts.len() - 2] {
        StabilizationVerdict::Stabilizing
    } else {
        StabilizationVerdict::Inconclusive
    };
    Ok(StabilizationReport { rows, verdict })
}

#[derive(Clone, Debug, Serialize)]
pub struct PowerDecomposition {
    pub n: usize,
    pub lhs_size: usize,
    pub rhs_size: usize,
    pub equal: bool,
    pub missing: Vec<String>,
    pub extra: usize,
}

/// Compares `E(X, f)` with the union of translates `f^j E(X, f^n)`, `0 <= j < n`.
pub fn envelope_power_decomposition(table: &[usize], n: usize) -> Result<PowerDecomposition> {
    if n == 0 {
        return Err(Error::param("n", "need n >= 1"));
    }
    let lhs = exact_envelope(table, 1 << 20)?;
    let mut power: Vec<usize> = (0..table.len()).collect();
    for _ in 0..n {
        power = power.iter().map(|&y| table[y]).collect();
    }
    let sub = exact_envelope(&power, 1 << 20)?;
    let mut rhs: HashSet<Vec<usize>> = HashSet::new();
    let mut fj: Vec<usize> = (0..table.len()).collect();
    for _ in 0..n {
        for g in sub.maps() {
            rhs.insert(g.iter().map(|&y| fj[y]).collect());
        }
        fj = fj.iter().map(|&y| table[y]).collect();
    }
    let left: HashSet<&Vec<usize>> = lhs.maps().iter().collect();
    let missing: Vec<String> = (0..lhs.len())
        .filter(|&k| !rhs.contains(lhs.map(k)))
        .map(|k| lhs.name(k))
        .collect();
    let extra = rhs.iter().filter(|m| !left.contains(m)).count();
    Ok(PowerDecomposition {
        n,
        lhs_size: lhs.len(),
        rhs_size: rhs.len(),
        equal: missing.is_empty() && extra == 0,
        missing,
        extra,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ThetaReport {
    /// Base element assigned to each hyper element.
    pub mapping: Vec<Option<usize>>,
    pub singleton_escapes: Vec<usize>,
    pub well_defined: bool,
    pub injective: bool,
    pub surjective: bool,
    pub homomorphism_violations: Vec<(usize, usize)>,
}

fn theta_finish(
    mapping: Vec<Option<usize>>,
    escapes: Vec<usize>,
    base_len: usize,
    hyper_table: &[Vec<usize>],
    base_table: &[Vec<usize>],
) -> ThetaReport {
    let well_defined = mapping.iter().all(Option::is_some) && escapes.is_empty();
    let images: HashSet<usize> = mapping.iter().flatten().copied().collect();
    let mut violations = Vec::new();
    if well_defined && !hyper_table.is_empty() && !base_table.is_empty() {
        for (a, row) in hyper_table.iter().enumerate() {
            for (b, &c) in row.iter().enumerate() {
                let (ta, tb, tc) = (
                    mapping[a].unwrap(),
                    mapping[b].unwrap(),
                    mapping[c].unwrap(),
                );
                if base_table[ta][tb] != tc {
                    violations.push((a, b));
                }
            }
        }
    }
    ThetaReport {
        injective: images.len() == mapping.iter().flatten().count() && well_defined,
        surjective: images.len() == base_len,
        mapping,
        singleton_escapes: escapes,
        well_defined,
        homomorphism_violations: violations,
    }
}

/// Restriction of hyper envelope elements to singletons, for exact envelopes.
pub fn theta_check_exact(
    base: &ExactEnvelope,
    hyper: &ExactEnvelope,
    model: &HyperCascadeModel,
) -> Result<ThetaReport> {
    let n = model.base().len();
    let mut mapping = Vec::new();
    let mut escapes = Vec::new();
    for (k, alpha) in hyper.maps().iter().enumerate() {
        let mut restricted = Vec::with_capacity(n);
        for x in 0..n {
            let single = HyperPoint::new(vec![crate::PointId(x)])?;
            let i = model.index_of(&single).expect("singletons are enumerated");
            let img = model.point(alpha[i]);
            if img.len() != 1 {
                escapes.push(k);
                break;
            }
            restricted.push(img.members()[0].0);
        }
        mapping.push(if restricted.len() == n {
            base.find(&restricted)
        } else {
            None
        });
    }
    let ht = hyper.semigroup()?;
    let bt = base.semigroup()?;
    Ok(theta_finish(
        mapping,
        escapes,
        base.len(),
        &ht.rows(),
        &bt.rows(),
    ))
}

/// Restriction of approximate hyper envelope elements to singletons.
pub fn theta_check_approx(
    base_sys: &CascadeModel,
    base: &ApproxEnvelope,
    hyper: &ApproxEnvelope,
    model: &HyperCascadeModel,
) -> Result<ThetaReport> {
    let n = base_sys.len();
    let bs = base_sys.stride();
    let mut mapping = Vec::new();
    let mut escapes = Vec::new();
    for k in 0..hyper.len() {
        let mut restricted = Vec::with_capacity(n * bs);
        let mut escaped = false;
        for x in 0..n {
            let single = HyperPoint::new(vec![crate::PointId(x)])?;
            let i = model.index_of(&single).expect("singletons are enumerated");
            let img = hyper.image(k, i);
            let first = &img[..bs];
            if img
                .chunks(bs)
                .any(|c| base_sys.image_dist(c, first) > RESIDUE)
            {
                escaped = true;
                break;
            }
            restricted.extend_from_slice(first);
        }
        if escaped {
            escapes.push(k);
            mapping.push(None);
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, e) in base.elements().iter().enumerate() {
            let bound = best.map_or(base.tau(), |b| b.1);
            if let Some(d) = within(base_sys, &e.images, &restricted, bound) {
                best = Some((i, d));
            }
        }
        mapping.push(best.map(|b| b.0));
    }
    Ok(theta_finish(
        mapping,
        escapes,
        base.len(),
        hyper.table(),
        base.table(),
    ))
}

#[derive(Clone, Debug, Serialize)]
pub struct InducibilityReport {
    pub element: usize,
    pub singletons_ok: bool,
    pub monotone_ok: bool,
    pub minimal_ok: bool,
    pub failures: Vec<String>,
}

/// Checks that `alpha` sends singletons to singletons, preserves inclusion and is
/// minimal for the pointwise-inclusion order among the given elements.
/// Each map sends a hyperpoint index to a hyperpoint index.
pub fn inducibility_check(
    model: &HyperCascadeModel,
    maps: &[Vec<usize>],
    element: usize,
) -> InducibilityReport {
    let alpha = &maps[element];
    let mut failures = Vec::new();
    let n = model.base().len();
    let mut singletons_ok = true;
    for (x, &ax) in alpha.iter().enumerate().take(n) {
        if model.point(ax).len() != 1 {
            singletons_ok = false;
            failures.push(format!("image of {{{}}} is not a singleton", x));
            break;
        }
    }
    let mut monotone_ok = true;
    'mono: for (bi, b) in model.points().iter().enumerate() {
        for (ai, a) in model.points().iter().enumerate().take(bi + 1) {
            if a.is_subset(b) && !model.point(alpha[ai]).is_subset(model.point(alpha[bi])) {
                monotone_ok = false;
                failures.push(format!("inclusion {ai} <= {bi} not preserved"));
                break 'mono;
            }
        }
    }
    let below = |beta: &[usize]| {
        (0..model.len()).all(|i| model.point(beta[i]).is_subset(model.point(alpha[i])))
    };
    let rival = maps
        .iter()
        .enumerate()
        .find(|(j, beta)| *j != element && beta.as_slice() != alpha.as_slice() && below(beta));
    let minimal_ok = rival.is_none();
    if let Some((j, _)) = rival {
        failures.push(format!("element {j} lies strictly below"));
    }
    InducibilityReport {
        element,
        singletons_ok,
        monotone_ok,
        minimal_ok,
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_index_and_period() {
        // 0 -> 1 -> 2 -> 3 -> 2
        let env = exact_envelope(&[1, 2, 3, 2], 100).unwrap();
        assert_eq!(env.preperiod(), 2);
        assert_eq!(env.period(), 2);
        assert_eq!(env.len(), 4);
        assert_eq!(env.product(3, 3), 2);
    }

    #[test]
    fn three_cycle_is_cyclic_group() {
        let env = exact_envelope(&[1, 2, 0], 100).unwrap();
        assert_eq!((env.len(), env.preperiod(), env.period()), (3, 0, 3));
        assert_eq!(env.product(2, 2), 1);
    }

    #[test]
    fn word_concat_merges_powers() {
        let w = concat(&[Token::Pow(2)], &[Token::Pow(-2), Token::Frozen(5)]);
        assert_eq!(w, vec![Token::Frozen(5)]);
        let w = concat(&[Token::Frozen(5)], &[Token::Pow(1)]);
        assert_eq!(w.len(), 2);
    }

    #[test]
    fn power_decomposition_holds() {
        let r = envelope_power_decomposition(&[1, 2, 3, 4, 2], 2).unwrap();
        assert!(r.equal, "{r:?}");
        let r = envelope_power_decomposition(&[1, 2, 0, 0], 3).unwrap();
        assert!(r.equal, "{r:?}");
    }
}

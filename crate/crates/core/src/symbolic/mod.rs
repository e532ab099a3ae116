//! Shifts of finite type, sofic shifts and sliding block codes.
//!
//! Every shift is compiled to a labeled graph presentation pruned to its
//! essential part. Word counts come from the subset automaton of that graph,
//! so sofic presentations need not be right-resolving.

mod codes;
mod graph;
mod window;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};
use graph::{Dfa, Edge, Graph};

pub(crate) use graph::gcd as gcd_usize;

pub use codes::{
    apply_block_code, cylinder_metric, verify_factor, CylinderDistance, FactorReport,
    SlidingBlockCode,
};
pub use window::{window_model, WindowOptions};

const DFA_BUDGET: usize = 500_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ShiftSpec {
    /// Sequences avoiding every listed block.
    Forbidden { blocks: Vec<String> },
    /// Vertex shift of a 0-1 matrix; symbols are the states.
    EdgeGraph { matrix: Vec<Vec<u8>> },
    /// Labels of bi-infinite paths in a labeled graph.
    Labeled {
        states: usize,
        edges: Vec<(usize, usize, char)>,
    },
    /// Binary sequences whose runs of 0s between consecutive 1s have allowed
    /// lengths; gaps above `cutoff` are unconstrained.
    Spacing {
        #[serde(default)]
        gaps: Vec<usize>,
        #[serde(default)]
        multiple_of: Option<usize>,
        cutoff: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftDefinition {
    pub alphabet: String,
    #[serde(flatten)]
    pub spec: ShiftSpec,
    #[serde(default)]
    pub one_sided: bool,
}

#[derive(Clone, Debug)]
pub struct Subshift {
    definition: ShiftDefinition,
    alphabet: Vec<char>,
    graph: Graph,
    dfa: Dfa,
    forbidden: Option<Vec<Vec<u8>>>,
}

impl Subshift {
    pub fn new(definition: ShiftDefinition) -> Result<Self> {
        let alphabet: Vec<char> = definition.alphabet.chars().collect();
        if alphabet.is_empty() || alphabet.len() > 64 {
            return Err(Error::BadShift("alphabet must have 1..=64 symbols".into()));
        }
        let distinct: HashSet<char> = alphabet.iter().copied().collect();
        if distinct.len() != alphabet.len() {
            return Err(Error::BadShift("alphabet repeats a symbol".into()));
        }
        let encode = |s: &str| -> Result<Vec<u8>> {
            s.chars()
                .map(|c| {
                    alphabet
                        .iter()
                        .position(|&a| a == c)
                        .map(|i| i as u8)
                        .ok_or_else(|| Error::BadSymbol(s.to_string()))
                })
                .collect()
        };
        let (raw, forbidden) = match &definition.spec {
            ShiftSpec::Forbidden { blocks } => {
                let blocks: Vec<Vec<u8>> =
                    blocks.iter().map(|b| encode(b)).collect::<Result<_>>()?;
                if blocks.iter().any(|b| b.is_empty()) {
                    return Err(Error::BadShift("empty forbidden block".into()));
                }
                (block_graph(alphabet.len(), &blocks)?, Some(blocks))
            }
            ShiftSpec::Spacing {
                gaps,
                multiple_of,
                cutoff,
            } => {
                if alphabet.len() != 2 {
                    return Err(Error::BadShift(
                        "spacing shifts use a two-symbol alphabet".into(),
                    ));
                }
                let allowed = |g: usize| match multiple_of {
                    Some(0) => g == 0,
                    Some(k) => g.is_multiple_of(*k),
                    None => gaps.contains(&g),
                };
                let blocks: Vec<Vec<u8>> = (0..=*cutoff)
                    .filter(|&g| !allowed(g))
                    .map(|g| {
                        let mut b = vec![1u8];
                        b.extend(std::iter::repeat_n(0, g));
                        b.push(1);
                        b
                    })
                    .collect();
                (block_graph(2, &blocks)?, Some(blocks))
            }
            ShiftSpec::EdgeGraph { matrix } => {
                let k = matrix.len();
                if k != alphabet.len() || matrix.iter().any(|r| r.len() != k) {
                    return Err(Error::BadShift(
                        "matrix must be square with one row per symbol".into(),
                    ));
                }
                let mut edges = Vec::new();
                for (i, row) in matrix.iter().enumerate() {
                    for (j, &a) in row.iter().enumerate() {
                        match a {
                            0 => {}
                            1 => edges.push(Edge {
                                from: i,
                                to: j,
                                label: j as u8,
                            }),
                            _ => {
                                return Err(Error::BadShift("matrix entries must be 0 or 1".into()))
                            }
                        }
                    }
                }
                (Graph::new(k, edges), None)
            }
            ShiftSpec::Labeled { states, edges } => {
                let mut out = Vec::new();
                for &(from, to, c) in edges {
                    if from >= *states || to >= *states {
                        return Err(Error::BadShift(format!(
                            "edge ({from},{to}) leaves the graph"
                        )));
                    }
                    let label = encode(&c.to_string())?[0];
                    out.push(Edge { from, to, label });
                }
                (Graph::new(*states, out), None)
            }
        };
        let graph = raw.essential(!definition.one_sided);
        if graph.states == 0 {
            return Err(Error::BadShift("the shift is empty".into()));
        }
        let dfa = Dfa::build(&graph, alphabet.len(), DFA_BUDGET)?;
        Ok(Subshift {
            definition,
            alphabet,
            graph,
            dfa,
            forbidden,
        })
    }

    fn forbidden(alphabet: &str, blocks: &[&str]) -> Self {
        Subshift::new(ShiftDefinition {
            alphabet: alphabet.into(),
            spec: ShiftSpec::Forbidden {
                blocks: blocks.iter().map(|s| s.to_string()).collect(),
            },
            one_sided: false,
        })
        .expect("built-in shift")
    }

    /// Full shift on `k <= 10` symbols `0..k`.
    pub fn full(k: usize) -> Self {
        let alphabet: String = (0..k.clamp(1, 10))
            .map(|i| char::from(b'0' + i as u8))
            .collect();
        Subshift::forbidden(&alphabet, &[])
    }

    pub fn golden_mean() -> Self {
        Subshift::forbidden("01", &["11"])
    }

    /// The even shift from its standard two-state right-resolving presentation.
    pub fn even() -> Self {
        Subshift::new(ShiftDefinition {
            alphabet: "01".into(),
            spec: ShiftSpec::Labeled {
                states: 2,
                edges: vec![(0, 0, '1'), (0, 1, '0'), (1, 0, '0')],
            },
            one_sided: false,
        })
        .expect("built-in shift")
    }

    pub fn definition(&self) -> &ShiftDefinition {
        &self.definition
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    pub fn is_finite_type(&self) -> bool {
        !matches!(self.definition.spec, ShiftSpec::Labeled { .. })
    }

    pub fn presentation_states(&self) -> usize {
        self.graph.states
    }

    pub(crate) fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn encode(&self, word: &str) -> Result<Vec<u8>> {
        word.chars()
            .map(|c| {
                self.alphabet
                    .iter()
                    .position(|&a| a == c)
                    .map(|i| i as u8)
                    .ok_or_else(|| Error::BadSymbol(word.to_string()))
            })
            .collect()
    }

    pub fn decode(&self, word: &[u8]) -> String {
        word.iter().map(|&a| self.alphabet[a as usize]).collect()
    }

    pub fn contains_word(&self, word: &[u8]) -> bool {
        self.dfa.accepts(word)
    }

    /// Whether the periodic point `word^inf` lies in the shift.
    pub fn has_periodic_point(&self, word: &[u8]) -> bool {
        if word.is_empty() {
            return false;
        }
        if let Some(blocks) = &self.forbidden {
            let n = word.len();
            let cyc = |i: usize| word[i % n];
            return blocks
                .iter()
                .all(|b| (0..n).all(|start| (0..b.len()).any(|j| cyc(start + j) != b[j])));
        }
        let mut set: Vec<u32> = (0..self.graph.states as u32).collect();
        let mut seen = HashSet::new();
        loop {
            for &a in word {
                set = self.graph.follow(&set, a);
                if set.is_empty() {
                    return false;
                }
            }
            if !seen.insert(set.clone()) {
                return true;
            }
        }
    }
}

/// Allowed-block presentation: states are allowed words of length `max(L - 1, 1)`
/// and each edge appends one symbol.
fn block_graph(k: usize, blocks: &[Vec<u8>]) -> Result<Graph> {
    let longest = blocks.iter().map(Vec::len).max().unwrap_or(0);
    let m = longest.saturating_sub(1).max(1);
    let banned: HashSet<&[u8]> = blocks.iter().map(Vec::as_slice).collect();
    let clean_tail = |w: &[u8]| (1..=w.len()).all(|l| !banned.contains(&w[w.len() - l..]));
    let mut states: Vec<Vec<u8>> = Vec::new();
    let mut stack: Vec<Vec<u8>> = vec![Vec::new()];
    while let Some(w) = stack.pop() {
        if w.len() == m {
            states.push(w);
            continue;
        }
        for a in (0..k as u8).rev() {
            let mut next = w.clone();
            next.push(a);
            if clean_tail(&next) {
                stack.push(next);
            }
        }
        if states.len() > 2_000_000 {
            return Err(Error::BadShift("block presentation too large".into()));
        }
    }
    let index: HashMap<&[u8], usize> = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_slice(), i))
        .collect();
    let mut edges = Vec::new();
    let mut w = Vec::with_capacity(m + 1);
    for (i, u) in states.iter().enumerate() {
        for a in 0..k as u8 {
            w.clear();
            w.extend_from_slice(u);
            w.push(a);
            if clean_tail(&w) {
                let to = index[&w[1..]];
                edges.push(Edge {
                    from: i,
                    to,
                    label: a,
                });
            }
        }
    }
    Ok(Graph::new(states.len(), edges))
}

/// All words of length `n` in the language, in lexicographic order.
pub fn language(shift: &Subshift, n: usize) -> Result<Vec<String>> {
    let count = shift.dfa.counts(n)[n];
    if count > 1 << 22 {
        return Err(Error::BadShift(format!(
            "language of length {n} has {count} words"
        )));
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut word = Vec::with_capacity(n);
    fn walk(dfa: &Dfa, s: usize, n: usize, word: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if word.len() == n {
            out.push(word.clone());
            return;
        }
        for a in 0..dfa.symbols {
            if let Some(t) = dfa.trans[s][a] {
                word.push(a as u8);
                walk(dfa, t, n, word, out);
                word.pop();
            }
        }
    }
    let mut raw = Vec::new();
    walk(&shift.dfa, 0, n, &mut word, &mut raw);
    out.extend(raw.iter().map(|w| shift.decode(w)));
    Ok(out)
}

/// `|B_m|` for `m = 0..=n`.
pub fn language_counts(shift: &Subshift, n: usize) -> Vec<u128> {
    shift.dfa.counts(n)
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyRow {
    pub n: usize,
    pub count: u128,
    pub rate: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyReport {
    pub rows: Vec<EntropyRow>,
    /// `log |B_n| - log |B_(n-1)|` at the largest `n`.
    pub increment_estimate: f64,
    pub spectral: f64,
    pub spectral_converged: bool,
    pub reducible: bool,
}

pub fn entropy_estimates(shift: &Subshift, n_max: usize) -> Result<EntropyReport> {
    if n_max == 0 {
        return Err(Error::param("n", "need n >= 1"));
    }
    let counts = language_counts(shift, n_max);
    let rows: Vec<EntropyRow> = (1..=n_max)
        .map(|n| EntropyRow {
            n,
            count: counts[n],
            rate: (counts[n] as f64).ln() / n as f64,
        })
        .collect();
    let increment_estimate = (counts[n_max] as f64).ln() - (counts[n_max - 1] as f64).ln();
    let graph = if shift.graph.right_resolving() {
        shift.graph.clone()
    } else {
        shift.dfa.as_graph()
    };
    let (rho, converged) = graph.spectral_radius(1e-13, 200_000);
    Ok(EntropyReport {
        rows,
        increment_estimate,
        spectral: rho.ln(),
        spectral_converged: converged,
        reducible: graph.components().0 > 1,
    })
}

/// CSV with columns `n,count,rate`.
pub fn entropy_csv(report: &EntropyReport) -> String {
    let mut s = String::from("n,count,rate\n");
    for r in &report.rows {
        s.push_str(&format!("{},{},{:.12}\n", r.n, r.count, r.rate));
    }
    s
}

#[derive(Clone, Debug, Serialize)]
pub struct ShiftClass {
    pub irreducible: bool,
    pub period: Option<usize>,
    pub primitive: bool,
    pub components: usize,
    /// False when the verdict describes a sofic presentation rather than the shift itself.
    pub exact: bool,
}

pub fn classify(shift: &Subshift) -> ShiftClass {
    let g = &shift.graph;
    let (n, comp) = g.components();
    let periods: Vec<usize> = (0..n)
        .filter_map(|c| g.component_period(&comp, c))
        .collect();
    let irreducible = n == 1;
    let period = periods.iter().copied().reduce(graph::gcd);
    ShiftClass {
        irreducible,
        period,
        primitive: irreducible && period == Some(1),
        components: n,
        exact: shift.is_finite_type(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PeriodicSpectrum {
    /// `fixed[n-1]` counts points with `sigma^n x = x`.
    pub fixed: Vec<u64>,
    /// `least[n-1]` counts points of least period `n`.
    pub least: Vec<i64>,
}

fn mobius(n: usize) -> i64 {
    let mut n = n;
    let mut mu = 1;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            mu = -mu;
        }
        p += 1;
    }
    if n > 1 {
        mu = -mu;
    }
    mu
}

pub fn periodic_spectrum(shift: &Subshift, n_max: usize) -> Result<PeriodicSpectrum> {
    let k = shift.alphabet.len();
    if n_max == 0 || (k as f64).powi(n_max as i32) > 2e7 {
        return Err(Error::param(
            "n",
            "period range must be 1.. and |A|^n at most 2e7",
        ));
    }
    let mut fixed = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let mut word = vec![0u8; n];
        let mut count = 0u64;
        for code in 0..k.pow(n as u32) {
            let mut c = code;
            for slot in word.iter_mut().rev() {
                *slot = (c % k) as u8;
                c /= k;
            }
            if shift.has_periodic_point(&word) {
                count += 1;
            }
        }
        fixed.push(count);
    }
    let least = (1..=n_max)
        .map(|n| {
            (1..=n)
                .filter(|d| n % d == 0)
                .map(|d| mobius(n / d) * fixed[d - 1] as i64)
                .sum()
        })
        .collect();
    Ok(PeriodicSpectrum { fixed, least })
}

#[derive(Clone, Debug, Serialize)]
pub struct BoyleReport {
    pub entropy_x: f64,
    pub entropy_y: f64,
    pub entropy_strict: bool,
    pub periodic_ok: bool,
    /// Periods `n` of `X` with no point of `Y` whose least period divides `n`.
    pub failing_periods: Vec<usize>,
    pub satisfied: bool,
    pub checked_up_to: usize,
}

/// Checks `h(X) > h(Y)` and that every least period of `X` up to `n_max` is a
/// multiple of some least period of `Y`.
pub fn boyle_precondition(x: &Subshift, y: &Subshift, n_max: usize) -> Result<BoyleReport> {
    let hx = entropy_estimates(x, 1)?.spectral;
    let hy = entropy_estimates(y, 1)?.spectral;
    let px = periodic_spectrum(x, n_max)?;
    let py = periodic_spectrum(y, n_max)?;
    let failing: Vec<usize> = (1..=n_max)
        .filter(|&n| px.least[n - 1] > 0)
        .filter(|&n| !(1..=n).any(|d| n % d == 0 && py.least[d - 1] > 0))
        .collect();
    let entropy_strict = hx > hy + 1e-9;
    Ok(BoyleReport {
        entropy_x: hx,
        entropy_y: hy,
        entropy_strict,
        periodic_ok: failing.is_empty(),
        satisfied: entropy_strict && failing.is_empty(),
        failing_periods: failing,
        checked_up_to: n_max,
    })
}

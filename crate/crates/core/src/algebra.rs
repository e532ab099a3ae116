//! Finite semigroups given by composition tables: idempotents, minimal left
//! ideals, the kernel, idempotent pairings between ideals, proximality and
//! periodic elements under left multiplication by the generator.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckMode {
    /// Structural failures are errors.
    Assert,
    /// Structural failures are counted and reported.
    Report,
}

/// `table[a][b] = a o b`.
#[derive(Clone, Debug, Serialize)]
pub struct FiniteSemigroup {
    n: usize,
    table: Vec<usize>,
    identity: Option<usize>,
    generator: Option<usize>,
    names: Vec<String>,
    associativity_violations: usize,
    identity_ok: bool,
}

#[derive(Deserialize)]
struct SemigroupFile {
    table: Vec<Vec<usize>>,
    #[serde(default)]
    identity: Option<usize>,
    #[serde(default)]
    generator: Option<usize>,
    #[serde(default)]
    names: Option<Vec<String>>,
}

impl FiniteSemigroup {
    pub fn new(
        table: Vec<Vec<usize>>,
        identity: Option<usize>,
        generator: Option<usize>,
        names: Vec<String>,
        mode: CheckMode,
    ) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::EmptySet);
        }
        for (a, row) in table.iter().enumerate() {
            if row.len() != n {
                return Err(Error::TableNotClosed(a, row.len(), n));
            }
            if let Some((b, &c)) = row.iter().enumerate().find(|(_, &c)| c >= n) {
                return Err(Error::TableNotClosed(a, b, c));
            }
        }
        for x in [identity, generator].into_iter().flatten() {
            if x >= n {
                return Err(Error::PointOutOfRange(x));
            }
        }
        let names = if names.len() == n {
            names
        } else {
            (0..n).map(|i| format!("s{i}")).collect()
        };
        let mut s = FiniteSemigroup {
            n,
            table: table.concat(),
            identity,
            generator,
            names,
            associativity_violations: 0,
            identity_ok: true,
        };
        let first = s.check_associativity();
        if let Some(e) = identity {
            s.identity_ok = (0..n).all(|a| s.mul(e, a) == a && s.mul(a, e) == a);
        }
        if mode == CheckMode::Assert {
            if let Some((a, b, c)) = first {
                return Err(Error::AssociativityViolation(a, b, c));
            }
            if !s.identity_ok {
                return Err(Error::param(
                    "identity",
                    "element is not a two-sided identity",
                ));
            }
        }
        Ok(s)
    }

    /// Parses `{"table": [[..]], "identity": 0, "generator": 1, "names": [..]}`.
    pub fn from_json(raw: &str, mode: CheckMode) -> Result<Self> {
        let f: SemigroupFile = serde_json::from_str(raw)?;
        FiniteSemigroup::new(
            f.table,
            f.identity,
            f.generator,
            f.names.unwrap_or_default(),
            mode,
        )
    }

    fn check_associativity(&mut self) -> Option<(usize, usize, usize)> {
        let n = self.n;
        let mut first = None;
        let mut count = 0;
        let mut test = |a: usize, b: usize, c: usize, s: &Self| {
            if s.mul(s.mul(a, b), c) != s.mul(a, s.mul(b, c)) {
                count += 1;
                first.get_or_insert((a, b, c));
            }
        };
        if n <= 64 {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        test(a, b, c, self);
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            for _ in 0..200_000 {
                let (a, b, c) = (
                    rng.gen_range(0..n),
                    rng.gen_range(0..n),
                    rng.gen_range(0..n),
                );
                test(a, b, c, self);
            }
        }
        self.associativity_violations = count;
        first
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.n + b]
    }

    pub fn rows(&self) -> Vec<Vec<usize>> {
        self.table.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, a: usize) -> &str {
        &self.names[a]
    }

    pub fn identity(&self) -> Option<usize> {
        self.identity
    }

    pub fn generator(&self) -> Option<usize> {
        self.generator
    }

    /// Number of failing triples found by the associativity check.
    pub fn associativity_violations(&self) -> usize {
        self.associativity_violations
    }

    pub fn identity_ok(&self) -> bool {
        self.identity_ok
    }

    /// Composition table as aligned text with element names on both axes.
    pub fn render(&self) -> String {
        let w = self.names.iter().map(String::len).max().unwrap_or(1).max(1);
        let mut out = format!("{:>w$} |", "o");
        for name in &self.names {
            out.push_str(&format!(" {name:>w$}"));
        }
        out.push('\n');
        out.push_str(&"-".repeat(out.len() - 1));
        out.push('\n');
        for a in 0..self.n {
            out.push_str(&format!("{:>w$} |", self.names[a]));
            for b in 0..self.n {
                out.push_str(&format!(" {:>w$}", self.names[self.mul(a, b)]));
            }
            out.push('\n');
        }
        out
    }
}

pub fn idempotents(s: &FiniteSemigroup) -> Vec<usize> {
    (0..s.len()).filter(|&a| s.mul(a, a) == a).collect()
}

/// Minimal left ideals, each sorted, in order of their smallest element.
pub fn minimal_left_ideals(s: &FiniteSemigroup) -> Vec<Vec<usize>> {
    let principal: Vec<BTreeSet<usize>> = (0..s.len())
        .map(|a| {
            let mut l: BTreeSet<usize> = (0..s.len()).map(|p| s.mul(p, a)).collect();
            l.insert(a);
            l
        })
        .collect();
    let mut out: Vec<Vec<usize>> = Vec::new();
    for l in &principal {
        // L(a) is minimal iff every L(b) with b in L(a) has the same size.
        if l.iter().all(|&b| principal[b].len() == l.len()) {
            let v: Vec<usize> = l.iter().copied().collect();
            if !out.contains(&v) {
                out.push(v);
            }
        }
    }
    out.sort();
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct GroupInfo {
    pub idempotent: usize,
    pub members: Vec<usize>,
    pub is_group: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdealInfo {
    pub members: Vec<usize>,
    pub idempotents: Vec<usize>,
    pub groups: Vec<GroupInfo>,
    /// The groups `vI` partition the ideal.
    pub partition_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdealDecomposition {
    pub ideals: Vec<IdealInfo>,
    pub kernel: Vec<usize>,
    pub all_groups_ok: bool,
}

fn is_group_on(s: &FiniteSemigroup, members: &[usize], unit: usize) -> bool {
    let set: BTreeSet<usize> = members.iter().copied().collect();
    members.iter().all(|&a| {
        s.mul(unit, a) == a
            && s.mul(a, unit) == a
            && members.iter().all(|&b| set.contains(&s.mul(a, b)))
            && members
                .iter()
                .any(|&b| s.mul(a, b) == unit && s.mul(b, a) == unit)
    })
}

pub fn kernel_and_groups(s: &FiniteSemigroup) -> IdealDecomposition {
    let mut kernel = BTreeSet::new();
    let mut ideals = Vec::new();
    for members in minimal_left_ideals(s) {
        let idem: Vec<usize> = members
            .iter()
            .copied()
            .filter(|&a| s.mul(a, a) == a)
            .collect();
        let groups: Vec<GroupInfo> = idem
            .iter()
            .map(|&v| {
                let g: BTreeSet<usize> = members.iter().map(|&p| s.mul(v, p)).collect();
                let g: Vec<usize> = g.into_iter().collect();
                GroupInfo {
                    idempotent: v,
                    is_group: is_group_on(s, &g, v),
                    members: g,
                }
            })
            .collect();
        let mut covered: Vec<usize> = groups
            .iter()
            .flat_map(|g| g.members.iter().copied())
            .collect();
        let total = covered.len();
        covered.sort_unstable();
        covered.dedup();
        let partition_ok = total == covered.len() && covered == members;
        kernel.extend(members.iter().copied());
        ideals.push(IdealInfo {
            members,
            idempotents: idem,
            groups,
            partition_ok,
        });
    }
    let all_groups_ok = ideals
        .iter()
        .all(|i| i.partition_ok && !i.groups.is_empty() && i.groups.iter().all(|g| g.is_group));
    IdealDecomposition {
        ideals,
        kernel: kernel.into_iter().collect(),
        all_groups_ok,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IsomorphismReport {
    pub u: usize,
    pub v: usize,
    /// `"uv=v,vu=u"` or `"uv=u,vu=v"`.
    pub orientation: &'static str,
    pub bijective: bool,
    pub intertwines: bool,
    pub isomorphic: bool,
}

/// Finds idempotents `u` in `i` and `v` in `k` with `uv = v`, `vu = u` (or the
/// reversed orientation) and checks that right multiplication by `v` is a
/// bijection `i -> k` commuting with left multiplication by the generator.
type Orientation = fn(&FiniteSemigroup, usize, usize) -> bool;

pub fn ideal_isomorphism_check(
    s: &FiniteSemigroup,
    i: &[usize],
    k: &[usize],
) -> Result<IsomorphismReport> {
    let idem = |set: &[usize]| -> Vec<usize> {
        set.iter().copied().filter(|&a| s.mul(a, a) == a).collect()
    };
    let orientations: [(&'static str, Orientation); 2] = [
        ("uv=v,vu=u", |s, u, v| s.mul(u, v) == v && s.mul(v, u) == u),
        ("uv=u,vu=v", |s, u, v| s.mul(u, v) == u && s.mul(v, u) == v),
    ];
    let g = s.generator();
    let kset: BTreeSet<usize> = k.iter().copied().collect();
    for (name, test) in orientations {
        for &u in &idem(i) {
            for &v in &idem(k) {
                if !test(s, u, v) {
                    continue;
                }
                let image: Vec<usize> = i.iter().map(|&p| s.mul(p, v)).collect();
                let distinct: BTreeSet<usize> = image.iter().copied().collect();
                let bijective = distinct.len() == i.len() && distinct == kset;
                let intertwines = match g {
                    Some(g) => i
                        .iter()
                        .all(|&p| s.mul(s.mul(g, p), v) == s.mul(g, s.mul(p, v))),
                    None => true,
                };
                return Ok(IsomorphismReport {
                    u,
                    v,
                    orientation: name,
                    bijective,
                    intertwines,
                    isomorphic: bijective && intertwines,
                });
            }
        }
    }
    Err(Error::NoPairingFound)
}

#[derive(Clone, Debug, Serialize)]
pub struct DistalReport {
    pub is_group: bool,
    pub unique_idempotent_is_identity: bool,
    pub idempotent_count: usize,
    pub agree: bool,
}

pub fn is_group_distal(s: &FiniteSemigroup, mode: CheckMode) -> Result<DistalReport> {
    let idem = idempotents(s);
    let members: Vec<usize> = (0..s.len()).collect();
    let is_group = match s.identity() {
        Some(e) => is_group_on(s, &members, e),
        None => false,
    };
    let unique = idem.len() == 1 && Some(idem[0]) == s.identity();
    let agree = is_group == unique;
    if !agree && mode == CheckMode::Assert {
        return Err(Error::DistalDisagreement);
    }
    Ok(DistalReport {
        is_group,
        unique_idempotent_is_identity: unique,
        idempotent_count: idem.len(),
        agree,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ProximalReport {
    /// Unordered proximal pairs `x != y`.
    pub pairs: usize,
    pub is_equivalence: bool,
    pub classes: usize,
    /// Pairs collapsed by every element of each minimal ideal.
    pub per_ideal: Vec<usize>,
    pub minimal_ideals: usize,
    /// Unique minimal ideal agrees with transitivity of the proximal relation.
    pub consistent: bool,
}

/// Proximal relation on `points` sample points: `x ~ y` if some element
/// collapses them, as decided by `collapses(element, x, y)`.
pub fn proximal_structure(
    s: &FiniteSemigroup,
    points: usize,
    collapses: impl Fn(usize, usize, usize) -> bool,
) -> ProximalReport {
    let ideals = minimal_left_ideals(s);
    let mut prox = vec![false; points * points];
    let mut pairs = 0;
    let mut parent: Vec<usize> = (0..points).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut c = x;
        while p[c] != r {
            let n = p[c];
            p[c] = r;
            c = n;
        }
        r
    }
    for x in 0..points {
        for y in x + 1..points {
            if (0..s.len()).any(|r| collapses(r, x, y)) {
                prox[x * points + y] = true;
                pairs += 1;
                let (a, b) = (find(&mut parent, x), find(&mut parent, y));
                parent[a] = b;
            }
        }
    }
    let mut sizes = std::collections::HashMap::new();
    for x in 0..points {
        *sizes.entry(find(&mut parent, x)).or_insert(0usize) += 1;
    }
    let closure_pairs: usize = sizes.values().map(|&c| c * (c - 1) / 2).sum();
    let is_equivalence = closure_pairs == pairs;
    let per_ideal = ideals
        .iter()
        .map(|ideal| {
            let mut c = 0;
            for x in 0..points {
                for y in x + 1..points {
                    if ideal.iter().all(|&r| collapses(r, x, y)) {
                        c += 1;
                    }
                }
            }
            c
        })
        .collect();
    ProximalReport {
        pairs,
        is_equivalence,
        classes: sizes.len(),
        per_ideal,
        minimal_ideals: ideals.len(),
        consistent: (ideals.len() == 1) == is_equivalence,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PeriodicReport {
    /// `(element, least period)` under `p -> g p`.
    pub periodic: Vec<(usize, usize)>,
    pub common_period: usize,
    pub all_equal: bool,
    pub count: usize,
    pub count_within_bound: bool,
    /// Each periodic orbit is a minimal left ideal.
    pub orbits_are_minimal_ideals: bool,
}

fn lcm(a: usize, b: usize) -> usize {
    a / crate::symbolic::gcd_usize(a, b) * b
}

pub fn periodic_element_analysis(s: &FiniteSemigroup) -> Result<PeriodicReport> {
    let g = s.generator().ok_or(Error::NoGenerator)?;
    let ideals = minimal_left_ideals(s);
    let mut periodic = Vec::new();
    let mut orbits_ok = true;
    for p in 0..s.len() {
        let mut q = s.mul(g, p);
        let mut k = 1;
        while q != p && k <= s.len() {
            q = s.mul(g, q);
            k += 1;
        }
        if q == p {
            periodic.push((p, k));
            let mut orbit: Vec<usize> = Vec::with_capacity(k);
            let mut r = p;
            for _ in 0..k {
                orbit.push(r);
                r = s.mul(g, r);
            }
            orbit.sort_unstable();
            orbits_ok &= ideals.contains(&orbit);
        }
    }
    let common = periodic.iter().map(|&(_, k)| k).fold(1, lcm);
    let all_equal = periodic.windows(2).all(|w| w[0].1 == w[1].1);
    Ok(PeriodicReport {
        count: periodic.len(),
        count_within_bound: periodic.len() <= 2 * common,
        common_period: common,
        all_equal,
        periodic,
        orbits_are_minimal_ideals: orbits_ok,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RecurrentIdempotent {
    pub idempotent: usize,
    pub in_minimal_ideal: bool,
    /// Least `n >= 1` with `g^n u = u`.
    pub return_time: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RecurrenceOfIdempotents {
    pub idempotents: Vec<RecurrentIdempotent>,
    /// Every idempotent of a minimal left ideal returns under the generator.
    pub minimal_ones_recurrent: bool,
}

pub fn recurrent_idempotent_check(s: &FiniteSemigroup) -> Result<RecurrenceOfIdempotents> {
    let g = s.generator().ok_or(Error::NoGenerator)?;
    let kernel: BTreeSet<usize> = minimal_left_ideals(s).into_iter().flatten().collect();
    let list: Vec<RecurrentIdempotent> = idempotents(s)
        .into_iter()
        .map(|u| {
            let mut q = s.mul(g, u);
            let mut k = 1;
            while q != u && k <= s.len() {
                q = s.mul(g, q);
                k += 1;
            }
            RecurrentIdempotent {
                idempotent: u,
                in_minimal_ideal: kernel.contains(&u),
                return_time: (q == u).then_some(k),
            }
        })
        .collect();
    let ok = list
        .iter()
        .filter(|r| r.in_minimal_ideal)
        .all(|r| r.return_time.is_some());
    Ok(RecurrenceOfIdempotents {
        idempotents: list,
        minimal_ones_recurrent: ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyclic(n: usize) -> FiniteSemigroup {
        let t = (0..n)
            .map(|a| (0..n).map(|b| (a + b) % n).collect())
            .collect();
        FiniteSemigroup::new(t, Some(0), Some(1 % n), vec![], CheckMode::Assert).unwrap()
    }

    /// Right-zero band {a, b} with an adjoined identity e: xy = y for x, y in {a, b}.
    fn right_zero_with_identity() -> FiniteSemigroup {
        let t = vec![vec![0, 1, 2], vec![1, 1, 2], vec![2, 1, 2]];
        FiniteSemigroup::new(
            t,
            Some(0),
            Some(0),
            vec!["e".into(), "a".into(), "b".into()],
            CheckMode::Assert,
        )
        .unwrap()
    }

    #[test]
    fn cyclic_group_is_distal() {
        let s = cyclic(3);
        assert_eq!(idempotents(&s), vec![0]);
        let d = is_group_distal(&s, CheckMode::Assert).unwrap();
        assert!(d.is_group && d.unique_idempotent_is_identity);
        let p = periodic_element_analysis(&s).unwrap();
        assert_eq!(p.count, 3);
        assert!(p.all_equal && p.orbits_are_minimal_ideals);
    }

    #[test]
    fn right_zero_band_ideals() {
        let s = right_zero_with_identity();
        let ideals = minimal_left_ideals(&s);
        assert_eq!(ideals, vec![vec![1], vec![2]]);
        let r = ideal_isomorphism_check(&s, &ideals[0], &ideals[1]).unwrap();
        assert_eq!(r.orientation, "uv=v,vu=u");
        let k = kernel_and_groups(&s);
        assert!(k.all_groups_ok);
        assert_eq!(k.kernel, vec![1, 2]);
    }

    #[test]
    fn non_associative_rejected() {
        let t = vec![vec![1, 0], vec![0, 0]];
        let err = FiniteSemigroup::new(t.clone(), None, None, vec![], CheckMode::Assert);
        assert!(matches!(err, Err(Error::AssociativityViolation(..))));
        let s = FiniteSemigroup::new(t, None, None, vec![], CheckMode::Report).unwrap();
        assert!(s.associativity_violations() > 0);
    }

    #[test]
    fn render_has_names() {
        let s = right_zero_with_identity();
        let text = s.render();
        assert!(text.lines().nth(2).unwrap().starts_with("e |"));
    }
}

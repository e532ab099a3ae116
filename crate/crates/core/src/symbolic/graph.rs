use std::collections::{HashMap, VecDeque};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Edge {
    pub from: usize,
    pub to: usize,
    pub label: u8,
}

/// Labeled directed graph presenting a shift.
#[derive(Clone, Debug)]
pub(crate) struct Graph {
    pub states: usize,
    pub edges: Vec<Edge>,
    pub out: Vec<Vec<usize>>,
    pub inc: Vec<Vec<usize>>,
}

impl Graph {
    pub fn new(states: usize, edges: Vec<Edge>) -> Self {
        let mut out = vec![Vec::new(); states];
        let mut inc = vec![Vec::new(); states];
        for (i, e) in edges.iter().enumerate() {
            out[e.from].push(i);
            inc[e.to].push(i);
        }
        Graph {
            states,
            edges,
            out,
            inc,
        }
    }

    /// Removes states that cannot lie on a forward-infinite path (and, when
    /// `two_sided`, on a backward-infinite one).
    pub fn essential(&self, two_sided: bool) -> Graph {
        let mut alive = vec![true; self.states];
        loop {
            let mut changed = false;
            for s in 0..self.states {
                if !alive[s] {
                    continue;
                }
                let has_out = self.out[s].iter().any(|&e| alive[self.edges[e].to]);
                let has_in = self.inc[s].iter().any(|&e| alive[self.edges[e].from]);
                if !has_out || (two_sided && !has_in) {
                    alive[s] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let mut index = vec![usize::MAX; self.states];
        let mut next = 0;
        for s in 0..self.states {
            if alive[s] {
                index[s] = next;
                next += 1;
            }
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| alive[e.from] && alive[e.to])
            .map(|e| Edge {
                from: index[e.from],
                to: index[e.to],
                label: e.label,
            })
            .collect();
        Graph::new(next, edges)
    }

    pub fn right_resolving(&self) -> bool {
        self.out.iter().all(|ids| {
            let mut seen = [false; 256];
            ids.iter().all(|&e| {
                let l = self.edges[e].label as usize;
                !std::mem::replace(&mut seen[l], true)
            })
        })
    }

    /// States reached from `set` along edges labeled `a`, sorted and deduplicated.
    pub fn follow(&self, set: &[u32], a: u8) -> Vec<u32> {
        let mut next: Vec<u32> = set
            .iter()
            .flat_map(|&s| self.out[s as usize].iter())
            .map(|&e| &self.edges[e])
            .filter(|e| e.label == a)
            .map(|e| e.to as u32)
            .collect();
        next.sort_unstable();
        next.dedup();
        next
    }

    /// Strongly connected components (iterative Tarjan); returns a component id per state.
    pub fn components(&self) -> (usize, Vec<usize>) {
        let n = self.states;
        let mut index = vec![usize::MAX; n];
        let mut low = vec![0; n];
        let mut on_stack = vec![false; n];
        let mut comp = vec![usize::MAX; n];
        let mut stack = Vec::new();
        let mut counter = 0;
        let mut ncomp = 0;
        for root in 0..n {
            if index[root] != usize::MAX {
                continue;
            }
            let mut call: Vec<(usize, usize)> = vec![(root, 0)];
            index[root] = counter;
            low[root] = counter;
            counter += 1;
            stack.push(root);
            on_stack[root] = true;
            while let Some(&mut (v, ref mut pos)) = call.last_mut() {
                if *pos < self.out[v].len() {
                    let w = self.edges[self.out[v][*pos]].to;
                    *pos += 1;
                    if index[w] == usize::MAX {
                        index[w] = counter;
                        low[w] = counter;
                        counter += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        call.push((w, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                } else {
                    call.pop();
                    if let Some(&(parent, _)) = call.last() {
                        low[parent] = low[parent].min(low[v]);
                    }
                    if low[v] == index[v] {
                        loop {
                            let w = stack.pop().unwrap();
                            on_stack[w] = false;
                            comp[w] = ncomp;
                            if w == v {
                                break;
                            }
                        }
                        ncomp += 1;
                    }
                }
            }
        }
        (ncomp, comp)
    }

    /// Period (gcd of cycle lengths) of the component `c`, or `None` if it has no cycle.
    pub fn component_period(&self, comp: &[usize], c: usize) -> Option<usize> {
        let root = comp.iter().position(|&x| x == c)?;
        let mut level = vec![usize::MAX; self.states];
        level[root] = 0;
        let mut queue = VecDeque::from([root]);
        let mut g = 0usize;
        while let Some(v) = queue.pop_front() {
            for &e in &self.out[v] {
                let w = self.edges[e].to;
                if comp[w] != c {
                    continue;
                }
                if level[w] == usize::MAX {
                    level[w] = level[v] + 1;
                    queue.push_back(w);
                } else {
                    g = gcd(g, (level[v] + 1).abs_diff(level[w]));
                }
            }
        }
        (g > 0).then_some(g)
    }

    /// Spectral radius of the adjacency matrix by power iteration on `A + I`,
    /// stopped when the Collatz-Wielandt bounds agree to `tol` (relative).
    pub fn spectral_radius(&self, tol: f64, max_iter: usize) -> (f64, bool) {
        let n = self.states;
        if n == 0 {
            return (0.0, true);
        }
        let mut v = vec![1.0; n];
        let mut w = vec![0.0; n];
        let (mut lo, mut hi) = (0.0, f64::INFINITY);
        for _ in 0..max_iter {
            w.copy_from_slice(&v);
            for e in &self.edges {
                w[e.from] += v[e.to];
            }
            lo = f64::INFINITY;
            hi = 0.0f64;
            for i in 0..n {
                let r = w[i] / v[i];
                lo = lo.min(r);
                hi = hi.max(r);
            }
            let norm = w.iter().cloned().fold(0.0, f64::max);
            for i in 0..n {
                v[i] = w[i] / norm;
            }
            if hi - lo <= tol * hi {
                return ((lo + hi) / 2.0 - 1.0, true);
            }
        }
        ((lo + hi) / 2.0 - 1.0, false)
    }
}

pub(crate) fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Subset automaton of a presentation, started from the set of all states.
/// State 0 is the start; transitions to the empty set are `None`.
#[derive(Clone, Debug)]
pub(crate) struct Dfa {
    pub symbols: usize,
    pub trans: Vec<Vec<Option<usize>>>,
}

impl Dfa {
    pub fn build(graph: &Graph, symbols: usize, budget: usize) -> Result<Dfa> {
        let start: Vec<u32> = (0..graph.states as u32).collect();
        let mut ids: HashMap<Vec<u32>, usize> = HashMap::new();
        let mut sets = vec![start.clone()];
        ids.insert(start, 0);
        let mut trans: Vec<Vec<Option<usize>>> = Vec::new();
        let mut i = 0;
        while i < sets.len() {
            let mut row = Vec::with_capacity(symbols);
            for a in 0..symbols {
                let next = graph.follow(&sets[i], a as u8);
                if next.is_empty() {
                    row.push(None);
                    continue;
                }
                let id = match ids.get(&next) {
                    Some(&id) => id,
                    None => {
                        if sets.len() >= budget {
                            return Err(Error::BadShift(format!(
                                "subset automaton exceeds {budget} states"
                            )));
                        }
                        let id = sets.len();
                        ids.insert(next.clone(), id);
                        sets.push(next);
                        id
                    }
                };
                row.push(Some(id));
            }
            trans.push(row);
            i += 1;
        }
        Ok(Dfa { symbols, trans })
    }

    pub fn accepts(&self, word: &[u8]) -> bool {
        let mut s = 0;
        for &a in word {
            match self.trans[s].get(a as usize).copied().flatten() {
                Some(t) => s = t,
                None => return false,
            }
        }
        true
    }

    /// Number of accepted words of each length `0..=n`.
    pub fn counts(&self, n: usize) -> Vec<u128> {
        let mut cur = vec![0u128; self.trans.len()];
        cur[0] = 1;
        let mut out = vec![1u128];
        for _ in 0..n {
            let mut next = vec![0u128; self.trans.len()];
            for (s, &c) in cur.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                for t in self.trans[s].iter().flatten() {
                    next[*t] += c;
                }
            }
            out.push(next.iter().sum());
            cur = next;
        }
        out
    }

    pub fn as_graph(&self) -> Graph {
        let mut edges = Vec::new();
        for (s, row) in self.trans.iter().enumerate() {
            for (a, t) in row.iter().enumerate() {
                if let Some(t) = t {
                    edges.push(Edge {
                        from: s,
                        to: *t,
                        label: a as u8,
                    });
                }
            }
        }
        Graph::new(self.trans.len(), edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> Graph {
        Graph::new(
            2,
            vec![
                Edge {
                    from: 0,
                    to: 0,
                    label: 0,
                },
                Edge {
                    from: 0,
                    to: 1,
                    label: 1,
                },
                Edge {
                    from: 1,
                    to: 0,
                    label: 0,
                },
            ],
        )
    }

    #[test]
    fn golden_spectral_radius() {
        let (rho, ok) = golden().spectral_radius(1e-14, 10_000);
        assert!(ok);
        assert!((rho - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn periodic_graph_converges() {
        let g = Graph::new(
            2,
            vec![
                Edge {
                    from: 0,
                    to: 1,
                    label: 0,
                },
                Edge {
                    from: 1,
                    to: 0,
                    label: 0,
                },
            ],
        );
        let (rho, ok) = g.spectral_radius(1e-14, 10_000);
        assert!(ok);
        assert!((rho - 1.0).abs() < 1e-12);
        let (n, comp) = g.components();
        assert_eq!(n, 1);
        assert_eq!(g.component_period(&comp, 0), Some(2));
    }

    #[test]
    fn dangling_states_pruned() {
        let g = Graph::new(
            3,
            vec![
                Edge {
                    from: 0,
                    to: 0,
                    label: 0,
                },
                Edge {
                    from: 0,
                    to: 1,
                    label: 1,
                },
                Edge {
                    from: 2,
                    to: 0,
                    label: 1,
                },
            ],
        );
        assert_eq!(g.essential(true).states, 1);
        assert_eq!(g.essential(false).states, 2);
    }
}

/// Finite windows `[-reach, reach]` of bi-infinite sequences used by shift models.
#[derive(Clone, Debug)]
pub struct SequenceBank {
    reach: i64,
    alphabet: Vec<char>,
    seqs: Vec<Vec<u8>>,
    names: Vec<String>,
}

impl SequenceBank {
    /// Each sequence must have length `2 * reach + 1`; index `reach` is coordinate 0.
    pub fn new(reach: i64, alphabet: Vec<char>, seqs: Vec<Vec<u8>>, names: Vec<String>) -> Self {
        debug_assert!(seqs.iter().all(|s| s.len() as i64 == 2 * reach + 1));
        SequenceBank {
            reach,
            alphabet,
            seqs,
            names,
        }
    }

    pub fn reach(&self) -> i64 {
        self.reach
    }

    pub fn len(&self) -> usize {
        self.seqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seqs.is_empty()
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    pub fn name(&self, s: usize) -> &str {
        &self.names[s]
    }

    pub fn symbol(&self, s: usize, pos: i64) -> Option<u8> {
        if pos.abs() > self.reach {
            return None;
        }
        Some(self.seqs[s][(pos + self.reach) as usize])
    }

    /// Largest `k` in `[-1, radius - 1]` with agreement on `[-k, k]`, or `None`
    /// if the windows agree on all of `[-radius, radius]`.
    pub fn agreement(&self, s1: usize, o1: i64, s2: usize, o2: i64, radius: usize) -> Option<i64> {
        let get = |s: usize, p: i64| self.symbol(s, p).unwrap_or(u8::MAX);
        if get(s1, o1) != get(s2, o2) {
            return Some(-1);
        }
        for i in 1..=radius as i64 {
            if get(s1, o1 + i) != get(s2, o2 + i) || get(s1, o1 - i) != get(s2, o2 - i) {
                return Some(i - 1);
            }
        }
        None
    }

    /// Renders the window `[offset - radius, offset + radius]`.
    pub fn window(&self, s: usize, offset: i64, radius: usize) -> String {
        (-(radius as i64)..=radius as i64)
            .map(|i| match self.symbol(s, offset + i) {
                Some(c) => self.alphabet[c as usize],
                None => '?',
            })
            .collect()
    }
}

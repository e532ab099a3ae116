use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{language, Subshift};
use crate::{Error, Result};

/// A sliding block code `x -> y` with `y_i = rule(x_(i-memory) .. x_(i+anticipation))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlidingBlockCode {
    pub memory: usize,
    pub anticipation: usize,
    pub rule: BTreeMap<String, char>,
}

impl SlidingBlockCode {
    pub fn window(&self) -> usize {
        self.memory + self.anticipation + 1
    }

    /// The 2-block code from the golden mean shift onto the even shift:
    /// `00 -> 1`, `01 -> 0`, `10 -> 0`.
    pub fn golden_to_even() -> Self {
        SlidingBlockCode {
            memory: 0,
            anticipation: 1,
            rule: [("00", '1'), ("01", '0'), ("10", '0')]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        }
    }
}

/// Image of a finite word; the output is shorter by `memory + anticipation`.
pub fn apply_block_code(code: &SlidingBlockCode, word: &str) -> Result<String> {
    let chars: Vec<char> = word.chars().collect();
    let w = code.window();
    if chars.len() < w {
        return Ok(String::new());
    }
    chars
        .windows(w)
        .map(|win| {
            let key: String = win.iter().collect();
            code.rule
                .get(&key)
                .copied()
                .ok_or(Error::RuleUndefined(key))
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct FactorReport {
    pub n: usize,
    pub domain_words: usize,
    /// Every domain `n`-word maps into the codomain language.
    pub into: bool,
    /// Every codomain word of the image length is hit.
    pub onto: bool,
    pub bad_images: Vec<(String, String)>,
    pub missed: Vec<String>,
}

pub fn verify_factor(
    code: &SlidingBlockCode,
    domain: &Subshift,
    codomain: &Subshift,
    n: usize,
) -> Result<FactorReport> {
    if n < code.window() {
        return Err(Error::param("n", "must be at least the code window"));
    }
    let words = language(domain, n)?;
    let mut images = std::collections::BTreeSet::new();
    let mut bad = Vec::new();
    for w in &words {
        let img = apply_block_code(code, w)?;
        let encoded = codomain.encode(&img)?;
        if !codomain.contains_word(&encoded) && bad.len() < 16 {
            bad.push((w.clone(), img.clone()));
        }
        images.insert(img);
    }
    let target = language(codomain, n + 1 - code.window())?;
    let missed: Vec<String> = target
        .into_iter()
        .filter(|t| !images.contains(t))
        .take(16)
        .collect();
    Ok(FactorReport {
        n,
        domain_words: words.len(),
        into: bad.is_empty(),
        onto: missed.is_empty(),
        bad_images: bad,
        missed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CylinderDistance {
    pub distance: f64,
    /// Largest `k` with agreement on `[-k, k]`; `-1` when the centres differ.
    pub agreement: i64,
    /// The windows agree everywhere, so the distance is only an upper bound of zero.
    pub indistinguishable: bool,
}

/// `2^-(k+1)` where `k` is the agreement radius of two odd-length windows
/// centred on coordinate 0. Differing centres give distance 1.
pub fn cylinder_metric(x: &str, y: &str) -> Result<CylinderDistance> {
    let a: Vec<char> = x.chars().collect();
    let b: Vec<char> = y.chars().collect();
    if a.len() != b.len() || a.len().is_multiple_of(2) {
        return Err(Error::BadWindow(format!("`{x}` vs `{y}`")));
    }
    let c = a.len() / 2;
    for k in 0..=c {
        if a[c - k] != b[c - k] || a[c + k] != b[c + k] {
            let agreement = k as i64 - 1;
            return Ok(CylinderDistance {
                distance: 0.5f64.powi(k as i32),
                agreement,
                indistinguishable: false,
            });
        }
    }
    Ok(CylinderDistance {
        distance: 0.0,
        agreement: c as i64,
        indistinguishable: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_to_even_on_word() {
        let code = SlidingBlockCode::golden_to_even();
        assert_eq!(apply_block_code(&code, "00100").unwrap(), "1001");
        assert!(matches!(
            apply_block_code(&code, "0110"),
            Err(Error::RuleUndefined(_))
        ));
    }

    #[test]
    fn cylinder_examples() {
        let d = cylinder_metric("01010", "11011").unwrap();
        assert_eq!(d.distance, 0.25);
        assert_eq!(d.agreement, 1);
        let d = cylinder_metric("000", "010").unwrap();
        assert_eq!(d.distance, 1.0);
        let d = cylinder_metric("101", "101").unwrap();
        assert!(d.indistinguishable);
        assert!(cylinder_metric("01", "10").is_err());
    }

    #[test]
    fn factor_into_and_onto() {
        let r = verify_factor(
            &SlidingBlockCode::golden_to_even(),
            &Subshift::golden_mean(),
            &Subshift::even(),
            10,
        )
        .unwrap();
        assert!(r.into);
        assert!(r.onto);
    }
}

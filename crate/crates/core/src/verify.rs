//! Randomized cross-checks of structural consequences on small finite cascades.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{
    ideal_isomorphism_check, idempotents, is_group_distal, minimal_left_ideals, proximal_structure,
    CheckMode,
};
use crate::envelope::{envelope_power_decomposition, exact_envelope};
use crate::properties::distal_semiflow_check;
use crate::spaces::CascadeModel;
use crate::Result;

#[derive(Clone, Debug, Serialize)]
pub struct CorpusOptions {
    pub models: usize,
    pub max_points: usize,
    pub seed: u64,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        CorpusOptions {
            models: 500,
            max_points: 8,
            seed: 2024,
        }
    }
}

/// Check names, in report order.
pub const CHECKS: [&str; 6] = [
    "group-idempotent-proximal",
    "unique-ideal-proximal-transitive",
    "ideal-isomorphism",
    "power-decomposition",
    "idempotent-exists",
    "distal-consequences",
];

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub model: usize,
    pub table: Vec<usize>,
    pub check: &'static str,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorpusReport {
    pub options: CorpusOptions,
    pub invertible_models: usize,
    pub distal_models: usize,
    /// Number of models on which each check ran, in [`CHECKS`] order.
    pub evaluated: Vec<usize>,
    pub violations: Vec<Violation>,
}

impl CorpusReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A random self-map of `n` points; a permutation when `invertible`.
pub fn random_table(rng: &mut impl Rng, n: usize, invertible: bool) -> Vec<usize> {
    if invertible {
        let mut t: Vec<usize> = (0..n).collect();
        t.shuffle(rng);
        t
    } else {
        (0..n).map(|_| rng.gen_range(0..n)).collect()
    }
}

/// Runs every check on one table. Returns `(check, passed, detail)` rows.
pub fn check_table(table: &[usize]) -> Result<Vec<(&'static str, bool, String)>> {
    let n = table.len();
    let env = exact_envelope(table, usize::MAX)?;
    let s = env.semigroup()?;
    let mut rows = Vec::new();

    let distal = is_group_distal(&s, CheckMode::Report)?;
    let maps = env.maps();
    let prox = proximal_structure(&s, n, |r, x, y| maps[r][x] == maps[r][y]);
    let no_proximal = prox.pairs == 0;
    rows.push((
        CHECKS[0],
        distal.is_group == distal.unique_idempotent_is_identity && distal.is_group == no_proximal,
        format!(
            "group={} unique_idempotent={} proximal_pairs={}",
            distal.is_group, distal.unique_idempotent_is_identity, prox.pairs
        ),
    ));

    let ideals = minimal_left_ideals(&s);
    rows.push((
        CHECKS[1],
        (ideals.len() == 1) == prox.is_equivalence,
        format!(
            "ideals={} proximal_equivalence={}",
            ideals.len(),
            prox.is_equivalence
        ),
    ));

    let mut iso_ok = true;
    let mut detail = String::from("all pairs isomorphic");
    for a in &ideals {
        for b in &ideals {
            match ideal_isomorphism_check(&s, a, b) {
                Ok(r) if r.isomorphic => {}
                Ok(r) => {
                    iso_ok = false;
                    detail = format!("pairing {}~{} not an isomorphism", s.name(r.u), s.name(r.v));
                }
                Err(e) => {
                    iso_ok = false;
                    detail = e.to_string();
                }
            }
        }
    }
    rows.push((CHECKS[2], iso_ok, detail));

    let mut pd_ok = true;
    let mut detail = String::new();
    for k in [2, 3] {
        let pd = envelope_power_decomposition(table, k)?;
        pd_ok &= pd.equal;
        detail.push_str(&format!("n={k}: {}={} ", pd.lhs_size, pd.rhs_size));
    }
    rows.push((CHECKS[3], pd_ok, detail.trim_end().to_string()));

    let idem = idempotents(&s);
    rows.push((
        CHECKS[4],
        !idem.is_empty(),
        format!("idempotents={}", idem.len()),
    ));

    let model = CascadeModel::finite("corpus", table.to_vec(), None)?;
    let d = distal_semiflow_check(&model)?;
    rows.push((
        CHECKS[5],
        d.consequences_hold,
        format!(
            "distal={} pap={} surjective={}",
            d.distal, d.pointwise_almost_periodic, d.surjective
        ),
    ));
    Ok(rows)
}

/// Generates `models` random cascades of at most `max_points` points (half of
/// them permutations) and runs [`check_table`] on each.
pub fn theorem_corpus(options: &CorpusOptions) -> Result<CorpusReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut violations = Vec::new();
    let mut evaluated = vec![0; CHECKS.len()];
    let mut invertible_models = 0;
    let mut distal_models = 0;
    for model in 0..options.models {
        let n = rng.gen_range(1..=options.max_points.max(1));
        let table = random_table(&mut rng, n, model % 2 == 0);
        let mut seen = vec![false; n];
        for &y in &table {
            seen[y] = true;
        }
        if seen.iter().all(|b| *b) {
            invertible_models += 1;
        }
        for (k, (check, ok, detail)) in check_table(&table)?.into_iter().enumerate() {
            evaluated[k] += 1;
            if k == 5 && detail.starts_with("distal=true") {
                distal_models += 1;
            }
            if !ok {
                violations.push(Violation {
                    model,
                    table: table.clone(),
                    check,
                    detail,
                });
            }
        }
    }
    Ok(CorpusReport {
        options: options.clone(),
        invertible_models,
        distal_models,
        evaluated,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_corpus_clean() {
        let r = theorem_corpus(&CorpusOptions {
            models: 60,
            max_points: 6,
            seed: 3,
        })
        .unwrap();
        assert!(r.passed(), "{:?}", r.violations);
        assert!(r.invertible_models >= 30);
    }

    #[test]
    fn constant_map_rows() {
        let rows = check_table(&[0, 0, 0]).unwrap();
        assert!(rows.iter().all(|r| r.1), "{rows:?}");
        assert!(rows[0].2.contains("group=false"));
    }
}

//! Finite subsets of bounded cardinality with the Hausdorff metric and the
//! induced map `f*(A) = f(A)`.

use std::collections::HashMap;

use serde::Serialize;

use crate::spaces::{CascadeModel, PointId, SampledDynamics};
use crate::{Error, Result};

pub const DEFAULT_BUDGET: usize = 250_000;

/// A nonempty finite subset in canonical (sorted, deduplicated) form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct HyperPoint(Vec<PointId>);

impl HyperPoint {
    pub fn new(mut members: Vec<PointId>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptySet);
        }
        members.sort_unstable();
        members.dedup();
        Ok(HyperPoint(members))
    }

    pub fn members(&self) -> &[PointId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_subset(&self, other: &HyperPoint) -> bool {
        self.0.iter().all(|x| other.0.binary_search(x).is_ok())
    }
}

/// Open ball `{y : d(center, y) < radius}` in the base space.
#[derive(Clone, Debug, Serialize)]
pub struct Ball {
    pub center: PointId,
    pub radius: f64,
}

fn binomial(n: usize, k: usize) -> u128 {
    let mut acc: u128 = 1;
    for i in 0..k.min(n) {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Number of nonempty subsets of an `n`-point set with at most `k` elements.
pub fn hyper_cardinality(n: usize, k: usize) -> u128 {
    (1..=k.min(n)).map(|j| binomial(n, j)).sum()
}

/// Induced cascade on subsets of size at most `k`.
#[derive(Clone, Debug)]
pub struct HyperCascadeModel {
    base: CascadeModel,
    k: usize,
    points: Vec<HyperPoint>,
    index: HashMap<HyperPoint, usize>,
    map: Vec<usize>,
    max_snap_error: f64,
}

impl HyperCascadeModel {
    pub fn base(&self) -> &CascadeModel {
        &self.base
    }

    pub fn max_card(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &HyperPoint {
        &self.points[i]
    }

    pub fn points(&self) -> &[HyperPoint] {
        &self.points
    }

    pub fn index_of(&self, a: &HyperPoint) -> Option<usize> {
        self.index.get(a).copied()
    }

    /// The induced map as a table over hyperpoint indices.
    pub fn table(&self) -> &[usize] {
        &self.map
    }

    pub fn max_snap_error(&self) -> f64 {
        self.max_snap_error
    }

    pub fn induced_step(&self, a: &HyperPoint) -> Result<HyperPoint> {
        let i = self.index_of(a).ok_or(Error::PointOutOfRange(usize::MAX))?;
        Ok(self.points[self.map[i]].clone())
    }

    pub fn label(&self, i: usize) -> String {
        let parts: Vec<String> = self.points[i]
            .0
            .iter()
            .map(|&x| self.base.label(x))
            .collect();
        format!("{{{}}}", parts.join(", "))
    }

    /// Snaps every base image in a padded hyper image and returns the canonical subset.
    pub fn snap_image(&self, img: &[f64]) -> HyperPoint {
        let bs = self.base.stride();
        let mut members: Vec<PointId> = img
            .chunks(bs)
            .map(|c| PointId(self.base.nearest_sample(c).0))
            .collect();
        members.sort_unstable();
        members.dedup();
        HyperPoint(members)
    }
}

/// Enumerates all nonempty subsets of size at most `k` (by size, then
/// lexicographically) and tabulates the induced map.
pub fn build_hyper_model(
    base: &CascadeModel,
    k: usize,
    budget: usize,
) -> Result<HyperCascadeModel> {
    if k == 0 {
        return Err(Error::param("k", "need k >= 1"));
    }
    let n = base.len();
    let count = hyper_cardinality(n, k);
    if count > budget as u128 {
        return Err(Error::CardinalityBudget { count, budget });
    }
    let mut points = Vec::with_capacity(count as usize);
    for size in 1..=k.min(n) {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            points.push(HyperPoint(combo.iter().map(|&i| PointId(i)).collect()));
            let mut i = size;
            while i > 0 && combo[i - 1] == n - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            combo[i - 1] += 1;
            for j in i..size {
                combo[j] = combo[j - 1] + 1;
            }
        }
    }
    let index: HashMap<HyperPoint, usize> = points
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, p)| (p, i))
        .collect();
    let mut image = Vec::with_capacity(n);
    let mut max_snap_error: f64 = 0.0;
    for x in 0..n {
        let s = base.step(PointId(x))?;
        max_snap_error = max_snap_error.max(s.snap_error);
        image.push(s.snapped);
    }
    let map = points
        .iter()
        .map(|p| {
            let img = HyperPoint::new(p.0.iter().map(|x| image[x.0]).collect()).expect("nonempty");
            index[&img]
        })
        .collect();
    Ok(HyperCascadeModel {
        base: base.clone(),
        k,
        points,
        index,
        map,
        max_snap_error,
    })
}

/// Hausdorff distance between two nonempty subsets of the base model.
pub fn hausdorff_distance(base: &CascadeModel, a: &HyperPoint, b: &HyperPoint) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let d = |x: PointId, y: PointId| base.metric(x, y);
    let mut worst: f64 = 0.0;
    for (p, q) in [(a, b), (b, a)] {
        for &x in &p.0 {
            let mut best = f64::INFINITY;
            for &y in &q.0 {
                best = best.min(d(x, y)?);
            }
            worst = worst.max(best);
        }
    }
    Ok(worst)
}

fn hausdorff_images<D: SampledDynamics + ?Sized>(base: &D, a: &[f64], b: &[f64]) -> f64 {
    let bs = base.stride();
    let one_way = |p: &[f64], q: &[f64]| {
        p.chunks(bs)
            .map(|x| {
                q.chunks(bs)
                    .map(|y| base.image_dist(x, y))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Membership of `A` in the Vietoris basic open set `<U_1, ..., U_m>`: `A` lies
/// in the union of the balls and meets each of them.
pub fn vietoris_member(base: &CascadeModel, a: &HyperPoint, balls: &[Ball]) -> Result<bool> {
    if balls.is_empty() {
        return Err(Error::EmptySet);
    }
    let inside =
        |x: PointId, b: &Ball| -> Result<bool> { Ok(base.metric(b.center, x)? < b.radius) };
    for &x in &a.0 {
        let mut covered = false;
        for b in balls {
            covered |= inside(x, b)?;
        }
        if !covered {
            return Ok(false);
        }
    }
    for b in balls {
        let mut meets = false;
        for &x in &a.0 {
            meets |= inside(x, b)?;
        }
        if !meets {
            return Ok(false);
        }
    }
    Ok(true)
}

impl SampledDynamics for HyperCascadeModel {
    fn sample_len(&self) -> usize {
        self.points.len()
    }

    fn stride(&self) -> usize {
        self.k * self.base.stride()
    }

    fn write_sample(&self, i: usize, out: &mut [f64]) {
        let bs = self.base.stride();
        let members = &self.points[i].0;
        for (slot, chunk) in out.chunks_mut(bs).enumerate() {
            let x = members[slot.min(members.len() - 1)];
            self.base.write_sample(x.0, chunk);
        }
    }

    fn advance(&self, img: &[f64], n: i64, out: &mut [f64]) -> Result<()> {
        let bs = self.base.stride();
        for (src, dst) in img.chunks(bs).zip(out.chunks_mut(bs)) {
            self.base.advance(src, n, dst)?;
        }
        Ok(())
    }

    fn image_dist(&self, a: &[f64], b: &[f64]) -> f64 {
        hausdorff_images(&self.base, a, b)
    }

    fn invertible(&self) -> bool {
        self.base.invertible()
    }

    fn is_exact(&self) -> bool {
        self.base.is_exact()
    }

    fn resolution(&self) -> f64 {
        self.base.resolution()
    }

    fn nearest_sample(&self, img: &[f64]) -> (usize, f64) {
        let snapped = self.snap_image(img);
        let i = self.index[&snapped];
        let mut buf = vec![0.0; self.stride()];
        self.write_sample(i, &mut buf);
        (i, self.image_dist(img, &buf))
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::spaces::load_model;

    fn square(grid: usize) -> CascadeModel {
        let params = [("grid".to_string(), grid.to_string())]
            .into_iter()
            .collect();
        load_model("square-map", &params).unwrap()
    }

    #[test]
    fn cardinality_formula() {
        assert_eq!(hyper_cardinality(21, 2), 231);
        assert_eq!(hyper_cardinality(4, 4), 15);
    }

    #[test]
    fn square_hyper_model() {
        let base = square(21);
        let h = build_hyper_model(&base, 2, DEFAULT_BUDGET).unwrap();
        assert_eq!(h.len(), 231);
        let a = HyperPoint::new(vec![PointId(0), PointId(20)]).unwrap();
        assert_eq!(h.induced_step(&a).unwrap(), a);
        let half = HyperPoint::new(vec![PointId(10)]).unwrap();
        let img = h.induced_step(&half).unwrap();
        assert_eq!(img.members(), &[PointId(5)]);
    }

    #[test]
    fn budget_enforced() {
        let base = square(1001);
        let err = build_hyper_model(&base, 3, DEFAULT_BUDGET).unwrap_err();
        assert!(matches!(err, Error::CardinalityBudget { .. }));
    }

    #[test]
    fn hausdorff_example() {
        let base = square(11);
        let a = HyperPoint::new(vec![PointId(0), PointId(10)]).unwrap();
        let b = HyperPoint::new(vec![PointId(0)]).unwrap();
        assert_eq!(hausdorff_distance(&base, &a, &b).unwrap(), 1.0);
        assert!(HyperPoint::new(vec![]).is_err());
    }

    #[test]
    fn vietoris() {
        let base = load_model("identity", &BTreeMap::new()).unwrap();
        let a = HyperPoint::new(vec![PointId(0), PointId(3)]).unwrap();
        let balls = [
            Ball {
                center: PointId(0),
                radius: 0.5,
            },
            Ball {
                center: PointId(3),
                radius: 1.5,
            },
        ];
        assert!(vietoris_member(&base, &a, &balls).unwrap());
        assert!(!vietoris_member(&base, &a, &balls[..1]).unwrap());
    }
}

//! Point sets, metrics, maps and the named model catalog.
//!
//! A model is either finite-exact (a finite point set with an exact map table)
//! or sampled (a finite sample of a compact space whose map is evaluated on
//! coordinates and snapped back to the nearest sample point when needed).

mod catalog;
mod map;
mod metric;
mod sequence;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::{Error, Result};

pub use catalog::{catalog_entries, load_model, CatalogEntry, ParamSpec};
pub use map::{PointMap, SkewRule};
pub use metric::Metric;
pub use sequence::SequenceBank;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointId(pub usize);

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpaceKind {
    FiniteExact,
    Sampled { resolution: f64 },
}

/// A finite point set with coordinates and a metric.
#[derive(Clone, Debug)]
pub struct MetricSpaceModel {
    dim: usize,
    coords: Vec<f64>,
    labels: Option<Vec<String>>,
    metric: Metric,
    exact: bool,
    resolution: f64,
    separation: f64,
    probes: Vec<f64>,
    /// Increasing positions of the points for one-dimensional metrics.
    line: Option<Vec<f64>>,
}

impl MetricSpaceModel {
    /// `coords` is a flat buffer of `dim`-tuples.
    pub fn new(dim: usize, coords: Vec<f64>, metric: Metric, exact: bool) -> Result<Self> {
        if dim == 0 || coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::EmptySet);
        }
        let line: Option<Vec<f64>> = coords
            .chunks(dim)
            .map(|c| metric.line_value(c))
            .collect::<Option<Vec<f64>>>()
            .filter(|v| v.windows(2).all(|w| w[0] < w[1]));
        let mut space = MetricSpaceModel {
            dim,
            coords,
            labels: None,
            metric,
            exact,
            resolution: 0.0,
            separation: 0.0,
            probes: Vec::new(),
            line,
        };
        space.measure();
        Ok(space)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        debug_assert_eq!(labels.len(), self.len());
        self.labels = Some(labels);
        self
    }

    /// Extra ambient points used only by uniform estimates.
    pub fn with_probes(mut self, probes: Vec<f64>) -> Self {
        debug_assert_eq!(probes.len() % self.dim, 0);
        self.probes = probes;
        self
    }

    fn measure(&mut self) {
        let n = self.len();
        if n < 2 {
            return;
        }
        let mut nearest = vec![f64::INFINITY; n];
        if let Some(line) = &self.line {
            for i in 0..n - 1 {
                let d = line[i + 1] - line[i];
                nearest[i] = nearest[i].min(d);
                nearest[i + 1] = nearest[i + 1].min(d);
            }
        } else {
            for i in 0..n {
                for j in i + 1..n {
                    let d = self.distance(i, j);
                    if d > 0.0 {
                        nearest[i] = nearest[i].min(d);
                        nearest[j] = nearest[j].min(d);
                    }
                }
            }
        }
        let finite = nearest.iter().copied().filter(|d| d.is_finite());
        self.resolution = finite.clone().fold(0.0, f64::max);
        self.separation = finite.fold(f64::INFINITY, f64::min);
        if !self.separation.is_finite() {
            self.separation = 0.0;
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn kind(&self) -> SpaceKind {
        if self.exact {
            SpaceKind::FiniteExact
        } else {
            SpaceKind::Sampled {
                resolution: self.resolution,
            }
        }
    }

    /// Largest nearest-neighbour distance in the sample.
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// Smallest nonzero distance in the sample.
    pub fn separation(&self) -> f64 {
        self.separation
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Position of point `i` on the line, for one-dimensional metrics.
    pub fn line_value(&self, i: usize) -> Option<f64> {
        self.line.as_ref().map(|l| l[i])
    }

    /// Point coordinates with charts decoded.
    pub fn ambient(&self, i: usize) -> Vec<f64> {
        self.metric.ambient(self.point(i))
    }

    pub fn probes(&self) -> &[f64] {
        &self.probes
    }

    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => {
                let parts: Vec<String> = self.ambient(i).iter().map(|c| format!("{c}")).collect();
                format!("({})", parts.join(","))
            }
        }
    }

    pub fn find_label(&self, label: &str) -> Option<PointId> {
        self.labels
            .as_ref()?
            .iter()
            .position(|l| l == label)
            .map(PointId)
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.metric.distance(self.point(i), self.point(j))
    }

    /// Nearest sample point to a coordinate tuple.
    pub fn nearest(&self, x: &[f64]) -> (usize, f64) {
        if let Some(line) = &self.line {
            let v = self.metric.line_value(x).unwrap_or(f64::NAN);
            let idx = line.partition_point(|c| *c < v);
            let mut best = (0, f64::INFINITY);
            let lo = idx.saturating_sub(1);
            for (i, &c) in line
                .iter()
                .enumerate()
                .take((idx + 1).min(self.len()))
                .skip(lo)
            {
                let d = (c - v).abs();
                if d < best.1 {
                    best = (i, d);
                }
            }
            return best;
        }
        let mut best = (0, f64::INFINITY);
        for i in 0..self.len() {
            let d = self.metric.distance(self.point(i), x);
            if d < best.1 {
                best = (i, d);
                if d == 0.0 {
                    break;
                }
            }
        }
        best
    }
}

/// A model together with its self-map.
#[derive(Clone, Debug)]
pub struct CascadeModel {
    name: String,
    params: BTreeMap<String, String>,
    space: MetricSpaceModel,
    map: PointMap,
}

#[derive(Clone, Debug, Serialize)]
pub struct StepResult {
    pub raw: Vec<f64>,
    pub snapped: PointId,
    pub snap_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitPoint {
    pub n: i64,
    pub raw: Vec<f64>,
    pub snapped: PointId,
    pub snap_error: f64,
}

impl CascadeModel {
    pub fn new(
        name: impl Into<String>,
        params: BTreeMap<String, String>,
        space: MetricSpaceModel,
        map: PointMap,
    ) -> Result<Self> {
        if let PointMap::Table { forward, .. } = &map {
            if !space.is_exact() {
                return Err(Error::param("map", "table maps need a finite-exact space"));
            }
            if forward.len() != space.len() {
                return Err(Error::param("map", "table length differs from point count"));
            }
            if let Some(&bad) = forward.iter().find(|&&y| y >= space.len()) {
                return Err(Error::PointOutOfRange(bad));
            }
        } else if space.is_exact() {
            return Err(Error::param("map", "finite-exact spaces need a table map"));
        }
        Ok(CascadeModel {
            name: name.into(),
            params,
            space,
            map,
        })
    }

    /// A finite-exact model on `0..n` with the given table and metric matrix.
    pub fn finite(
        name: impl Into<String>,
        table: Vec<usize>,
        metric: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::EmptySet);
        }
        let matrix = metric.unwrap_or_else(|| {
            (0..n * n)
                .map(|k| if k / n == k % n { 0.0 } else { 1.0 })
                .collect()
        });
        if matrix.len() != n * n {
            return Err(Error::param(
                "metric",
                "matrix size differs from point count",
            ));
        }
        let coords = (0..n).map(|i| i as f64).collect();
        let space = MetricSpaceModel::new(
            1,
            coords,
            Metric::Dense {
                size: n,
                matrix: matrix.into(),
            },
            true,
        )?;
        CascadeModel::new(name, BTreeMap::new(), space, PointMap::table(table))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &BTreeMap<String, String> {
        &self.params
    }

    pub fn space(&self) -> &MetricSpaceModel {
        &self.space
    }

    pub fn point_map(&self) -> &PointMap {
        &self.map
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn is_exact(&self) -> bool {
        self.space.is_exact()
    }

    pub fn invertible(&self) -> bool {
        self.map.invertible()
    }

    fn check(&self, x: PointId) -> Result<()> {
        if x.0 >= self.len() {
            Err(Error::PointOutOfRange(x.0))
        } else {
            Ok(())
        }
    }

    pub fn metric(&self, a: PointId, b: PointId) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.space.distance(a.0, b.0))
    }

    pub fn label(&self, x: PointId) -> String {
        self.space.label(x.0)
    }

    pub fn find_label(&self, label: &str) -> Option<PointId> {
        self.space.find_label(label)
    }

    /// Image of `x` at coordinate level together with its snapped sample point.
    pub fn step(&self, x: PointId) -> Result<StepResult> {
        let p = self.orbit_point(x, 1)?;
        Ok(StepResult {
            raw: p.raw,
            snapped: p.snapped,
            snap_error: p.snap_error,
        })
    }

    fn orbit_point(&self, x: PointId, n: i64) -> Result<OrbitPoint> {
        self.check(x)?;
        let mut img = vec![0.0; self.stride()];
        self.write_sample(x.0, &mut img);
        let mut out = img.clone();
        self.advance(&img, n, &mut out)?;
        if self.is_exact() {
            let id = out[0] as usize;
            return Ok(OrbitPoint {
                n,
                raw: self.space.ambient(id),
                snapped: PointId(id),
                snap_error: 0.0,
            });
        }
        let (id, err) = self.space.nearest(&out);
        Ok(OrbitPoint {
            n,
            raw: self.space.metric().ambient(&out),
            snapped: PointId(id),
            snap_error: err,
        })
    }

    /// Orbit points `f^n(x)` for `n` in `from..=to`.
    pub fn orbit_segment(&self, x: PointId, from: i64, to: i64) -> Result<Vec<OrbitPoint>> {
        self.check(x)?;
        if from < 0 && !self.invertible() {
            return Err(Error::NegativePowerOnNoninvertible);
        }
        (from..=to).map(|n| self.orbit_point(x, n)).collect()
    }

    /// Sample points visited within `tol` at least twice in the tail half of the horizon.
    pub fn omega_limit_estimate(&self, x: PointId, horizon: u64, tol: f64) -> Result<Vec<PointId>> {
        self.check(x)?;
        let stride = self.stride();
        let mut cur = vec![0.0; stride];
        let mut next = vec![0.0; stride];
        let mut sample = vec![0.0; stride];
        self.write_sample(x.0, &mut cur);
        let start = horizon / 2;
        let mut hits = vec![0u32; self.len()];
        for n in 1..=horizon {
            self.advance(&cur, 1, &mut next)?;
            std::mem::swap(&mut cur, &mut next);
            if n < start {
                continue;
            }
            for (y, h) in hits.iter_mut().enumerate() {
                self.write_sample(y, &mut sample);
                if self.image_dist(&cur, &sample) <= tol {
                    *h += 1;
                }
            }
        }
        Ok(hits
            .iter()
            .enumerate()
            .filter(|(_, &h)| h >= 2)
            .map(|(y, _)| PointId(y))
            .collect())
    }

    /// The exact map table of a finite-exact model.
    pub fn table(&self) -> Result<&[usize]> {
        match &self.map {
            PointMap::Table { forward, .. } => Ok(forward),
            _ => Err(Error::NotFiniteExact),
        }
    }

    /// Map table with every image snapped to its nearest sample point.
    pub fn snapped_table(&self) -> Result<(Vec<usize>, f64)> {
        let mut worst: f64 = 0.0;
        let mut table = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            let s = self.step(PointId(i))?;
            worst = worst.max(s.snap_error);
            table.push(s.snapped.0);
        }
        Ok((table, worst))
    }

    pub fn export_json(&self) -> Result<Value> {
        let points: Vec<Vec<f64>> = (0..self.len()).map(|i| self.space.ambient(i)).collect();
        let labels: Vec<String> = (0..self.len()).map(|i| self.space.label(i)).collect();
        let (table, snap) = self.snapped_table()?;
        let inverse = match &self.map {
            PointMap::Table { inverse, .. } => inverse.clone(),
            _ => None,
        };
        Ok(json!({
            "name": self.name,
            "params": self.params,
            "space": self.space.kind(),
            "dim": self.space.dim(),
            "points": points,
            "labels": labels,
            "metric": self.space.metric().export(),
            "map": {
                "formula": self.map.describe(),
                "invertible": self.invertible(),
                "table": table,
                "inverse": inverse,
                "max_snap_error": snap,
            }
        }))
    }

    /// Rebuilds a finite-exact model from an exported JSON value.
    pub fn import_json(value: &Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct Metric_ {
            kind: String,
            matrix: Option<Vec<Vec<f64>>>,
        }
        #[derive(Deserialize)]
        struct Map_ {
            table: Vec<usize>,
        }
        #[derive(Deserialize)]
        struct Model_ {
            name: String,
            #[serde(default)]
            labels: Option<Vec<String>>,
            metric: Option<Metric_>,
            map: Map_,
        }
        let m: Model_ = serde_json::from_value(value.clone())?;
        let matrix = match m.metric {
            Some(Metric_ {
                matrix: Some(rows), ..
            }) => Some(rows.concat()),
            Some(Metric_ { kind, matrix: None }) if kind != "discrete" => {
                return Err(Error::param(
                    "metric",
                    format!("`{kind}` needs the catalog to rebuild"),
                ))
            }
            _ => None,
        };
        let mut model = CascadeModel::finite(m.name, m.map.table, matrix)?;
        if let Some(labels) = m.labels {
            if labels.len() == model.len() {
                model.space = model.space.with_labels(labels);
            }
        }
        Ok(model)
    }
}

/// Common view of a model as a finite sample of images that can be advanced
/// and compared. Finite-exact models use `[index]` images.
pub trait SampledDynamics: Sync {
    fn sample_len(&self) -> usize;
    fn stride(&self) -> usize;
    fn write_sample(&self, i: usize, out: &mut [f64]);
    fn advance(&self, img: &[f64], n: i64, out: &mut [f64]) -> Result<()>;
    fn image_dist(&self, a: &[f64], b: &[f64]) -> f64;
    fn invertible(&self) -> bool;
    fn is_exact(&self) -> bool;
    fn resolution(&self) -> f64;
    /// Index of the sample point nearest to an image, with its distance.
    fn nearest_sample(&self, img: &[f64]) -> (usize, f64);
    fn probe_len(&self) -> usize {
        0
    }
    fn write_probe(&self, _i: usize, _out: &mut [f64]) {}
    /// Symbols of a shift image on `[offset, offset + len)` relative to its current position.
    fn symbols_at(&self, _img: &[f64], _offset: i64, _len: usize) -> Option<Vec<u8>> {
        None
    }
}

impl SampledDynamics for CascadeModel {
    fn sample_len(&self) -> usize {
        self.len()
    }

    fn stride(&self) -> usize {
        if self.is_exact() {
            1
        } else {
            self.space.dim()
        }
    }

    fn write_sample(&self, i: usize, out: &mut [f64]) {
        if self.is_exact() {
            out[0] = i as f64;
        } else {
            out.copy_from_slice(self.space.point(i));
        }
    }

    fn advance(&self, img: &[f64], n: i64, out: &mut [f64]) -> Result<()> {
        if let Metric::Shift { bank, radius } = self.space.metric() {
            let offset = img[1] as i64 + n;
            let needed = offset.abs() + *radius as i64;
            if needed > bank.reach() {
                return Err(Error::HorizonExceeded {
                    offset,
                    needed,
                    reach: bank.reach(),
                });
            }
        }
        self.map.apply(img, n, out)
    }

    fn image_dist(&self, a: &[f64], b: &[f64]) -> f64 {
        if self.is_exact() {
            self.space.distance(a[0] as usize, b[0] as usize)
        } else {
            self.space.metric().distance(a, b)
        }
    }

    fn invertible(&self) -> bool {
        self.map.invertible()
    }

    fn is_exact(&self) -> bool {
        self.space.is_exact()
    }

    fn resolution(&self) -> f64 {
        self.space.resolution()
    }

    fn nearest_sample(&self, img: &[f64]) -> (usize, f64) {
        if self.is_exact() {
            (img[0] as usize, 0.0)
        } else {
            self.space.nearest(img)
        }
    }

    fn probe_len(&self) -> usize {
        self.space.probes().len() / self.space.dim()
    }

    fn write_probe(&self, i: usize, out: &mut [f64]) {
        let d = self.space.dim();
        out.copy_from_slice(&self.space.probes()[i * d..(i + 1) * d]);
    }

    fn symbols_at(&self, img: &[f64], offset: i64, len: usize) -> Option<Vec<u8>> {
        let Metric::Shift { bank, .. } = self.space.metric() else {
            return None;
        };
        let (s, o) = (img[0] as usize, img[1] as i64);
        (0..len as i64)
            .map(|i| bank.symbol(s, o + offset + i))
            .collect()
    }
}

pub(crate) fn parse_param<T: std::str::FromStr>(
    params: &BTreeMap<String, String>,
    name: &str,
    default: T,
) -> Result<T> {
    match params.get(name) {
        None => Ok(default),
        Some(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::param(name, format!("cannot parse `{v}`"))),
    }
}

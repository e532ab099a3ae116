use std::f64::consts::TAU;
use std::sync::Arc;

use serde::Serialize;

use super::sequence::SequenceBank;

/// Distance functions on point coordinates.
///
/// Angles are stored in turns (fractions of a full circle) so that dyadic and
/// triadic rotations stay exact in floating point.
#[derive(Clone, Debug)]
pub enum Metric {
    /// Explicit matrix over point indices; coordinates are `[index]`.
    Dense {
        size: usize,
        matrix: Arc<Vec<f64>>,
    },
    Euclidean,
    /// Arc length on the unit circle; coordinates are `[turn]`.
    CircleArc,
    /// Planar distance between polar points `[radius, turn]`.
    Polar,
    /// `|x - y|` on `[0, 1]` stored in the chart `s = log2(-ln x)`, where
    /// `x -> x^2` is `s -> s + 1`.
    SquareChart,
    /// `|x - y|` on `[-1, 1]` stored as `[sign, log3(-ln |x|)]`, where
    /// `x -> -x^3` is `(sign, s) -> (-sign, s + 1)`.
    CubeChart,
    /// Sum metric on `[fiber, k, l]`; `k` is `f64::INFINITY` for the limit layer.
    Stack,
    /// Window metric on `[sequence, offset]` pairs drawn from a bank.
    Shift {
        bank: Arc<SequenceBank>,
        radius: usize,
    },
}

fn turn_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

fn stack_weight(k: f64) -> f64 {
    if k.is_infinite() {
        0.0
    } else {
        1.0 / (1.0 + k.abs())
    }
}

impl Metric {
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Dense { size, matrix } => matrix[a[0] as usize * size + b[0] as usize],
            Metric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Metric::CircleArc => TAU * turn_gap(a[0], b[0]),
            Metric::Polar => {
                let (r1, r2) = (a[0], b[0]);
                let c = (TAU * turn_gap(a[1], b[1])).cos();
                (r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * c).max(0.0).sqrt()
            }
            Metric::SquareChart | Metric::CubeChart => {
                (self.line_value(a).unwrap() - self.line_value(b).unwrap()).abs()
            }
            Metric::Stack => {
                let fiber = if a[0] == b[0] { 0.0 } else { 2.0 };
                let layer = if a[1] == b[1] {
                    0.0
                } else {
                    stack_weight(a[1]) + stack_weight(b[1])
                };
                let pos = if a[2] == b[2] { 0.0 } else { 1.0 };
                fiber + layer + pos
            }
            Metric::Shift { bank, radius } => {
                let (s1, o1) = (a[0] as usize, a[1] as i64);
                let (s2, o2) = (b[0] as usize, b[1] as i64);
                match bank.agreement(s1, o1, s2, o2, *radius) {
                    None => 0.0,
                    Some(k) => 0.5f64.powi((k + 1) as i32),
                }
            }
        }
    }

    /// Position on the line for one-dimensional metrics.
    pub fn line_value(&self, c: &[f64]) -> Option<f64> {
        match self {
            Metric::Euclidean if c.len() == 1 => Some(c[0]),
            Metric::SquareChart => Some((-c[0].exp2()).exp()),
            Metric::CubeChart => {
                if c[0] == 0.0 {
                    Some(0.0)
                } else {
                    Some(c[0].signum() * (-(3f64.powf(c[1]))).exp())
                }
            }
            _ => None,
        }
    }

    /// Chart coordinates of a point of the line, for chart metrics.
    pub fn encode_line(&self, x: f64) -> Option<Vec<f64>> {
        match self {
            Metric::SquareChart => Some(vec![(-x.ln()).log2()]),
            Metric::CubeChart => {
                let sign = if x == 0.0 { 0.0 } else { x.signum() };
                Some(vec![sign, (-x.abs().ln()).ln() / 3f64.ln()])
            }
            _ => None,
        }
    }

    /// Coordinates in the ambient space (charts are decoded).
    pub fn ambient(&self, c: &[f64]) -> Vec<f64> {
        match self {
            Metric::SquareChart | Metric::CubeChart => vec![self.line_value(c).unwrap()],
            _ => c.to_vec(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Metric::Dense { .. } => "dense",
            Metric::Euclidean => "euclidean",
            Metric::CircleArc => "circle-arc",
            Metric::Polar => "polar",
            Metric::SquareChart => "square-chart",
            Metric::CubeChart => "cube-chart",
            Metric::Stack => "stack",
            Metric::Shift { .. } => "shift-window",
        }
    }

    pub(crate) fn export(&self) -> MetricExport {
        match self {
            Metric::Dense { size, matrix } => MetricExport {
                kind: self.kind(),
                matrix: Some(matrix.chunks(*size).map(|r| r.to_vec()).collect()),
                window_radius: None,
            },
            Metric::Shift { radius, .. } => MetricExport {
                kind: self.kind(),
                matrix: None,
                window_radius: Some(*radius),
            },
            _ => MetricExport {
                kind: self.kind(),
                matrix: None,
                window_radius: None,
            },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub(crate) struct MetricExport {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_radius: Option<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antipodal_arc_is_pi() {
        let d = Metric::CircleArc.distance(&[0.0], &[0.5]);
        assert!((d - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn stack_metric_layers() {
        let m = Metric::Stack;
        let d = m.distance(&[3.0, 0.0, 1.0], &[3.0, f64::INFINITY, 1.0]);
        assert_eq!(d, 1.0);
        let d = m.distance(&[3.0, 1.0, 1.0], &[3.0, -1.0, 1.0]);
        assert_eq!(d, 1.0);
        let d = m.distance(&[3.0, 1.0, 1.0], &[4.0, 1.0, 2.0]);
        assert_eq!(d, 3.0);
    }

    #[test]
    fn charts_roundtrip() {
        for m in [Metric::SquareChart, Metric::CubeChart] {
            for x in [0.0, 0.001, 0.5, 0.999, 1.0] {
                let c = m.encode_line(x).unwrap();
                assert!((m.line_value(&c).unwrap() - x).abs() < 1e-14, "{x}");
            }
        }
        let c = Metric::CubeChart.encode_line(-0.25).unwrap();
        assert!((Metric::CubeChart.line_value(&c).unwrap() + 0.25).abs() < 1e-14);
    }

    #[test]
    fn polar_matches_cartesian() {
        let (a, b) = ([1.0, 0.125], [2.0, 0.625]);
        let to_xy = |p: [f64; 2]| (p[0] * (TAU * p[1]).cos(), p[0] * (TAU * p[1]).sin());
        let (x1, y1) = to_xy(a);
        let (x2, y2) = to_xy(b);
        let want = ((x1 - x2).powi(2) + (y1 - y2).powi(2)).sqrt();
        assert!((Metric::Polar.distance(&a, &b) - want).abs() < 1e-12);
    }
}

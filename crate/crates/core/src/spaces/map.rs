use serde::Serialize;

use crate::{Error, Result};

/// Angle update for maps on circles in polar coordinates `[radius, turn]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum SkewRule {
    /// `theta + 2 pi r`
    Radial,
    /// `theta + 2 pi (1 - r)` for `r < 1`; the circle `r = 1` is fixed.
    Inward,
    /// `theta + 2 pi alpha` on every circle.
    Constant { alpha: f64 },
}

/// A self-map of a model, given either as an index table or as a closed formula
/// on coordinates.
#[derive(Clone, Debug)]
pub enum PointMap {
    Table {
        forward: Vec<usize>,
        inverse: Option<Vec<usize>>,
    },
    /// `x -> x^2` on `[0, 1]`, acting on square-chart coordinates.
    Square,
    /// `x -> -x^3` on `[-1, 1]`, acting on cube-chart coordinates.
    NegCube,
    /// Rotation by `alpha` turns on `[turn]` coordinates.
    Rotation {
        alpha: f64,
    },
    Skew(SkewRule),
    /// Left shift on `[sequence, offset]` coordinates.
    Shift,
}

fn wrap(t: f64) -> f64 {
    let t = t.rem_euclid(1.0);
    if t >= 1.0 {
        0.0
    } else {
        t
    }
}

impl PointMap {
    /// Builds a table map, recording the inverse when the table is a bijection.
    pub fn table(forward: Vec<usize>) -> Self {
        let n = forward.len();
        let mut inverse = vec![usize::MAX; n];
        let mut bijective = true;
        for (x, &y) in forward.iter().enumerate() {
            if y >= n || inverse[y] != usize::MAX {
                bijective = false;
                break;
            }
            inverse[y] = x;
        }
        PointMap::Table {
            forward,
            inverse: bijective.then_some(inverse),
        }
    }

    pub fn invertible(&self) -> bool {
        match self {
            PointMap::Table { inverse, .. } => inverse.is_some(),
            _ => true,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            PointMap::Table { .. } => "table".into(),
            PointMap::Square => "x -> x^2".into(),
            PointMap::NegCube => "x -> -x^3".into(),
            PointMap::Rotation { alpha } => format!("theta -> theta + 2 pi * {alpha}"),
            PointMap::Skew(SkewRule::Radial) => "(r, theta) -> (r, theta + 2 pi r)".into(),
            PointMap::Skew(SkewRule::Inward) => "(r, theta) -> (r, theta + 2 pi (1 - r))".into(),
            PointMap::Skew(SkewRule::Constant { alpha }) => {
                format!("(r, theta) -> (r, theta + 2 pi * {alpha})")
            }
            PointMap::Shift => "sigma(x)_i = x_(i+1)".into(),
        }
    }

    /// Writes the `n`-th iterate of `x` into `out`. Table maps act on `[index]`.
    pub fn apply(&self, x: &[f64], n: i64, out: &mut [f64]) -> Result<()> {
        if n < 0 && !self.invertible() {
            return Err(Error::NegativePowerOnNoninvertible);
        }
        match self {
            PointMap::Table { forward, inverse } => {
                let table = if n >= 0 {
                    forward
                } else {
                    inverse.as_ref().unwrap()
                };
                let mut i = x[0] as usize;
                for _ in 0..n.unsigned_abs() {
                    i = table[i];
                }
                out[0] = i as f64;
            }
            PointMap::Square => {
                out[0] = x[0] + n as f64;
            }
            PointMap::NegCube => {
                out[0] = if n % 2 == 0 { x[0] } else { -x[0] };
                out[1] = x[1] + n as f64;
            }
            PointMap::Rotation { alpha } => {
                out[0] = wrap(x[0] + (n as f64 * alpha).rem_euclid(1.0));
            }
            PointMap::Skew(rule) => {
                let r = x[0];
                let step = match rule {
                    SkewRule::Radial => r,
                    SkewRule::Inward if r >= 1.0 => 0.0,
                    SkewRule::Inward => 1.0 - r,
                    SkewRule::Constant { alpha } => *alpha,
                };
                out[0] = r;
                out[1] = wrap(x[1] + (n as f64 * step).rem_euclid(1.0));
            }
            PointMap::Shift => {
                out[0] = x[0];
                out[1] = x[1] + n as f64;
            }
        }
        Ok(())
    }
}

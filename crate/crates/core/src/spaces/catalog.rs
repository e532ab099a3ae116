use std::collections::BTreeMap;

use serde::Serialize;

use super::{parse_param, CascadeModel, Metric, MetricSpaceModel, PointMap, SkewRule};
use crate::symbolic::{self, WindowOptions};
use crate::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub kind: &'static str,
    pub realizes: &'static str,
    pub params: Vec<ParamSpec>,
}

const fn p(name: &'static str, default: &'static str, help: &'static str) -> ParamSpec {
    ParamSpec {
        name,
        default,
        help,
    }
}

pub fn catalog_entries() -> Vec<CatalogEntry> {
    let stack_params = |levels: &'static str, angles: &'static str| {
        vec![
            p("levels", levels, "number of inner circles"),
            p("angles", angles, "sample points per circle"),
            p(
                "probe_levels",
                "12",
                "extra circles used only by uniform estimates",
            ),
            p("probe_angles", "8", "points per probe circle"),
        ]
    };
    let shift_params = vec![
        p("samples", "600", "sequences in the bank"),
        p("reach", "2100", "sequences are stored on [-reach, reach]"),
        p("window", "8", "window radius of the metric"),
        p("seed", "7", "seed for random sequences"),
    ];
    vec![
        CatalogEntry {
            name: "square-map",
            kind: "sampled",
            realizes: "x -> x^2 on [0,1]; envelope is Z with two limit points",
            params: vec![p("grid", "1001", "grid points including 0 and 1")],
        },
        CatalogEntry {
            name: "neg-cube",
            kind: "sampled",
            realizes: "x -> -x^3 on [-1,1]; envelope is Z with four limit points",
            params: vec![p("grid", "2001", "grid points including -1, 0 and 1")],
        },
        CatalogEntry {
            name: "identity",
            kind: "finite-exact",
            realizes: "identity on n points; trivial envelope",
            params: vec![p("n", "5", "number of points")],
        },
        CatalogEntry {
            name: "irrational-rotation",
            kind: "sampled",
            realizes: "circle rotation; envelope is the circle group",
            params: vec![
                p("grid", "360", "sample points on the circle"),
                p(
                    "alpha",
                    "golden",
                    "rotation in turns: golden, p/q or a decimal",
                ),
            ],
        },
        CatalogEntry {
            name: "double-circle-rotation",
            kind: "sampled",
            realizes: "the same rotation on circles of radius 1 and 2",
            params: vec![
                p("grid", "90", "sample points per circle"),
                p("alpha", "golden", "rotation in turns"),
            ],
        },
        CatalogEntry {
            name: "dyadic-circle-stack",
            kind: "sampled",
            realizes:
                "circles r = 1 - 2^-j with theta -> theta + 2 pi r; rigid, not uniformly rigid",
            params: stack_params("6", "64"),
        },
        CatalogEntry {
            name: "dyadic-circle-stack-inward",
            kind: "sampled",
            realizes: "circles r = 1 - 2^-j with theta -> theta + 2 pi (1 - r); identity isolated",
            params: stack_params("8", "32"),
        },
        CatalogEntry {
            name: "triadic-circle-stack",
            kind: "sampled",
            realizes: "circles r = 1 - 3^-j with theta -> theta + 2 pi r",
            params: stack_params("4", "81"),
        },
        CatalogEntry {
            name: "annulus-skew",
            kind: "sampled",
            realizes: "circles of radius i/rings with theta -> theta + 2 pi r",
            params: vec![
                p("rings", "8", "radii i/rings for i = 0..rings"),
                p("angles", "32", "sample points per circle"),
                p(
                    "radii",
                    "",
                    "explicit comma-separated radii, overrides rings",
                ),
            ],
        },
        CatalogEntry {
            name: "periodic-stack",
            kind: "finite-exact",
            realizes: "X_n: rows k in Z u {inf} of an n-cycle, truncated at |k| <= T",
            params: vec![
                p("n", "3", "cycle length"),
                p(
                    "truncate",
                    "20",
                    "rows k with |k| <= truncate plus the limit row",
                ),
            ],
        },
        CatalogEntry {
            name: "periodic-union",
            kind: "finite-exact",
            realizes: "disjoint union of truncated X_n for several n",
            params: vec![
                p("sizes", "2,3", "comma-separated cycle lengths"),
                p(
                    "truncate",
                    "10",
                    "rows k with |k| <= truncate plus the limit row",
                ),
            ],
        },
        CatalogEntry {
            name: "isolated-ones-subshift",
            kind: "finite-exact",
            realizes: "sequences with at most one 1 under the shift, truncated at |n| <= T",
            params: vec![p("truncate", "20", "positions |n| <= truncate")],
        },
        CatalogEntry {
            name: "full-shift",
            kind: "sampled",
            realizes: "full shift on symbols; envelope grows without bound",
            params: [
                vec![p("symbols", "2", "alphabet size")],
                shift_params.clone(),
            ]
            .concat(),
        },
        CatalogEntry {
            name: "golden-mean-shift",
            kind: "sampled",
            realizes: "shift of finite type forbidding 11",
            params: shift_params,
        },
    ]
}

fn check_params(name: &str, params: &BTreeMap<String, String>) -> Result<()> {
    let entry = catalog_entries()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownModel(name.to_string()))?;
    for key in params.keys() {
        if !entry.params.iter().any(|p| p.name == key) {
            return Err(Error::param(key, format!("not a parameter of `{name}`")));
        }
    }
    Ok(())
}

fn at_least<T: PartialOrd + std::fmt::Display>(name: &str, v: T, min: T) -> Result<T> {
    if v < min {
        Err(Error::param(name, format!("must be at least {min}")))
    } else {
        Ok(v)
    }
}

/// Parses a rotation number given as `golden`, `p/q` or a decimal.
pub(crate) fn parse_alpha(params: &BTreeMap<String, String>) -> Result<f64> {
    let raw = params
        .get("alpha")
        .map(String::as_str)
        .unwrap_or("golden")
        .trim();
    if raw == "golden" {
        return Ok((5f64.sqrt() - 1.0) / 2.0);
    }
    let bad = || Error::param("alpha", format!("cannot parse `{raw}`"));
    if let Some((a, b)) = raw.split_once('/') {
        let a: f64 = a.trim().parse().map_err(|_| bad())?;
        let b: f64 = b.trim().parse().map_err(|_| bad())?;
        if b == 0.0 {
            return Err(bad());
        }
        return Ok(a / b);
    }
    raw.parse().map_err(|_| bad())
}

/// Builds a named catalog model. Unknown parameter names are rejected.
pub fn load_model(name: &str, params: &BTreeMap<String, String>) -> Result<CascadeModel> {
    check_params(name, params)?;
    let owned = params.clone();
    match name {
        "square-map" => {
            let grid = at_least("grid", parse_param(params, "grid", 1001usize)?, 2)?;
            let m = (grid - 1) as f64;
            let chart = Metric::SquareChart;
            let coords = (0..grid)
                .flat_map(|i| chart.encode_line(i as f64 / m).unwrap())
                .collect();
            let space = MetricSpaceModel::new(1, coords, chart, false)?;
            CascadeModel::new(name, owned, space, PointMap::Square)
        }
        "neg-cube" => {
            let grid = at_least("grid", parse_param(params, "grid", 2001usize)?, 3)?;
            let m = (grid - 1) as f64;
            let chart = Metric::CubeChart;
            let coords = (0..grid)
                .flat_map(|i| chart.encode_line((2.0 * i as f64 - m) / m).unwrap())
                .collect();
            let space = MetricSpaceModel::new(2, coords, chart, false)?;
            CascadeModel::new(name, owned, space, PointMap::NegCube)
        }
        "identity" => {
            let n = at_least("n", parse_param(params, "n", 5usize)?, 1)?;
            let matrix = (0..n * n).map(|k| (k / n).abs_diff(k % n) as f64).collect();
            let model = CascadeModel::finite(name, (0..n).collect(), Some(matrix))?;
            Ok(CascadeModel {
                params: owned,
                ..model
            })
        }
        "irrational-rotation" => {
            let grid = at_least("grid", parse_param(params, "grid", 360usize)?, 2)?;
            let alpha = parse_alpha(params)?;
            let coords = (0..grid).map(|i| i as f64 / grid as f64).collect();
            let space = MetricSpaceModel::new(1, coords, Metric::CircleArc, false)?;
            CascadeModel::new(name, owned, space, PointMap::Rotation { alpha })
        }
        "double-circle-rotation" => {
            let grid = at_least("grid", parse_param(params, "grid", 90usize)?, 2)?;
            let alpha = parse_alpha(params)?;
            let radii = [1.0, 2.0];
            let space = polar_space(&radii, grid, &[], 0)?;
            CascadeModel::new(
                name,
                owned,
                space,
                PointMap::Skew(SkewRule::Constant { alpha }),
            )
        }
        "dyadic-circle-stack" | "dyadic-circle-stack-inward" | "triadic-circle-stack" => {
            let triadic = name.starts_with("triadic");
            let inward = name.ends_with("inward");
            let (dl, da) = match (triadic, inward) {
                (true, _) => (4, 81),
                (false, true) => (8, 32),
                (false, false) => (6, 64),
            };
            let levels = at_least("levels", parse_param(params, "levels", dl)?, 1)?;
            let angles = at_least("angles", parse_param(params, "angles", da)?, 1)?;
            let probe_levels = parse_param(params, "probe_levels", 12usize)?;
            let probe_angles = at_least(
                "probe_angles",
                parse_param(params, "probe_angles", 8usize)?,
                1,
            )?;
            let base: f64 = if triadic { 3.0 } else { 2.0 };
            let radius = |j: usize| 1.0 - base.powi(-(j as i32));
            let mut radii: Vec<f64> = (0..=levels).map(radius).collect();
            radii.push(1.0);
            let probes: Vec<f64> = (levels + 1..=levels + probe_levels).map(radius).collect();
            let space = polar_space(&radii, angles, &probes, probe_angles)?;
            let rule = if inward {
                SkewRule::Inward
            } else {
                SkewRule::Radial
            };
            CascadeModel::new(name, owned, space, PointMap::Skew(rule))
        }
        "annulus-skew" => {
            let angles = at_least("angles", parse_param(params, "angles", 32usize)?, 1)?;
            let explicit = params.get("radii").filter(|s| !s.trim().is_empty());
            let (radii, probes) = match explicit {
                Some(list) => (parse_list::<f64>("radii", list)?, Vec::new()),
                None => {
                    let rings = at_least("rings", parse_param(params, "rings", 8usize)?, 1)?;
                    let r = rings as f64;
                    (
                        (0..=rings).map(|i| i as f64 / r).collect(),
                        (0..rings).map(|i| (i as f64 + 0.5) / r).collect(),
                    )
                }
            };
            if radii.iter().any(|r| *r < 0.0) {
                return Err(Error::param("radii", "radii must be nonnegative"));
            }
            let space = polar_space(&radii, angles, &probes, 8)?;
            CascadeModel::new(name, owned, space, PointMap::Skew(SkewRule::Radial))
        }
        "periodic-stack" => {
            let n = at_least("n", parse_param(params, "n", 3usize)?, 1)?;
            let t = at_least("truncate", parse_param(params, "truncate", 20i64)?, 1)?;
            stack_model(name, owned, &[n], t)
        }
        "periodic-union" => {
            let sizes = parse_list::<usize>(
                "sizes",
                params.get("sizes").map(String::as_str).unwrap_or("2,3"),
            )?;
            if sizes.is_empty() || sizes.contains(&0) {
                return Err(Error::param("sizes", "need positive cycle lengths"));
            }
            let t = at_least("truncate", parse_param(params, "truncate", 10i64)?, 1)?;
            stack_model(name, owned, &sizes, t)
        }
        "isolated-ones-subshift" => {
            let t = at_least("truncate", parse_param(params, "truncate", 20i64)?, 1)?;
            isolated_ones(owned, t)
        }
        "full-shift" | "golden-mean-shift" => {
            let shift = if name == "full-shift" {
                let k = at_least("symbols", parse_param(params, "symbols", 2usize)?, 1)?;
                if k > 10 {
                    return Err(Error::param("symbols", "at most 10 symbols"));
                }
                symbolic::Subshift::full(k)
            } else {
                symbolic::Subshift::golden_mean()
            };
            let opts = WindowOptions {
                samples: at_least("samples", parse_param(params, "samples", 600usize)?, 1)?,
                reach: at_least("reach", parse_param(params, "reach", 2100i64)?, 1)?,
                window: parse_param(params, "window", 8usize)?,
                seed: parse_param(params, "seed", 7u64)?,
            };
            let model = symbolic::window_model(&shift, &opts)?;
            Ok(CascadeModel {
                name: name.to_string(),
                params: owned,
                ..model
            })
        }
        _ => Err(Error::UnknownModel(name.to_string())),
    }
}

fn parse_list<T: std::str::FromStr>(name: &str, raw: &str) -> Result<Vec<T>> {
    raw.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::param(name, format!("cannot parse `{s}`")))
        })
        .collect()
}

/// Circles of the given radii with `angles` equally spaced points each; a zero
/// radius contributes a single centre point.
fn polar_space(
    radii: &[f64],
    angles: usize,
    probe_radii: &[f64],
    probe_angles: usize,
) -> Result<MetricSpaceModel> {
    let ring = |r: f64, m: usize, out: &mut Vec<f64>| {
        if r == 0.0 {
            out.extend([0.0, 0.0]);
        } else {
            for i in 0..m {
                out.extend([r, i as f64 / m as f64]);
            }
        }
    };
    let mut coords = Vec::new();
    for &r in radii {
        ring(r, angles, &mut coords);
    }
    let mut probes = Vec::new();
    for &r in probe_radii {
        ring(r, probe_angles, &mut probes);
    }
    Ok(MetricSpaceModel::new(2, coords, Metric::Polar, false)?.with_probes(probes))
}

fn stack_model(
    name: &str,
    params: BTreeMap<String, String>,
    sizes: &[usize],
    t: i64,
) -> Result<CascadeModel> {
    let rows = (2 * t + 2) as usize;
    let mut coords = Vec::new();
    let mut labels = Vec::new();
    let mut table = Vec::new();
    let mut offset = 0;
    for &n in sizes {
        for row in 0..rows {
            let k = if row + 1 == rows {
                f64::INFINITY
            } else {
                row as f64 - t as f64
            };
            let next_row = (row + 1).min(rows - 1);
            for l in 1..=n {
                coords.extend([n as f64, k, l as f64]);
                let k_label = if k.is_infinite() {
                    "inf".to_string()
                } else {
                    format!("{k}")
                };
                labels.push(format!("({n},{k_label},{l})"));
                table.push(offset + next_row * n + l % n);
            }
        }
        offset += rows * n;
    }
    let space = MetricSpaceModel::new(3, coords, Metric::Stack, true)?.with_labels(labels);
    CascadeModel::new(name, params, space, PointMap::table(table))
}

fn isolated_ones(params: BTreeMap<String, String>, t: i64) -> Result<CascadeModel> {
    let count = (2 * t + 2) as usize;
    let zero = count - 1;
    let pos = |i: usize| i as i64 - t;
    let weight = |i: usize| {
        if i == zero {
            f64::INFINITY
        } else {
            pos(i).abs() as f64
        }
    };
    let mut matrix = vec![0.0; count * count];
    for i in 0..count {
        for j in 0..count {
            if i != j {
                matrix[i * count + j] = 0.5f64.powf(weight(i).min(weight(j)));
            }
        }
    }
    let table = (0..count)
        .map(|i| if i == zero || i == 0 { zero } else { i - 1 })
        .collect();
    let labels = (0..count)
        .map(|i| {
            if i == zero {
                "0bar".to_string()
            } else {
                format!("x^{}", pos(i))
            }
        })
        .collect();
    let mut model = CascadeModel::finite("isolated-ones-subshift", table, Some(matrix))?;
    model.space = model.space.with_labels(labels);
    model.params = params;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::PointId;

    fn load(name: &str, kv: &[(&str, &str)]) -> CascadeModel {
        let params = kv
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        load_model(name, &params).unwrap()
    }

    #[test]
    fn square_grid_endpoints() {
        let m = load("square-map", &[("grid", "11")]);
        assert_eq!(m.len(), 11);
        assert_eq!(m.space().line_value(0), Some(0.0));
        assert_eq!(m.space().line_value(10), Some(1.0));
        let s = m.step(PointId(5)).unwrap();
        assert!((s.raw[0] - 0.25).abs() < 1e-15);
        assert!((s.snap_error - 0.05).abs() < 1e-12);
    }

    #[test]
    fn neg_cube_contains_zero() {
        let m = load("neg-cube", &[]);
        assert_eq!(m.space().line_value(1000), Some(0.0));
        assert!((m.space().resolution() - 0.001).abs() < 1e-12);
    }

    #[test]
    fn periodic_stack_step() {
        let m = load("periodic-stack", &[]);
        let x = m.find_label("(3,0,1)").unwrap();
        let y = m.step(x).unwrap().snapped;
        assert_eq!(m.label(y), "(3,1,2)");
        let x = m.find_label("(3,inf,3)").unwrap();
        assert_eq!(m.label(m.step(x).unwrap().snapped), "(3,inf,1)");
    }

    #[test]
    fn isolated_ones_metric() {
        let m = load("isolated-ones-subshift", &[("truncate", "5")]);
        let a = m.find_label("x^2").unwrap();
        let b = m.find_label("x^-3").unwrap();
        let z = m.find_label("0bar").unwrap();
        assert_eq!(m.metric(a, b).unwrap(), 0.25);
        assert_eq!(m.metric(b, z).unwrap(), 0.125);
        assert_eq!(m.label(m.step(a).unwrap().snapped), "x^1");
    }

    #[test]
    fn unknown_model_and_param() {
        assert!(matches!(
            load_model("nope", &BTreeMap::new()),
            Err(Error::UnknownModel(_))
        ));
        let params = [("bogus".to_string(), "1".to_string())]
            .into_iter()
            .collect();
        assert!(load_model("square-map", &params).is_err());
    }

    #[test]
    fn every_entry_loads_with_defaults() {
        for e in catalog_entries() {
            let m = load_model(e.name, &BTreeMap::new()).unwrap();
            assert!(!m.is_empty(), "{}", e.name);
        }
    }
}

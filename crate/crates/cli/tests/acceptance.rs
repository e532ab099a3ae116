//! Acceptance suite. Each criterion runs a checked-in config and checks the
//! report against independently computed expectations. Prints one PASS/FAIL
//! line per criterion and exits non-zero if any fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use ellis_cli::{emit_report, run_experiment, ExperimentConfig, Format, Report};
use ellis_core::spaces::catalog_entries;
use ellis_core::symbolic::{verify_factor, SlidingBlockCode, Subshift};
use serde_json::Value;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(name: &str) -> Result<(Report, Duration), String> {
    let cfg = ExperimentConfig::load(&configs_dir().join(name)).map_err(|e| e.to_string())?;
    let t = Instant::now();
    let report = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    if !report.passed() {
        let failed: Vec<String> = report
            .steps
            .iter()
            .flat_map(|s| {
                let asserts = s
                    .assertions
                    .iter()
                    .filter(|a| !a.passed)
                    .map(|a| a.name.clone());
                let expects = s
                    .expectations
                    .iter()
                    .filter(|e| !e.passed)
                    .map(|e| format!("{} = {} (got {})", e.pointer, e.expected, e.actual));
                let err = s.error.iter().cloned();
                asserts.chain(expects).chain(err).collect::<Vec<_>>()
            })
            .collect();
        return Err(format!("{name}: {}", failed.join("; ")));
    }
    Ok((report, elapsed))
}

fn result<'r>(report: &'r Report, op: &str, nth: usize) -> &'r Value {
    &report
        .steps
        .iter()
        .filter(|s| s.op == op)
        .nth(nth)
        .expect("step present")
        .result
}

fn index_of(env: &Value, name: &str) -> Option<usize> {
    env["elements"]
        .as_array()?
        .iter()
        .position(|e| e["name"] == name)
}

fn limit_by_witness(env: &Value, witness: i64) -> Option<(usize, &Value)> {
    env["limits"]
        .as_array()?
        .iter()
        .find(|l| l["witness"] == witness)
        .map(|l| (l["index"].as_u64().unwrap() as usize, l))
}

fn product(env: &Value, a: usize, b: usize) -> usize {
    env["table"][a][b].as_u64().expect("table entry") as usize
}

fn values(v: &Value) -> Vec<f64> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect()
}

fn max_error(samples: &[f64], got: &[f64], want: impl Fn(f64) -> f64) -> f64 {
    samples
        .iter()
        .zip(got)
        .map(|(&x, &y)| (y - want(x)).abs())
        .fold(0.0, f64::max)
}

fn ac1() -> Outcome {
    let (report, t) = run("ac1-square-map.toml")?;
    let env = result(&report, "envelope", 0);
    ensure!(
        env["limit_count"] == 2,
        "limit count {}",
        env["limit_count"]
    );
    let (g1, l1) = limit_by_witness(env, 60).ok_or("no forward limit")?;
    let (g2, l2) = limit_by_witness(env, -60).ok_or("no backward limit")?;
    let xs = values(&env["samples"]);
    let e1 = max_error(&xs, &values(&l1["values"]), |x| {
        if x == 1.0 {
            1.0
        } else {
            0.0
        }
    });
    let e2 = max_error(&xs, &values(&l2["values"]), |x| {
        if x == 0.0 {
            0.0
        } else {
            1.0
        }
    });
    ensure!(e1 < 1e-3 && e2 < 1e-3, "pointwise errors {e1} {e2}");
    let f = index_of(env, "f^1").ok_or("no f^1")?;
    for g in [g1, g2] {
        ensure!(product(env, g, g) == g, "limit {g} not idempotent");
        ensure!(product(env, f, g) == g, "f o limit {g} differs");
    }
    ensure!(
        product(env, g1, g2) == g2 && product(env, g2, g1) == g1,
        "pairing products differ"
    );
    let sg = result(&report, "semigroup", 0);
    let ideals = &sg["ideals"]["members"];
    let n1 = &env["elements"][g1]["name"];
    let n2 = &env["elements"][g2]["name"];
    ensure!(
        *ideals == serde_json::json!([[n1], [n2]]),
        "minimal ideals {ideals}"
    );
    ensure!(
        sg["isomorphism"]["pairs"][0]["orientation"] == "uv=v,vu=u",
        "pairing orientation"
    );
    ensure!(t < Duration::from_secs(10), "runtime {t:?}");
    Ok(format!(
        "2 idempotent limits, max error {:.1e}, ideals {ideals}, {:.2} s",
        e1.max(e2),
        t.as_secs_f64()
    ))
}

fn ac2() -> Outcome {
    let (report, t) = run("ac2-neg-cube.toml")?;
    let env = result(&report, "envelope", 0);
    ensure!(
        env["limit_count"] == 4,
        "limit count {}",
        env["limit_count"]
    );
    let get = |w| limit_by_witness(env, w).ok_or(format!("no limit with witness {w}"));
    let (g, lg) = get(80)?;
    let (h, lh) = get(79)?;
    let (m, lm) = get(-80)?;
    let (n, ln) = get(-79)?;
    let xs = values(&env["samples"]);
    let edge = |x: f64| if x.abs() == 1.0 { x } else { 0.0 };
    let sign = |x: f64| if x == 0.0 { 0.0 } else { x.signum() };
    let errs = [
        max_error(&xs, &values(&lg["values"]), edge),
        max_error(&xs, &values(&lh["values"]), |x| -edge(x)),
        max_error(&xs, &values(&lm["values"]), sign),
        max_error(&xs, &values(&ln["values"]), |x| -sign(x)),
    ];
    let worst = errs.iter().copied().fold(0.0, f64::max);
    ensure!(worst < 1e-3, "pointwise errors {errs:?}");
    let f = index_of(env, "f^1").ok_or("no f^1")?;
    let products = [
        ("mm", m, m, m),
        ("nn", n, n, m),
        ("mg", m, g, g),
        ("gm", g, m, m),
        ("ng", n, g, h),
        ("gn", g, n, n),
        ("hh", h, h, g),
        ("hn", h, n, m),
        ("mh", m, h, h),
        ("hg", h, g, h),
        ("gg", g, g, g),
        ("fg", f, g, h),
        ("fh", f, h, g),
        ("fm", f, m, n),
        ("fn", f, n, m),
        ("gh", g, h, h),
    ];
    let wrong: Vec<&str> = products
        .iter()
        .filter(|(_, a, b, c)| product(env, *a, *b) != *c)
        .map(|p| p.0)
        .collect();
    ensure!(wrong.is_empty(), "wrong products {wrong:?}");
    ensure!(t < Duration::from_secs(20), "runtime {t:?}");
    Ok(format!(
        "4 limits, max error {worst:.1e}, 16/16 products, {:.2} s",
        t.as_secs_f64()
    ))
}

fn ac3() -> Outcome {
    let mut summary = Vec::new();
    for n in [2u64, 3, 5] {
        let (report, _) = run(&format!("ac3-periodic-stack-{n}.toml"))?;
        let sg = result(&report, "semigroup", 0);
        let p = &sg["periodic"];
        let elements = p["elements"].as_array().ok_or("no periodic elements")?;
        ensure!(
            elements.iter().all(|e| e["period"] == n),
            "n={n}: periods differ"
        );
        ensure!(
            elements.len() as u64 <= 2 * n,
            "n={n}: {} periodic elements",
            elements.len()
        );
        let idem = elements
            .iter()
            .find(|e| e["idempotent"] == true)
            .ok_or(format!("n={n}: no periodic idempotent"))?;
        let name = &idem["element"];
        let ideals = sg["ideals"]["members"].as_array().unwrap();
        let home = ideals
            .iter()
            .find(|i| i.as_array().unwrap().contains(name))
            .ok_or(format!("n={n}: idempotent outside the minimal ideals"))?;
        ensure!(
            home.as_array().unwrap().len() as u64 == n,
            "n={n}: ideal size"
        );
        ensure!(
            p["orbits_are_minimal_ideals"] == true,
            "n={n}: orbit is not an ideal"
        );
        summary.push(format!("n={n}: {} with {} periodic", name, elements.len()));
    }
    Ok(summary.join(", "))
}

/// `1` exactly when the binary word avoids `1 0^(2k+1) 1`.
fn even_allowed(bits: u32, len: usize) -> bool {
    let mut last_one: Option<usize> = None;
    for i in 0..len {
        if bits >> i & 1 == 1 {
            if let Some(j) = last_one {
                if (i - j - 1) % 2 == 1 {
                    return false;
                }
            }
            last_one = Some(i);
        }
    }
    true
}

fn ac4() -> Outcome {
    let t = Instant::now();
    let (report, _) = run("ac4-golden-mean.toml")?;
    let ent = result(&report, "entropy", 0);
    let mut fib = vec![1u128, 2];
    while fib.len() < 26 {
        let k = fib.len();
        fib.push(fib[k - 1] + fib[k - 2]);
    }
    for row in ent["rows"].as_array().unwrap() {
        let n = row["n"].as_u64().unwrap() as usize;
        let want = if n == 0 { 1 } else { fib[n] };
        ensure!(
            row["count"].as_u64().map(u128::from) == Some(want),
            "golden |B_{n}| = {}",
            row["count"]
        );
    }
    let oracle = ((1.0 + 5f64.sqrt()) / 2.0).ln();
    let spectral = ent["spectral"].as_f64().unwrap();
    let increment = ent["increment_estimate"].as_f64().unwrap();
    ensure!(
        (spectral - increment).abs() < 1e-6,
        "spectral {spectral} vs count estimate {increment}"
    );
    for v in [spectral, increment, oracle] {
        ensure!((v - 0.4812118).abs() < 1e-3, "entropy {v}");
    }
    let counts = &result(&report, "language-counts", 0)["counts"];
    for n in 0..=16usize {
        let brute = (0..1u32 << n).filter(|&w| even_allowed(w, n)).count() as u64;
        ensure!(
            counts[n] == brute,
            "even |B_{n}| = {} but brute force gives {brute}",
            counts[n]
        );
    }
    let code = SlidingBlockCode::golden_to_even();
    let (golden, even) = (Subshift::golden_mean(), Subshift::even());
    for n in 2..=16 {
        let r = verify_factor(&code, &golden, &even, n).map_err(|e| e.to_string())?;
        ensure!(r.into && r.onto, "factor fails at n={n}");
    }
    let t = t.elapsed();
    ensure!(t < Duration::from_secs(30), "runtime {t:?}");
    Ok(format!(
        "h = {spectral:.7} (count estimate {increment:.7}), even counts to n=16, factor n<=16, {:.2} s",
        t.as_secs_f64()
    ))
}

fn ac5() -> Outcome {
    let (report, t) = run("ac5-two-shift.toml")?;
    let tr = result(&report, "transitivity", 0);
    ensure!(
        tr["mixing"]["verdict"] == "holds",
        "mixing {}",
        tr["mixing"]["verdict"]
    );
    let iso = result(&report, "identity-isolated", 0);
    ensure!(
        iso["isolated"] == true && iso["witness"].is_null(),
        "identity not isolated: {iso}"
    );
    let st = result(&report, "stabilization", 0);
    let counts: Vec<u64> = st["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["elements"].as_u64().unwrap())
        .collect();
    ensure!(counts.windows(2).all(|w| w[0] < w[1]), "counts {counts:?}");
    ensure!(st["verdict"] == "growing", "verdict {}", st["verdict"]);
    Ok(format!(
        "mixing on {} cylinders, identity isolated (closest {:.3}), growth {counts:?}, {:.2} s",
        tr["cover_size"],
        iso["closest"].as_f64().unwrap_or(f64::NAN),
        t.as_secs_f64()
    ))
}

fn ac6() -> Outcome {
    let (report, t) = run("ac6-theorem-corpus.toml")?;
    let r = result(&report, "theorem-corpus", 0);
    let models = r["options"]["models"].as_u64().unwrap();
    ensure!(models >= 500, "only {models} models");
    ensure!(
        r["options"]["max_points"].as_u64().unwrap() <= 8,
        "model size"
    );
    ensure!(
        r["evaluated"]
            .as_array()
            .unwrap()
            .iter()
            .all(|e| *e == models),
        "checks skipped"
    );
    let inv = r["invertible_models"].as_u64().unwrap();
    ensure!(
        inv > 0 && inv < models,
        "corpus not mixed: {inv} invertible"
    );
    ensure!(r["violation_count"] == 0, "violations {}", r["violations"]);
    Ok(format!(
        "{models} models ({inv} invertible, {} distal), 6 checks, 0 violations, {:.2} s",
        r["distal_models"],
        t.as_secs_f64()
    ))
}

fn ac7() -> Outcome {
    let (report, _) = run("ac7-inward-stack.toml")?;
    let fine = result(&report, "rigidity", 0);
    ensure!(
        fine["rigid"]["verdict"] == "holds",
        "inward stack not rigid"
    );
    let w = fine["rigid"]["witness"]["witness_n"]
        .as_u64()
        .ok_or("no rigidity witness")?;
    ensure!(w.is_power_of_two(), "witness {w} is not a power of 2");
    let coarse = result(&report, "rigidity", 1);
    ensure!(
        coarse["uniformly_rigid"]["verdict"] == "fails",
        "inward stack uniformly rigid at 0.5"
    );

    let (report, _) = run("ac7-rotation.toml")?;
    let rot = result(&report, "rigidity", 0);
    ensure!(
        rot["uniformly_rigid"]["verdict"] == "holds",
        "rotation not uniformly rigid"
    );
    let q = rot["uniformly_rigid"]["witness"]["witness_n"]
        .as_u64()
        .unwrap();
    let mut denominators = vec![1u64, 1];
    while *denominators.last().unwrap() <= 1000 {
        let k = denominators.len();
        denominators.push(denominators[k - 1] + denominators[k - 2]);
    }
    ensure!(
        denominators.contains(&q),
        "rotation witness {q} is not a convergent denominator"
    );

    let (report, _) = run("ac7-catalog-sweep.toml")?;
    let mut checked = 0;
    for k in 0..2 {
        for m in result(&report, "catalog-sweep", k)["models"]
            .as_array()
            .unwrap()
        {
            ensure!(m["chain_ok"] == true, "chain violated on {}", m["model"]);
            ensure!(
                m["agrees"] == true,
                "weak rigidity disagrees with isolation on {}",
                m["model"]
            );
            checked += 1;
        }
    }
    ensure!(
        checked == 2 * catalog_entries().len(),
        "sweep covered {checked} runs"
    );
    Ok(format!(
        "inward rigid at n={w}, not uniformly rigid at 0.5; rotation uniform at n={q}; {checked} sweep runs consistent"
    ))
}

fn ac8() -> Outcome {
    let (report, _) = run("ac8-square-hyper.toml")?;
    let sq = result(&report, "hyper-equicontinuity", 0);
    ensure!(sq["agree"] == true, "square-map base/hyper disagree");
    let ind = result(&report, "inducibility", 0);
    let names: Vec<&str> = ind["elements"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["element"].as_str().unwrap())
        .collect();
    ensure!(names.first() == Some(&"f^1"), "f* not checked");
    ensure!(
        names.iter().filter(|n| n.starts_with("lim#")).count() >= 2,
        "limits checked: {names:?}"
    );
    ensure!(
        ind["all_passed"] == true,
        "inducibility fails: {}",
        ind["elements"]
    );

    let (report, _) = run("ac8-rotation-hyper.toml")?;
    let rot = result(&report, "hyper-equicontinuity", 0);
    ensure!(rot["agree"] == true, "rotation base/hyper disagree");

    let (report, _) = run("ac8-theta-sweep.toml")?;
    let models = result(&report, "catalog-sweep", 0)["models"]
        .as_array()
        .unwrap()
        .clone();
    let exact = catalog_entries()
        .iter()
        .filter(|e| e.kind == "finite-exact")
        .count();
    ensure!(
        models.len() == exact,
        "theta covered {} of {exact} models",
        models.len()
    );
    for m in &models {
        ensure!(
            m["violations"] == 0 && m["well_defined"] == true,
            "theta fails on {}",
            m["model"]
        );
    }
    Ok(format!(
        "AE agrees (square {}, rotation {}); inducible: {}; theta clean on {exact} models",
        sq["base_almost_equicontinuous"],
        rot["base_almost_equicontinuous"],
        names.join(" ")
    ))
}

fn ac9() -> Outcome {
    let mut names: Vec<PathBuf> = std::fs::read_dir(configs_dir())
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    names.sort();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    for path in &names {
        let cfg = ExperimentConfig::load(path).map_err(|e| e.to_string())?;
        let mut bytes = Vec::new();
        for run in 0..2 {
            let report = run_experiment(&cfg).map_err(|e| e.to_string())?;
            let dir = tmp.path().join(format!("{run}"));
            emit_report(&report, &dir, &[Format::Json]).map_err(|e| e.to_string())?;
            bytes.push(std::fs::read(dir.join("report.json")).map_err(|e| e.to_string())?);
        }
        ensure!(
            bytes[0] == bytes[1],
            "{} differs between runs",
            path.display()
        );
    }
    Ok(format!(
        "{} configs byte-identical across two runs",
        names.len()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("AC1 square-map envelope", ac1),
        ("AC2 neg-cube envelope", ac2),
        ("AC3 periodic family", ac3),
        ("AC4 golden mean and even shift", ac4),
        ("AC5 2-shift diagnostics", ac5),
        ("AC6 theorem corpus", ac6),
        ("AC7 rigidity battery", ac7),
        ("AC8 hyperspace suite", ac8),
        ("AC9 determinism", ac9),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = BTreeMap::new();
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(reason) => {
                println!("FAIL {name}: {reason}");
                failed.insert(name, reason);
            }
        }
    }
    if !failed.is_empty() {
        std::process::exit(1);
    }
}

//! Pipeline execution.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use ellis_core::algebra::{
    ideal_isomorphism_check, idempotents, is_group_distal, kernel_and_groups, minimal_left_ideals,
    periodic_element_analysis, proximal_structure, recurrent_idempotent_check, CheckMode,
    FiniteSemigroup,
};
use ellis_core::envelope::{
    approx_envelope, envelope_power_decomposition, exact_envelope, identity_isolated,
    inducibility_check, stabilization_diagnostic, theta_check_approx, theta_check_exact,
    ApproxEnvelope, ApproxOptions, ExactEnvelope, Provenance,
};
use ellis_core::hyperspace::{build_hyper_model, DEFAULT_BUDGET};
use ellis_core::properties::{
    build_cover, classify_transitivity, distal_semiflow_check, equicontinuity_scan, hitting_set,
    hyper_equicontinuity_crosscheck, recurrence_report, rigidity_battery,
    strong_transitivity_check, wap_proxy_check, wap_proxy_exact, CoverSpec,
};
use ellis_core::spaces::{catalog_entries, load_model};
use ellis_core::symbolic::{
    boyle_precondition, classify, entropy_csv, entropy_estimates, language_counts,
    periodic_spectrum, verify_factor,
};
use ellis_core::verify::{theorem_corpus, CorpusOptions, CHECKS};
use ellis_core::{CascadeModel, PointId};
use serde_json::{json, Value};

use crate::config::{Analysis, EnvelopeMode, ExperimentConfig, Op, SweepCheck};
use crate::report::{
    Assertion, Expectation, Report, StepReport, StepStatus, StepTiming, Summary, Timings, Tool,
};
use crate::{CliError, CliResult, SCHEMA_VERSION};

/// Element budget for exact envelopes.
const EXACT_BUDGET: usize = 1 << 16;

enum Envelope {
    Exact(ExactEnvelope),
    Approx(ApproxEnvelope),
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    model: Option<CascadeModel>,
    envelope: Option<Envelope>,
}

#[derive(Default)]
struct Output {
    result: Value,
    assertions: Vec<Assertion>,
    csv: Vec<(String, String)>,
    text: Option<String>,
}

impl Output {
    fn new(result: Value) -> Self {
        Output {
            result,
            ..Output::default()
        }
    }

    fn assert(mut self, name: &str, passed: bool) -> Self {
        self.assertions.push(Assertion {
            name: name.to_string(),
            passed,
        });
        self
    }

    fn csv(mut self, suffix: &str, body: String) -> Self {
        self.csv.push((suffix.to_string(), body));
        self
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> CliResult<Value> {
    Ok(serde_json::to_value(v)?)
}

fn load_configured_model(cfg: &ExperimentConfig) -> CliResult<Option<CascadeModel>> {
    let Some(spec) = &cfg.model else {
        return Ok(None);
    };
    if let Some(name) = &spec.catalog {
        return Ok(Some(load_model(name, &spec.params())?));
    }
    let file = cfg.resolve_path(spec.file.as_deref().expect("validated"));
    let raw = std::fs::read_to_string(&file).map_err(|e| CliError::io(&file, e))?;
    let value: Value = serde_json::from_str(&raw)?;
    Ok(Some(CascadeModel::import_json(&value)?))
}

fn model_summary(m: &CascadeModel) -> Value {
    json!({
        "name": m.name(),
        "params": m.params(),
        "points": m.len(),
        "dim": m.space().dim(),
        "metric": m.space().metric().kind(),
        "exact": m.is_exact(),
        "invertible": m.invertible(),
        "resolution": m.space().resolution(),
        "map": m.point_map().describe(),
    })
}

/// Runs the pipeline. Step failures are recorded and later steps keep running
/// unless they depend on a failed model or envelope.
pub fn run_experiment(cfg: &ExperimentConfig) -> CliResult<Report> {
    cfg.validate()?;
    let total = Instant::now();
    let mut summary = Summary::default();
    let mut timings = Timings::default();

    let t = Instant::now();
    let (model, model_value, model_error) = match load_configured_model(cfg) {
        Ok(Some(m)) => {
            let v = model_summary(&m);
            (Some(m), Some(v), None)
        }
        Ok(None) => (None, None, None),
        Err(e) => {
            summary.errors += 1;
            (
                None,
                Some(json!({ "error": e.to_string() })),
                Some(e.to_string()),
            )
        }
    };
    timings.model_seconds = t.elapsed().as_secs_f64();

    let mut ctx = Context {
        cfg,
        model,
        envelope: None,
    };
    let mut envelope_failed = false;
    let mut steps = Vec::new();
    for (index, step) in cfg.pipeline.iter().enumerate() {
        let t = Instant::now();
        let blocked = if step.op.needs_model() && ctx.model.is_none() {
            Some(format!(
                "model unavailable: {}",
                model_error.as_deref().unwrap_or("not configured")
            ))
        } else if step.op.needs_envelope() && (envelope_failed || ctx.envelope.is_none()) {
            Some("envelope step failed".to_string())
        } else {
            None
        };
        let mut rep = StepReport {
            index,
            op: step.op.name().to_string(),
            status: StepStatus::Ok,
            result: Value::Null,
            assertions: Vec::new(),
            expectations: Vec::new(),
            error: None,
            csv: Vec::new(),
            text: None,
        };
        if let Some(reason) = blocked {
            rep.status = StepStatus::Skipped;
            rep.error = Some(reason);
        } else {
            match execute(&mut ctx, &step.op) {
                Ok(out) => {
                    rep.result = out.result;
                    rep.assertions = out.assertions;
                    rep.csv = out.csv;
                    rep.text = out.text;
                    rep.expectations = step
                        .expect
                        .iter()
                        .map(|(ptr, want)| check_expectation(&rep.result, ptr, want))
                        .collect();
                }
                Err(e) => {
                    if matches!(step.op, Op::Envelope { .. }) {
                        envelope_failed = true;
                    }
                    rep.status = StepStatus::Failed;
                    rep.error = Some(e.to_string());
                }
            }
        }
        match rep.status {
            StepStatus::Ok => summary.ok += 1,
            StepStatus::Failed => {
                summary.failed += 1;
                summary.errors += 1;
            }
            StepStatus::Skipped => summary.skipped += 1,
        }
        summary.assertion_failures += rep.assertions.iter().filter(|a| !a.passed).count();
        summary.expectation_failures += rep.expectations.iter().filter(|e| !e.passed).count();
        timings.steps.push(StepTiming {
            index,
            op: rep.op.clone(),
            seconds: t.elapsed().as_secs_f64(),
        });
        steps.push(rep);
    }
    summary.steps = steps.len();
    summary.verdict = if summary.errors > 0 {
        "error"
    } else if summary.assertion_failures + summary.expectation_failures > 0 {
        "verdict-failure"
    } else {
        "pass"
    }
    .to_string();
    timings.total_seconds = total.elapsed().as_secs_f64();
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        tool: Tool::default(),
        config: cfg.clone(),
        model: model_value,
        steps,
        summary,
        timings,
    })
}

/// Numbers compare with a relative tolerance of 1e-12; an object
/// `{ approx = x, tol = t }` compares within `t`.
fn check_expectation(result: &Value, pointer: &str, expected: &Value) -> Expectation {
    let actual = result.pointer(pointer).cloned().unwrap_or(Value::Null);
    let passed = match (expected, &actual) {
        (Value::Object(o), Value::Number(a)) if o.contains_key("approx") => {
            let x = o.get("approx").and_then(Value::as_f64);
            let tol = o.get("tol").and_then(Value::as_f64).unwrap_or(1e-9);
            matches!((x, a.as_f64()), (Some(x), Some(a)) if (a - x).abs() <= tol)
        }
        (Value::Number(e), Value::Number(a)) => match (e.as_f64(), a.as_f64()) {
            (Some(e), Some(a)) => (e - a).abs() <= 1e-12 * e.abs().max(a.abs()).max(1.0),
            _ => false,
        },
        (e, a) => e == a,
    };
    Expectation {
        pointer: pointer.to_string(),
        expected: expected.clone(),
        actual,
        passed,
    }
}

fn model<'c>(ctx: &'c Context) -> &'c CascadeModel {
    ctx.model.as_ref().expect("checked before execution")
}

fn execute(ctx: &mut Context, op: &Op) -> CliResult<Output> {
    match op {
        Op::ModelInfo {} => {
            let m = model(ctx);
            let mut v = model_summary(m);
            if m.is_exact() {
                v["export"] = m.export_json()?;
            }
            Ok(Output::new(v))
        }
        Op::Orbit { point, from, to } => orbit(model(ctx), *point, *from, *to),
        Op::HyperModel { k } => {
            let h = build_hyper_model(model(ctx), *k, DEFAULT_BUDGET)?;
            let labels: Vec<String> = (0..h.len()).map(|i| h.label(i)).collect();
            Ok(Output::new(json!({
                "k": k,
                "points": h.len(),
                "hyperpoints": labels,
                "table": h.table(),
                "max_snap_error": h.max_snap_error(),
            })))
        }
        Op::Envelope {
            horizon,
            tau,
            two_sided,
            max_elements,
            mode,
            include_values,
        } => {
            let m = model(ctx);
            let exact = match mode {
                EnvelopeMode::Auto => m.is_exact(),
                EnvelopeMode::Exact => true,
                EnvelopeMode::Approx => false,
            };
            if exact {
                let env = exact_envelope(m.table()?, EXACT_BUDGET)?;
                let s = env.semigroup()?;
                let out = Output {
                    result: json!({
                        "mode": "exact",
                        "size": env.len(),
                        "preperiod": env.preperiod(),
                        "period": env.period(),
                        "elements": s.names(),
                        "table": s.rows(),
                    }),
                    text: Some(s.render()),
                    ..Output::default()
                };
                ctx.envelope = Some(Envelope::Exact(env));
                Ok(out)
            } else {
                let opts = ApproxOptions {
                    horizon: *horizon,
                    tau: *tau,
                    two_sided: *two_sided && m.invertible(),
                    max_elements: *max_elements,
                    close: true,
                };
                let env = approx_envelope(m, &opts)?;
                let out = approx_envelope_output(m, &env, *include_values)?;
                ctx.envelope = Some(Envelope::Approx(env));
                Ok(out)
            }
        }
        Op::Semigroup {
            analyses,
            table_file,
        } => {
            let (s, maps) = match table_file {
                Some(f) => {
                    let f = ctx.cfg.resolve_path(f);
                    let raw = std::fs::read_to_string(&f).map_err(|e| CliError::io(&f, e))?;
                    (FiniteSemigroup::from_json(&raw, CheckMode::Report)?, None)
                }
                None => match ctx.envelope.as_ref().expect("checked before execution") {
                    Envelope::Exact(env) => (env.semigroup()?, Some(env.maps().to_vec())),
                    Envelope::Approx(env) => (env.semigroup()?, Some(env.snapped_maps(model(ctx)))),
                },
            };
            semigroup(&s, maps.as_deref(), analyses)
        }
        Op::PowerDecomposition { n } => {
            let table = model(ctx).table()?;
            let rows = n
                .iter()
                .map(|&k| envelope_power_decomposition(table, k))
                .collect::<Result<Vec<_>, _>>()?;
            let all = rows.iter().all(|r| r.equal);
            Ok(Output::new(json!({ "rows": rows, "all_equal": all }))
                .assert("power-decomposition", all))
        }
        Op::Theta { k, horizon, tau } => {
            let m = model(ctx);
            let h = build_hyper_model(m, *k, DEFAULT_BUDGET)?;
            let r = if m.is_exact() {
                let base = exact_envelope(m.table()?, EXACT_BUDGET)?;
                let hyper = exact_envelope(h.table(), EXACT_BUDGET)?;
                theta_check_exact(&base, &hyper, &h)?
            } else {
                let opts = approx_opts(m, *horizon, *tau);
                let base = approx_envelope(m, &opts)?;
                let hyper = approx_envelope(&h, &opts)?;
                theta_check_approx(m, &base, &hyper, &h)?
            };
            let passed = r.well_defined && r.homomorphism_violations.is_empty();
            Ok(Output::new(json!({
                "k": k,
                "hyper_points": h.len(),
                "hyper_elements": r.mapping.len(),
                "well_defined": r.well_defined,
                "injective": r.injective,
                "surjective": r.surjective,
                "singleton_escapes": r.singleton_escapes.len(),
                "violations": r.homomorphism_violations.len(),
                "mapping": r.mapping,
                "passed": passed,
            }))
            .assert("theta-homomorphism", passed))
        }
        Op::Inducibility { k, horizon, tau } => inducibility(model(ctx), *k, *horizon, *tau),
        Op::Entropy { shift, n_max } => {
            let x = shift.resolve(ctx.cfg)?;
            let r = entropy_estimates(&x, *n_max)?;
            let last = r.rows.last().map_or(f64::NAN, |row| row.rate);
            let mut v = to_value(&r)?;
            v["rate_at_n_max"] = json!(last);
            v["spectral_vs_increment"] = json!((r.spectral - r.increment_estimate).abs());
            Ok(Output::new(v).csv("", entropy_csv(&r)))
        }
        Op::LanguageCounts { shift, n_max } => {
            let x = shift.resolve(ctx.cfg)?;
            let counts = language_counts(&x, *n_max);
            let mut csv = String::from("n,count\n");
            for (n, c) in counts.iter().enumerate() {
                let _ = writeln!(csv, "{n},{c}");
            }
            Ok(Output::new(json!({ "counts": counts })).csv("", csv))
        }
        Op::Classify { shift } => Ok(Output::new(to_value(&classify(&shift.resolve(ctx.cfg)?))?)),
        Op::PeriodicSpectrum { shift, n_max } => {
            let r = periodic_spectrum(&shift.resolve(ctx.cfg)?, *n_max)?;
            let mut csv = String::from("n,fixed,least\n");
            for (i, (f, l)) in r.fixed.iter().zip(&r.least).enumerate() {
                let _ = writeln!(csv, "{},{f},{l}", i + 1);
            }
            Ok(Output::new(to_value(&r)?).csv("", csv))
        }
        Op::Boyle { x, y, n_max } => {
            let r = boyle_precondition(&x.resolve(ctx.cfg)?, &y.resolve(ctx.cfg)?, *n_max)?;
            Ok(Output::new(to_value(&r)?))
        }
        Op::Factor {
            code,
            domain,
            codomain,
            n,
        } => {
            let r = verify_factor(
                &code.resolve()?,
                &domain.resolve(ctx.cfg)?,
                &codomain.resolve(ctx.cfg)?,
                *n,
            )?;
            Ok(Output::new(to_value(&r)?))
        }
        Op::HittingSet { u, v, horizon } => {
            let times = hitting_set(model(ctx), u, v, *horizon)?;
            Ok(Output::new(json!({
                "u": u.describe(),
                "v": v.describe(),
                "horizon": horizon,
                "count": times.len(),
                "first": times.first(),
                "times": times,
            })))
        }
        Op::Transitivity {
            horizon,
            cover,
            run_length,
        } => {
            let m = model(ctx);
            let sets = build_cover(m, cover);
            let r = classify_transitivity(m, *horizon, &sets, *run_length)?;
            let mut csv = String::from("u,v,hits,first_hit,hit_times\n");
            for ((u, v), hits) in r.pairs.iter().zip(&r.hitting) {
                let times: Vec<String> = hits.iter().map(u64::to_string).collect();
                let first = hits.first().map_or(String::new(), u64::to_string);
                let _ = writeln!(csv, "{u},{v},{},{first},{}", hits.len(), times.join(" "));
            }
            let chain = r.chain_ok;
            Ok(Output::new(to_value(&r)?)
                .assert("verdict-chain", chain)
                .csv("membership", csv))
        }
        Op::StrongTransitivity { horizon, cover } => {
            let m = model(ctx);
            let sets = build_cover(m, cover);
            let r = strong_transitivity_check(m, *horizon, &sets)?;
            let chain = r.chain_ok;
            Ok(Output::new(to_value(&r)?).assert("verdict-chain", chain))
        }
        Op::Equicontinuity { epsilons, horizon } => {
            let m = model(ctx);
            let sets = build_cover(m, &CoverSpec::Auto);
            let r = equicontinuity_scan(m, epsilons, *horizon, &sets)?;
            let mut csv = String::from("epsilon,equicontinuity_points,dense\n");
            for row in &r.rows {
                let _ = writeln!(
                    csv,
                    "{},{},{}",
                    row.epsilon, row.equicontinuity_points, row.dense
                );
            }
            let chain = !r.equicontinuous.holds() || r.almost_equicontinuous.holds();
            Ok(Output::new(to_value(&r)?)
                .assert("verdict-chain", chain)
                .csv("", csv))
        }
        Op::HyperEquicontinuity {
            k,
            epsilons,
            horizon,
        } => {
            let r = hyper_equicontinuity_crosscheck(model(ctx), *k, epsilons, *horizon)?;
            let agree = r.agree;
            Ok(Output::new(json!({
                "k": r.k,
                "base_almost_equicontinuous": r.base.almost_equicontinuous.verdict,
                "hyper_almost_equicontinuous": r.hyper.almost_equicontinuous.verdict,
                "agree": agree,
                "base": r.base,
                "hyper": r.hyper,
            }))
            .assert("hyperspace-agreement", agree))
        }
        Op::Rigidity {
            horizon,
            tau,
            tuple_size,
        } => {
            let v = rigidity_with_isolation(model(ctx), *horizon, *tau, *tuple_size, ctx.cfg.seed)?;
            let chain = v["chain_ok"] == json!(true);
            let agree = v["agrees_with_identity_isolation"] == json!(true);
            Ok(Output::new(v)
                .assert("verdict-chain", chain)
                .assert("weak-rigidity-iff-identity-not-isolated", agree))
        }
        Op::Recurrence { horizon, tau } => {
            let m = model(ctx);
            let r = recurrence_report(m, *horizon, *tau, |i| m.label(PointId(i)))?;
            let mut csv = String::from(
                "point,recurrent,nonwandering,essentially_nonwandering,almost_periodic,gap\n",
            );
            for p in &r.points {
                let gap = p.gap.map_or(String::new(), |g| g.to_string());
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{gap}",
                    p.point,
                    p.recurrent,
                    p.nonwandering,
                    p.essentially_nonwandering,
                    p.almost_periodic
                );
            }
            let chain = r
                .points
                .iter()
                .all(|p| (!p.almost_periodic || p.recurrent) && (!p.recurrent || p.nonwandering));
            Ok(Output::new(to_value(&r)?)
                .assert("verdict-chain", chain)
                .csv("", csv))
        }
        Op::Wap { epsilons } => {
            let m = model(ctx);
            let r = match ctx.envelope.as_ref().expect("checked before execution") {
                Envelope::Exact(env) => wap_proxy_exact(m, epsilons, env.len() + 1)?,
                Envelope::Approx(env) => wap_proxy_check(m, env, epsilons)?,
            };
            Ok(Output::new(to_value(&r)?))
        }
        Op::DistalSemiflow {} => {
            let r = distal_semiflow_check(model(ctx))?;
            let ok = r.consequences_hold;
            Ok(Output::new(to_value(&r)?).assert("distal-consequences", ok))
        }
        Op::IdentityIsolated { horizon, tau } => {
            let m = model(ctx);
            let v = if m.is_exact() {
                let env = exact_envelope(m.table()?, EXACT_BUDGET)?;
                let w = env.identity_witness(m, *horizon, *tau);
                json!({ "isolated": w.is_none(), "witness": w })
            } else {
                let env = approx_envelope(m, &isolation_opts(*horizon, *tau))?;
                to_value(&identity_isolated(&env, *tau))?
            };
            Ok(Output::new(v))
        }
        Op::Stabilization {
            horizons,
            tau,
            two_sided,
        } => {
            let m = model(ctx);
            let r = stabilization_diagnostic(m, horizons, *tau, *two_sided && m.invertible())?;
            let mut csv = String::from("horizon,elements,limits\n");
            for row in &r.rows {
                let _ = writeln!(csv, "{},{},{}", row.horizon, row.elements, row.limits);
            }
            Ok(Output::new(to_value(&r)?).csv("", csv))
        }
        Op::TheoremCorpus { models, max_points } => {
            let r = theorem_corpus(&CorpusOptions {
                models: *models,
                max_points: *max_points,
                seed: ctx.cfg.seed,
            })?;
            let mut out = Output::new(json!({
                "options": r.options,
                "invertible_models": r.invertible_models,
                "distal_models": r.distal_models,
                "checks": CHECKS,
                "evaluated": r.evaluated,
                "violation_count": r.violations.len(),
                "violations": r.violations,
                "passed": r.passed(),
            }));
            for (k, name) in CHECKS.iter().enumerate() {
                let failed = r.violations.iter().any(|v| v.check == *name);
                out = out.assert(name, !failed && r.evaluated[k] == *models);
            }
            Ok(out)
        }
        Op::CatalogSweep {
            check,
            horizon,
            tau,
            k,
        } => catalog_sweep(ctx.cfg, *check, *horizon, *tau, *k),
    }
}

fn approx_opts(m: &CascadeModel, horizon: u64, tau: f64) -> ApproxOptions {
    ApproxOptions {
        horizon,
        tau,
        two_sided: m.invertible(),
        ..ApproxOptions::default()
    }
}

fn isolation_opts(horizon: u64, tau: f64) -> ApproxOptions {
    ApproxOptions {
        horizon,
        tau,
        two_sided: false,
        max_elements: usize::MAX,
        close: false,
    }
}

fn orbit(m: &CascadeModel, point: usize, from: i64, to: i64) -> CliResult<Output> {
    let seg = m.orbit_segment(PointId(point), from, to)?;
    let metric = m.space().metric();
    let mut csv = String::from("n,snapped,snap_error,coords\n");
    let rows: Vec<Value> = seg
        .iter()
        .map(|p| {
            let coords = metric.ambient(&p.raw);
            let joined: Vec<String> = coords.iter().map(f64::to_string).collect();
            let _ = writeln!(
                csv,
                "{},{},{},{}",
                p.n,
                p.snapped.0,
                p.snap_error,
                joined.join(" ")
            );
            json!({
                "n": p.n,
                "point": coords,
                "snapped": p.snapped.0,
                "label": m.label(p.snapped),
                "snap_error": p.snap_error,
            })
        })
        .collect();
    Ok(Output::new(json!({ "start": m.label(PointId(point)), "orbit": rows })).csv("", csv))
}

fn approx_envelope_output(
    m: &CascadeModel,
    env: &ApproxEnvelope,
    include_values: bool,
) -> CliResult<Output> {
    let s = env.semigroup().ok();
    let limits: Vec<Value> = env
        .limit_indices()
        .into_iter()
        .map(|i| {
            let e = env.element(i);
            let mut v = json!({ "index": i, "name": e.name, "provenance": e.provenance });
            if let Provenance::Limit { witness, .. } = e.provenance {
                v["witness"] = json!(witness);
            }
            if include_values {
                let values: Vec<Value> = (0..m.len())
                    .map(|x| match m.space().metric().line_value(env.image(i, x)) {
                        Some(y) => json!(y),
                        None => json!(m.space().metric().ambient(env.image(i, x))),
                    })
                    .collect();
                v["values"] = Value::Array(values);
            }
            v
        })
        .collect();
    let mut result = json!({
        "mode": "approx",
        "size": env.len(),
        "observed": env.observed(),
        "stabilized": env.stabilized(),
        "horizon": env.horizon(),
        "tau": env.tau(),
        "max_snap_error": env.max_snap_error(),
        "elements": env.elements(),
        "limit_count": limits.len(),
        "limits": limits,
        "table": env.table(),
        "associativity_violations": s.as_ref().map(FiniteSemigroup::associativity_violations),
    });
    if include_values {
        let samples: Vec<Value> = (0..m.len())
            .map(|x| match m.space().line_value(x) {
                Some(y) => json!(y),
                None => json!(m.space().ambient(x)),
            })
            .collect();
        result["samples"] = Value::Array(samples);
    }
    let mut out = Output {
        result,
        text: s.as_ref().map(FiniteSemigroup::render),
        ..Output::default()
    };
    if include_values && m.space().line_value(0).is_some() {
        let lim = env.limit_indices();
        let mut csv = String::from("x");
        for &i in &lim {
            let _ = write!(csv, ",{}", env.element(i).name);
        }
        csv.push('\n');
        for x in 0..m.len() {
            let _ = write!(csv, "{}", m.space().line_value(x).unwrap_or(f64::NAN));
            for &i in &lim {
                let y = m
                    .space()
                    .metric()
                    .line_value(env.image(i, x))
                    .unwrap_or(f64::NAN);
                let _ = write!(csv, ",{y}");
            }
            csv.push('\n');
        }
        out = out.csv("limits", csv);
    }
    Ok(out)
}

fn semigroup(
    s: &FiniteSemigroup,
    maps: Option<&[Vec<usize>]>,
    analyses: &[Analysis],
) -> CliResult<Output> {
    let names = |v: &[usize]| -> Vec<String> { v.iter().map(|&i| s.name(i).to_string()).collect() };
    let mut result = json!({
        "size": s.len(),
        "elements": s.names(),
        "identity": s.identity().map(|i| s.name(i).to_string()),
        "generator": s.generator().map(|i| s.name(i).to_string()),
        "associativity_violations": s.associativity_violations(),
        "identity_ok": s.identity_ok(),
    });
    let mut assertions = Vec::new();
    let mut push = |name: &str, passed: bool| {
        assertions.push(Assertion {
            name: name.to_string(),
            passed,
        })
    };
    let ideals = minimal_left_ideals(s);
    for a in analyses {
        match a {
            Analysis::Idempotents => {
                let idem = idempotents(s);
                push("idempotent-exists", !idem.is_empty());
                result["idempotents"] = json!(names(&idem));
            }
            Analysis::Ideals => {
                let members: Vec<Vec<String>> = ideals.iter().map(|i| names(i)).collect();
                result["ideals"] = json!({ "count": ideals.len(), "members": members });
            }
            Analysis::Kernel => {
                let k = kernel_and_groups(s);
                push("kernel-groups", k.all_groups_ok);
                result["kernel"] = json!({
                    "members": names(&k.kernel),
                    "all_groups_ok": k.all_groups_ok,
                    "detail": k,
                });
            }
            Analysis::Isomorphism => {
                let mut pairs = Vec::new();
                let mut all = true;
                for i in 0..ideals.len() {
                    for j in i + 1..ideals.len() {
                        let r = ideal_isomorphism_check(s, &ideals[i], &ideals[j])?;
                        all &= r.isomorphic;
                        pairs.push(json!({
                            "ideals": [i, j],
                            "u": s.name(r.u),
                            "v": s.name(r.v),
                            "orientation": r.orientation,
                            "bijective": r.bijective,
                            "intertwines": r.intertwines,
                            "isomorphic": r.isomorphic,
                        }));
                    }
                }
                push("ideal-isomorphism", all);
                result["isomorphism"] = json!({ "pairs": pairs, "all_isomorphic": all });
            }
            Analysis::Distal => {
                let r = is_group_distal(s, CheckMode::Report)?;
                push("group-iff-unique-idempotent", r.agree);
                result["distal"] = to_value(&r)?;
            }
            Analysis::Periodic => {
                let r = periodic_element_analysis(s)?;
                let periodic: Vec<Value> = r
                    .periodic
                    .iter()
                    .map(|&(p, k)| json!({ "element": s.name(p), "period": k, "idempotent": s.mul(p, p) == p }))
                    .collect();
                result["periodic"] = json!({
                    "elements": periodic,
                    "count": r.count,
                    "common_period": r.common_period,
                    "all_equal": r.all_equal,
                    "count_within_bound": r.count_within_bound,
                    "orbits_are_minimal_ideals": r.orbits_are_minimal_ideals,
                });
            }
            Analysis::Recurrence => {
                let r = recurrent_idempotent_check(s)?;
                push("minimal-idempotents-recurrent", r.minimal_ones_recurrent);
                result["recurrence"] = to_value(&r)?;
            }
            Analysis::Proximal => match maps {
                Some(maps) => {
                    let n = maps.first().map_or(0, Vec::len);
                    let r = proximal_structure(s, n, |e, x, y| maps[e][x] == maps[e][y]);
                    push("unique-ideal-iff-proximal-equivalence", r.consistent);
                    result["proximal"] = to_value(&r)?;
                }
                None => {
                    result["proximal"] =
                        json!({ "unavailable": "no point action for a bare table" })
                }
            },
        }
    }
    Ok(Output {
        result,
        assertions,
        text: Some(s.render()),
        ..Output::default()
    })
}

fn inducibility(m: &CascadeModel, k: usize, horizon: u64, tau: f64) -> CliResult<Output> {
    let h = build_hyper_model(m, k, DEFAULT_BUDGET)?;
    let (maps, checked, names): (Vec<Vec<usize>>, Vec<usize>, Vec<String>) = if m.is_exact() {
        let env = exact_envelope(h.table(), EXACT_BUDGET)?;
        let names = (0..env.len()).map(|i| env.name(i)).collect();
        (env.maps().to_vec(), (0..env.len()).collect(), names)
    } else {
        let env = approx_envelope(&h, &approx_opts(m, horizon, tau))?;
        let mut checked: Vec<usize> = env.find("f^1").into_iter().collect();
        checked.extend(env.limit_indices());
        (env.snapped_maps(&h), checked, env.names())
    };
    let rows: Vec<Value> = checked
        .iter()
        .map(|&i| {
            let r = inducibility_check(&h, &maps, i);
            let ok = r.singletons_ok && r.monotone_ok && r.minimal_ok;
            json!({
                "element": names[i],
                "singletons_ok": r.singletons_ok,
                "monotone_ok": r.monotone_ok,
                "minimal_ok": r.minimal_ok,
                "passed": ok,
                "failures": r.failures,
            })
        })
        .collect();
    let all = rows.iter().all(|r| r["passed"] == json!(true));
    Ok(Output::new(json!({
        "k": k,
        "hyper_points": h.len(),
        "checked": rows.len(),
        "elements": rows,
        "all_passed": all,
    }))
    .assert("inducibility", all))
}

/// Rigidity battery together with identity isolation at the same horizon and
/// tolerance.
fn rigidity_with_isolation(
    m: &CascadeModel,
    horizon: u64,
    tau: f64,
    tuple: usize,
    seed: u64,
) -> CliResult<Value> {
    let r = rigidity_battery(m, horizon, tau, tuple, seed)?;
    let (isolated, witness) = if m.is_exact() {
        let env = exact_envelope(m.table()?, EXACT_BUDGET)?;
        let w = env.identity_witness(m, horizon, tau);
        (w.is_none(), w.map(|n| n as i64))
    } else {
        let env = approx_envelope(m, &isolation_opts(horizon, tau))?;
        let iso = identity_isolated(&env, tau);
        (iso.isolated, iso.witness)
    };
    let mut v = to_value(&r)?;
    v["identity_isolated"] = json!(isolated);
    v["isolation_witness"] = json!(witness);
    v["agrees_with_identity_isolation"] = json!(r.weakly_rigid.holds() == !isolated);
    Ok(v)
}

fn catalog_sweep(
    cfg: &ExperimentConfig,
    check: SweepCheck,
    horizon: u64,
    tau: f64,
    k: usize,
) -> CliResult<Output> {
    let mut rows = Vec::new();
    let mut all = true;
    for entry in catalog_entries() {
        if check == SweepCheck::Theta && entry.kind != "finite-exact" {
            continue;
        }
        let m = load_model(entry.name, &BTreeMap::new())?;
        let row = match check {
            SweepCheck::Rigidity => {
                let v = rigidity_with_isolation(&m, horizon, tau, 3, cfg.seed)?;
                let ok = v["chain_ok"] == json!(true)
                    && v["agrees_with_identity_isolation"] == json!(true);
                all &= ok;
                json!({
                    "model": entry.name,
                    "weakly_rigid": v["weakly_rigid"]["verdict"],
                    "rigid": v["rigid"]["verdict"],
                    "uniformly_rigid": v["uniformly_rigid"]["verdict"],
                    "identity_isolated": v["identity_isolated"],
                    "chain_ok": v["chain_ok"],
                    "agrees": v["agrees_with_identity_isolation"],
                    "passed": ok,
                })
            }
            SweepCheck::Theta => {
                let h = build_hyper_model(&m, k, DEFAULT_BUDGET)?;
                let base = exact_envelope(m.table()?, EXACT_BUDGET)?;
                let hyper = exact_envelope(h.table(), EXACT_BUDGET)?;
                let r = theta_check_exact(&base, &hyper, &h)?;
                let ok = r.well_defined && r.homomorphism_violations.is_empty();
                all &= ok;
                json!({
                    "model": entry.name,
                    "points": m.len(),
                    "hyper_points": h.len(),
                    "base_elements": base.len(),
                    "hyper_elements": hyper.len(),
                    "well_defined": r.well_defined,
                    "violations": r.homomorphism_violations.len(),
                    "passed": ok,
                })
            }
        };
        rows.push(row);
    }
    let name = match check {
        SweepCheck::Rigidity => "rigidity-chain-and-isolation",
        SweepCheck::Theta => "theta-homomorphism",
    };
    Ok(Output::new(json!({ "check": check, "models": rows, "all_passed": all })).assert(name, all))
}

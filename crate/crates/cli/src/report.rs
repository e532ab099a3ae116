//! Report types and emitters.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::{ExperimentConfig, Format};
use crate::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

impl Default for Tool {
    fn default() -> Self {
        Tool {
            name: "ellis",
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepStatus {
    Ok,
    Failed,
    Skipped,
}

/// An invariant the step checks on its own result.
#[derive(Clone, Debug, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
}

/// A config-supplied expectation on the step result.
#[derive(Clone, Debug, Serialize)]
pub struct Expectation {
    pub pointer: String,
    pub expected: Value,
    pub actual: Value,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct StepReport {
    pub index: usize,
    pub op: String,
    pub status: StepStatus,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub result: Value,
    pub assertions: Vec<Assertion>,
    pub expectations: Vec<Expectation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// CSV tables keyed by file suffix.
    #[serde(skip)]
    pub csv: Vec<(String, String)>,
    /// Preformatted text block, e.g. a composition table.
    #[serde(skip)]
    pub text: Option<String>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Summary {
    pub steps: usize,
    pub ok: usize,
    pub failed: usize,
    pub skipped: usize,
    pub errors: usize,
    pub assertion_failures: usize,
    pub expectation_failures: usize,
    pub verdict: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct StepTiming {
    pub index: usize,
    pub op: String,
    pub seconds: f64,
}

/// Wall-clock timings; written beside the report, never inside it.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Timings {
    pub model_seconds: f64,
    pub total_seconds: f64,
    pub steps: Vec<StepTiming>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: Tool,
    pub config: ExperimentConfig,
    pub model: Option<Value>,
    pub steps: Vec<StepReport>,
    pub summary: Summary,
    #[serde(skip)]
    pub timings: Timings,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn step(&self, op: &str) -> Option<&StepReport> {
        self.steps.iter().find(|s| s.op == op)
    }

    pub fn passed(&self) -> bool {
        crate::exit_code(self) == 0
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let name = self.config.name.as_deref().unwrap_or("unnamed");
        let _ = writeln!(
            out,
            "{} report `{}` (schema {}, version {})",
            self.tool.name, name, self.schema_version, self.tool.version
        );
        if let Some(m) = &self.model {
            let _ = writeln!(out, "model: {}", scalars_inline(m));
        }
        for step in &self.steps {
            let status = match step.status {
                StepStatus::Ok => "ok",
                StepStatus::Failed => "FAILED",
                StepStatus::Skipped => "skipped",
            };
            let _ = writeln!(out, "\n[{}] {} ({status})", step.index, step.op);
            if let Some(e) = &step.error {
                let _ = writeln!(out, "  error: {e}");
            }
            if let Value::Object(map) = &step.result {
                for (k, v) in map {
                    if let Some(s) = scalar(v) {
                        let _ = writeln!(out, "  {k}: {s}");
                    }
                }
            }
            if let Some(t) = &step.text {
                out.push('\n');
                for line in t.lines() {
                    let _ = writeln!(out, "  {line}");
                }
            }
            for a in &step.assertions {
                let _ = writeln!(out, "  assert {}: {}", a.name, pass(a.passed));
            }
            for e in &step.expectations {
                let _ = writeln!(
                    out,
                    "  expect {} = {} (got {}): {}",
                    e.pointer,
                    e.expected,
                    e.actual,
                    pass(e.passed)
                );
            }
        }
        let s = &self.summary;
        let _ = writeln!(
            out,
            "\nsummary: {} steps, {} ok, {} failed, {} skipped; {} assertion and {} expectation failures; verdict {}",
            s.steps, s.ok, s.failed, s.skipped, s.assertion_failures, s.expectation_failures, s.verdict
        );
        out
    }
}

fn pass(b: bool) -> &'static str {
    if b {
        "PASS"
    } else {
        "FAIL"
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("null".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(a) if a.len() <= 12 && a.iter().all(|x| !x.is_array() && !x.is_object()) => {
            Some(v.to_string())
        }
        _ => None,
    }
}

fn scalars_inline(v: &Value) -> String {
    match v {
        Value::Object(map) => map
            .iter()
            .filter_map(|(k, v)| scalar(v).map(|s| format!("{k}={s}")))
            .collect::<Vec<_>>()
            .join(" "),
        other => other.to_string(),
    }
}

fn write(path: PathBuf, body: &str, written: &mut Vec<PathBuf>) -> CliResult<()> {
    std::fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Writes the report into `dir` in each requested format. JSON output is
/// `report.json` plus `timings.json`; CSV tables are named after their step.
pub fn emit_report(report: &Report, dir: &Path, formats: &[Format]) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut formats = formats.to_vec();
    formats.sort();
    formats.dedup();
    let mut written = Vec::new();
    for f in formats {
        match f {
            Format::Json => {
                write(dir.join("report.json"), &report.to_json(), &mut written)?;
                let mut t = serde_json::to_string_pretty(&report.timings)?;
                t.push('\n');
                write(dir.join("timings.json"), &t, &mut written)?;
            }
            Format::Text => write(dir.join("report.txt"), &report.render_text(), &mut written)?,
            Format::Csv => {
                for step in &report.steps {
                    for (suffix, body) in &step.csv {
                        let mut name = format!("step{:02}-{}", step.index, step.op);
                        if !suffix.is_empty() {
                            name.push('-');
                            name.push_str(suffix);
                        }
                        name.push_str(".csv");
                        write(dir.join(name), body, &mut written)?;
                    }
                }
            }
        }
    }
    Ok(written)
}

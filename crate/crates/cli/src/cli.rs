//! Command-line front end. Every subcommand builds an [`ExperimentConfig`] and
//! runs it, so ad-hoc invocations produce the same reports as config files.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{
    Analysis, EnvelopeMode, ExperimentConfig, Format, ModelSpec, Op, OutputSpec, ParamValue,
    ShiftRef, Step, ALL_ANALYSES,
};
use crate::{emit_report, exit_code, list_catalog, run_experiment, CliError, CliResult, Report};

#[derive(Debug, Parser)]
#[command(
    name = "ellis",
    version,
    about = "Enveloping semigroups of finite and sampled cascades"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write reports into this directory instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; repeat for several.
    #[arg(long, global = true, value_enum)]
    pub format: Vec<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List catalog models with their parameters.
    Catalog,
    /// Run an experiment config (TOML).
    Run { config: PathBuf },
    /// Enveloping semigroup of a catalog model, with its algebra.
    Envelope {
        model: String,
        #[arg(long = "param", value_parser = parse_kv)]
        params: Vec<(String, String)>,
        #[arg(long, default_value_t = 60)]
        horizon: u64,
        #[arg(long, default_value_t = 1e-3)]
        tau: f64,
        #[arg(long)]
        two_sided: bool,
        #[arg(long, default_value_t = 256)]
        max_elements: usize,
        /// Include limit element values at every sample point.
        #[arg(long)]
        values: bool,
    },
    /// Analyse a semigroup given as a JSON composition table.
    Semigroup {
        table: PathBuf,
        /// Analyses to run; `all` runs every analysis.
        #[arg(required = true)]
        analyses: Vec<String>,
    },
    /// Symbolic operation on a shift given by JSON file or preset name.
    Shift {
        spec: String,
        op: ShiftOp,
        #[arg(long, default_value_t = 20)]
        n_max: usize,
    },
    /// Dynamical property check on a catalog model.
    Props {
        model: String,
        property: Property,
        #[arg(long = "param", value_parser = parse_kv)]
        params: Vec<(String, String)>,
        #[arg(long, default_value_t = 200)]
        horizon: u64,
        #[arg(long, default_value_t = 0.05)]
        tau: f64,
        /// Subset cardinality for hyperspace properties.
        #[arg(long, default_value_t = 2)]
        max_card: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ShiftOp {
    Entropy,
    LanguageCounts,
    Classify,
    PeriodicSpectrum,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Property {
    Transitivity,
    StrongTransitivity,
    Equicontinuity,
    HyperEquicontinuity,
    HyperModel,
    Rigidity,
    Recurrence,
    Wap,
    DistalSemiflow,
    IdentityIsolated,
    Stabilization,
}

fn parse_kv(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .ok_or_else(|| format!("expected key=value, got `{s}`"))
}

fn model_spec(name: &str, params: &[(String, String)]) -> Option<ModelSpec> {
    Some(ModelSpec {
        catalog: Some(name.to_string()),
        file: None,
        params: params
            .iter()
            .map(|(k, v)| (k.clone(), ParamValue::Text(v.clone())))
            .collect(),
    })
}

fn steps(ops: Vec<Op>) -> Vec<Step> {
    ops.into_iter()
        .map(|op| Step {
            op,
            expect: BTreeMap::new(),
        })
        .collect()
}

fn adhoc(name: &str, model: Option<ModelSpec>, ops: Vec<Op>) -> ExperimentConfig {
    ExperimentConfig {
        name: Some(name.to_string()),
        seed: 0,
        model,
        output: OutputSpec::default(),
        pipeline: steps(ops),
        base_dir: None,
    }
}

fn parse_analyses(names: &[String]) -> CliResult<Vec<Analysis>> {
    let mut out = Vec::new();
    for n in names {
        if n == "all" {
            out.extend(ALL_ANALYSES);
            continue;
        }
        let a: Analysis = serde_json::from_value(serde_json::Value::String(n.clone()))
            .map_err(|_| CliError::Config(format!("unknown analysis `{n}`")))?;
        out.push(a);
    }
    Ok(out)
}

fn shift_ref(spec: &str) -> ShiftRef {
    if spec.ends_with(".json") {
        ShiftRef::File { file: spec.into() }
    } else {
        ShiftRef::Preset(spec.to_string())
    }
}

fn property_op(p: Property, horizon: u64, tau: f64, k: usize) -> Vec<Op> {
    let cover = ellis_core::properties::CoverSpec::Auto;
    match p {
        Property::Transitivity => vec![Op::Transitivity {
            horizon,
            cover,
            run_length: 10,
        }],
        Property::StrongTransitivity => vec![Op::StrongTransitivity { horizon, cover }],
        Property::Equicontinuity => vec![Op::Equicontinuity {
            epsilons: vec![0.25, 0.5],
            horizon,
        }],
        Property::HyperEquicontinuity => vec![Op::HyperEquicontinuity {
            k,
            epsilons: vec![0.25, 0.5],
            horizon,
        }],
        Property::HyperModel => vec![Op::HyperModel { k }],
        Property::Rigidity => vec![Op::Rigidity {
            horizon,
            tau,
            tuple_size: 3,
        }],
        Property::Recurrence => vec![Op::Recurrence { horizon, tau }],
        Property::Wap => vec![
            Op::Envelope {
                horizon,
                tau: 1e-3,
                two_sided: true,
                max_elements: 256,
                mode: EnvelopeMode::Auto,
                include_values: false,
            },
            Op::Wap {
                epsilons: vec![0.25, 0.5],
            },
        ],
        Property::DistalSemiflow => vec![Op::DistalSemiflow {}],
        Property::IdentityIsolated => vec![Op::IdentityIsolated { horizon, tau }],
        Property::Stabilization => vec![Op::Stabilization {
            horizons: vec![100, 500, 1000, 2000],
            tau,
            two_sided: false,
        }],
    }
}

fn config_for(command: &Command) -> CliResult<Option<ExperimentConfig>> {
    Ok(Some(match command {
        Command::Catalog => return Ok(None),
        Command::Run { config } => ExperimentConfig::load(config)?,
        Command::Envelope {
            model,
            params,
            horizon,
            tau,
            two_sided,
            max_elements,
            values,
        } => adhoc(
            "envelope",
            model_spec(model, params),
            vec![
                Op::Envelope {
                    horizon: *horizon,
                    tau: *tau,
                    two_sided: *two_sided,
                    max_elements: *max_elements,
                    mode: EnvelopeMode::Auto,
                    include_values: *values,
                },
                Op::Semigroup {
                    analyses: ALL_ANALYSES.to_vec(),
                    table_file: None,
                },
            ],
        ),
        Command::Semigroup { table, analyses } => adhoc(
            "semigroup",
            None,
            vec![Op::Semigroup {
                analyses: parse_analyses(analyses)?,
                table_file: Some(table.clone()),
            }],
        ),
        Command::Shift { spec, op, n_max } => {
            let shift = shift_ref(spec);
            let n_max = *n_max;
            let op = match op {
                ShiftOp::Entropy => Op::Entropy { shift, n_max },
                ShiftOp::LanguageCounts => Op::LanguageCounts { shift, n_max },
                ShiftOp::Classify => Op::Classify { shift },
                ShiftOp::PeriodicSpectrum => Op::PeriodicSpectrum { shift, n_max },
            };
            adhoc("shift", None, vec![op])
        }
        Command::Props {
            model,
            property,
            params,
            horizon,
            tau,
            max_card,
        } => adhoc(
            "props",
            model_spec(model, params),
            property_op(*property, *horizon, *tau, *max_card),
        ),
    }))
}

fn print_report(report: &Report, formats: &[Format]) {
    for f in formats {
        match f {
            Format::Json => print!("{}", report.to_json()),
            Format::Text => print!("{}", report.render_text()),
            Format::Csv => {
                for step in &report.steps {
                    for (suffix, body) in &step.csv {
                        println!("# step {} {} {suffix}", step.index, step.op);
                        print!("{body}");
                    }
                }
            }
        }
    }
}

fn run(cli: &Cli) -> CliResult<i32> {
    let Some(cfg) = config_for(&cli.command)? else {
        let rows = list_catalog();
        if cli.format.contains(&Format::Json) {
            println!("{}", serde_json::to_string_pretty(&rows)?);
        } else {
            for e in rows.as_array().into_iter().flatten() {
                println!(
                    "{:<28} {:<13} {}",
                    e["name"].as_str().unwrap_or(""),
                    e["kind"].as_str().unwrap_or(""),
                    e["realizes"].as_str().unwrap_or("")
                );
                for p in e["params"].as_array().into_iter().flatten() {
                    println!(
                        "    --param {}={:<8} {}",
                        p["name"].as_str().unwrap_or(""),
                        p["default"].as_str().unwrap_or(""),
                        p["help"].as_str().unwrap_or("")
                    );
                }
            }
        }
        return Ok(0);
    };
    let report = run_experiment(&cfg)?;
    let formats = if cli.format.is_empty() {
        match &cli.command {
            Command::Run { .. } => cfg.output.formats.clone(),
            _ => vec![Format::Text],
        }
    } else {
        cli.format.clone()
    };
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(|d| cfg.resolve_path(d)));
    match dir {
        Some(dir) => {
            for path in emit_report(&report, &dir, &formats)? {
                eprintln!("wrote {}", path.display());
            }
            eprintln!("verdict: {}", report.summary.verdict);
        }
        None => print_report(&report, &formats),
    }
    Ok(exit_code(&report))
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

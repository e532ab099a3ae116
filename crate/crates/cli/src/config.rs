//! Declarative experiment configs (TOML).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ellis_core::properties::{CoverSpec, OpenSet};
use ellis_core::symbolic::{ShiftDefinition, SlidingBlockCode, Subshift};
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub pipeline: Vec<Step>,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default)]
    pub catalog: Option<String>,
    /// Exported model JSON (finite-exact models only).
    #[serde(default)]
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub params: BTreeMap<String, ParamValue>,
}

/// Catalog parameters may be written as TOML strings, numbers or booleans.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl ParamValue {
    pub fn as_param(&self) -> String {
        match self {
            ParamValue::Int(i) => i.to_string(),
            ParamValue::Float(f) => f.to_string(),
            ParamValue::Bool(b) => b.to_string(),
            ParamValue::Text(s) => s.clone(),
        }
    }
}

impl ModelSpec {
    pub fn params(&self) -> BTreeMap<String, String> {
        self.params
            .iter()
            .map(|(k, v)| (k.clone(), v.as_param()))
            .collect()
    }
}

#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: None,
            formats: default_formats(),
        }
    }
}

fn default_formats() -> Vec<Format> {
    vec![Format::Json]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "serde_json::Value")]
pub struct Step {
    #[serde(flatten)]
    pub op: Op,
    /// JSON pointer into the step result mapped to the expected value.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub expect: BTreeMap<String, serde_json::Value>,
}

// Flattened enums ignore `deny_unknown_fields`, so the operation is
// deserialized separately from the remaining keys.
impl TryFrom<serde_json::Value> for Step {
    type Error = String;

    fn try_from(mut value: serde_json::Value) -> Result<Self, String> {
        let map = value
            .as_object_mut()
            .ok_or("pipeline step must be a table")?;
        let expect = match map.remove("expect") {
            Some(e) => serde_json::from_value(e).map_err(|e| format!("expect: {e}"))?,
            None => BTreeMap::new(),
        };
        let op = serde_json::from_value(value).map_err(|e| e.to_string())?;
        Ok(Step { op, expect })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvelopeMode {
    /// Exact for finite-exact models, approximate otherwise.
    #[default]
    Auto,
    Exact,
    Approx,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    Idempotents,
    Ideals,
    Kernel,
    Isomorphism,
    Distal,
    Periodic,
    Recurrence,
    Proximal,
}

pub const ALL_ANALYSES: [Analysis; 8] = [
    Analysis::Idempotents,
    Analysis::Ideals,
    Analysis::Kernel,
    Analysis::Isomorphism,
    Analysis::Distal,
    Analysis::Periodic,
    Analysis::Recurrence,
    Analysis::Proximal,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepCheck {
    /// Rigidity chain and agreement of weak rigidity with identity isolation.
    Rigidity,
    /// Theta homomorphism check on finite-exact models.
    Theta,
}

/// A subshift given by preset name (`golden-mean`, `even`, `full-N`), inline
/// definition, or JSON file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShiftRef {
    Preset(String),
    File { file: PathBuf },
    Inline(ShiftDefinition),
}

impl ShiftRef {
    pub fn resolve(&self, cfg: &ExperimentConfig) -> CliResult<Subshift> {
        match self {
            ShiftRef::Preset(name) => match name.as_str() {
                "golden-mean" => Ok(Subshift::golden_mean()),
                "even" => Ok(Subshift::even()),
                other => match other.strip_prefix("full-").map(str::parse::<usize>) {
                    Some(Ok(k)) if (1..=64).contains(&k) => Ok(Subshift::full(k)),
                    _ => Err(CliError::Config(format!("unknown shift preset `{other}`"))),
                },
            },
            ShiftRef::File { file } => {
                let file = cfg.resolve_path(file);
                let raw = std::fs::read_to_string(&file).map_err(|e| CliError::io(&file, e))?;
                let def: ShiftDefinition = serde_json::from_str(&raw)?;
                Ok(Subshift::new(def)?)
            }
            ShiftRef::Inline(def) => Ok(Subshift::new(def.clone())?),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CodeRef {
    Preset(String),
    Inline(SlidingBlockCode),
}

impl CodeRef {
    pub fn resolve(&self) -> CliResult<SlidingBlockCode> {
        match self {
            CodeRef::Preset(name) if name == "golden-to-even" => {
                Ok(SlidingBlockCode::golden_to_even())
            }
            CodeRef::Preset(name) => Err(CliError::Config(format!("unknown block code `{name}`"))),
            CodeRef::Inline(code) => Ok(code.clone()),
        }
    }
}

fn d_horizon() -> u64 {
    60
}
fn d_tau() -> f64 {
    1e-3
}
fn d_true() -> bool {
    true
}
fn d_max_elements() -> usize {
    256
}
fn d_analyses() -> Vec<Analysis> {
    ALL_ANALYSES.to_vec()
}
fn d_powers() -> Vec<usize> {
    vec![2, 3]
}
fn d_k() -> usize {
    2
}
fn d_n_max() -> usize {
    20
}
fn d_cover() -> CoverSpec {
    CoverSpec::Auto
}
fn d_run() -> u64 {
    10
}
fn d_eps() -> Vec<f64> {
    vec![0.25, 0.5]
}
fn d_tuple() -> usize {
    3
}
fn d_models() -> usize {
    500
}
fn d_points() -> usize {
    8
}
fn d_horizons() -> Vec<u64> {
    vec![100, 500, 1000, 2000]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Op {
    /// Model summary, or the full export for finite-exact models.
    ModelInfo {},
    Orbit {
        point: usize,
        #[serde(default)]
        from: i64,
        to: i64,
    },
    /// Hyperpoints and induced-map table of the hyperspace of subsets of size at most `k`.
    HyperModel {
        #[serde(default = "d_k")]
        k: usize,
    },
    Envelope {
        #[serde(default = "d_horizon")]
        horizon: u64,
        #[serde(default = "d_tau")]
        tau: f64,
        #[serde(default = "d_true")]
        two_sided: bool,
        /// Element budget of the approximate closure.
        #[serde(default = "d_max_elements")]
        max_elements: usize,
        #[serde(default)]
        mode: EnvelopeMode,
        /// Include limit element values (one-dimensional models only).
        #[serde(default)]
        include_values: bool,
    },
    /// Algebra of the last envelope, or of a semigroup table file.
    Semigroup {
        #[serde(default = "d_analyses")]
        analyses: Vec<Analysis>,
        #[serde(default)]
        table_file: Option<PathBuf>,
    },
    PowerDecomposition {
        #[serde(default = "d_powers")]
        n: Vec<usize>,
    },
    Theta {
        #[serde(default = "d_k")]
        k: usize,
        #[serde(default = "d_horizon")]
        horizon: u64,
        #[serde(default = "d_tau")]
        tau: f64,
    },
    Inducibility {
        #[serde(default = "d_k")]
        k: usize,
        #[serde(default = "d_horizon")]
        horizon: u64,
        #[serde(default = "d_tau")]
        tau: f64,
    },
    Entropy {
        shift: ShiftRef,
        #[serde(default = "d_n_max")]
        n_max: usize,
    },
    LanguageCounts {
        shift: ShiftRef,
        #[serde(default = "d_n_max")]
        n_max: usize,
    },
    Classify {
        shift: ShiftRef,
    },
    PeriodicSpectrum {
        shift: ShiftRef,
        #[serde(default = "d_n_max")]
        n_max: usize,
    },
    Boyle {
        x: ShiftRef,
        y: ShiftRef,
        #[serde(default = "d_n_max")]
        n_max: usize,
    },
    Factor {
        code: CodeRef,
        domain: ShiftRef,
        codomain: ShiftRef,
        n: usize,
    },
    HittingSet {
        u: OpenSet,
        v: OpenSet,
        #[serde(default = "d_horizon")]
        horizon: u64,
    },
    Transitivity {
        #[serde(default = "d_horizon")]
        horizon: u64,
        #[serde(default = "d_cover")]
        cover: CoverSpec,
        #[serde(default = "d_run")]
        run_length: u64,
    },
    StrongTransitivity {
        #[serde(default = "d_horizon")]
        horizon: u64,
        #[serde(default = "d_cover")]
        cover: CoverSpec,
    },
    Equicontinuity {
        #[serde(default = "d_eps")]
        epsilons: Vec<f64>,
        #[serde(default = "d_horizon")]
        horizon: u64,
    },
    HyperEquicontinuity {
        #[serde(default = "d_k")]
        k: usize,
        #[serde(default = "d_eps")]
        epsilons: Vec<f64>,
        #[serde(default = "d_horizon")]
        horizon: u64,
    },
    Rigidity {
        #[serde(default = "d_horizon")]
        horizon: u64,
        tau: f64,
        #[serde(default = "d_tuple")]
        tuple_size: usize,
    },
    Recurrence {
        #[serde(default = "d_horizon")]
        horizon: u64,
        tau: f64,
    },
    /// Continuity scan of the last envelope's limit elements.
    Wap {
        #[serde(default = "d_eps")]
        epsilons: Vec<f64>,
    },
    DistalSemiflow {},
    IdentityIsolated {
        #[serde(default = "d_horizon")]
        horizon: u64,
        tau: f64,
    },
    Stabilization {
        #[serde(default = "d_horizons")]
        horizons: Vec<u64>,
        tau: f64,
        #[serde(default)]
        two_sided: bool,
    },
    TheoremCorpus {
        #[serde(default = "d_models")]
        models: usize,
        #[serde(default = "d_points")]
        max_points: usize,
    },
    /// Runs a check on every catalog model with default parameters.
    CatalogSweep {
        check: SweepCheck,
        #[serde(default = "d_horizon")]
        horizon: u64,
        #[serde(default = "d_tau")]
        tau: f64,
        #[serde(default = "d_k")]
        k: usize,
    },
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::ModelInfo {} => "model-info",
            Op::Orbit { .. } => "orbit",
            Op::HyperModel { .. } => "hyper-model",
            Op::Envelope { .. } => "envelope",
            Op::Semigroup { .. } => "semigroup",
            Op::PowerDecomposition { .. } => "power-decomposition",
            Op::Theta { .. } => "theta",
            Op::Inducibility { .. } => "inducibility",
            Op::Entropy { .. } => "entropy",
            Op::LanguageCounts { .. } => "language-counts",
            Op::Classify { .. } => "classify",
            Op::PeriodicSpectrum { .. } => "periodic-spectrum",
            Op::Boyle { .. } => "boyle",
            Op::Factor { .. } => "factor",
            Op::HittingSet { .. } => "hitting-set",
            Op::Transitivity { .. } => "transitivity",
            Op::StrongTransitivity { .. } => "strong-transitivity",
            Op::Equicontinuity { .. } => "equicontinuity",
            Op::HyperEquicontinuity { .. } => "hyper-equicontinuity",
            Op::Rigidity { .. } => "rigidity",
            Op::Recurrence { .. } => "recurrence",
            Op::Wap { .. } => "wap",
            Op::DistalSemiflow {} => "distal-semiflow",
            Op::IdentityIsolated { .. } => "identity-isolated",
            Op::Stabilization { .. } => "stabilization",
            Op::TheoremCorpus { .. } => "theorem-corpus",
            Op::CatalogSweep { .. } => "catalog-sweep",
        }
    }

    pub fn needs_model(&self) -> bool {
        !matches!(
            self,
            Op::Entropy { .. }
                | Op::LanguageCounts { .. }
                | Op::Classify { .. }
                | Op::PeriodicSpectrum { .. }
                | Op::Boyle { .. }
                | Op::Factor { .. }
                | Op::TheoremCorpus { .. }
                | Op::CatalogSweep { .. }
                | Op::Semigroup {
                    table_file: Some(_),
                    ..
                }
        )
    }

    pub fn needs_envelope(&self) -> bool {
        matches!(
            self,
            Op::Semigroup {
                table_file: None,
                ..
            } | Op::Wap { .. }
        )
    }
}

impl ExperimentConfig {
    pub fn from_toml(raw: &str) -> CliResult<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(raw).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_toml(&raw)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    /// Resolves a path relative to the config file's directory.
    pub fn resolve_path(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(base) if p.is_relative() => base.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if let Some(m) = &self.model {
            if m.catalog.is_some() == m.file.is_some() {
                return Err(CliError::Config(
                    "model needs exactly one of `catalog` or `file`".into(),
                ));
            }
        }
        for (i, step) in self.pipeline.iter().enumerate() {
            if step.op.needs_model() && self.model.is_none() {
                return Err(CliError::Config(format!(
                    "step {i} (`{}`) needs a model",
                    step.op.name()
                )));
            }
            if step.op.needs_envelope()
                && !self.pipeline[..i]
                    .iter()
                    .any(|s| matches!(s.op, Op::Envelope { .. }))
            {
                return Err(CliError::Config(format!(
                    "step {i} (`{}`) needs an earlier envelope step",
                    step.op.name()
                )));
            }
            for key in step.expect.keys() {
                if !key.starts_with('/') {
                    return Err(CliError::Config(format!(
                        "expectation `{key}` must be a JSON pointer"
                    )));
                }
            }
        }
        Ok(())
    }
}

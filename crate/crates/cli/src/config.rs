use std::path::{Path, PathBuf};

use rwce::maw::WidthRule;
use rwce::mc::TheoremId;
use rwce::walk::VertexSet;
use rwce::{EnvironmentSpec, TopologySpec, Vertex};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

/// Format tag written into every run summary.
pub const SUMMARY_FORMAT: &str = "rwce-run-summary/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case")]
pub enum Operation {
    Simulate,
    Classify,
    CheckBound,
    MawDrift,
    Tanpoints,
    MonitorPotential,
}

impl Operation {
    pub fn as_str(self) -> &'static str {
        match self {
            Operation::Simulate => "simulate",
            Operation::Classify => "classify",
            Operation::CheckBound => "check-bound",
            Operation::MawDrift => "maw-drift",
            Operation::Tanpoints => "tanpoints",
            Operation::MonitorPotential => "monitor-potential",
        }
    }
}

/// Where a tree potential's unit current flow comes from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum FlowSource {
    /// Conductances right after the arrival at time 0.
    #[default]
    Initial,
    Lower,
    Upper,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    LineToZero,
    LineToInfinity {
        horizon: i64,
        #[serde(default)]
        analytic_tail: bool,
    },
    TreeFlowVoltage {
        level: u32,
        #[serde(default)]
        flow_from: FlowSource,
    },
}

/// Operation-specific parameters; each operation reads only its own keys.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// simulate, check-bound, monitor-potential: start vertex (default: the topology's origin).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vertex>,
    /// simulate: keep every `thin`-th recorded row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thin: Option<u64>,
    /// classify: also estimate the probability of hitting `target` before `stop`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<VertexSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<VertexSet>,
    /// check-bound: name of a shipped scenario; replaces theorem, level, topology and environment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theorem: Option<TheoremId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<u32>,
    /// maw-drift, tanpoints: walk lengths.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_values: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width_rule: Option<WidthRule>,
    /// monitor-potential.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialConfig>,
}

/// A complete experiment description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must match the operation named on the command line when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operation: Option<Operation>,
    #[serde(default = "line_n")]
    pub topology: TopologySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub environment: Option<EnvironmentSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    /// Master seed; trial `i` runs with a seed derived from it and `i`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub params: Params,
}

fn line_n() -> TopologySpec {
    TopologySpec::LineN
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_error(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Parses a config, reporting the path of the offending key on failure.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            config_error(format!("invalid config: {inner}"))
        } else {
            config_error(format!("invalid config at `{path}`: {inner}"))
        }
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

impl ExperimentConfig {
    pub fn environment(&self) -> Result<&EnvironmentSpec, ConfigError> {
        self.environment
            .as_ref()
            .ok_or_else(|| config_error("missing key `environment`"))
    }

    pub fn steps(&self) -> Result<u64, ConfigError> {
        self.steps.ok_or_else(|| config_error("missing key `steps`"))
    }
}

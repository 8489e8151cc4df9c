//! Versioned TOML scenario files. Unknown keys anywhere are errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use downsample::learners::{Constants, Mode};
use downsample::testers::TesterConstants;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

pub const CONFIG_VERSION: u32 = 1;

/// A configuration problem; maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub version: u32,
    #[serde(default)]
    pub description: String,
    #[serde(rename = "scenario")]
    pub scenarios: Vec<Scenario>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    WalshValidate,
    TailNoise,
    GridUniformity,
    CoarseDistance,
    Bbs,
    Test,
    Learn,
    Tolerant,
    Determinism,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub kind: Kind,
    pub seed: u64,
    pub trials: usize,
    /// Minimum pass fraction per check; unlisted checks must pass every row.
    #[serde(default)]
    pub require: BTreeMap<String, f64>,
    /// Wall-clock budget for the whole scenario.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_seconds: Option<f64>,
    #[serde(default)]
    pub params: toml::Table,
}

impl Scenario {
    pub fn params<T: DeserializeOwned>(&self) -> Result<T, ConfigError> {
        toml::Value::Table(self.params.clone())
            .try_into()
            .map_err(|e| ConfigError(format!("scenario '{}': params: {e}", self.name)))
    }

    pub fn required(&self, check: &str) -> f64 {
        self.require.get(check).copied().unwrap_or(1.0)
    }
}

/// A loaded config and the directory its relative paths resolve against.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub path: PathBuf,
    pub base: PathBuf,
    pub config: Config,
}

pub fn parse(text: &str, origin: &str) -> Result<Config, ConfigError> {
    // toml errors carry line and column
    let cfg: Config = toml::from_str(text).map_err(|e| ConfigError(format!("{origin}: {e}")))?;
    if cfg.version != CONFIG_VERSION {
        return Err(ConfigError(format!(
            "{origin}: unsupported config version {} (expected {CONFIG_VERSION})",
            cfg.version
        )));
    }
    if cfg.scenarios.is_empty() {
        return Err(ConfigError(format!("{origin}: no [[scenario]] tables")));
    }
    let mut names = std::collections::BTreeSet::new();
    for s in &cfg.scenarios {
        if !names.insert(&s.name) {
            return Err(ConfigError(format!("{origin}: duplicate scenario name '{}'", s.name)));
        }
        if s.trials == 0 {
            return Err(ConfigError(format!("{origin}: scenario '{}' needs trials >= 1", s.name)));
        }
        for (check, frac) in &s.require {
            if !(0.0..=1.0).contains(frac) {
                return Err(ConfigError(format!("{origin}: require.{check} = {frac} is not a fraction")));
            }
        }
    }
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<Loaded, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let config = parse(&text, &path.display().to_string())?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded {
        path: path.to_path_buf(),
        base,
        config,
    })
}

fn one() -> usize {
    1
}

fn default_fail() -> f64 {
    1.0 / 6.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalshParams {
    pub n: usize,
    pub dims: Vec<usize>,
    pub tolerance: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
}

fn default_rho() -> f64 {
    0.3
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailParams {
    /// `(n, d)` shapes; one row per shape and delta.
    pub shapes: Vec<[usize; 2]>,
    pub deltas: Vec<f64>,
    pub factor: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    pub dist: String,
    pub r: usize,
    /// TV target; a trial passes when the TV is at most this.
    pub tv: f64,
    #[serde(default = "default_fail")]
    pub fail: f64,
    pub grid_const: f64,
    #[serde(default)]
    pub grid_m: Option<usize>,
    #[serde(default = "default_mc")]
    pub mc_samples: usize,
}

fn default_mc() -> usize {
    100_000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoarseParams {
    pub dist: String,
    pub target: String,
    pub r: usize,
    pub grid_m: usize,
    pub eval_samples: usize,
    #[serde(default = "default_probes")]
    pub probes: usize,
}

fn default_probes() -> usize {
    64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountMethodName {
    Corner,
    Analytic,
    Probe,
    /// Probe count of a composition against the sum of its parts.
    Composition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionName {
    Uniform,
    Induced,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BbsParams {
    pub target: String,
    pub d: usize,
    pub r: usize,
    pub class: String,
    #[serde(default = "one")]
    pub k: usize,
    pub method: CountMethodName,
    pub partition: PartitionName,
    #[serde(default)]
    pub dist: Option<String>,
    #[serde(default)]
    pub grid_m: Option<usize>,
    #[serde(default = "default_probes")]
    pub probes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TesterName {
    Diagonal,
    GridMonotonicity,
    DfMonotonicity,
    Convex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expect {
    Accept,
    Reject,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestParams {
    pub tester: TesterName,
    pub target: String,
    pub eps: f64,
    pub expect: Expect,
    /// Grid side for the grid testers; the target is read at cell centres of `[0,1]^d`.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub dist: Option<String>,
    #[serde(default)]
    pub grid_m: Option<usize>,
    #[serde(default)]
    pub queries: Option<usize>,
    #[serde(default)]
    pub constants: TesterConstants,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnParams {
    pub class: String,
    #[serde(default = "one")]
    pub k: usize,
    pub eps: f64,
    pub dist: String,
    pub target: String,
    pub noise: f64,
    pub eval_samples: usize,
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub finite_mode: Option<bool>,
    #[serde(default)]
    pub r: Option<usize>,
    #[serde(default)]
    pub t: Option<usize>,
    #[serde(default)]
    pub grid_m: Option<usize>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub rounding_samples: Option<usize>,
    #[serde(default)]
    pub tag_count: Option<usize>,
    #[serde(default)]
    pub l1_iterations: Option<usize>,
    #[serde(default)]
    pub rounding_check: bool,
    #[serde(default)]
    pub constants: Constants,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TolerantTarget {
    /// Uniformly random table.
    Random,
    /// A random cover member.
    Member,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerantParams {
    pub cover: String,
    pub r: usize,
    #[serde(default = "two")]
    pub d: usize,
    /// Accuracy demanded of the distance estimate.
    pub eps: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub target: TolerantTarget,
    #[serde(default)]
    pub samples: Option<usize>,
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeterminismParams {
    /// Configs to run twice, relative to this file.
    pub configs: Vec<String>,
    #[serde(default)]
    pub scenarios: Option<Vec<String>>,
}

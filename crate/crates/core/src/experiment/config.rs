//! TOML run configuration with exhaustive key validation.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::env::{EnvConfig, SimConfig};
use crate::error::{Error, Result};
use crate::learner::{AgentConfig, NEURAL_DEFAULT_LR, VQC_DEFAULT_LR};
use crate::radio::RadioConfig;
use crate::traffic::TrafficConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Vqc,
    Neural,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Vqc => "vqc",
            Backend::Neural => "neural",
        })
    }
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vqc" => Ok(Backend::Vqc),
            "neural" => Ok(Backend::Neural),
            other => Err(Error::config("backend", format!("expected `vqc` or `neural`, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Number of background vehicles.
    NBackground,
    DesiredVelocity,
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::NBackground => "n_background",
            SweepParam::DesiredVelocity => "desired_velocity",
        })
    }
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n_background" => Ok(SweepParam::NBackground),
            "desired_velocity" => Ok(SweepParam::DesiredVelocity),
            other => Err(Error::config(
                "sweep.param",
                format!("expected `n_background` or `desired_velocity`, got `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    #[serde(default = "one")]
    pub repetitions: usize,
    /// Reuse the base seed for every run instead of deriving child seeds.
    #[serde(default)]
    pub fixed_seed: bool,
}

fn one() -> usize {
    1
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::config("sweep.values", "must not be empty"));
        }
        if self.repetitions == 0 {
            return Err(Error::config("sweep.repetitions", "must be >= 1"));
        }
        for v in &self.values {
            let ok = match self.param {
                SweepParam::NBackground => *v >= 0.0 && v.fract() == 0.0 && *v <= 1e6,
                SweepParam::DesiredVelocity => v.is_finite() && *v > 0.0,
            };
            if !ok {
                return Err(Error::config("sweep.values", format!("{v} is not a valid {}", self.param)));
            }
        }
        Ok(())
    }

    /// Writes value `value` of the swept parameter into `cfg`.
    pub fn apply(&self, cfg: &mut TrainConfig, value: f64) {
        match self.param {
            SweepParam::NBackground => cfg.env.n_background = value as usize,
            SweepParam::DesiredVelocity => cfg.env.desired_velocity = value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub backend: Backend,
    pub episodes: usize,
    /// Greedy episodes per run in sweeps and the default for `eval`.
    pub eval_episodes: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Fill the `wallclock_ms` column. Timing makes outputs non-reproducible.
    pub record_wallclock: bool,
    pub env: EnvConfig,
    pub agent: AgentConfig,
    pub traffic: TrafficConfig,
    pub radio: RadioConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Vqc,
            episodes: 200,
            eval_episodes: 10,
            seed: 0,
            output_dir: PathBuf::from("runs"),
            record_wallclock: false,
            env: EnvConfig::default(),
            agent: AgentConfig::default(),
            traffic: TrafficConfig::default(),
            radio: RadioConfig::default(),
            sweep: None,
        }
    }
}

impl TrainConfig {
    /// Fills backend-dependent defaults and checks every invariant.
    pub fn resolve(mut self) -> Result<Self> {
        if self.agent.lr.is_none() {
            self.agent.lr = Some(match self.backend {
                Backend::Vqc => VQC_DEFAULT_LR,
                Backend::Neural => NEURAL_DEFAULT_LR,
            });
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seed > i64::MAX as u64 {
            return Err(Error::config("seed", "must fit in a signed 64-bit integer"));
        }
        self.sim().validate()?;
        self.agent.validate()?;
        if let Some(s) = &self.sweep {
            s.validate()?;
        }
        Ok(())
    }

    pub fn lr(&self) -> f64 {
        self.agent.lr.unwrap_or(match self.backend {
            Backend::Vqc => VQC_DEFAULT_LR,
            Backend::Neural => NEURAL_DEFAULT_LR,
        })
    }

    pub fn sim(&self) -> SimConfig {
        SimConfig { env: self.env.clone(), traffic: self.traffic.clone(), radio: self.radio.clone() }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::config("<config>", e.to_string()))
    }

    /// Parses without filling backend defaults or validating, so that
    /// command-line overrides can be applied before [`TrainConfig::resolve`].
    pub fn parse(src: &str) -> Result<Self> {
        toml::from_str(src).map_err(|e| {
            let key = e.span().map(|s| key_at(src, s.start)).unwrap_or_else(|| "<config>".into());
            Error::config(key, e.message().to_string())
        })
    }

    pub fn from_toml(src: &str) -> Result<Self> {
        Self::parse(src)?.resolve()
    }

    /// Writes the resolved configuration next to run outputs.
    pub fn write_echo(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(ECHO_FILE);
        std::fs::write(&path, self.to_toml()?).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

pub const ECHO_FILE: &str = "config.resolved.toml";

/// Dotted key of the assignment containing byte `offset`, e.g. `agent.gamma`.
fn key_at(src: &str, offset: usize) -> String {
    let offset = offset.min(src.len());
    let line_start = src[..offset].rfind('\n').map_or(0, |i| i + 1);
    let line_end = src[offset..].find('\n').map_or(src.len(), |i| offset + i);
    let line = src[line_start..line_end].trim();
    let table = src[..line_start]
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('[') && l.ends_with(']'))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').trim().to_string());
    if line.starts_with('[') {
        return line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
    }
    let key = line.split('=').next().unwrap_or(line).trim().to_string();
    match table {
        Some(t) if !key.is_empty() => format!("{t}.{key}"),
        _ => key,
    }
}

/// Reads and resolves a configuration file. An empty file yields defaults.
pub fn load_config(path: &Path) -> Result<TrainConfig> {
    let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TrainConfig::from_toml(&src)
}

/// Like [`load_config`] but leaves the result unresolved.
pub fn read_config(path: &Path) -> Result<TrainConfig> {
    let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TrainConfig::parse(&src)
}

//! Run configuration: model reference, sampler settings, reward source, output.

use crate::benchmarks::{by_name, reward_preset};
use crate::demon::{DemonConfig, DemonError, DemonKind};
use crate::diffusion::MixtureModel;
use crate::rewards::{ComparatorSource, ExternalEndpoint, RewardSource, RewardSpec, SimulatedJudge};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {what}: {source}")]
    Parse { what: String, source: serde_json::Error },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Demon(#[from] DemonError),
}

/// A reward given by preset name or spelled out in full.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RewardRef {
    /// `linear`, `quadratic`, `bump`, `neg_distance`, or `judge` (comparisons
    /// from a simulated judge hiding `neg_distance`).
    Preset(String),
    Source(RewardSource),
    Spec(RewardSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// `benchmark:2d`, `benchmark:8d`, or a path to a mixture JSON file.
    pub model: String,
    #[serde(default)]
    pub demon: DemonConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward: Option<RewardRef>,
    /// Trajectory JSONL path; the summary goes next to it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { model: "benchmark:2d".into(), demon: DemonConfig::default(), reward: None, output: None }
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })
}

pub fn load_model(reference: &str) -> Result<MixtureModel, ConfigError> {
    if let Some(m) = by_name(reference) {
        return Ok(m);
    }
    let text = read(Path::new(reference))?;
    MixtureModel::from_json(&text).map_err(|source| ConfigError::Parse { what: reference.into(), source })
}

impl RewardRef {
    pub fn resolve(&self, dim: usize) -> Result<RewardSource, ConfigError> {
        let source = match self {
            RewardRef::Preset(name) if name == "judge" => RewardSource::Comparison {
                comparator: ComparatorSource::Judge {
                    judge: SimulatedJudge { hidden: crate::benchmarks::neg_distance_reward(dim), flip_prob: 0.0 },
                },
            },
            RewardRef::Preset(name) if name == "interactive" => RewardSource::Interactive,
            RewardRef::Preset(name) if name.starts_with("http://") || name.starts_with("https://") => {
                RewardSource::External { endpoint: ExternalEndpoint::new(name.clone()) }
            }
            RewardRef::Preset(name) => RewardSource::closed_form(
                reward_preset(name, dim)
                    .ok_or_else(|| ConfigError::Invalid(format!("unknown reward preset '{name}'")))?,
            ),
            RewardRef::Source(s) => s.clone(),
            RewardRef::Spec(s) => RewardSource::closed_form(s.clone()),
        };
        source.validate(dim).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(source)
    }

    /// A preset name, an `http(s)://` score endpoint, or `@file.json` holding
    /// a reward source or spec.
    pub fn parse_arg(arg: &str) -> Result<Self, ConfigError> {
        match arg.strip_prefix('@') {
            Some(path) => {
                let text = read(Path::new(path))?;
                serde_json::from_str(&text).map_err(|source| ConfigError::Parse { what: path.into(), source })
            }
            None => Ok(RewardRef::Preset(arg.to_string())),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|source| ConfigError::Parse { what: "run config".into(), source })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let mut cfg = Self::from_json(&read(path)?)?;
        if !Path::new(&cfg.model).is_absolute() && by_name(&cfg.model).is_none() {
            if let Some(dir) = path.parent() {
                cfg.model = dir.join(&cfg.model).to_string_lossy().into_owned();
            }
        }
        Ok(cfg)
    }

    /// Loads the model and reward source and checks them against the sampler
    /// settings.
    pub fn resolve(&self) -> Result<(MixtureModel, RewardSource), ConfigError> {
        self.demon.validate()?;
        let model = load_model(&self.model)?;
        let source = match (&self.reward, self.demon.kind) {
            (Some(r), _) => r.resolve(model.dim())?,
            (None, DemonKind::None | DemonKind::Selection) => RewardSource::Interactive,
            (None, kind) => return Err(ConfigError::Invalid(format!("kind {kind} needs a reward"))),
        };
        Ok((model, source))
    }
}

use serde::{Deserialize, Serialize};

use crate::engine::{DecayKind, DpConfig, DEFAULT_SCALE_FLOOR};
use crate::error::{Error, Result};
use crate::models::{BlobSpec, ModelKind};
use crate::optim::UpdateRule;

/// Which gradient pipeline feeds the update rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    /// Mean-loss gradient of the whole batch.
    Sgd,
    /// Per-example clipping with one noise draw per batch.
    Dpsgd,
    /// Micro-batch clipping and noise, one lane per worker.
    Edpsgd,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 3] = [
        OptimizerKind::Sgd,
        OptimizerKind::Dpsgd,
        OptimizerKind::Edpsgd,
    ];

    pub fn is_private(self) -> bool {
        self != OptimizerKind::Sgd
    }

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Dpsgd => "dpsgd",
            OptimizerKind::Edpsgd => "edpsgd",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub size: usize,
    pub classes: usize,
    pub dimension: usize,
    pub spread: f64,
    #[serde(default)]
    pub label_noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
}

fn default_hidden() -> usize {
    32
}

/// Privacy settings; the noise seed is the experiment's master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpSettings {
    pub clip_c: f64,
    pub z0: f64,
    #[serde(default)]
    pub decay: DecayKind,
    #[serde(default)]
    pub tau: f64,
    pub workers: usize,
    #[serde(default = "default_floor")]
    pub scale_floor: f64,
}

fn default_floor() -> f64 {
    DEFAULT_SCALE_FLOOR
}

impl Default for DpSettings {
    fn default() -> Self {
        Self {
            clip_c: 1.0,
            z0: 1.0,
            decay: DecayKind::None,
            tau: 0.0,
            workers: 8,
            scale_floor: DEFAULT_SCALE_FLOOR,
        }
    }
}

fn default_lr() -> f64 {
    0.01
}
fn default_epochs() -> u64 {
    50
}
fn default_batch() -> usize {
    256
}
fn default_delta() -> f64 {
    1e-5
}
fn default_train_fraction() -> f64 {
    0.5
}

/// One experiment. The master `seed` determines every random draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub optimizer: OptimizerKind,
    #[serde(default)]
    pub update: UpdateRule,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_epochs")]
    pub epochs: u64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    pub dataset: DatasetConfig,
    pub model: ModelConfig,
    /// Ignored, and dropped from reports, when `optimizer = "sgd"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dp: Option<DpSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self =
            toml::from_str(text).map_err(|e| Error::BadConfig(vec![e.to_string()]))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::BadConfig(vec![format!("cannot read {}: {e}", path.display())]))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn blob_spec(&self) -> BlobSpec {
        BlobSpec {
            seed: self.seed,
            size: self.dataset.size,
            classes: self.dataset.classes,
            dimension: self.dataset.dimension,
            spread: self.dataset.spread,
            label_noise: self.dataset.label_noise,
        }
    }

    /// DP parameters with the master seed, or `None` for plain SGD.
    pub fn dp_config(&self) -> Option<DpConfig> {
        if !self.optimizer.is_private() {
            return None;
        }
        let dp = self.dp.clone().unwrap_or_default();
        Some(DpConfig {
            clip_c: dp.clip_c,
            z0: dp.z0,
            decay: dp.decay,
            tau: dp.tau,
            workers: dp.workers,
            seed: self.seed,
        })
    }

    pub fn scale_floor(&self) -> f64 {
        self.dp
            .as_ref()
            .map_or(DEFAULT_SCALE_FLOOR, |d| d.scale_floor)
    }

    /// Number of training examples after the split.
    pub fn train_size(&self) -> usize {
        (self.train_fraction * self.dataset.size as f64).round() as usize
    }

    /// Copy with the DP section removed when it does not apply.
    pub fn normalized(&self) -> Self {
        let mut c = self.clone();
        if !c.optimizer.is_private() {
            c.dp = None;
        } else if c.dp.is_none() {
            c.dp = Some(DpSettings::default());
        }
        c
    }

    /// Checks every field and reports all problems at once.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if let Err(Error::BadDatasetSpec(msg)) = self.blob_spec().validate() {
            problems.push(format!("dataset: {msg}"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            problems.push(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if self.batch_size == 0 {
            problems.push("batch_size must be at least 1".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            problems.push(format!("delta {} outside (0, 1)", self.delta));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            problems.push(format!(
                "train_fraction {} outside (0, 1)",
                self.train_fraction
            ));
        }
        if self.model.kind == ModelKind::Mlp2 && self.model.hidden == 0 {
            problems.push("model.hidden must be at least 1".into());
        }
        let train = self.train_size();
        if self.batch_size > train {
            problems.push(format!(
                "batch_size {} exceeds the {train} training examples",
                self.batch_size
            ));
        }
        if let Some(dp) = self.dp_config() {
            if let Err(Error::BadConfig(p)) = dp.validate() {
                problems.extend(p);
            }
            let floor = self.scale_floor();
            if !(floor > 0.0 && floor <= 1.0) {
                problems.push(format!("dp.scale_floor {floor} outside (0, 1]"));
            }
            if self.optimizer == OptimizerKind::Edpsgd && self.batch_size < dp.workers {
                problems.push(format!(
                    "batch_size {} is smaller than dp.workers {}",
                    self.batch_size, dp.workers
                ));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::BadConfig(problems))
        }
    }
}

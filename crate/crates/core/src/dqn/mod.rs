//! Deep Q-learning scheduler.
//!
//! An online network maps a state to one Q-value per node. Transitions go
//! into a uniform replay buffer; each learning step regresses
//! `Q(s, a)` toward `r + discount * max_a' Q_target(s', a')` where the target
//! network is a copy of the online network refreshed every
//! `target_sync_every` learning steps.

mod agent;
mod replay;
mod train;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{LayerFile, Mlp, ModelFile, OptimizerKind};

pub use agent::{argmax, td_target, Agent};
pub use replay::ReplayBuffer;
pub use train::{greedy_rollout, train, EpisodeRecord, TrainingLog, WorkloadSettings};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DqnConfig {
    /// Bootstrap discount of the TD target.
    pub discount: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    /// Learning steps between target-network refreshes.
    pub target_sync_every: u64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_steps: u64,
    pub episodes: usize,
    /// Transitions buffered before the first learning step.
    pub learn_start: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub hidden: Vec<usize>,
    /// Per-sample TD errors are clamped to this magnitude before backprop.
    pub td_clip: Option<f64>,
}

impl Default for DqnConfig {
    fn default() -> Self {
        DqnConfig {
            discount: 0.99,
            buffer_capacity: 50_000,
            batch_size: 64,
            target_sync_every: 500,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_steps: 10_000,
            episodes: 300,
            learn_start: 1_000,
            seed: 0,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::Adam,
            hidden: vec![64, 64],
            td_clip: Some(1.0),
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.discount) {
            return Err(Error::config(format!(
                "discount must lie in [0, 1], got {}",
                self.discount
            )));
        }
        if !unit(self.epsilon_start) || !unit(self.epsilon_end) || self.epsilon_end > self.epsilon_start {
            return Err(Error::config(format!(
                "need 0 <= epsilon_end <= epsilon_start <= 1, got {} and {}",
                self.epsilon_end, self.epsilon_start
            )));
        }
        if self.batch_size == 0 || self.batch_size > self.buffer_capacity {
            return Err(Error::config(format!(
                "need 0 < batch_size <= buffer_capacity, got {} and {}",
                self.batch_size, self.buffer_capacity
            )));
        }
        if self.target_sync_every == 0 {
            return Err(Error::config("target_sync_every must be positive"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::config("learning_rate must be positive"));
        }
        if let Some(c) = self.td_clip {
            if !(c > 0.0) {
                return Err(Error::config("td_clip must be positive"));
            }
        }
        if self.hidden.contains(&0) {
            return Err(Error::config("hidden layer widths must be positive"));
        }
        Ok(())
    }
}

/// Linear decay from `epsilon_start` to `epsilon_end` over
/// `epsilon_decay_steps` environment steps, flat afterwards.
pub fn epsilon_at(config: &DqnConfig, step: u64) -> f64 {
    if config.epsilon_decay_steps == 0 || step >= config.epsilon_decay_steps {
        return config.epsilon_end;
    }
    let frac = step as f64 / config.epsilon_decay_steps as f64;
    config.epsilon_start + (config.epsilon_end - config.epsilon_start) * frac
}

/// A trained Q-network together with the configuration that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub network: Mlp,
    pub config: DqnConfig,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainedModelFile {
    spec: crate::nn::MlpSpec,
    layers: Vec<LayerFile>,
    config: DqnConfig,
}

impl TrainedModel {
    pub fn to_json(&self) -> String {
        let ModelFile { spec, layers } = ModelFile::from(&self.network);
        let file = TrainedModelFile {
            spec,
            layers,
            config: self.config.clone(),
        };
        serde_json::to_string(&file).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TrainedModelFile =
            serde_json::from_str(text).map_err(|e| Error::structure(format!("model file: {e}")))?;
        let network = Mlp::try_from(ModelFile {
            spec: file.spec,
            layers: file.layers,
        })?;
        Ok(TrainedModel {
            network,
            config: file.config,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

//! Adversarial training: losses, regularizers, Adam and the alternating loop.

mod adam;
mod checkpoint;
mod history;
mod losses;
mod trainer;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint, CheckpointError,
    CHECKPOINT_VERSION,
};
pub use history::{TrainHistory, TrainRecord, HISTORY_HEADER};
pub use losses::{combined_generator_objective, gan_losses, mutual_info_lower_bound, regularizers, Lambdas};
pub use trainer::{train, TrainOutcome, Trainer};

use crate::autodiff::AutodiffError;
use crate::networks::NetworkError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr_d: f64,
    pub lr_g: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub batch_size: usize,
    pub steps: u64,
    pub lambdas: Lambdas,
    pub seed: u64,
    /// A history record is kept every `eval_every` iterations.
    pub eval_every: u64,
    /// Periodic checkpoint interval; 0 disables periodic checkpoints.
    pub checkpoint_every: u64,
    /// Write elapsed seconds into the history. Off by default so that
    /// repeated runs produce identical history files.
    pub record_wall_time: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr_d: 5e-5,
            lr_g: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            batch_size: 32,
            steps: 5000,
            lambdas: Lambdas::default(),
            seed: 0,
            eval_every: 10,
            checkpoint_every: 0,
            record_wall_time: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let nonneg = [self.lr_d, self.lr_g]
            .iter()
            .chain(self.lambdas.as_array().iter())
            .all(|v| *v >= 0.0 && v.is_finite());
        if !nonneg {
            return Err(TrainError::Config(
                "learning rates and λ values must be finite and nonnegative".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(TrainError::Config("Adam betas must lie in [0, 1)".into()));
        }
        if self.batch_size < 2 {
            return Err(TrainError::Config(format!("batch size {} is below 2", self.batch_size)));
        }
        if self.eval_every == 0 {
            return Err(TrainError::Config("eval_every must be positive".into()));
        }
        Ok(())
    }

    pub fn adam_d(&self) -> AdamConfig {
        AdamConfig::new(self.lr_d, self.beta1, self.beta2)
    }

    pub fn adam_g(&self) -> AdamConfig {
        AdamConfig::new(self.lr_g, self.beta1, self.beta2)
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("dataset: {0}")]
    Data(String),
    #[error("non-finite {what} at step {step}")]
    NonFinite { step: u64, what: &'static str },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

use serde::{Deserialize, Serialize};

use crate::nn::AdamHyper;
use crate::{Error, Result};

/// Hyperparameters shared by both training loops.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamHyper,
    pub lambda1: f64,
    pub lambda2: f64,
    pub seed: u64,
    /// Early-stop after this many epochs without validation improvement.
    pub patience: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    /// Decoupled weight decay applied after each optimizer step
    /// (parameters shrink by lr·decay per step). 0 disables.
    pub weight_decay: f64,
    /// Std-dev of Gaussian noise added to the 30 trace points of each
    /// training input, redrawn every epoch (regularizer; the autoencoder
    /// then reconstructs the clean sequence from the jittered one).
    /// 0 disables.
    pub input_jitter_std: f64,
    /// Label-smoothing ε for the classification loss (diagnosis training
    /// only). 0 keeps one-hot targets.
    pub label_smoothing: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 64,
            adam: AdamHyper::default(),
            lambda1: 1.0,
            lambda2: 1.0,
            seed: 0,
            patience: 10,
            hidden1: 64,
            hidden2: 32,
            weight_decay: 0.0,
            input_jitter_std: 0.0,
            label_smoothing: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.hidden1 == 0 || self.hidden2 == 0 {
            return Err(Error::Config(
                "batch size and hidden sizes must be positive".into(),
            ));
        }
        if self.lambda1 < 0.0 || self.lambda2 < 0.0 {
            return Err(Error::Config("loss weights must be non-negative".into()));
        }
        if self.weight_decay < 0.0 || self.input_jitter_std < 0.0 {
            return Err(Error::Config(
                "weight decay and input jitter must be non-negative".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.label_smoothing) {
            return Err(Error::Config("label smoothing must be in [0, 1)".into()));
        }
        self.adam.validate()
    }
}

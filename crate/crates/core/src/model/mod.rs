//! The two model architectures: a GRU autoencoder for anomaly detection and
//! an attention-based bidirectional GRU multi-task model for fault diagnosis
//! and localization, plus model-file serialization.

pub mod ae;
pub mod diag;
pub mod io;

pub use ae::{ae_backward, ae_forward, anomaly_score, detect, AeModel, AeParams, Verdict};
pub use diag::{
    diag_backward, diag_forward, predicted_position_index, DiagModel, DiagOutput, DiagParams,
};
pub use io::{
    load_any, load_model, save_model, AnyModel, ModelMeta, StoredModel, MODEL_FORMAT_VERSION,
};

use crate::nn::Tensor;
use crate::otdr::{SequenceSample, SEQUENCE_LEN};
use crate::Result;

/// Number of time steps the models consume: 30 trace points plus the SNR.
pub const INPUT_STEPS: usize = SEQUENCE_LEN + 1;

/// Largest position index a localization target can take.
pub const MAX_POSITION_INDEX: usize = SEQUENCE_LEN - 1;

/// Model input: the 30 normalized points followed by γ/40 as a 31st step.
pub fn build_input(sample: &SequenceSample) -> Result<Tensor> {
    sample.validate()?;
    let mut data = sample.points.clone();
    data.push((sample.snr_db / 40.0).clamp(0.0, 1.0));
    Tensor::new(vec![INPUT_STEPS, 1], data)
}

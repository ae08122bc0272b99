//! Minimal deterministic neural-network core: tensors, dense / GRU / BiGRU /
//! attention layers with exact analytic gradients, losses, and Adam.
//!
//! All ops are pure functions over value-semantics data; forward passes that
//! feed a training step return a cache consumed by the matching backward.

pub mod adam;
pub mod attention;
pub mod dense;
pub mod gradcheck;
pub mod gru;
pub mod init;
pub mod loss;
pub mod tensor;

pub use adam::{AdamHyper, AdamOptimizer, AdamState};
pub use attention::{attention_backward, attention_forward, AttentionParams, AttnCache};
pub use dense::{dense_backward, dense_forward, Activation, DenseCache, DenseParams};
pub use gru::{
    bigru_backward, bigru_forward, gru_cell_backward, gru_cell_forward, gru_sequence_backward,
    gru_sequence_forward, BiGruCache, GruCellCache, GruLayerParams, GruSeqCache,
};
pub use loss::{
    combined_loss, cross_entropy_backward, cross_entropy_loss, mse_backward, mse_loss,
    smoothed_cross_entropy_backward, smoothed_cross_entropy_loss,
};
pub use tensor::{ParamSet, Tensor};

use crate::Result;

/// Elementwise logistic sigmoid, 1/(1+e^{-x}).
pub fn sigmoid(x: &Tensor) -> Result<Tensor> {
    x.check_finite("sigmoid input")?;
    Ok(x.map(sigmoid_scalar))
}

#[inline]
pub(crate) fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable softmax over a vector (max-subtraction).
pub fn softmax(x: &Tensor) -> Result<Tensor> {
    x.check_finite("softmax input")?;
    if x.data().is_empty() {
        return Err(crate::Error::Shape("softmax of empty vector".into()));
    }
    let mut out = x.data().to_vec();
    softmax_in_place(&mut out);
    Tensor::new(x.shape().to_vec(), out)
}

pub(crate) fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

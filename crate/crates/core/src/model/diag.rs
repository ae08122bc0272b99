use rand::Rng;
use serde::{Deserialize, Serialize};

use super::io::ModelMeta;
use super::{INPUT_STEPS, MAX_POSITION_INDEX};
use crate::nn::{
    attention_backward, attention_forward, bigru_backward, bigru_forward, dense_backward,
    dense_forward, init, Activation, AttentionParams, AttnCache, BiGruCache, DenseCache,
    DenseParams, GruLayerParams, ParamSet, Tensor,
};
use crate::{Error, Result};

pub const NUM_CLASSES: usize = 4;

/// Attention-BiGRU multi-task parameters: two shared BiGRU layers, an
/// attention layer, and one dense head per task.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiagParams {
    pub fwd1: GruLayerParams,
    pub bwd1: GruLayerParams,
    pub fwd2: GruLayerParams,
    pub bwd2: GruLayerParams,
    pub attn: AttentionParams,
    pub class_head: DenseParams,
    pub pos_head: DenseParams,
}

impl ParamSet for DiagParams {
    fn tensors(&self) -> Vec<(String, &Tensor)> {
        let mut v = Vec::new();
        for (prefix, p) in [
            ("fwd1", &self.fwd1),
            ("bwd1", &self.bwd1),
            ("fwd2", &self.fwd2),
            ("bwd2", &self.bwd2),
        ] {
            for (name, t) in p.tensors() {
                v.push((format!("{}.{}", prefix, name), t));
            }
        }
        for (name, t) in self.attn.tensors() {
            v.push((format!("attn.{}", name), t));
        }
        for (name, t) in self.class_head.tensors() {
            v.push((format!("class_head.{}", name), t));
        }
        for (name, t) in self.pos_head.tensors() {
            v.push((format!("pos_head.{}", name), t));
        }
        v
    }

    fn tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut v = Vec::new();
        for (prefix, p) in [
            ("fwd1", &mut self.fwd1),
            ("bwd1", &mut self.bwd1),
            ("fwd2", &mut self.fwd2),
            ("bwd2", &mut self.bwd2),
        ] {
            for (name, t) in p.tensors_mut() {
                v.push((format!("{}.{}", prefix, name), t));
            }
        }
        for (name, t) in self.attn.tensors_mut() {
            v.push((format!("attn.{}", name), t));
        }
        for (name, t) in self.class_head.tensors_mut() {
            v.push((format!("class_head.{}", name), t));
        }
        for (name, t) in self.pos_head.tensors_mut() {
            v.push((format!("pos_head.{}", name), t));
        }
        v
    }

    fn zeros_like(&self) -> Self {
        DiagParams {
            fwd1: self.fwd1.zeros_like(),
            bwd1: self.bwd1.zeros_like(),
            fwd2: self.fwd2.zeros_like(),
            bwd2: self.bwd2.zeros_like(),
            attn: self.attn.zeros_like(),
            class_head: self.class_head.zeros_like(),
            pos_head: self.pos_head.zeros_like(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DiagModel {
    pub params: DiagParams,
    pub hidden1: usize,
    pub hidden2: usize,
    pub meta: ModelMeta,
}

impl DiagModel {
    pub fn zeros(hidden1: usize, hidden2: usize) -> Self {
        DiagModel {
            params: DiagParams {
                fwd1: GruLayerParams::zeros(1, hidden1),
                bwd1: GruLayerParams::zeros(1, hidden1),
                fwd2: GruLayerParams::zeros(hidden1, hidden2),
                bwd2: GruLayerParams::zeros(hidden1, hidden2),
                attn: AttentionParams::zeros(hidden2, hidden2),
                class_head: DenseParams::zeros(hidden2, NUM_CLASSES),
                pos_head: DenseParams::zeros(hidden2, 1),
            },
            hidden1,
            hidden2,
            meta: ModelMeta::default(),
        }
    }

    pub fn new<R: Rng>(hidden1: usize, hidden2: usize, rng: &mut R) -> Self {
        let mut m = DiagModel::zeros(hidden1, hidden2);
        m.params.fwd1 = init::init_gru(1, hidden1, rng);
        m.params.bwd1 = init::init_gru(1, hidden1, rng);
        m.params.fwd2 = init::init_gru(hidden1, hidden2, rng);
        m.params.bwd2 = init::init_gru(hidden1, hidden2, rng);
        m.params.attn = init::init_attention(hidden2, hidden2, rng);
        m.params.class_head = init::init_dense(hidden2, NUM_CLASSES, rng);
        m.params.pos_head = init::init_dense(hidden2, 1, rng);
        m
    }
}

pub struct DiagCache {
    bigru1: BiGruCache,
    bigru2: BiGruCache,
    attn: AttnCache,
    class: DenseCache,
    pos: DenseCache,
}

/// Model outputs for one sequence.
#[derive(Clone, Debug)]
pub struct DiagOutput {
    pub class_probs: Vec<f64>,
    /// Raw regression output, used by the training loss.
    pub position_raw: f64,
    /// Clamped to [0, 1] for reporting and index prediction.
    pub position_norm: f64,
    pub alphas: Vec<f64>,
}

pub fn diag_forward(model: &DiagModel, input: &Tensor) -> Result<(DiagOutput, DiagCache)> {
    if input.shape() != [INPUT_STEPS, 1] {
        return Err(Error::Shape(format!(
            "diagnosis model expects [{} x 1] input, got {:?}",
            INPUT_STEPS,
            input.shape()
        )));
    }
    let (ys1, c1) = bigru_forward(&model.params.fwd1, &model.params.bwd1, input)?;
    let (ys2, c2) = bigru_forward(&model.params.fwd2, &model.params.bwd2, &ys1)?;
    let (context, alphas, c_attn) = attention_forward(&model.params.attn, &ys2)?;
    let (probs, c_class) = dense_forward(&model.params.class_head, &context, Activation::Softmax)?;
    let (pos, c_pos) = dense_forward(&model.params.pos_head, &context, Activation::Identity)?;
    let out = DiagOutput {
        class_probs: probs,
        position_raw: pos[0],
        position_norm: pos[0].clamp(0.0, 1.0),
        alphas,
    };
    Ok((
        out,
        DiagCache {
            bigru1: c1,
            bigru2: c2,
            attn: c_attn,
            class: c_class,
            pos: c_pos,
        },
    ))
}

/// Backward of `diag_forward` given dL/d(class_probs) and dL/d(position_raw).
pub fn diag_backward(
    model: &DiagModel,
    cache: &DiagCache,
    d_probs: &[f64],
    d_pos_raw: f64,
    grads: &mut DiagParams,
) -> Result<()> {
    let mut d_context = dense_backward(
        &model.params.class_head,
        &cache.class,
        d_probs,
        &mut grads.class_head,
    )?;
    let d_from_pos = dense_backward(
        &model.params.pos_head,
        &cache.pos,
        &[d_pos_raw],
        &mut grads.pos_head,
    )?;
    for (a, b) in d_context.iter_mut().zip(&d_from_pos) {
        *a += b;
    }
    let d_ys2 = attention_backward(&model.params.attn, &cache.attn, &d_context, &mut grads.attn)?;
    let d_ys1 = bigru_backward(
        &model.params.fwd2,
        &model.params.bwd2,
        &cache.bigru2,
        &d_ys2,
        &mut grads.fwd2,
        &mut grads.bwd2,
    )?;
    bigru_backward(
        &model.params.fwd1,
        &model.params.bwd1,
        &cache.bigru1,
        &d_ys1,
        &mut grads.fwd1,
        &mut grads.bwd1,
    )?;
    Ok(())
}

/// round(position_norm × 29), clamped to [0, 29]. Half-way values round up.
pub fn predicted_position_index(position_norm: f64) -> usize {
    let idx = (position_norm.clamp(0.0, 1.0) * MAX_POSITION_INDEX as f64).round();
    (idx as usize).min(MAX_POSITION_INDEX)
}

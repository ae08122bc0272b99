use rand::Rng;
use serde::{Deserialize, Serialize};

use super::io::ModelMeta;
use super::{build_input, INPUT_STEPS};
use crate::nn::{
    dense_backward, dense_forward, gru_sequence_backward, gru_sequence_forward, init, mse_loss,
    Activation, DenseCache, DenseParams, GruLayerParams, GruSeqCache, ParamSet, Tensor,
};
use crate::otdr::SequenceSample;
use crate::{Error, Result};

/// GRU autoencoder parameters. The decoder mirrors the encoder's hidden
/// sizes; each decoder step is projected to one value by a dense layer.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AeParams {
    pub enc1: GruLayerParams,
    pub enc2: GruLayerParams,
    pub dec1: GruLayerParams,
    pub dec2: GruLayerParams,
    pub out: DenseParams,
}

impl ParamSet for AeParams {
    fn tensors(&self) -> Vec<(String, &Tensor)> {
        let mut v = Vec::new();
        for (prefix, p) in [
            ("enc1", &self.enc1),
            ("enc2", &self.enc2),
            ("dec1", &self.dec1),
            ("dec2", &self.dec2),
        ] {
            for (name, t) in p.tensors() {
                v.push((format!("{}.{}", prefix, name), t));
            }
        }
        for (name, t) in self.out.tensors() {
            v.push((format!("out.{}", name), t));
        }
        v
    }

    fn tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut v = Vec::new();
        for (prefix, p) in [
            ("enc1", &mut self.enc1),
            ("enc2", &mut self.enc2),
            ("dec1", &mut self.dec1),
            ("dec2", &mut self.dec2),
        ] {
            for (name, t) in p.tensors_mut() {
                v.push((format!("{}.{}", prefix, name), t));
            }
        }
        for (name, t) in self.out.tensors_mut() {
            v.push((format!("out.{}", name), t));
        }
        v
    }

    fn zeros_like(&self) -> Self {
        AeParams {
            enc1: self.enc1.zeros_like(),
            enc2: self.enc2.zeros_like(),
            dec1: self.dec1.zeros_like(),
            dec2: self.dec2.zeros_like(),
            out: self.out.zeros_like(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct AeModel {
    pub params: AeParams,
    pub hidden1: usize,
    pub hidden2: usize,
    pub meta: ModelMeta,
}

impl AeModel {
    pub fn zeros(hidden1: usize, hidden2: usize) -> Self {
        AeModel {
            params: AeParams {
                enc1: GruLayerParams::zeros(1, hidden1),
                enc2: GruLayerParams::zeros(hidden1, hidden2),
                dec1: GruLayerParams::zeros(hidden2, hidden2),
                dec2: GruLayerParams::zeros(hidden2, hidden1),
                out: DenseParams::zeros(hidden1, 1),
            },
            hidden1,
            hidden2,
            meta: ModelMeta::default(),
        }
    }

    pub fn new<R: Rng>(hidden1: usize, hidden2: usize, rng: &mut R) -> Self {
        let mut m = AeModel::zeros(hidden1, hidden2);
        m.params.enc1 = init::init_gru(1, hidden1, rng);
        m.params.enc2 = init::init_gru(hidden1, hidden2, rng);
        m.params.dec1 = init::init_gru(hidden2, hidden2, rng);
        m.params.dec2 = init::init_gru(hidden2, hidden1, rng);
        m.params.out = init::init_dense(hidden1, 1, rng);
        m
    }
}

pub struct AeCache {
    input: Tensor,
    enc1: GruSeqCache,
    enc2: GruSeqCache,
    dec1: GruSeqCache,
    dec2: GruSeqCache,
    out: Vec<DenseCache>,
}

impl AeCache {
    pub fn input(&self) -> &Tensor {
        &self.input
    }
}

/// Encoder compresses the 31-step input to its final hidden state Z; the
/// decoder unrolls 31 steps from Z (zero inputs) and projects each step to
/// one value.
pub fn ae_forward(model: &AeModel, input: &Tensor) -> Result<(Vec<f64>, AeCache)> {
    if input.shape() != [INPUT_STEPS, 1] {
        return Err(Error::Shape(format!(
            "autoencoder expects [{} x 1] input, got {:?}",
            INPUT_STEPS,
            input.shape()
        )));
    }
    let h0_1 = vec![0.0; model.hidden1];
    let h0_2 = vec![0.0; model.hidden2];
    let (hs1, c1) = gru_sequence_forward(&model.params.enc1, input, &h0_1)?;
    let (hs2, c2) = gru_sequence_forward(&model.params.enc2, &hs1, &h0_2)?;
    let z = hs2.row(INPUT_STEPS - 1).to_vec();

    let zeros_in = Tensor::zeros(vec![INPUT_STEPS, model.hidden2]);
    let (hs3, c3) = gru_sequence_forward(&model.params.dec1, &zeros_in, &z)?;
    let (hs4, c4) = gru_sequence_forward(&model.params.dec2, &hs3, &h0_1)?;

    let mut recon = Vec::with_capacity(INPUT_STEPS);
    let mut out_caches = Vec::with_capacity(INPUT_STEPS);
    for t in 0..INPUT_STEPS {
        let (y, cache) = dense_forward(&model.params.out, hs4.row(t), Activation::Identity)?;
        recon.push(y[0]);
        out_caches.push(cache);
    }
    Ok((
        recon,
        AeCache {
            input: input.clone(),
            enc1: c1,
            enc2: c2,
            dec1: c3,
            dec2: c4,
            out: out_caches,
        },
    ))
}

/// Backward of `ae_forward` given dL/d(reconstruction); accumulates
/// parameter gradients into `grads`.
pub fn ae_backward(
    model: &AeModel,
    cache: &AeCache,
    d_recon: &[f64],
    grads: &mut AeParams,
) -> Result<()> {
    if d_recon.len() != INPUT_STEPS {
        return Err(Error::Shape("reconstruction gradient length mismatch".into()));
    }
    let mut d_hs4 = Tensor::zeros(vec![INPUT_STEPS, model.hidden1]);
    for t in 0..INPUT_STEPS {
        let dx = dense_backward(&model.params.out, &cache.out[t], &[d_recon[t]], &mut grads.out)?;
        d_hs4.row_mut(t).copy_from_slice(&dx);
    }
    let (d_hs3, _) = gru_sequence_backward(&model.params.dec2, &cache.dec2, &d_hs4, &mut grads.dec2)?;
    let (_, d_z) = gru_sequence_backward(&model.params.dec1, &cache.dec1, &d_hs3, &mut grads.dec1)?;

    let mut d_hs2 = Tensor::zeros(vec![INPUT_STEPS, model.hidden2]);
    d_hs2.row_mut(INPUT_STEPS - 1).copy_from_slice(&d_z);
    let (d_hs1, _) = gru_sequence_backward(&model.params.enc2, &cache.enc2, &d_hs2, &mut grads.enc2)?;
    gru_sequence_backward(&model.params.enc1, &cache.enc1, &d_hs1, &mut grads.enc1)?;
    Ok(())
}

/// Per-sequence sum of squared reconstruction error, the anomaly score.
pub fn anomaly_score(model: &AeModel, sample: &SequenceSample) -> Result<f64> {
    let input = build_input(sample)?;
    let (recon, _) = ae_forward(model, &input)?;
    mse_loss(input.data(), &recon)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Normal,
    Anomalous,
}

/// Anomalous iff score strictly exceeds θ; a score equal to θ is normal.
pub fn detect(model: &AeModel, sample: &SequenceSample, theta: f64) -> Result<Verdict> {
    if theta < 0.0 {
        return Err(Error::Config("threshold must be non-negative".into()));
    }
    let score = anomaly_score(model, sample)?;
    Ok(if score > theta {
        Verdict::Anomalous
    } else {
        Verdict::Normal
    })
}

use serde::{Deserialize, Serialize};

use super::softmax_in_place;
use super::tensor::{ParamSet, Tensor};
use crate::{Error, Result};

/// Soft attention over a hidden-state sequence:
///   e_i = tanh(W_h h_i),  α = softmax(wᵀ e_i),  c = Σ α_i h_i.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AttentionParams {
    /// [attn × hidden]
    pub w_h: Tensor,
    /// [attn]
    pub w: Tensor,
}

impl AttentionParams {
    pub fn zeros(hidden: usize, attn: usize) -> Self {
        AttentionParams {
            w_h: Tensor::zeros(vec![attn, hidden]),
            w: Tensor::zeros(vec![attn]),
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.w_h.cols()
    }

    pub fn attn_size(&self) -> usize {
        self.w_h.rows()
    }
}

impl ParamSet for AttentionParams {
    fn tensors(&self) -> Vec<(String, &Tensor)> {
        vec![("w_h".into(), &self.w_h), ("w".into(), &self.w)]
    }

    fn tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        vec![("w_h".into(), &mut self.w_h), ("w".into(), &mut self.w)]
    }

    fn zeros_like(&self) -> Self {
        AttentionParams::zeros(self.hidden_size(), self.attn_size())
    }
}

pub struct AttnCache {
    hs: Tensor,
    es: Tensor,
    alphas: Vec<f64>,
}

/// Returns (context vector, attention weights, cache).
pub fn attention_forward(
    params: &AttentionParams,
    hs: &Tensor,
) -> Result<(Vec<f64>, Vec<f64>, AttnCache)> {
    let t_len = hs.rows();
    if t_len == 0 {
        return Err(Error::Shape("attention needs T >= 1".into()));
    }
    if hs.cols() != params.hidden_size() {
        return Err(Error::Shape(format!(
            "attention hidden {} != params {}",
            hs.cols(),
            params.hidden_size()
        )));
    }
    let attn = params.attn_size();
    let mut es = Tensor::zeros(vec![t_len, attn]);
    let mut scores = vec![0.0; t_len];
    for t in 0..t_len {
        let mut e = params.w_h.matvec(hs.row(t));
        e.iter_mut().for_each(|v| *v = v.tanh());
        scores[t] = super::tensor::dot(params.w.data(), &e);
        es.row_mut(t).copy_from_slice(&e);
    }
    softmax_in_place(&mut scores);
    let alphas = scores;

    let hidden = hs.cols();
    let mut c = vec![0.0; hidden];
    for t in 0..t_len {
        let row = hs.row(t);
        let a = alphas[t];
        for i in 0..hidden {
            c[i] += a * row[i];
        }
    }
    let cache = AttnCache {
        hs: hs.clone(),
        es,
        alphas: alphas.clone(),
    };
    Ok((c, alphas, cache))
}

/// Backward of `attention_forward` given dL/dc; returns dL/dhs.
pub fn attention_backward(
    params: &AttentionParams,
    cache: &AttnCache,
    dc: &[f64],
    grads: &mut AttentionParams,
) -> Result<Tensor> {
    let hidden = params.hidden_size();
    if dc.len() != hidden {
        return Err(Error::Shape(format!(
            "attention upstream {} != hidden {}",
            dc.len(),
            hidden
        )));
    }
    let t_len = cache.hs.rows();
    let mut d_hs = Tensor::zeros(vec![t_len, hidden]);
    let mut d_alpha = vec![0.0; t_len];
    for t in 0..t_len {
        let row = cache.hs.row(t);
        d_alpha[t] = super::tensor::dot(dc, row);
        let a = cache.alphas[t];
        let dst = d_hs.row_mut(t);
        for i in 0..hidden {
            dst[i] = a * dc[i];
        }
    }
    // Softmax backward over the score vector.
    let s: f64 = cache
        .alphas
        .iter()
        .zip(&d_alpha)
        .map(|(&a, &d)| a * d)
        .sum();
    for t in 0..t_len {
        let ds = cache.alphas[t] * (d_alpha[t] - s);
        let e = cache.es.row(t);
        // dL/de_t = ds · w, then through tanh.
        let mut da = vec![0.0; params.attn_size()];
        for (j, (daj, &ej)) in da.iter_mut().zip(e).enumerate() {
            *daj = ds * params.w.data()[j] * (1.0 - ej * ej);
        }
        for (g, &ej) in grads.w.data_mut().iter_mut().zip(e) {
            *g += ds * ej;
        }
        grads.w_h.add_outer(&da, cache.hs.row(t));
        let dst = d_hs.row_mut(t);
        params.w_h.matvec_t_acc(&da, dst);
    }
    Ok(d_hs)
}

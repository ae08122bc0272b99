use serde::{Deserialize, Serialize};

use super::tensor::{ParamSet, Tensor};
use crate::{Error, Result};

/// Adam hyperparameters. Defaults: lr 1e-3, β1 0.9, β2 0.999, ε 1e-8.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamHyper {
    pub fn validate(&self) -> Result<()> {
        let ok = self.beta1 > 0.0
            && self.beta1 < 1.0
            && self.beta2 > 0.0
            && self.beta2 < 1.0
            && self.learning_rate > 0.0
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config("invalid Adam hyperparameters".into()))
        }
    }
}

/// Per-tensor Adam state: first and second moment estimates plus step count.
#[derive(Clone, Debug)]
pub struct AdamState {
    m: Tensor,
    v: Tensor,
    t: u64,
    hyper: AdamHyper,
}

impl AdamState {
    pub fn new(shape: Vec<usize>, hyper: AdamHyper) -> Result<Self> {
        hyper.validate()?;
        Ok(AdamState {
            m: Tensor::zeros(shape.clone()),
            v: Tensor::zeros(shape),
            t: 0,
            hyper,
        })
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// Standard Adam update with bias correction; `t` is incremented once
    /// per call.
    pub fn step(&mut self, params: &mut Tensor, grads: &Tensor) -> Result<()> {
        if params.shape() != self.m.shape() || grads.shape() != self.m.shape() {
            return Err(Error::Shape("adam state/parameter shape mismatch".into()));
        }
        self.t += 1;
        let b1 = self.hyper.beta1;
        let b2 = self.hyper.beta2;
        let bc1 = 1.0 - b1.powi(self.t as i32);
        let bc2 = 1.0 - b2.powi(self.t as i32);
        let lr = self.hyper.learning_rate;
        let eps = self.hyper.epsilon;
        let m = self.m.data_mut();
        let v = self.v.data_mut();
        let p = params.data_mut();
        let g = grads.data();
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

/// Adam over every tensor of a `ParamSet`, in `tensors()` order.
pub struct AdamOptimizer {
    states: Vec<AdamState>,
}

impl AdamOptimizer {
    pub fn new<P: ParamSet>(params: &P, hyper: AdamHyper) -> Result<Self> {
        let states = params
            .tensors()
            .into_iter()
            .map(|(_, t)| AdamState::new(t.shape().to_vec(), hyper))
            .collect::<Result<Vec<_>>>()?;
        Ok(AdamOptimizer { states })
    }

    pub fn step<P: ParamSet>(&mut self, params: &mut P, grads: &P) -> Result<()> {
        let gs = grads.tensors();
        for ((state, (_, p)), (_, g)) in self
            .states
            .iter_mut()
            .zip(params.tensors_mut())
            .zip(gs)
        {
            state.step(p, g)?;
        }
        Ok(())
    }
}

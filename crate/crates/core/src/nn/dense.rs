use serde::{Deserialize, Serialize};

use super::tensor::{ParamSet, Tensor};
use super::{sigmoid_scalar, softmax_in_place};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    Softmax,
    Identity,
}

/// Affine layer, weight [out × in] plus bias [out].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DenseParams {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl DenseParams {
    pub fn zeros(input: usize, output: usize) -> Self {
        DenseParams {
            weight: Tensor::zeros(vec![output, input]),
            bias: Tensor::zeros(vec![output]),
        }
    }

    pub fn input_size(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_size(&self) -> usize {
        self.weight.rows()
    }
}

impl ParamSet for DenseParams {
    fn tensors(&self) -> Vec<(String, &Tensor)> {
        vec![
            ("weight".into(), &self.weight),
            ("bias".into(), &self.bias),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        vec![
            ("weight".into(), &mut self.weight),
            ("bias".into(), &mut self.bias),
        ]
    }

    fn zeros_like(&self) -> Self {
        DenseParams {
            weight: self.weight.zeros_like(),
            bias: self.bias.zeros_like(),
        }
    }
}

pub struct DenseCache {
    x: Vec<f64>,
    y: Vec<f64>,
    activation: Activation,
}

/// activation(Wx + b), with the cache needed for the backward pass.
pub fn dense_forward(
    params: &DenseParams,
    x: &[f64],
    activation: Activation,
) -> Result<(Vec<f64>, DenseCache)> {
    if x.len() != params.input_size() {
        return Err(Error::Shape(format!(
            "dense input {} != declared {}",
            x.len(),
            params.input_size()
        )));
    }
    let mut y = params.weight.matvec(x);
    for (yi, bi) in y.iter_mut().zip(params.bias.data()) {
        *yi += bi;
    }
    match activation {
        Activation::Relu => y.iter_mut().for_each(|v| *v = v.max(0.0)),
        Activation::Tanh => y.iter_mut().for_each(|v| *v = v.tanh()),
        Activation::Sigmoid => y.iter_mut().for_each(|v| *v = sigmoid_scalar(*v)),
        Activation::Softmax => softmax_in_place(&mut y),
        Activation::Identity => {}
    }
    let cache = DenseCache {
        x: x.to_vec(),
        y: y.clone(),
        activation,
    };
    Ok((y, cache))
}

/// Given dL/dy, accumulates dL/dW and dL/db into `grads` and returns dL/dx.
pub fn dense_backward(
    params: &DenseParams,
    cache: &DenseCache,
    dy: &[f64],
    grads: &mut DenseParams,
) -> Result<Vec<f64>> {
    if dy.len() != params.output_size() {
        return Err(Error::Shape(format!(
            "dense upstream {} != output {}",
            dy.len(),
            params.output_size()
        )));
    }
    // Pull the upstream gradient back through the activation.
    let dlin: Vec<f64> = match cache.activation {
        Activation::Relu => cache
            .y
            .iter()
            .zip(dy)
            .map(|(&y, &d)| if y > 0.0 { d } else { 0.0 })
            .collect(),
        Activation::Tanh => cache.y.iter().zip(dy).map(|(&y, &d)| d * (1.0 - y * y)).collect(),
        Activation::Sigmoid => cache
            .y
            .iter()
            .zip(dy)
            .map(|(&y, &d)| d * y * (1.0 - y))
            .collect(),
        Activation::Softmax => {
            let s: f64 = cache.y.iter().zip(dy).map(|(&y, &d)| y * d).sum();
            cache.y.iter().zip(dy).map(|(&y, &d)| y * (d - s)).collect()
        }
        Activation::Identity => dy.to_vec(),
    };
    grads.weight.add_outer(&dlin, &cache.x);
    for (g, d) in grads.bias.data_mut().iter_mut().zip(&dlin) {
        *g += d;
    }
    let mut dx = vec![0.0; params.input_size()];
    params.weight.matvec_t_acc(&dlin, &mut dx);
    Ok(dx)
}

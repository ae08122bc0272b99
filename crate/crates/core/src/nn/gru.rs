use serde::{Deserialize, Serialize};

use super::sigmoid_scalar;
use super::tensor::{ParamSet, Tensor};
use crate::{Error, Result};

/// One GRU layer. Input weights (W) and recurrent weights (U) are kept
/// separate per gate; a single matrix cannot map both the input and the
/// hidden dimensions in general.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GruLayerParams {
    pub w_z: Tensor,
    pub w_r: Tensor,
    pub w_h: Tensor,
    pub u_z: Tensor,
    pub u_r: Tensor,
    pub u_h: Tensor,
    pub b_z: Tensor,
    pub b_r: Tensor,
    pub b_h: Tensor,
}

impl GruLayerParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        GruLayerParams {
            w_z: Tensor::zeros(vec![hidden, input]),
            w_r: Tensor::zeros(vec![hidden, input]),
            w_h: Tensor::zeros(vec![hidden, input]),
            u_z: Tensor::zeros(vec![hidden, hidden]),
            u_r: Tensor::zeros(vec![hidden, hidden]),
            u_h: Tensor::zeros(vec![hidden, hidden]),
            b_z: Tensor::zeros(vec![hidden]),
            b_r: Tensor::zeros(vec![hidden]),
            b_h: Tensor::zeros(vec![hidden]),
        }
    }

    pub fn input_size(&self) -> usize {
        self.w_z.cols()
    }

    pub fn hidden_size(&self) -> usize {
        self.w_z.rows()
    }

    fn check_shapes(&self, x_len: usize, h_len: usize) -> Result<()> {
        if x_len != self.input_size() || h_len != self.hidden_size() {
            return Err(Error::Shape(format!(
                "gru expects input {} / hidden {}, got {} / {}",
                self.input_size(),
                self.hidden_size(),
                x_len,
                h_len
            )));
        }
        Ok(())
    }
}

impl ParamSet for GruLayerParams {
    fn tensors(&self) -> Vec<(String, &Tensor)> {
        vec![
            ("w_z".into(), &self.w_z),
            ("w_r".into(), &self.w_r),
            ("w_h".into(), &self.w_h),
            ("u_z".into(), &self.u_z),
            ("u_r".into(), &self.u_r),
            ("u_h".into(), &self.u_h),
            ("b_z".into(), &self.b_z),
            ("b_r".into(), &self.b_r),
            ("b_h".into(), &self.b_h),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        vec![
            ("w_z".into(), &mut self.w_z),
            ("w_r".into(), &mut self.w_r),
            ("w_h".into(), &mut self.w_h),
            ("u_z".into(), &mut self.u_z),
            ("u_r".into(), &mut self.u_r),
            ("u_h".into(), &mut self.u_h),
            ("b_z".into(), &mut self.b_z),
            ("b_r".into(), &mut self.b_r),
            ("b_h".into(), &mut self.b_h),
        ]
    }

    fn zeros_like(&self) -> Self {
        GruLayerParams::zeros(self.input_size(), self.hidden_size())
    }
}

/// Intermediates of one cell step, kept for the backward pass.
#[derive(Clone, Debug)]
pub struct GruCellCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    h_hat: Vec<f64>,
    /// r ∘ h_prev, the vector that actually entered U_h.
    rh: Vec<f64>,
}

/// One GRU step:
///   z = σ(W_z x + U_z h_prev + b_z)
///   r = σ(W_r x + U_r h_prev + b_r)
///   ĥ = tanh(W_h x + U_h (r ∘ h_prev) + b_h)
///   h = z ∘ h_prev + (1 − z) ∘ ĥ
pub fn gru_cell_forward(
    params: &GruLayerParams,
    x: &[f64],
    h_prev: &[f64],
) -> Result<(Vec<f64>, GruCellCache)> {
    params.check_shapes(x.len(), h_prev.len())?;
    let hidden = params.hidden_size();

    let mut z = params.b_z.data().to_vec();
    params.w_z.matvec_acc(x, &mut z);
    params.u_z.matvec_acc(h_prev, &mut z);
    z.iter_mut().for_each(|v| *v = sigmoid_scalar(*v));

    let mut r = params.b_r.data().to_vec();
    params.w_r.matvec_acc(x, &mut r);
    params.u_r.matvec_acc(h_prev, &mut r);
    r.iter_mut().for_each(|v| *v = sigmoid_scalar(*v));

    let rh: Vec<f64> = r.iter().zip(h_prev).map(|(&ri, &hi)| ri * hi).collect();

    let mut h_hat = params.b_h.data().to_vec();
    params.w_h.matvec_acc(x, &mut h_hat);
    params.u_h.matvec_acc(&rh, &mut h_hat);
    h_hat.iter_mut().for_each(|v| *v = v.tanh());

    let mut h = vec![0.0; hidden];
    for i in 0..hidden {
        h[i] = z[i] * h_prev[i] + (1.0 - z[i]) * h_hat[i];
    }
    let cache = GruCellCache {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        z,
        r,
        h_hat,
        rh,
    };
    Ok((h, cache))
}

/// Backward through one cell step. Accumulates parameter gradients into
/// `grads` and returns (dL/dx, dL/dh_prev).
pub fn gru_cell_backward(
    params: &GruLayerParams,
    cache: &GruCellCache,
    dh: &[f64],
    grads: &mut GruLayerParams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let hidden = params.hidden_size();
    if dh.len() != hidden {
        return Err(Error::Shape(format!(
            "gru upstream {} != hidden {}",
            dh.len(),
            hidden
        )));
    }
    let mut dh_prev = vec![0.0; hidden];
    let mut daz = vec![0.0; hidden]; // pre-activation of z
    let mut dah = vec![0.0; hidden]; // pre-activation of ĥ
    for i in 0..hidden {
        let dz = dh[i] * (cache.h_prev[i] - cache.h_hat[i]);
        let dhh = dh[i] * (1.0 - cache.z[i]);
        dh_prev[i] += dh[i] * cache.z[i];
        daz[i] = dz * cache.z[i] * (1.0 - cache.z[i]);
        dah[i] = dhh * (1.0 - cache.h_hat[i] * cache.h_hat[i]);
    }

    // Through the candidate branch: ĥ pre-activation = W_h x + U_h (r∘h_prev) + b_h.
    grads.w_h.add_outer(&dah, &cache.x);
    grads.u_h.add_outer(&dah, &cache.rh);
    for (g, d) in grads.b_h.data_mut().iter_mut().zip(&dah) {
        *g += d;
    }
    let mut drh = vec![0.0; hidden];
    params.u_h.matvec_t_acc(&dah, &mut drh);
    let mut dar = vec![0.0; hidden];
    for i in 0..hidden {
        dh_prev[i] += drh[i] * cache.r[i];
        let dr = drh[i] * cache.h_prev[i];
        dar[i] = dr * cache.r[i] * (1.0 - cache.r[i]);
    }

    grads.w_z.add_outer(&daz, &cache.x);
    grads.u_z.add_outer(&daz, &cache.h_prev);
    for (g, d) in grads.b_z.data_mut().iter_mut().zip(&daz) {
        *g += d;
    }
    grads.w_r.add_outer(&dar, &cache.x);
    grads.u_r.add_outer(&dar, &cache.h_prev);
    for (g, d) in grads.b_r.data_mut().iter_mut().zip(&dar) {
        *g += d;
    }

    params.u_z.matvec_t_acc(&daz, &mut dh_prev);
    params.u_r.matvec_t_acc(&dar, &mut dh_prev);

    let mut dx = vec![0.0; params.input_size()];
    params.w_z.matvec_t_acc(&daz, &mut dx);
    params.w_r.matvec_t_acc(&dar, &mut dx);
    params.w_h.matvec_t_acc(&dah, &mut dx);
    Ok((dx, dh_prev))
}

pub struct GruSeqCache {
    steps: Vec<GruCellCache>,
}

impl GruSeqCache {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Runs the cell left-to-right over xs [T × in] from h0, returning the full
/// hidden trajectory [T × hidden].
pub fn gru_sequence_forward(
    params: &GruLayerParams,
    xs: &Tensor,
    h0: &[f64],
) -> Result<(Tensor, GruSeqCache)> {
    let t_len = xs.rows();
    if t_len == 0 {
        return Err(Error::Shape("gru sequence needs T >= 1".into()));
    }
    let hidden = params.hidden_size();
    let mut hs = Tensor::zeros(vec![t_len, hidden]);
    let mut steps = Vec::with_capacity(t_len);
    let mut h = h0.to_vec();
    for t in 0..t_len {
        let (h_new, cache) = gru_cell_forward(params, xs.row(t), &h)?;
        hs.row_mut(t).copy_from_slice(&h_new);
        steps.push(cache);
        h = h_new;
    }
    Ok((hs, GruSeqCache { steps }))
}

/// Backpropagation through time. `d_hs` carries dL/dh_t for every step
/// (zero rows where the loss does not touch a step). Returns (dL/dxs, dL/dh0).
pub fn gru_sequence_backward(
    params: &GruLayerParams,
    cache: &GruSeqCache,
    d_hs: &Tensor,
    grads: &mut GruLayerParams,
) -> Result<(Tensor, Vec<f64>)> {
    let t_len = cache.steps.len();
    if d_hs.rows() != t_len || d_hs.cols() != params.hidden_size() {
        return Err(Error::Shape("gru sequence upstream shape mismatch".into()));
    }
    let mut d_xs = Tensor::zeros(vec![t_len, params.input_size()]);
    let mut carry = vec![0.0; params.hidden_size()];
    for t in (0..t_len).rev() {
        let mut dh = d_hs.row(t).to_vec();
        for (a, b) in dh.iter_mut().zip(&carry) {
            *a += b;
        }
        let (dx, dh_prev) = gru_cell_backward(params, &cache.steps[t], &dh, grads)?;
        d_xs.row_mut(t).copy_from_slice(&dx);
        carry = dh_prev;
    }
    Ok((d_xs, carry))
}

pub struct BiGruCache {
    fwd: GruSeqCache,
    bwd: GruSeqCache,
}

/// Bidirectional GRU: the backward branch consumes xs reversed and its
/// outputs are re-reversed, then y_t = h⃗_t + h⃖_t elementwise.
pub fn bigru_forward(
    fwd: &GruLayerParams,
    bwd: &GruLayerParams,
    xs: &Tensor,
) -> Result<(Tensor, BiGruCache)> {
    if fwd.hidden_size() != bwd.hidden_size() || fwd.input_size() != bwd.input_size() {
        return Err(Error::Shape("bigru branches disagree on sizes".into()));
    }
    let hidden = fwd.hidden_size();
    let t_len = xs.rows();
    let h0 = vec![0.0; hidden];
    let (hs_f, cache_f) = gru_sequence_forward(fwd, xs, &h0)?;

    let mut xs_rev = Tensor::zeros(vec![t_len, xs.cols()]);
    for t in 0..t_len {
        xs_rev.row_mut(t).copy_from_slice(xs.row(t_len - 1 - t));
    }
    let (hs_b_rev, cache_b) = gru_sequence_forward(bwd, &xs_rev, &h0)?;

    let mut ys = Tensor::zeros(vec![t_len, hidden]);
    for t in 0..t_len {
        let f = hs_f.row(t);
        let b = hs_b_rev.row(t_len - 1 - t);
        let y = ys.row_mut(t);
        for i in 0..hidden {
            y[i] = f[i] + b[i];
        }
    }
    Ok((
        ys,
        BiGruCache {
            fwd: cache_f,
            bwd: cache_b,
        },
    ))
}

/// Backward of `bigru_forward`; returns dL/dxs.
pub fn bigru_backward(
    fwd: &GruLayerParams,
    bwd: &GruLayerParams,
    cache: &BiGruCache,
    d_ys: &Tensor,
    grads_fwd: &mut GruLayerParams,
    grads_bwd: &mut GruLayerParams,
) -> Result<Tensor> {
    let t_len = d_ys.rows();
    let (d_xs_f, _) = gru_sequence_backward(fwd, &cache.fwd, d_ys, grads_fwd)?;

    let mut d_ys_rev = Tensor::zeros(vec![t_len, d_ys.cols()]);
    for t in 0..t_len {
        d_ys_rev.row_mut(t).copy_from_slice(d_ys.row(t_len - 1 - t));
    }
    let (d_xs_b_rev, _) = gru_sequence_backward(bwd, &cache.bwd, &d_ys_rev, grads_bwd)?;

    let mut d_xs = d_xs_f;
    for t in 0..t_len {
        let rev = d_xs_b_rev.row(t_len - 1 - t).to_vec();
        let row = d_xs.row_mut(t);
        for (a, b) in row.iter_mut().zip(&rev) {
            *a += b;
        }
    }
    Ok(d_xs)
}

use crate::{Error, Result};

/// Probability clamp applied before the log in the cross-entropy loss, so a
/// confident wrong prediction cannot produce −∞.
pub const PROB_CLAMP: f64 = 1e-12;

/// Sum of squared elementwise differences over one sequence. Batch losses
/// average these per-sequence sums.
pub fn mse_loss(x: &[f64], x_hat: &[f64]) -> Result<f64> {
    if x.len() != x_hat.len() {
        return Err(Error::Shape(format!(
            "mse operands differ: {} vs {}",
            x.len(),
            x_hat.len()
        )));
    }
    Ok(x.iter()
        .zip(x_hat)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum())
}

/// dL/dx_hat of `mse_loss`.
pub fn mse_backward(x: &[f64], x_hat: &[f64]) -> Result<Vec<f64>> {
    if x.len() != x_hat.len() {
        return Err(Error::Shape("mse backward operands differ".into()));
    }
    Ok(x.iter().zip(x_hat).map(|(&a, &b)| 2.0 * (b - a)).collect())
}

/// −ln(probs[true_class]) with the probability clamped to ≥ 1e-12.
pub fn cross_entropy_loss(probs: &[f64], true_class: usize) -> Result<f64> {
    if true_class >= probs.len() {
        return Err(Error::Shape(format!(
            "class index {} out of range for {} classes",
            true_class,
            probs.len()
        )));
    }
    Ok(-probs[true_class].max(PROB_CLAMP).ln())
}

/// dL/dprobs of `cross_entropy_loss`.
pub fn cross_entropy_backward(probs: &[f64], true_class: usize) -> Result<Vec<f64>> {
    if true_class >= probs.len() {
        return Err(Error::Shape("class index out of range".into()));
    }
    let mut d = vec![0.0; probs.len()];
    d[true_class] = -1.0 / probs[true_class].max(PROB_CLAMP);
    Ok(d)
}

/// Cross-entropy against a label-smoothed target: (1−ε) on the true class
/// and ε/K spread over all K classes. ε = 0 reduces to `cross_entropy_loss`.
pub fn smoothed_cross_entropy_loss(probs: &[f64], true_class: usize, eps: f64) -> Result<f64> {
    if true_class >= probs.len() {
        return Err(Error::Shape("class index out of range".into()));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Config("label smoothing must be in [0, 1]".into()));
    }
    let k = probs.len() as f64;
    let mut loss = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        let t = eps / k + if i == true_class { 1.0 - eps } else { 0.0 };
        loss -= t * p.max(PROB_CLAMP).ln();
    }
    Ok(loss)
}

/// dL/dprobs of `smoothed_cross_entropy_loss`.
pub fn smoothed_cross_entropy_backward(
    probs: &[f64],
    true_class: usize,
    eps: f64,
) -> Result<Vec<f64>> {
    if true_class >= probs.len() {
        return Err(Error::Shape("class index out of range".into()));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Config("label smoothing must be in [0, 1]".into()));
    }
    let k = probs.len() as f64;
    Ok(probs
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let t = eps / k + if i == true_class { 1.0 - eps } else { 0.0 };
            -t / p.max(PROB_CLAMP)
        })
        .collect())
}

/// λ1·l1 + λ2·l2, the multi-task training objective.
pub fn combined_loss(l1: f64, l2: f64, lambda1: f64, lambda2: f64) -> Result<f64> {
    if lambda1 < 0.0 || lambda2 < 0.0 {
        return Err(Error::Config("loss weights must be non-negative".into()));
    }
    Ok(lambda1 * l1 + lambda2 * l2)
}

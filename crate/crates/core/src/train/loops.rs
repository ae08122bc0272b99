use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::config::TrainConfig;
use crate::model::{
    ae_backward, ae_forward, build_input, diag_backward, diag_forward, AeModel, DiagModel,
    MAX_POSITION_INDEX,
};
use crate::nn::{
    combined_loss, mse_backward, mse_loss, smoothed_cross_entropy_backward,
    smoothed_cross_entropy_loss, AdamOptimizer, ParamSet, Tensor,
};
use crate::otdr::{dataset::substream, SequenceSample};
use crate::{Error, Result};

fn prepare_inputs(samples: &[SequenceSample]) -> Result<Vec<Tensor>> {
    samples.iter().map(build_input).collect()
}

/// Returns a copy of `input` with Gaussian jitter on the 30 trace points
/// (the trailing SNR step is left untouched), or a plain clone when the
/// jitter amplitude is zero.
fn jittered(input: &Tensor, std: f64, rng: &mut impl Rng) -> Tensor {
    let mut noisy = input.clone();
    if std > 0.0 {
        let normal = Normal::new(0.0, std).expect("positive std");
        for v in noisy.data_mut().iter_mut().take(crate::otdr::SEQUENCE_LEN) {
            *v += normal.sample(rng);
        }
    }
    noisy
}

/// Decoupled weight decay: shrink all parameters by lr·decay after a step.
fn apply_weight_decay(params: &mut impl ParamSet, config: &TrainConfig) {
    if config.weight_decay > 0.0 {
        params.scale_all(1.0 - config.adam.learning_rate * config.weight_decay);
    }
}

/// Trains the autoencoder on normal traffic only; returns the model and the
/// mean per-sequence reconstruction loss for each epoch.
pub fn train_ae(samples: &[SequenceSample], config: &TrainConfig) -> Result<(AeModel, Vec<f64>)> {
    config.validate()?;
    if samples.is_empty() {
        return Err(Error::Data("autoencoder training set is empty".into()));
    }
    for (i, s) in samples.iter().enumerate() {
        if s.label.is_fault() {
            return Err(Error::Data(format!(
                "autoencoder training requires normal samples only; sample {} is '{}'",
                i,
                s.label.name()
            )));
        }
    }
    let inputs = prepare_inputs(samples)?;
    let mut model = AeModel::new(
        config.hidden1,
        config.hidden2,
        &mut substream(config.seed, "ae-init", 0),
    );
    model.meta.seed = Some(config.seed);
    let mut opt = AdamOptimizer::new(&model.params, config.adam)?;
    let mut history = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..inputs.len()).collect();

    for epoch in 0..config.epochs {
        order.shuffle(&mut substream(config.seed, "ae-shuffle", epoch as u64));
        let mut jrng = substream(config.seed, "ae-jitter", epoch as u64);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut grads = model.params.zeros_like();
            for &i in batch {
                let noisy = jittered(&inputs[i], config.input_jitter_std, &mut jrng);
                let (recon, cache) = ae_forward(&model, &noisy)?;
                // Reconstruct the clean sequence (denoising objective).
                epoch_loss += mse_loss(inputs[i].data(), &recon)?;
                let d_recon = mse_backward(inputs[i].data(), &recon)?;
                ae_backward(&model, &cache, &d_recon, &mut grads)?;
            }
            grads.scale_all(1.0 / batch.len() as f64);
            opt.step(&mut model.params, &grads)?;
            apply_weight_decay(&mut model.params, config);
        }
        history.push(epoch_loss / inputs.len() as f64);
    }
    Ok((model, history))
}

#[derive(Clone, Debug, Default)]
pub struct DiagHistory {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub stopped_early: bool,
    /// Epoch (0-based) whose parameters the returned model carries.
    pub best_epoch: usize,
}

fn diag_sample_loss(
    model: &DiagModel,
    input: &Tensor,
    class: usize,
    pos_target: f64,
    config: &TrainConfig,
) -> Result<f64> {
    let (out, _) = diag_forward(model, input)?;
    let ce = smoothed_cross_entropy_loss(&out.class_probs, class, config.label_smoothing)?;
    let pe = (out.position_raw - pos_target).powi(2);
    combined_loss(ce, pe, config.lambda1, config.lambda2)
}

fn check_faulty(samples: &[SequenceSample], role: &str) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::Data(format!("diagnosis {} set is empty", role)));
    }
    for (i, s) in samples.iter().enumerate() {
        if !s.label.is_fault() || s.position_index.is_none() {
            return Err(Error::Data(format!(
                "diagnosis training requires faulty samples with positions; {} sample {} is '{}'",
                role,
                i,
                s.label.name()
            )));
        }
    }
    Ok(())
}

/// Trains the diagnosis model on faulty samples, minimizing
/// λ1·cross-entropy + λ2·position MSE. Early-stops on the validation total
/// loss (patience from the config) and returns the best-epoch parameters.
pub fn train_diag(
    train: &[SequenceSample],
    val: &[SequenceSample],
    config: &TrainConfig,
) -> Result<(DiagModel, DiagHistory)> {
    config.validate()?;
    check_faulty(train, "train")?;
    if !val.is_empty() {
        check_faulty(val, "validation")?;
    }
    let inputs = prepare_inputs(train)?;
    let val_inputs = prepare_inputs(val)?;
    let targets: Vec<(usize, f64)> = train
        .iter()
        .map(|s| {
            (
                s.label.class_index().unwrap(),
                s.position_index.unwrap() as f64 / MAX_POSITION_INDEX as f64,
            )
        })
        .collect();

    let mut model = DiagModel::new(
        config.hidden1,
        config.hidden2,
        &mut substream(config.seed, "diag-init", 0),
    );
    model.meta.seed = Some(config.seed);
    model.meta.lambda1 = Some(config.lambda1);
    model.meta.lambda2 = Some(config.lambda2);
    let mut opt = AdamOptimizer::new(&model.params, config.adam)?;
    let mut history = DiagHistory::default();
    let mut order: Vec<usize> = (0..inputs.len()).collect();

    let mut best_params = model.params.clone();
    let mut best_val = f64::INFINITY;
    let mut since_best = 0usize;

    for epoch in 0..config.epochs {
        order.shuffle(&mut substream(config.seed, "diag-shuffle", epoch as u64));
        let mut jrng = substream(config.seed, "diag-jitter", epoch as u64);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut grads = model.params.zeros_like();
            for &i in batch {
                let noisy = jittered(&inputs[i], config.input_jitter_std, &mut jrng);
                let (out, cache) = diag_forward(&model, &noisy)?;
                let (class, pos_target) = targets[i];
                let ce =
                    smoothed_cross_entropy_loss(&out.class_probs, class, config.label_smoothing)?;
                let pe = (out.position_raw - pos_target).powi(2);
                epoch_loss += combined_loss(ce, pe, config.lambda1, config.lambda2)?;
                let mut d_probs =
                    smoothed_cross_entropy_backward(&out.class_probs, class, config.label_smoothing)?;
                for d in &mut d_probs {
                    *d *= config.lambda1;
                }
                let d_pos = config.lambda2 * 2.0 * (out.position_raw - pos_target);
                diag_backward(&model, &cache, &d_probs, d_pos, &mut grads)?;
            }
            grads.scale_all(1.0 / batch.len() as f64);
            opt.step(&mut model.params, &grads)?;
            apply_weight_decay(&mut model.params, config);
        }
        history.train_loss.push(epoch_loss / inputs.len() as f64);

        if !val_inputs.is_empty() {
            let mut vl = 0.0;
            for (input, s) in val_inputs.iter().zip(val) {
                let class = s.label.class_index().unwrap();
                let target = s.position_index.unwrap() as f64 / MAX_POSITION_INDEX as f64;
                vl += diag_sample_loss(&model, input, class, target, config)?;
            }
            vl /= val_inputs.len() as f64;
            history.val_loss.push(vl);
            if vl < best_val {
                best_val = vl;
                best_params = model.params.clone();
                history.best_epoch = epoch;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= config.patience {
                    history.stopped_early = true;
                    break;
                }
            }
        } else {
            history.best_epoch = epoch;
        }
    }
    if !val_inputs.is_empty() {
        model.params = best_params;
    }
    Ok((model, history))
}

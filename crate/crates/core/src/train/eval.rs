use serde::{Deserialize, Serialize};

use super::metrics::{
    detection_metrics, roc_and_auc, DetectionCounts, DetectionMetrics, RocCurve, ThresholdPoint,
};
use crate::model::{anomaly_score, build_input, diag_forward, predicted_position_index, AeModel, DiagModel};
use crate::otdr::{default_meters_per_sample, FaultLabel, SequenceSample};
use crate::{Error, Result};

pub const SNR_BIN_WIDTH_DB: f64 = 5.0;
const SNR_MAX_DB: f64 = 30.0;
const NUM_BINS: usize = 6;

/// Statistics for one 5 dB SNR bin. Empty bins are omitted from reports.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BinStat {
    pub lo_db: f64,
    pub hi_db: f64,
    pub count: usize,
    pub accuracy: f64,
    pub rmse_index: f64,
    pub rmse_m: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DetectionReport {
    pub counts: DetectionCounts,
    pub metrics: DetectionMetrics,
    pub roc: RocCurve,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub threshold_curve: Vec<ThresholdPoint>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiagnosisReport {
    /// Rows: true class, columns: predicted class, both in
    /// [fiber_cut, fiber_tapping, bad_splice, dirty_connector] order.
    pub confusion: [[usize; 4]; 4],
    pub accuracy: f64,
    pub accuracy_by_snr_bin: Vec<BinStat>,
    pub rmse_index: f64,
    pub rmse_m: f64,
    pub meters_per_sample: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection: Option<DetectionReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnosis: Option<DiagnosisReport>,
}

/// Scores every sample and evaluates the detector at θ, alongside the
/// threshold-free ROC/AUC.
pub fn evaluate_detection(
    model: &AeModel,
    samples: &[SequenceSample],
    theta: f64,
) -> Result<DetectionReport> {
    if theta < 0.0 {
        return Err(Error::Config("threshold must be non-negative".into()));
    }
    let mut scored = Vec::with_capacity(samples.len());
    let mut counts = DetectionCounts::default();
    for s in samples {
        let score = anomaly_score(model, s)?;
        scored.push((score, s.label.is_fault()));
        counts.record(s.label.is_fault(), score > theta);
    }
    Ok(DetectionReport {
        counts,
        metrics: detection_metrics(&counts),
        roc: roc_and_auc(&scored)?,
        threshold: Some(theta),
        threshold_curve: Vec::new(),
    })
}

fn bin_of(snr_db: f64) -> usize {
    ((snr_db / SNR_BIN_WIDTH_DB).floor() as isize).clamp(0, NUM_BINS as isize - 1) as usize
}

/// Confusion matrix, per-SNR-bin accuracy and localization RMSE (in index
/// units and meters) on a faulty test split.
pub fn evaluate_diag(model: &DiagModel, samples: &[SequenceSample]) -> Result<DiagnosisReport> {
    if samples.is_empty() {
        return Err(Error::Data("diagnosis evaluation set is empty".into()));
    }
    let mps = default_meters_per_sample();
    let mut confusion = [[0usize; 4]; 4];
    let mut correct = 0usize;
    let mut sq_err_sum = 0.0;
    let mut bin_n = [0usize; NUM_BINS];
    let mut bin_correct = [0usize; NUM_BINS];
    let mut bin_sq = [0.0f64; NUM_BINS];

    for (i, s) in samples.iter().enumerate() {
        let (true_class, true_pos) = match (s.label.class_index(), s.position_index) {
            (Some(c), Some(p)) => (c, p),
            _ => {
                return Err(Error::Data(format!(
                    "diagnosis evaluation requires faulty samples; sample {} is '{}'",
                    i,
                    s.label.name()
                )))
            }
        };
        let input = build_input(s)?;
        let (out, _) = diag_forward(model, &input)?;
        // First index wins ties, so the prediction is order-deterministic.
        let mut pred_class = 0;
        for (k, &p) in out.class_probs.iter().enumerate() {
            if p > out.class_probs[pred_class] {
                pred_class = k;
            }
        }
        let pred_pos = predicted_position_index(out.position_norm);
        confusion[true_class][pred_class] += 1;
        let sq = (pred_pos as f64 - true_pos as f64).powi(2);
        sq_err_sum += sq;
        let b = bin_of(s.snr_db);
        bin_n[b] += 1;
        bin_sq[b] += sq;
        if pred_class == true_class {
            correct += 1;
            bin_correct[b] += 1;
        }
    }

    let n = samples.len() as f64;
    let mut bins = Vec::new();
    for b in 0..NUM_BINS {
        if bin_n[b] == 0 {
            continue;
        }
        let rmse_index = (bin_sq[b] / bin_n[b] as f64).sqrt();
        bins.push(BinStat {
            lo_db: b as f64 * SNR_BIN_WIDTH_DB,
            hi_db: ((b + 1) as f64 * SNR_BIN_WIDTH_DB).min(SNR_MAX_DB),
            count: bin_n[b],
            accuracy: bin_correct[b] as f64 / bin_n[b] as f64,
            rmse_index,
            rmse_m: rmse_index * mps,
        });
    }
    let rmse_index = (sq_err_sum / n).sqrt();
    Ok(DiagnosisReport {
        confusion,
        accuracy: correct as f64 / n,
        accuracy_by_snr_bin: bins,
        rmse_index,
        rmse_m: rmse_index * mps,
        meters_per_sample: mps,
    })
}

impl DiagnosisReport {
    /// Row sums of the confusion matrix, i.e. per-class test counts.
    pub fn per_class_counts(&self) -> [usize; 4] {
        let mut out = [0usize; 4];
        for (row, slot) in self.confusion.iter().zip(&mut out) {
            *slot = row.iter().sum();
        }
        out
    }

    pub fn class_names() -> [&'static str; 4] {
        let mut names = [""; 4];
        for (n, c) in names.iter_mut().zip(FaultLabel::FAULT_CLASSES) {
            *n = c.name();
        }
        names
    }
}
